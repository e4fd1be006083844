/// Symmetric quadrature on the reference triangle in barycentric coordinates.
/// Weights sum to the reference area 1/2.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    pub degree: usize,
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    /// Three-point rule at the edge midpoints, exact for degree 2.
    pub fn degree2() -> Self {
        let mut r = Self { degree: 2, points: vec![], weights: vec![] };
        r.push_orbit3(0.0, 0.5, 1.0 / 3.0);
        r
    }

    /// Twelve-point Dunavant rule, exact for degree 6.
    pub fn degree6() -> Self {
        let mut r = Self { degree: 6, points: vec![], weights: vec![] };
        r.push_orbit3(0.501426509658179, 0.249286745170910, 0.116786275726379);
        r.push_orbit3(0.873821971016996, 0.063089014491502, 0.050844906370207);
        r.push_orbit6(0.053145049844817, 0.310352451033784, 0.082851075618374);
        r
    }

    /// Sixteen-point Dunavant rule, exact for degree 8.
    pub fn degree8() -> Self {
        let mut r = Self { degree: 8, points: vec![], weights: vec![] };
        let third = 1.0 / 3.0;
        r.points.push([third, third, third]);
        r.weights.push(0.5 * 0.144315607677787);
        r.push_orbit3(0.081414823414554, 0.459292588292723, 0.095091634267285);
        r.push_orbit3(0.658861384496480, 0.170569307751760, 0.103217370534718);
        r.push_orbit3(0.898905543365938, 0.050547228317031, 0.032458497623198);
        r.push_orbit6(0.008394777409958, 0.263112829634638, 0.027230314174435);
        r
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `(a, b, b)` and its rotations; `w` is the weight on a unit-area triangle.
    fn push_orbit3(&mut self, a: f64, b: f64, w: f64) {
        for p in [[a, b, b], [b, a, b], [b, b, a]] {
            self.points.push(p);
            self.weights.push(0.5 * w);
        }
    }

    /// All six permutations of `(a, b, 1 - a - b)`.
    fn push_orbit6(&mut self, a: f64, b: f64, w: f64) {
        let c = 1.0 - a - b;
        for p in [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
            self.points.push(p);
            self.weights.push(0.5 * w);
        }
    }
}
