use std::f64::consts::PI;

use oseen::forms::{Element, ProblemParams};
use oseen::mesh::{BoundaryTags, MeshHierarchy};
use oseen::saddle::Problem;

/// Uniform twist in a slab periodic in `x`, anchored at `y = 0` and `y = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwistProblem {
    pub theta0: f64,
    /// Cells per side of the coarsest mesh.
    pub coarse: usize,
}

impl Default for TwistProblem {
    fn default() -> Self {
        Self { theta0: PI / 8.0, coarse: 10 }
    }
}

impl TwistProblem {
    fn angle(&self, y: f64) -> f64 {
        self.theta0 * (2.0 * y - 1.0)
    }

    pub fn exact(&self, p: [f64; 2]) -> [f64; 3] {
        let a = self.angle(p[1]);
        [a.cos(), 0.0, a.sin()]
    }

    /// Exact director and its gradient (`grad[i][j] = ∂n_i/∂x_j`).
    pub fn exact_with_gradient(&self, p: [f64; 2]) -> ([f64; 3], [[f64; 2]; 3]) {
        let a = self.angle(p[1]);
        let da = 2.0 * self.theta0;
        ([a.cos(), 0.0, a.sin()], [[0.0, -da * a.sin()], [0.0, 0.0], [0.0, da * a.cos()]])
    }

    /// `2 K2 θ0²`, the energy of the exact solution when `q0 = 0`.
    pub fn reference_energy(&self, k2: f64) -> f64 {
        2.0 * k2 * self.theta0 * self.theta0
    }

    pub fn problem(&self, refs: usize, element: Element, params: ProblemParams) -> oseen::Result<Problem> {
        let h = MeshHierarchy::structured(self.coarse, refs)?;
        let this = *self;
        Problem::new(&h, element, params, BoundaryTags::BOTTOM | BoundaryTags::TOP, true, &move |p| this.exact(p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_solution_is_unit_length() {
        let t = TwistProblem::default();
        for i in 0..=20 {
            for j in 0..=20 {
                let n = t.exact([i as f64 / 20.0, j as f64 / 20.0]);
                assert!((n.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-14);
            }
        }
        assert_eq!(t.exact([0.3, 0.0]), [(PI / 8.0).cos(), 0.0, -(PI / 8.0).sin()]);
        assert!((t.reference_energy(1.2) - 0.37011).abs() < 1e-5);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let t = TwistProblem::default();
        let p = [0.4, 0.3];
        let h = 1e-6;
        let (_, g) = t.exact_with_gradient(p);
        let (up, dn) = (t.exact([p[0], p[1] + h]), t.exact([p[0], p[1] - h]));
        for i in 0..3 {
            assert!(((up[i] - dn[i]) / (2.0 * h) - g[i][1]).abs() < 1e-8);
            assert_eq!(g[i][0], 0.0);
        }
    }
}
