use crate::error::{invalid, Result};
use crate::fespace::Space;
use crate::forms::assembly::{sample_director, BasisTable};
use crate::forms::quadrature::QuadratureRule;
use crate::forms::{dot3, Discretization, ProblemParams, State};

/// Calls `f(weight, point, field)` for every degree-8 quadrature point of a
/// three-component field.
fn for_each_point(space: &Space, coeffs: &[f64], mut f: impl FnMut(f64, [f64; 2], &super::assembly::PointValue)) {
    let table = BasisTable::new(space.family(), QuadratureRule::degree8());
    let mesh = space.mesh();
    for t in 0..space.n_cells() {
        let geo = space.geometry(t);
        let tri = mesh.triangles()[t];
        let v = tri.map(|i| mesh.vertices()[i]);
        for q in 0..table.rule.len() {
            let l = table.rule.points[q];
            let x = [
                l[0] * v[0][0] + l[1] * v[1][0] + l[2] * v[2][0],
                l[0] * v[0][1] + l[1] * v[1][1] + l[2] * v[2][1],
            ];
            let grads = table.grads(q, &geo.grad_lambda);
            let pv = sample_director(space, coeffs, t, &table.phi[q], &grads);
            f(table.rule.weights[q] * 2.0 * geo.area, x, &pv);
        }
    }
}

fn check_field(space: &Space, coeffs: &[f64]) -> Result<()> {
    if space.components() != 3 || coeffs.len() != space.ndofs() {
        return invalid(format!(
            "expected {} coefficients of a 3-component field, got {}",
            space.ndofs(),
            coeffs.len()
        ));
    }
    Ok(())
}

/// Oseen–Frank free energy of the director in `state`.
pub fn energy(disc: &Discretization, state: &State, params: &ProblemParams) -> Result<f64> {
    state.check(disc)?;
    let (k1, k2, k3, q0) = (params.k1, params.k2, params.k3, params.q0);
    let km1 = params.kappa() - 1.0;
    let mut total = 0.0;
    for_each_point(&disc.director, &state.director, |w, _, pv| {
        let c = pv.curl();
        let s = dot3(pv.n, c);
        let div = pv.div();
        let e = k1 * div * div + k3 * (dot3(c, c) + km1 * s * s) + 2.0 * k2 * q0 * s + k2 * q0 * q0;
        total += 0.5 * w * e;
    });
    Ok(total)
}

/// `‖n·n − 1‖` in L².
pub fn constraint_norm(disc: &Discretization, state: &State) -> Result<f64> {
    check_field(&disc.director, &state.director)?;
    let mut total = 0.0;
    for_each_point(&disc.director, &state.director, |w, _, pv| {
        let d = dot3(pv.n, pv.n) - 1.0;
        total += w * d * d;
    });
    Ok(total.sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorNorms {
    pub l2: f64,
    pub h1_semi: f64,
    pub h1: f64,
}

/// Distance between a discrete director and an exact field given as value
/// and gradient (`grad[i][j] = ∂n_i/∂x_j`).
pub fn error_norms(
    space: &Space,
    coeffs: &[f64],
    exact: impl Fn([f64; 2]) -> ([f64; 3], [[f64; 2]; 3]),
) -> Result<ErrorNorms> {
    check_field(space, coeffs)?;
    let (mut l2, mut semi) = (0.0, 0.0);
    for_each_point(space, coeffs, |w, x, pv| {
        let (n, g) = exact(x);
        for i in 0..3 {
            l2 += w * (pv.n[i] - n[i]).powi(2);
            semi += w * ((pv.grad[i][0] - g[i][0]).powi(2) + (pv.grad[i][1] - g[i][1]).powi(2));
        }
    });
    Ok(ErrorNorms { l2: l2.sqrt(), h1_semi: semi.sqrt(), h1: (l2 + semi).sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::Element;
    use crate::mesh::{build_structured_square, refine, Mesh2d};
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn disc(n: usize, el: Element) -> Discretization {
        Discretization::new(&Arc::new(build_structured_square(n).unwrap()), el).unwrap()
    }

    const T0: f64 = PI / 8.0;

    fn twist_exact(p: [f64; 2]) -> ([f64; 3], [[f64; 2]; 3]) {
        let a = T0 * (2.0 * p[1] - 1.0);
        let da = 2.0 * T0;
        ([a.cos(), 0.0, a.sin()], [[0.0, -da * a.sin()], [0.0, 0.0], [0.0, da * a.cos()]])
    }

    #[test]
    fn constant_directors() {
        let d = disc(4, Element::P2P1);
        let p = ProblemParams::default();
        let s = State::from_director(&d, |_| [1.0, 0.0, 0.0]).unwrap();
        assert!(energy(&d, &s, &p).unwrap().abs() < 1e-14);
        assert!(constraint_norm(&d, &s).unwrap() < 1e-14);

        // J = K2 q0² / 2 for any constant director
        let pq = ProblemParams::new(1.0, 1.2, 1.0, 2.0, 0.0);
        assert!((energy(&d, &s, &pq).unwrap() - 2.4).abs() < 1e-12);
        let pq = ProblemParams::new(1.0, 1.5, 1.0, 2.0, 0.0);
        assert!((energy(&d, &s, &pq).unwrap() - 3.0).abs() < 1e-12);

        for c in [0.0, 0.5, 2.0] {
            let s = State::from_director(&d, |_| [c, 0.0, 0.0]).unwrap();
            assert!((constraint_norm(&d, &s).unwrap() - (c * c - 1.0).abs()).abs() < 1e-13);
        }
    }

    #[test]
    fn twist_energy() {
        // J = 2 K2 θ0² for the uniform twist
        let d = disc(10, Element::P2P1);
        let s = State::from_director(&d, |p| twist_exact(p).0).unwrap();
        let j = energy(&d, &s, &ProblemParams::default()).unwrap();
        assert!((j - 2.0 * 1.2 * T0 * T0).abs() < 1e-3, "{j}");
        assert!((j - 0.37011).abs() < 1e-3);
    }

    #[test]
    fn constraint_offset() {
        let d = disc(4, Element::P1P1);
        let eps = 1e-3;
        let s = State::from_director(&d, |_| [1.0 + eps, 0.0, 0.0]).unwrap();
        let expected = (1.0 + eps) * (1.0 + eps) - 1.0;
        assert!((constraint_norm(&d, &s).unwrap() - expected).abs() < 1e-13);
    }

    #[test]
    fn interpolant_errors_converge() {
        let mut mesh = build_structured_square(4).unwrap();
        let mut prev: Option<ErrorNorms> = None;
        for _ in 0..3 {
            let m = Arc::new(mesh.clone());
            let s = Space::new(&m, crate::fespace::Family::P2, 3).unwrap();
            let u = s.interpolate(|p| twist_exact(p).0).unwrap();
            let e = error_norms(&s, &u, twist_exact).unwrap();
            assert!((e.h1 * e.h1 - e.l2 * e.l2 - e.h1_semi * e.h1_semi).abs() < 1e-14);
            if let Some(p) = prev {
                let l2_rate = (p.l2 / e.l2).log2();
                let h1_rate = (p.h1_semi / e.h1_semi).log2();
                assert!((l2_rate - 3.0).abs() < 0.2, "{l2_rate}");
                assert!((h1_rate - 2.0).abs() < 0.2, "{h1_rate}");
            }
            prev = Some(e);
            mesh = refine(&mesh);
        }
    }

    #[test]
    fn exact_representation_has_zero_error() {
        let m: Arc<Mesh2d> = Arc::new(build_structured_square(3).unwrap());
        let s = Space::new(&m, crate::fespace::Family::P2, 3).unwrap();
        let f = |p: [f64; 2]| ([p[0] * p[1], p[1] * p[1], 1.0 - p[0]], [[p[1], p[0]], [0.0, 2.0 * p[1]], [-1.0, 0.0]]);
        let u = s.interpolate(|p| f(p).0).unwrap();
        let e = error_norms(&s, &u, f).unwrap();
        assert!(e.h1 < 1e-13);
    }

    #[test]
    fn constant_offset_error() {
        let m: Arc<Mesh2d> = Arc::new(build_structured_square(4).unwrap());
        let s = Space::new(&m, crate::fespace::Family::P2, 3).unwrap();
        let f = |p: [f64; 2]| ([p[0] * p[1], p[1] * p[1], 1.0 - p[0]], [[p[1], p[0]], [0.0, 2.0 * p[1]], [-1.0, 0.0]]);
        let eps = 1e-3;
        let u = s.interpolate(|p| {
            let n = f(p).0;
            [n[0], n[1], n[2] + eps]
        });
        let e = error_norms(&s, &u.unwrap(), f).unwrap();
        assert!((e.l2 - eps).abs() < 1e-14);
        assert!(e.h1_semi < 1e-12);
    }

    #[test]
    fn wrong_length_rejected() {
        let d = disc(2, Element::P1P1);
        assert!(error_norms(&d.director, &[0.0; 4], twist_exact).is_err());
        let s = State::new(vec![0.0; 3], vec![]);
        assert!(constraint_norm(&d, &s).is_err());
    }
}
