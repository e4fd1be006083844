use std::f64::consts::PI;
use std::sync::Arc;

use approx::assert_relative_eq;
use oseen::fespace::{build_prolongation, Family, Space};
use oseen::forms::{constraint_norm, Element, ProblemParams};
use oseen::mesh::{build_structured_square, refine, BoundaryTags, MeshHierarchy};
use oseen::saddle::{nonlinear_solve, InnerSolver, Linearization, Problem, SolverConfig};

fn twist(p: [f64; 2]) -> [f64; 3] {
    let a = PI / 8.0 * (2.0 * p[1] - 1.0);
    [a.cos(), 0.0, a.sin()]
}

#[test]
fn refinement_keeps_area_and_halves_h() {
    let coarse = build_structured_square(4).unwrap();
    let fine = refine(&coarse);
    fine.validate().unwrap();
    assert_eq!(fine.n_triangles(), 4 * coarse.n_triangles());
    assert_relative_eq!(fine.total_area(), 1.0, epsilon = 1e-14);
    assert_relative_eq!(fine.h_max(), coarse.h_max() / 2.0, epsilon = 1e-14);
}

#[test]
fn p2_prolongation_reproduces_quadratics() {
    let cm = Arc::new(build_structured_square(3).unwrap());
    let fm = Arc::new(refine(&cm));
    let c = Space::new(&cm, Family::P2, 1).unwrap();
    let f = Space::new(&fm, Family::P2, 1).unwrap();
    let p = build_prolongation(&c, &f).unwrap();
    let q = |x: [f64; 2]| [1.0 + x[0] - 2.0 * x[1] + 3.0 * x[0] * x[1] - x[1] * x[1]];
    let fine = p.mul_vec(&c.interpolate(q).unwrap());
    for (a, b) in fine.iter().zip(f.interpolate(q).unwrap()) {
        assert_relative_eq!(*a, b, epsilon = 1e-13);
    }
}

fn solve_twist(inner: InnerSolver, linearization: Linearization) -> f64 {
    let h = MeshHierarchy::structured(4, 1).unwrap();
    let params = ProblemParams::new(1.0, 1.2, 1.0, 0.0, 1e4);
    let problem =
        Problem::new(&h, Element::P2P1, params, BoundaryTags::BOTTOM | BoundaryTags::TOP, true, &twist).unwrap();
    let init = problem.initial_state(|_| [1.0, 0.0, 0.0]).unwrap();
    let config = SolverConfig { inner, linearization, ..SolverConfig::default() };
    let (state, report) = nonlinear_solve(&problem, &config, init).unwrap();
    assert!(report.converged);
    let c = constraint_norm(problem.finest(), &state).unwrap();
    assert!(c < 1e-3, "constraint {c}");
    report.energy
}

#[test]
fn twist_energy_agrees_across_solvers() {
    let reference = 2.0 * 1.2 * (PI / 8.0) * (PI / 8.0);
    let e_lu = solve_twist(InnerSolver::Lu, Linearization::Picard);
    assert_relative_eq!(e_lu, reference, max_relative = 1e-3);
    for inner in [InnerSolver::MgStar, InnerSolver::MgPbj] {
        let e = solve_twist(inner, Linearization::Picard);
        assert_relative_eq!(e, e_lu, max_relative = 1e-6);
    }
    let e_newton = solve_twist(InnerSolver::Lu, Linearization::Newton);
    assert_relative_eq!(e_newton, e_lu, max_relative = 1e-6);
}
