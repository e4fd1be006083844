use serde::Serialize;

use oseen::forms::{error_norms, Element, OperatorMode, State};
use oseen::mesh::{BoundaryTags, MeshHierarchy};
use oseen::multigrid::PatchKind;
use oseen::saddle::{nonlinear_solve, schur_perturbation_norm, spectral_diagnostics, Problem, SolveReport};

use crate::{loglog_slope, Row, Settings, TwistProblem};
use crate::{BenchError, Result};

fn base_row(experiment: &str, refs: usize, problem: &Problem, gamma: f64, report: &SolveReport) -> Result<Row> {
    Ok(Row {
        experiment: experiment.to_string(),
        refs: Some(refs),
        dofs: Some(problem.reported_dofs()?),
        gamma: Some(gamma),
        nonlinear_iters: Some(report.nonlinear_iterations),
        avg_fgmres: report.avg_linear(),
        energy: Some(report.energy),
        constraint_norm: Some(report.constraint_norm),
        converged: Some(report.converged),
        ..Row::default()
    })
}

fn with_errors(mut row: Row, twist: &TwistProblem, problem: &Problem, state: &State) -> Result<Row> {
    let e = error_norms(&problem.finest().director, &state.director, |p| twist.exact_with_gradient(p))?;
    row.l2_error = Some(e.l2);
    row.h1_error = Some(e.h1);
    Ok(row)
}

/// One twist solve per `(ref, γ)` from `n0 = (1, 0, 0)`.
pub fn run_twist(s: &Settings) -> Result<Vec<Row>> {
    s.validate()?;
    let twist = TwistProblem::default();
    let mut rows = Vec::new();
    for &r in &s.refs {
        for &gamma in &s.gammas {
            let problem = twist.problem(r, s.element, s.params(gamma))?;
            let init = problem.initial_state(|_| [1.0, 0.0, 0.0])?;
            let (state, report) = nonlinear_solve(&problem, &s.solver(), init)?;
            log::info!(
                "twist ref {r} gamma {gamma:e}: {} iterations, avg {:?}, energy {:.6}",
                report.nonlinear_iterations,
                report.avg_linear(),
                report.energy
            );
            let row = base_row("twist", r, &problem, gamma, &report)?;
            rows.push(if s.q0 == 0.0 { with_errors(row, &twist, &problem, &state)? } else { row });
        }
    }
    Ok(rows)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ContinuationParam {
    K2,
    Q0,
}

impl ContinuationParam {
    pub fn range(self) -> (f64, f64) {
        match self {
            ContinuationParam::K2 => (0.2, 8.0),
            ContinuationParam::Q0 => (0.0, 8.0),
        }
    }

    fn name(self) -> &'static str {
        match self {
            ContinuationParam::K2 => "continue-k2",
            ContinuationParam::Q0 => "continue-q0",
        }
    }
}

/// Values `start, start + step, …` up to `end` (inclusive, with rounding
/// slack).
pub fn continuation_values(start: f64, end: f64, step: f64) -> Vec<f64> {
    let n = ((end - start) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| start + i as f64 * step).collect()
}

/// Sweeps `K2` or `q0` on the twist problem at the first refinement level
/// and the first `γ`, warm-starting each value from the last converged state.
pub fn run_continuation(s: &Settings, param: ContinuationParam) -> Result<Vec<Row>> {
    s.validate()?;
    let twist = TwistProblem::default();
    let (r, gamma) = (s.refs[0], s.gammas[0]);
    let (lo, hi) = param.range();
    let mut rows = Vec::new();
    let mut warm: Option<State> = None;
    for v in continuation_values(lo, hi, s.step) {
        let mut params = s.params(gamma);
        match param {
            ContinuationParam::K2 => params.k2 = v,
            ContinuationParam::Q0 => params.q0 = v,
        }
        let problem = twist.problem(r, s.element, params)?;
        let init = match &warm {
            Some(st) => st.clone(),
            None => problem.initial_state(|_| [1.0, 0.0, 0.0])?,
        };
        let (state, report) = nonlinear_solve(&problem, &s.solver(), init)?;
        log::info!("{} {v:.2}: {} iterations, avg {:?}", param.name(), report.nonlinear_iterations, report.avg_linear());
        let mut row = base_row(param.name(), r, &problem, gamma, &report)?;
        row.param = Some(v);
        if report.converged {
            warm = Some(state);
        } else {
            log::warn!("{} {v:.2} did not converge; continuing from the last converged state", param.name());
        }
        rows.push(row);
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintSummary {
    /// Slope of `log ‖n·n − 1‖` against `log γ` over `γ ∈ [1e2, 1e6]`.
    pub slope: Option<f64>,
    /// Every run landed on the constant anchoring state: constraint below
    /// 1e-12, or nodal distance to the boundary value below 1e-6.
    pub degenerate: bool,
    /// Largest nodal distance `|n_h - (0, 0, 1)|` over all runs.
    pub max_deviation: f64,
    pub monotone: bool,
}

/// Constant anchoring `n = (0, 0, 1)` on the whole boundary of the unit
/// square, equal constants, initial guess `(0, 0, 0.8)`.
pub fn run_constraint_study(s: &Settings) -> Result<(Vec<Row>, ConstraintSummary)> {
    s.validate()?;
    let r = s.refs[0];
    let h = MeshHierarchy::structured(10, r)?;
    let mut rows = Vec::new();
    let mut deviations = Vec::new();
    for &gamma in &s.gammas {
        let problem = Problem::new(&h, s.element, s.params(gamma), BoundaryTags::ALL, false, &|_| [0.0, 0.0, 1.0])?;
        let init = problem.initial_state(|_| [0.0, 0.0, 0.8])?;
        let (state, report) = nonlinear_solve(&problem, &s.solver(), init)?;
        let dev = state
            .director
            .chunks(3)
            .map(|n| (n[0] * n[0] + n[1] * n[1] + (n[2] - 1.0).powi(2)).sqrt())
            .fold(0.0, f64::max);
        log::info!("constraint gamma {gamma:e}: |n.n-1| = {:.3e}, max |n - g| = {dev:.3e}", report.constraint_norm);
        deviations.push(dev);
        rows.push(base_row("constraint", r, &problem, gamma, &report)?);
    }
    let (gs, cs): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|row| row.gamma.is_some_and(|g| (1e2..=1e6).contains(&g)))
        .map(|row| (row.gamma.unwrap(), row.constraint_norm.unwrap()))
        .unzip();
    let norms: Vec<f64> = rows.iter().map(|row| row.constraint_norm.unwrap()).collect();
    let max_deviation = deviations.iter().copied().fold(0.0, f64::max);
    let degenerate = norms.iter().all(|&c| c < 1e-12) || max_deviation < 1e-6;
    let monotone = norms.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9));
    let slope = if degenerate { None } else { loglog_slope(&gs, &cs) };
    Ok((rows, ConstraintSummary { slope, degenerate, monotone, max_deviation }))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceSummary {
    /// `(γ, L2 slope, H1 slope)` against the mesh size.
    pub slopes: Vec<(f64, f64, f64)>,
}

/// Error of the computed twist against the exact solution per level.
pub fn run_convergence(s: &Settings) -> Result<(Vec<Row>, ConvergenceSummary)> {
    s.validate()?;
    if s.q0 != 0.0 {
        return Err(BenchError::Config("the exact twist solution needs q0 = 0".into()));
    }
    let twist = TwistProblem::default();
    let mut rows = Vec::new();
    let mut slopes = Vec::new();
    for &gamma in &s.gammas {
        let (mut hs, mut l2, mut h1) = (Vec::new(), Vec::new(), Vec::new());
        for &r in &s.refs {
            let problem = twist.problem(r, s.element, s.params(gamma))?;
            let init = problem.initial_state(|_| [1.0, 0.0, 0.0])?;
            let (state, report) = nonlinear_solve(&problem, &s.solver(), init)?;
            let row = with_errors(base_row("convergence", r, &problem, gamma, &report)?, &twist, &problem, &state)?;
            log::info!("convergence ref {r} gamma {gamma:e}: L2 {:.3e} H1 {:.3e}", row.l2_error.unwrap(), row.h1_error.unwrap());
            hs.push(1.0 / (twist.coarse as f64 * 2f64.powi(r as i32)));
            l2.push(row.l2_error.unwrap());
            h1.push(row.h1_error.unwrap());
            rows.push(row);
        }
        if let (Some(a), Some(b)) = (loglog_slope(&hs, &l2), loglog_slope(&hs, &h1)) {
            slopes.push((gamma, a, b));
        }
    }
    Ok((rows, ConvergenceSummary { slopes }))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectraRow {
    #[serde(rename = "ref")]
    pub refs: usize,
    pub gamma: f64,
    pub kind: String,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub n_overlap: usize,
}

/// Eigenvalue estimates of the additive Schwarz preconditioned director
/// block, linearized at the exact twist solution.
pub fn run_spectra(s: &Settings) -> Result<Vec<SpectraRow>> {
    s.validate()?;
    let twist = TwistProblem::default();
    let mut rows = Vec::new();
    for &r in &s.refs {
        for &gamma in &s.gammas {
            let problem = twist.problem(r, s.element, s.params(gamma))?;
            let state = problem.initial_state(|p| twist.exact(p))?;
            let sys = problem.assemble(&state, OperatorMode::PicardAug)?;
            let bcs = problem.update_bcs.last().unwrap();
            for kind in [PatchKind::Star, PatchKind::PointBlock] {
                let est = spectral_diagnostics(&problem.finest().director, bcs, &sys.a, kind)?;
                rows.push(SpectraRow {
                    refs: r,
                    gamma,
                    kind: kind.to_string(),
                    lambda_min: est.lambda_min,
                    lambda_max: est.lambda_max,
                    n_overlap: est.n_overlap,
                });
            }
        }
    }
    Ok(rows)
}

/// `‖(A₊ − Bᵀ M⁻¹ B) δn‖ / ‖δn‖₁` for the first Picard update of the twist
/// problem on each level, paired with the mesh size.
pub fn schur_perturbation_study(refs: &[usize], element: Element, gamma: f64) -> Result<Vec<(f64, f64)>> {
    let twist = TwistProblem::default();
    let mut out = Vec::new();
    for &r in refs {
        let problem = twist.problem(r, element, Settings::defaults(crate::Experiment::Twist).params(gamma))?;
        let state = problem.initial_state(|_| [1.0, 0.0, 0.0])?;
        let sys = problem.assemble(&state, OperatorMode::PicardAug)?;
        let inner = oseen::saddle::InnerInverse::direct(&sys.a)?;
        let (du, _, _) = oseen::saddle::solve_block(&sys, inner, oseen::saddle::SchurApprox::Mass, 1e-12, 200)?;
        let mut du = du;
        problem.director_bcs.sync_ghosts(&mut du);
        let v = schur_perturbation_norm(problem.finest(), &state, &du)?;
        out.push((1.0 / (twist.coarse as f64 * 2f64.powi(r as i32)), v));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn continuation_grid() {
        assert_eq!(continuation_values(0.0, 1.0, 0.5), vec![0.0, 0.5, 1.0]);
        let v = continuation_values(0.2, 8.0, 0.1);
        assert_eq!(v.len(), 79);
        assert!((v.last().unwrap() - 8.0).abs() < 1e-12);
    }
}
