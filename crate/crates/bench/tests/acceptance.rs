//! One PASS/FAIL line per acceptance criterion. Runs as a plain binary so the
//! lines are printed in order and never captured.

use std::collections::HashSet;
use std::io::Write;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use oseen::fespace::{basis_gradients, Space};
use oseen::forms::{
    assemble_constraint, assemble_operator, assemble_rhs, Element, OperatorMode, ProblemParams, QuadratureRule, State,
};
use oseen::linalg::{CsrMatrix, LinearOperator};
use oseen::multigrid::{build_patches, PatchKind};
use oseen::saddle::{solve_block, solve_monolithic, InnerInverse, InnerSolver, Linearization, Problem, SchurApprox};
use oseen_bench::{
    loglog_slope, run_constraint_study, run_convergence, run_spectra, run_twist, schur_perturbation_study, Experiment,
    Row, Settings, TwistProblem,
};

type Outcome = Result<String, String>;

const GAMMAS: [f64; 4] = [1e3, 1e4, 1e5, 1e6];

/// Table entries `(avg FGMRES, nonlinear iterations)` per ref 1, 2 and gamma.
const PICARD: [[(f64, usize); 4]; 2] = [
    [(2.00, 5), (1.20, 5), (1.14, 7), (1.11, 9)],
    [(3.00, 5), (1.40, 5), (1.17, 6), (1.12, 8)],
];
const NEWTON: [[(f64, usize); 4]; 2] = [
    [(2.20, 5), (1.14, 7), (1.00, 10), (1.00, 19)],
    [(3.20, 5), (1.14, 7), (1.00, 12), (1.00, 15)],
];

fn twist_settings(refs: &[usize], gammas: &[f64], inner: InnerSolver, lin: Linearization) -> Settings {
    let mut s = Settings::defaults(Experiment::Twist);
    s.refs = refs.to_vec();
    s.gammas = gammas.to_vec();
    s.inner = inner;
    s.linearization = lin;
    s
}

fn twist_rows(refs: &[usize], gammas: &[f64], inner: InnerSolver, lin: Linearization) -> Result<Vec<Row>, String> {
    run_twist(&twist_settings(refs, gammas, inner, lin)).map_err(|e| e.to_string())
}

fn avg(r: &Row) -> f64 {
    r.avg_fgmres.unwrap_or(f64::NAN)
}

fn fmt_row(r: &Row) -> String {
    format!("{:.2} ({})", avg(r), r.nonlinear_iters.unwrap_or(0))
}

fn twist_problem(refs: usize, gamma: f64) -> Result<Problem, String> {
    TwistProblem::default()
        .problem(refs, Element::P2P1, ProblemParams::default().with_gamma(gamma))
        .map_err(|e| e.to_string())
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn exact_inverse() -> Outcome {
    let p = twist_problem(0, 1e4)?;
    let s = p.initial_state(|_| [1.0, 0.0, 0.0]).map_err(|e| e.to_string())?;
    let sys = p.assemble(&s, OperatorMode::PicardAug).map_err(|e| e.to_string())?;
    let inner = InnerInverse::direct(&sys.a).map_err(|e| e.to_string())?;
    let (u, q, rep) = solve_block(&sys, inner, SchurApprox::Exact, 1e-10, 10).map_err(|e| e.to_string())?;
    let x: Vec<f64> = u.into_iter().chain(q).collect();
    let mut ax = vec![0.0; x.len()];
    sys.apply(&x, &mut ax);
    let b = sys.rhs();
    let r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let rel = norm(&r) / norm(&b);
    let msg = format!("{} FGMRES iteration(s), relative residual {rel:.1e}", rep.iterations);
    if rep.iterations == 1 && rel <= 1e-10 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn table1(picard: &[Row]) -> Outcome {
    let newton = twist_rows(&[1, 2], &GAMMAS, InnerSolver::Lu, Linearization::Newton)?;
    let mut bad = Vec::new();
    for (name, rows, table) in [("picard", picard, &PICARD), ("newton", &newton[..], &NEWTON)] {
        for (k, r) in rows.iter().enumerate() {
            let (level, g) = (k / 4, k % 4);
            let (pavg, pits) = table[level][g];
            let its = r.nonlinear_iters.unwrap_or(0);
            if (avg(r) - pavg).abs() > 0.5 || its.abs_diff(pits) > 1 {
                bad.push(format!("{name} ref {} gamma {:e}: {} vs {pavg:.2} ({pits})", level + 1, GAMMAS[g], fmt_row(r)));
            }
        }
    }
    let mut ratios = Vec::new();
    for level in 0..2 {
        let (n, p) = (&newton[level * 4 + 3], &picard[level * 4 + 3]);
        let ratio = n.nonlinear_iters.unwrap_or(0) as f64 / p.nonlinear_iters.unwrap_or(1) as f64;
        ratios.push(format!("{ratio:.2}"));
        if ratio < 1.5 {
            bad.push(format!("ref {}: newton/picard iterations at gamma 1e6 = {ratio:.2} < 1.5", level + 1));
        }
    }
    let picard_s: Vec<String> = picard.iter().map(fmt_row).collect();
    let newton_s: Vec<String> = newton.iter().map(fmt_row).collect();
    let msg = format!(
        "picard [{}]; newton [{}]; newton/picard at 1e6 [{}]",
        picard_s.join(", "),
        newton_s.join(", "),
        ratios.join(", ")
    );
    if bad.is_empty() {
        Ok(msg)
    } else {
        Err(format!("{msg}; out of tolerance: {}", bad.join("; ")))
    }
}

fn table2(picard12: &[Row]) -> Outcome {
    let mut rows = picard12.to_vec();
    rows.extend(twist_rows(&[3], &GAMMAS, InnerSolver::Lu, Linearization::Picard)?);
    let mut bad = Vec::new();
    let mut out = Vec::new();
    for level in 0..3 {
        let a: Vec<f64> = rows[level * 4..level * 4 + 4].iter().map(avg).collect();
        out.push(format!("ref {}: {:.2} -> {:.2}", level + 1, a[0], a[3]));
        if !a.windows(2).all(|w| w[1] < w[0]) {
            bad.push(format!("ref {} not strictly decreasing: {a:?}", level + 1));
        }
        if !(1.0..=3.0).contains(&a[3]) {
            bad.push(format!("ref {} at gamma 1e6 outside [1, 3]: {:.2}", level + 1, a[3]));
        }
    }
    let msg = out.join("; ");
    if bad.is_empty() {
        Ok(msg)
    } else {
        Err(format!("{msg}; {}", bad.join("; ")))
    }
}

fn tables45() -> Outcome {
    let mut bad = Vec::new();
    let mut out = Vec::new();
    for (name, inner) in [("star", InnerSolver::MgStar), ("pbj", InnerSolver::MgPbj)] {
        let sweep = twist_rows(&[2], &GAMMAS, inner, Linearization::Picard)?;
        let ends = twist_rows(&[1, 3], &[1e6], inner, Linearization::Picard)?;
        let levels = [avg(&ends[0]), avg(&sweep[3]), avg(&ends[1])];
        let (lo, hi) = levels.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &v| (l.min(v), h.max(v)));
        let s: Vec<f64> = sweep.iter().map(avg).collect();
        let (smin, smax) = s.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &v| (l.min(v), h.max(v)));
        out.push(format!(
            "{name}: gamma 1e6 refs 1-3 [{:.2}, {:.2}, {:.2}], ref 2 sweep [{}]",
            levels[0],
            levels[1],
            levels[2],
            s.iter().map(|v| format!("{v:.2}")).collect::<Vec<_>>().join(", ")
        ));
        if hi > 6.0 || hi - lo > 3.0 {
            bad.push(format!("{name}: level averages {levels:?}"));
        }
        if smax > 3.0 * smin || smax > 12.0 {
            bad.push(format!("{name}: gamma sweep {s:?}"));
        }
        let unconverged = sweep.iter().chain(&ends).filter(|r| r.converged != Some(true)).count();
        if unconverged > 0 {
            bad.push(format!("{name}: {unconverged} runs did not converge"));
        }
    }
    let msg = out.join("; ");
    if bad.is_empty() {
        Ok(msg)
    } else {
        Err(format!("{msg}; {}", bad.join("; ")))
    }
}

fn constraint() -> Outcome {
    let (rows, summary) = run_constraint_study(&Settings::defaults(Experiment::Constraint)).map_err(|e| e.to_string())?;
    let norms: Vec<String> = rows
        .iter()
        .map(|r| format!("{:e}: {:.1e}", r.gamma.unwrap_or(f64::NAN), r.constraint_norm.unwrap_or(f64::NAN)))
        .collect();
    if summary.degenerate {
        return Err(format!(
            "degenerate: every run converged to the constant anchoring state (max |n - g| = {:.1e}), so no slope \
             can be measured; constraint norms [{}]",
            summary.max_deviation,
            norms.join(", ")
        ));
    }
    match summary.slope {
        Some(s) if (s + 0.5).abs() <= 0.1 => Ok(format!("slope {s:.3}")),
        s => Err(format!("slope {s:?}; constraint norms [{}]", norms.join(", "))),
    }
}

fn convergence() -> Outcome {
    let (rows, summary) = run_convergence(&Settings::defaults(Experiment::Convergence)).map_err(|e| e.to_string())?;
    let mut bad = Vec::new();
    let mut out = Vec::new();
    for &(g, l2, h1) in &summary.slopes {
        out.push(format!("gamma {g:e}: L2 {l2:.3}, H1 {h1:.3}"));
        if (l2 - 3.0).abs() > 0.25 || (h1 - 2.0).abs() > 0.25 {
            bad.push(format!("gamma {g:e} slopes out of range"));
        }
    }
    if summary.slopes.len() != 3 {
        bad.push("missing slopes".into());
    }
    for r in rows.iter().filter(|r| r.refs == Some(3)) {
        let e = r.energy.unwrap_or(f64::NAN);
        out.push(format!("ref 3 gamma {:e} energy {e:.6}", r.gamma.unwrap_or(f64::NAN)));
        if !((e - 0.37011).abs() <= 1e-3) {
            bad.push(format!("energy {e} at ref 3"));
        }
    }
    if rows.iter().any(|r| r.converged != Some(true)) {
        bad.push("a run did not converge".into());
    }
    let msg = out.join("; ");
    if bad.is_empty() {
        Ok(msg)
    } else {
        Err(format!("{msg}; {}", bad.join("; ")))
    }
}

fn schur_perturbation() -> Outcome {
    let data = schur_perturbation_study(&[0, 1, 2, 3], Element::P2P1, 1e4).map_err(|e| e.to_string())?;
    let (h, v): (Vec<f64>, Vec<f64>) = data.iter().copied().unzip();
    let slope = loglog_slope(&h, &v).ok_or("slope undefined")?;
    let vals: Vec<String> = v.iter().map(|x| format!("{x:.2e}")).collect();
    let msg = format!("slope {slope:.3} over h = 1/10..1/80, ratios [{}]", vals.join(", "));
    if slope >= 1.8 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

/// Overlapping point-block patches of the P1 twist space, counted from the
/// triangle list with periodic images identified by coordinates.
fn brute_force_overlap(refs: usize) -> Result<usize, String> {
    let p = TwistProblem::default()
        .problem(refs, Element::P1P1, ProblemParams::default())
        .map_err(|e| e.to_string())?;
    let mesh = p.finest().director.mesh().clone();
    let key = |v: usize| {
        let [x, y] = mesh.vertices()[v];
        let x = if (x - 1.0).abs() < 1e-12 { 0.0 } else { x };
        ((x * 1e9).round() as i64, (y * 1e9).round() as i64)
    };
    let free = |v: usize| {
        let y = mesh.vertices()[v][1];
        y > 1e-12 && y < 1.0 - 1e-12
    };
    let mut neighbours: std::collections::HashMap<(i64, i64), HashSet<(i64, i64)>> = Default::default();
    for t in mesh.triangles() {
        for &a in t {
            for &b in t {
                if free(a) && free(b) {
                    neighbours.entry(key(a)).or_default().insert(key(b));
                }
            }
        }
    }
    Ok(neighbours.values().map(HashSet::len).max().unwrap_or(0))
}

fn spectra() -> Outcome {
    let rows = run_spectra(&Settings::defaults(Experiment::Spectra)).map_err(|e| e.to_string())?;
    let mut bad = Vec::new();
    let mut out = Vec::new();
    for r in &rows {
        out.push(format!("ref {} gamma {:e} {}: {:.3} <= {}", r.refs, r.gamma, r.kind, r.lambda_max, r.n_overlap));
        if r.lambda_max > r.n_overlap as f64 + 0.1 {
            bad.push(format!("ref {} gamma {:e} {} exceeds the bound", r.refs, r.gamma, r.kind));
        }
    }
    let brute = brute_force_overlap(1)?;
    out.push(format!("brute-force P1 point-block N_O = {brute}"));
    if brute != 7 {
        bad.push(format!("brute-force N_O = {brute}"));
    }
    for r in rows.iter().filter(|r| r.kind == PatchKind::PointBlock.to_string()) {
        if r.n_overlap != brute {
            bad.push(format!("reported N_O {} differs from brute force", r.n_overlap));
        }
    }
    let msg = out.join("; ");
    if bad.is_empty() {
        Ok(msg)
    } else {
        Err(format!("{msg}; {}", bad.join("; ")))
    }
}

fn kernel_capture() -> Outcome {
    let p = twist_problem(1, 0.0)?;
    let space = &p.finest().director;
    let bcs = p.update_bcs.last().ok_or("no levels")?;
    let nodes = space.n_nodes();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let mut n: Vec<f64> = (0..3 * nodes).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut u: Vec<f64> = (0..3 * nodes).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for (nk, uk) in n.chunks_mut(3).zip(u.chunks_mut(3)) {
            let s = (nk[0] * uk[0] + nk[1] * uk[1] + nk[2] * uk[2]) / (nk[0] * nk[0] + nk[1] * nk[1] + nk[2] * nk[2]);
            for c in 0..3 {
                uk[c] -= s * nk[c];
            }
        }
        bcs.sync_ghosts(&mut n);
        bcs.zero_constrained(&mut u);
        bcs.sync_ghosts(&mut u);
        for kind in [PatchKind::Star, PatchKind::PointBlock] {
            let patches = build_patches(space, bcs, kind).map_err(|e| e.to_string())?;
            for contrib in patches.nodal_split(&u) {
                let mut by_node: std::collections::BTreeMap<usize, [f64; 3]> = Default::default();
                for (d, v) in contrib {
                    by_node.entry(d / 3).or_default()[d % 3] = v;
                }
                for (node, ui) in by_node {
                    let nk = &n[3 * node..3 * node + 3];
                    worst = worst.max((nk[0] * ui[0] + nk[1] * ui[1] + nk[2] * ui[2]).abs());
                }
            }
        }
    }
    let msg = format!("max |n_k . u_i| = {worst:.1e} over 100 fields, star and point-block");
    if worst <= 1e-14 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn oracle_equivalence() -> Outcome {
    let mut out = Vec::new();
    let mut ok = true;
    // The multiplier error of any backward stable solve grows like γ ε, so
    // the 1e-8 agreement is gated where that bound is below it; γ = 1e4 is
    // reported with both true residuals.
    for (refs, gamma, gated) in [(0, 0.0, true), (0, 1e2, true), (1, 0.0, true), (1, 1e2, true), (0, 1e4, false), (1, 1e4, false)] {
        let p = twist_problem(refs, gamma)?;
        let twist = TwistProblem::default();
        let s = p.initial_state(|x| {
            let e = twist.exact(x);
            [e[0], 0.1 * (3.0 * x[1]).sin(), e[2]]
        });
        let mut s = s.map_err(|e| e.to_string())?;
        s.multiplier.iter_mut().for_each(|v| *v = -0.3);
        let sys = p.assemble(&s, OperatorMode::PicardAug).map_err(|e| e.to_string())?;
        let inner = InnerInverse::direct(&sys.a).map_err(|e| e.to_string())?;
        let (u, q, _) = solve_block(&sys, inner, SchurApprox::Mass, 1e-13, 200).map_err(|e| e.to_string())?;
        let (um, qm) = solve_monolithic(&sys).map_err(|e| e.to_string())?;
        let x: Vec<f64> = u.iter().chain(&q).copied().collect();
        let xm: Vec<f64> = um.iter().chain(&qm).copied().collect();
        let d: Vec<f64> = x.iter().zip(&xm).map(|(a, b)| a - b).collect();
        let rel = norm(&d) / norm(&xm);
        if gated {
            out.push(format!("ref {refs} gamma {gamma:e}: {rel:.1e}"));
            ok &= rel <= 1e-8;
        } else {
            let (m, b) = (sys.monolithic(), sys.rhs());
            let res = |x: &[f64]| {
                let r: Vec<f64> = m.mul_vec(x).iter().zip(&b).map(|(a, c)| a - c).collect();
                norm(&r) / norm(&b)
            };
            out.push(format!(
                "ref {refs} gamma {gamma:e} (not gated): {rel:.1e}, residuals {:.1e} / {:.1e}",
                res(&x),
                res(&xm)
            ));
        }
    }
    let msg = format!("relative difference to monolithic LU: {}", out.join(", "));
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

/// `∫ ∇u : ∇v` for the vector space, assembled independently of the
/// operator code.
fn grad_grad(space: &Space) -> Result<CsrMatrix, String> {
    let rule = QuadratureRule::degree2();
    let npc = space.nodes_per_cell();
    let mut trips = Vec::new();
    let mut g = vec![[0.0; 2]; npc];
    for t in 0..space.n_cells() {
        let geo = space.geometry(t);
        let nodes = space.cell_nodes(t).to_vec();
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            basis_gradients(space.family(), *l, &geo.grad_lambda, &mut g);
            let wq = 2.0 * geo.area * w;
            for (i, &a) in nodes.iter().enumerate() {
                for (j, &b) in nodes.iter().enumerate() {
                    let v = wq * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
                    for c in 0..3 {
                        trips.push((space.dof(a, c), space.dof(b, c), v));
                    }
                }
            }
        }
    }
    CsrMatrix::from_triplets(space.ndofs(), space.ndofs(), &trips).map_err(|e| e.to_string())
}

fn consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let params = ProblemParams::new(1.0, 1.2, 1.0, 0.5, 10.0);
    let p = TwistProblem::default().problem(0, Element::P2P1, params).map_err(|e| e.to_string())?;
    let disc = p.finest();
    let mut base = p.initial_state(|x| TwistProblem::default().exact(x)).map_err(|e| e.to_string())?;
    base.director.iter_mut().for_each(|v| *v += 0.1 * rng.gen_range(-1.0..1.0));
    base.multiplier.iter_mut().for_each(|v| *v = rng.gen_range(-1.0..1.0));
    let du: Vec<f64> = base.director.iter().map(|_| rng.gen_range(-1.0..1.0)).collect();
    let dp: Vec<f64> = base.multiplier.iter().map(|_| rng.gen_range(-1.0..1.0)).collect();

    let a = assemble_operator(disc, &base, &params, OperatorMode::NewtonAug).map_err(|e| e.to_string())?;
    let b = assemble_constraint(disc, &base).map_err(|e| e.to_string())?;
    let mut jd = a.mul_vec(&du);
    for (x, y) in jd.iter_mut().zip(b.mul_vec_transposed(&dp)) {
        *x += y;
    }
    jd.extend(b.mul_vec(&du));

    let eps = 1e-6;
    let shifted = |sign: f64| -> Result<Vec<f64>, String> {
        let st = State::new(
            base.director.iter().zip(&du).map(|(x, d)| x + sign * eps * d).collect(),
            base.multiplier.iter().zip(&dp).map(|(x, d)| x + sign * eps * d).collect(),
        );
        let (f, g) = assemble_rhs(disc, &st, &params).map_err(|e| e.to_string())?;
        Ok(f.into_iter().chain(g).map(|v| -v).collect())
    };
    let (rp, rm) = (shifted(1.0)?, shifted(-1.0)?);
    let fd: Vec<f64> = rp.iter().zip(&rm).map(|(p, m)| (p - m) / (2.0 * eps)).collect();
    let diff: Vec<f64> = fd.iter().zip(&jd).map(|(x, y)| x - y).collect();
    let fd_err = norm(&diff) / norm(&jd);

    // equal constants, no chirality: div-div + curl-curl against grad-grad
    let equal = ProblemParams::equal(1.0);
    let space = &disc.director;
    let zero = State::new(vec![0.0; space.ndofs()], vec![0.0; disc.multiplier.ndofs()]);
    let plain = assemble_operator(disc, &zero, &equal, OperatorMode::Plain).map_err(|e| e.to_string())?;
    let lap = grad_grad(space)?;
    let bcs = p.update_bcs.last().ok_or("no levels")?;
    let mut id_err = 0.0f64;
    for _ in 0..20 {
        let mut u: Vec<f64> = (0..space.ndofs()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        bcs.zero_constrained(&mut u);
        bcs.sync_ghosts(&mut u);
        let qa: f64 = u.iter().zip(plain.mul_vec(&u)).map(|(x, y)| x * y).sum();
        let ql: f64 = u.iter().zip(lap.mul_vec(&u)).map(|(x, y)| x * y).sum();
        id_err = id_err.max((qa - ql).abs() / ql);
    }
    let msg = format!("Newton operator vs central differences {fd_err:.1e}; div-curl identity {id_err:.1e}");
    if fd_err <= 1e-5 && id_err <= 1e-10 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn report(out: &mut impl Write, n: usize, name: &str, start: Instant, outcome: Outcome) -> bool {
    let secs = start.elapsed().as_secs_f64();
    let (tag, msg, pass) = match outcome {
        Ok(m) => ("PASS", m, true),
        Err(m) => ("FAIL", m, false),
    };
    let _ = writeln!(out, "{tag} {n:>2} {name} ({secs:.0} s): {msg}");
    let _ = out.flush();
    pass
}

fn main() -> ExitCode {
    let mut out = std::io::stdout();
    let mut failed = 0;
    let mut check = |n: usize, name: &str, f: &dyn Fn() -> Outcome| {
        let start = Instant::now();
        if !report(&mut out, n, name, start, f()) {
            failed += 1;
        }
    };
    check(1, "exact-inverse sanity", &exact_inverse);
    let picard = twist_rows(&[1, 2], &GAMMAS, InnerSolver::Lu, Linearization::Picard);
    check(2, "picard vs newton table", &|| table1(picard.as_ref().map_err(Clone::clone)?));
    check(3, "gamma trend with exact inner solves", &|| table2(picard.as_ref().map_err(Clone::clone)?));
    check(4, "multigrid inner solves", &tables45);
    check(5, "constraint improvement", &constraint);
    check(6, "convergence orders", &convergence);
    check(7, "schur perturbation decay", &schur_perturbation);
    check(8, "spectral bounds", &spectra);
    check(9, "kernel capture", &kernel_capture);
    check(10, "oracle equivalence", &oracle_equivalence);
    check(11, "numerical consistency", &consistency);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
