//! Nonlinear driver and the block preconditioner for the augmented
//! saddle-point systems.
//!
//! Each step solves
//!
//! ```text
//! [ A_γ  Bᵀ ] [δn]   [f]
//! [ B    0  ] [δλ] = [g]
//! ```
//!
//! with FGMRES preconditioned by the block factorization
//! `L D U` where `D = diag(Ã⁻¹, S̃⁻¹)`, `Ã⁻¹` is a direct solve or one
//! multigrid V-cycle and `S̃⁻¹ = −(1 + γ) M_λ⁻¹`.

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::fespace::{BoundaryConditions, Space};
use crate::forms::{
    assemble_constraint, assemble_mass_multiplier, assemble_operator, assemble_rhs, constraint_norm, energy, error_norms,
    Discretization, Element, OperatorMode, ProblemParams, State,
};
use crate::linalg::{
    factor, factor_spd_or_lu, fgmres, CsrMatrix, DenseLu, DenseMatrix, DirectFactorization, FactorKind, KrylovReport,
    LinearOperator, Preconditioner, SparseLu,
};
use crate::mesh::{BoundaryTags, MeshHierarchy};
use crate::multigrid::{build_patches, overlap_count, schwarz_spectrum, AdditiveSchwarz, MgConfig, MgHierarchy, Multigrid, PatchKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Linearization {
    Newton,
    Picard,
}

impl Linearization {
    pub fn mode(self) -> OperatorMode {
        match self {
            Linearization::Newton => OperatorMode::NewtonAug,
            Linearization::Picard => OperatorMode::PicardAug,
        }
    }
}

impl FromStr for Linearization {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "newton" => Ok(Linearization::Newton),
            "picard" => Ok(Linearization::Picard),
            other => invalid(format!("unknown linearization '{other}'")),
        }
    }
}

impl fmt::Display for Linearization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Linearization::Newton => "newton",
            Linearization::Picard => "picard",
        })
    }
}

/// How the director block is inverted inside the preconditioner.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum InnerSolver {
    /// Sparse direct factorization (Cholesky, LU when indefinite).
    Lu,
    MgStar,
    MgPbj,
}

impl InnerSolver {
    pub fn patch_kind(self) -> Option<PatchKind> {
        match self {
            InnerSolver::Lu => None,
            InnerSolver::MgStar => Some(PatchKind::Star),
            InnerSolver::MgPbj => Some(PatchKind::PointBlock),
        }
    }
}

impl FromStr for InnerSolver {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "lu" => Ok(InnerSolver::Lu),
            "mg-star" => Ok(InnerSolver::MgStar),
            "mg-pbj" => Ok(InnerSolver::MgPbj),
            other => invalid(format!("unknown inner solver '{other}'")),
        }
    }
}

impl fmt::Display for InnerSolver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InnerSolver::Lu => "lu",
            InnerSolver::MgStar => "mg-star",
            InnerSolver::MgPbj => "mg-pbj",
        })
    }
}

/// Multiplier block of the preconditioner.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SchurApprox {
    /// `−(1 + γ) M_λ⁻¹`.
    Mass,
    /// Dense inverse of the exact Schur complement (small systems only).
    Exact,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    pub linearization: Linearization,
    pub inner: InnerSolver,
    pub schur: SchurApprox,
    /// On the Euclidean norm of the constrained residual.
    pub atol: f64,
    /// Relative tolerance of each outer FGMRES solve.
    pub rtol: f64,
    pub max_nonlinear: usize,
    pub max_linear: usize,
    pub relax_steps: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            linearization: Linearization::Picard,
            inner: InnerSolver::Lu,
            schur: SchurApprox::Mass,
            atol: 1e-8,
            rtol: 1e-4,
            max_nonlinear: 50,
            max_linear: 100,
            relax_steps: 3,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.atol > 0.0 && self.rtol > 0.0) {
            return invalid(format!("tolerances must be positive (atol {}, rtol {})", self.atol, self.rtol));
        }
        if self.max_linear == 0 || self.relax_steps == 0 {
            return invalid("iteration limits must be at least 1");
        }
        Ok(())
    }
}

/// Discretizations on every level, director boundary data on the finest
/// level and homogeneous update constraints on all levels.
pub struct Problem {
    pub levels: Vec<Discretization>,
    pub director_bcs: BoundaryConditions,
    pub update_bcs: Vec<BoundaryConditions>,
    pub multiplier_bcs: BoundaryConditions,
    pub params: ProblemParams,
    periodic_x: bool,
}

impl Problem {
    /// Director fixed to `g` on `dirichlet_sides`, optionally periodic in `x`;
    /// the multiplier only inherits the periodicity.
    pub fn new(
        hierarchy: &MeshHierarchy,
        element: Element,
        params: ProblemParams,
        dirichlet_sides: BoundaryTags,
        periodic_x: bool,
        g: &dyn Fn([f64; 2]) -> [f64; 3],
    ) -> Result<Self> {
        let levels: Vec<Discretization> =
            hierarchy.levels().iter().map(|m| Discretization::new(m, element)).collect::<Result<_>>()?;
        let finest = levels.last().unwrap();
        let director_bcs = BoundaryConditions::for_space(&finest.director, dirichlet_sides, periodic_x, g)?;
        let update_bcs = levels
            .iter()
            .map(|d| BoundaryConditions::for_space(&d.director, dirichlet_sides, periodic_x, &|_| [0.0; 3]))
            .collect::<Result<_>>()?;
        let multiplier_bcs =
            BoundaryConditions::for_space(&finest.multiplier, BoundaryTags::INTERIOR, periodic_x, &|_| [0.0; 3])?;
        Ok(Self { levels, director_bcs, update_bcs, multiplier_bcs, params, periodic_x })
    }

    pub fn finest(&self) -> &Discretization {
        self.levels.last().unwrap()
    }

    /// Unknowns after periodic identification of every node pair, corners
    /// included (Dirichlet dofs are counted).
    pub fn reported_dofs(&self) -> Result<usize> {
        let d = self.finest();
        let count = |s: &Space| -> Result<usize> {
            let images = if self.periodic_x { s.periodic_node_pairs()?.len() } else { 0 };
            Ok((s.n_nodes() - images) * s.components())
        };
        Ok(count(&d.director)? + count(&d.multiplier)?)
    }

    /// Interpolated director with boundary data written in and `λ = 0`.
    pub fn initial_state(&self, n0: impl Fn([f64; 2]) -> [f64; 3]) -> Result<State> {
        let mut s = State::from_director(self.finest(), n0)?;
        self.director_bcs.write_dirichlet(&mut s.director);
        self.director_bcs.sync_ghosts(&mut s.director);
        self.multiplier_bcs.sync_ghosts(&mut s.multiplier);
        Ok(s)
    }

    fn update_bcs_finest(&self) -> &BoundaryConditions {
        self.update_bcs.last().unwrap()
    }

    /// Constrained nonlinear residual `(f, g)`.
    pub fn residual(&self, state: &State) -> Result<(Vec<f64>, Vec<f64>)> {
        let (f, g) = assemble_rhs(self.finest(), state, &self.params)?;
        Ok((self.update_bcs_finest().fold_vector(&f), self.multiplier_bcs.fold_vector(&g)))
    }

    /// Linearized system at `state` in the constrained layout.
    pub fn assemble(&self, state: &State, mode: OperatorMode) -> Result<BlockSystem> {
        let disc = self.finest();
        let (f, g) = assemble_rhs(disc, state, &self.params)?;
        let a = assemble_operator(disc, state, &self.params, mode)?;
        let b = assemble_constraint(disc, state)?;
        let m = assemble_mass_multiplier(&disc.multiplier)?;
        let ubc = self.update_bcs_finest();
        let (a, f) = ubc.apply(&a, &f)?;
        let (b, g) = self.multiplier_bcs.apply_rect(ubc, &b, &g)?;
        let (m, _) = self.multiplier_bcs.apply(&m, &vec![0.0; m.nrows()])?;
        let ghosts = (0..g.len()).filter(|&d| self.multiplier_bcs.is_ghost(d)).collect();
        BlockSystem::new(a, b, m, f, g, ghosts, self.params.gamma)
    }

    /// Adds a constrained update to the state and restores periodic copies.
    pub fn apply_update(&self, state: &mut State, du: &[f64], dp: &[f64]) {
        for (x, d) in state.director.iter_mut().zip(du) {
            *x += d;
        }
        for (x, d) in state.multiplier.iter_mut().zip(dp) {
            *x += d;
        }
        self.director_bcs.sync_ghosts(&mut state.director);
        self.multiplier_bcs.sync_ghosts(&mut state.multiplier);
    }
}

/// `A_γ`, `B`, `M_λ` and the right-hand side of one linearized step, all in
/// the constrained layout. Multiplier ghost rows carry an identity in the
/// `(2, 2)` block.
pub struct BlockSystem {
    pub a: CsrMatrix,
    pub b: CsrMatrix,
    pub bt: CsrMatrix,
    pub mass: CsrMatrix,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub multiplier_ghosts: Vec<usize>,
    pub gamma: f64,
}

impl BlockSystem {
    pub fn new(
        a: CsrMatrix,
        b: CsrMatrix,
        mass: CsrMatrix,
        f: Vec<f64>,
        g: Vec<f64>,
        multiplier_ghosts: Vec<usize>,
        gamma: f64,
    ) -> Result<Self> {
        let (nu, np) = (a.nrows(), mass.nrows());
        if a.ncols() != nu || b.nrows() != np || b.ncols() != nu || f.len() != nu || g.len() != np {
            return invalid(format!(
                "inconsistent blocks: A {}x{}, B {}x{}, M {np}, rhs {}+{}",
                nu,
                a.ncols(),
                b.nrows(),
                b.ncols(),
                f.len(),
                g.len()
            ));
        }
        let bt = b.transpose();
        Ok(Self { a, b, bt, mass, f, g, multiplier_ghosts, gamma })
    }

    pub fn nu(&self) -> usize {
        self.a.nrows()
    }

    pub fn np(&self) -> usize {
        self.mass.nrows()
    }

    pub fn rhs(&self) -> Vec<f64> {
        let mut r = self.f.clone();
        r.extend(&self.g);
        r
    }

    /// The whole saddle-point matrix as one sparse matrix.
    pub fn monolithic(&self) -> CsrMatrix {
        let nu = self.nu();
        let n = nu + self.np();
        let mut trips = Vec::with_capacity(self.a.nnz() + 2 * self.b.nnz() + self.multiplier_ghosts.len());
        for r in 0..nu {
            let (c, v) = self.a.row(r);
            trips.extend(c.iter().zip(v).map(|(&c, &v)| (r, c, v)));
            let (c, v) = self.bt.row(r);
            trips.extend(c.iter().zip(v).map(|(&c, &v)| (r, nu + c, v)));
        }
        for r in 0..self.np() {
            let (c, v) = self.b.row(r);
            trips.extend(c.iter().zip(v).map(|(&c, &v)| (nu + r, c, v)));
        }
        for &d in &self.multiplier_ghosts {
            trips.push((nu + d, nu + d, 1.0));
        }
        CsrMatrix::from_triplets(n, n, &trips).expect("indices are in range")
    }
}

impl LinearOperator for BlockSystem {
    fn nrows(&self) -> usize {
        self.nu() + self.np()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let nu = self.nu();
        let (xu, xp) = x.split_at(nu);
        let (yu, yp) = y.split_at_mut(nu);
        self.a.matvec(xu, yu);
        let btp = self.bt.mul_vec(xp);
        for (u, v) in yu.iter_mut().zip(&btp) {
            *u += v;
        }
        self.b.matvec(xu, yp);
        for &d in &self.multiplier_ghosts {
            yp[d] += xp[d];
        }
    }
}

/// `−(1 + γ) M_λ⁻¹ v`.
pub fn schur_apply(mass: &DirectFactorization, gamma: f64, v: &[f64]) -> Vec<f64> {
    let mut z = mass.solve(v);
    z.iter_mut().for_each(|x| *x *= -(1.0 + gamma));
    z
}

/// Approximate inverse of the director block.
pub enum InnerInverse {
    Direct(DirectFactorization),
    Multigrid(Box<Multigrid>),
}

impl InnerInverse {
    pub fn direct(a: &CsrMatrix) -> Result<Self> {
        Ok(Self::Direct(factor_spd_or_lu(a).map_err(|e| Error::Inner { factor: "director block", source: Box::new(e) })?))
    }
}

impl Preconditioner for InnerInverse {
    fn apply(&mut self, r: &[f64], z: &mut [f64]) -> Result<()> {
        match self {
            InnerInverse::Direct(f) => {
                z.copy_from_slice(r);
                f.solve_in_place(z);
                Ok(())
            }
            InnerInverse::Multigrid(mg) => mg.apply(r, z).map_err(|e| Error::Inner { factor: "multigrid", source: Box::new(e) }),
        }
    }
}

enum SchurInverse {
    Mass(DirectFactorization, f64),
    Exact(DenseLu),
}

/// The full block factorization
/// `[I 0; −B Ã⁻¹ I]ᵀ`-style three-factor inverse.
pub struct BlockPreconditioner<'a> {
    sys: &'a BlockSystem,
    inner: InnerInverse,
    schur: SchurInverse,
}

impl<'a> BlockPreconditioner<'a> {
    pub fn new(sys: &'a BlockSystem, inner: InnerInverse, schur: SchurApprox) -> Result<Self> {
        let schur = match schur {
            SchurApprox::Mass => {
                let m = factor(&sys.mass, FactorKind::Cholesky)
                    .map_err(|e| Error::Inner { factor: "multiplier mass", source: Box::new(e) })?;
                SchurInverse::Mass(m, sys.gamma)
            }
            SchurApprox::Exact => SchurInverse::Exact(exact_schur(sys)?),
        };
        Ok(Self { sys, inner, schur })
    }
}

/// Dense `C − B A⁻¹ Bᵀ` factored by LU.
fn exact_schur(sys: &BlockSystem) -> Result<DenseLu> {
    let np = sys.np();
    let fa = factor_spd_or_lu(&sys.a)?;
    let mut s = DenseMatrix::zeros(np, np);
    let mut col = vec![0.0; sys.nu()];
    for j in 0..np {
        col.iter_mut().for_each(|v| *v = 0.0);
        let (rows, vals) = sys.b.row(j);
        for (&r, &v) in rows.iter().zip(vals) {
            col[r] = v;
        }
        fa.solve_in_place(&mut col);
        let bcol = sys.b.mul_vec(&col);
        for i in 0..np {
            s[(i, j)] = -bcol[i];
        }
    }
    for &d in &sys.multiplier_ghosts {
        s[(d, d)] += 1.0;
    }
    DenseLu::new(&s)
}

impl Preconditioner for BlockPreconditioner<'_> {
    fn apply(&mut self, r: &[f64], z: &mut [f64]) -> Result<()> {
        let nu = self.sys.nu();
        let (ru, rp) = r.split_at(nu);
        let mut t = vec![0.0; nu];
        self.inner.apply(ru, &mut t)?;
        let bt_ = self.sys.b.mul_vec(&t);
        let y: Vec<f64> = rp.iter().zip(&bt_).map(|(a, b)| a - b).collect();
        let zp = match &self.schur {
            SchurInverse::Mass(m, gamma) => schur_apply(m, *gamma, &y),
            SchurInverse::Exact(lu) => {
                let mut v = y;
                lu.solve_in_place(&mut v);
                v
            }
        };
        let btz = self.sys.bt.mul_vec(&zp);
        let w: Vec<f64> = ru.iter().zip(&btz).map(|(a, b)| a - b).collect();
        let (zu, zpo) = z.split_at_mut(nu);
        self.inner.apply(&w, zu)?;
        zpo.copy_from_slice(&zp);
        Ok(())
    }
}

/// Inner inverse for `sys.a` as configured. The multigrid variant
/// re-assembles coarse operators from `state`.
pub fn build_inner(
    problem: &Problem,
    hierarchy: Option<&MgHierarchy>,
    state: &State,
    mode: OperatorMode,
    sys: &BlockSystem,
    config: &SolverConfig,
) -> Result<InnerInverse> {
    match (config.inner.patch_kind(), hierarchy) {
        (None, _) => InnerInverse::direct(&sys.a),
        (Some(kind), Some(h)) => {
            let mut ops = h.coarse_operators(state, &problem.params, mode)?;
            ops.push(sys.a.clone());
            let mut mg = MgConfig::new(kind);
            mg.relax_steps = config.relax_steps;
            Ok(InnerInverse::Multigrid(Box::new(h.multigrid(ops, mg)?)))
        }
        (Some(_), None) => invalid("multigrid requested without a level hierarchy"),
    }
}

/// Solves one block system with preconditioned FGMRES.
pub fn solve_block(
    sys: &BlockSystem,
    inner: InnerInverse,
    schur: SchurApprox,
    rtol: f64,
    maxit: usize,
) -> Result<(Vec<f64>, Vec<f64>, KrylovReport)> {
    let mut pre = BlockPreconditioner::new(sys, inner, schur)?;
    let (x, rep) = fgmres(sys, &mut pre, &sys.rhs(), None, rtol, maxit)?;
    let (u, p) = x.split_at(sys.nu());
    Ok((u.to_vec(), p.to_vec(), rep))
}

/// Reference solution of a block system by sparse LU of the whole matrix.
pub fn solve_monolithic(sys: &BlockSystem) -> Result<(Vec<f64>, Vec<f64>)> {
    let lu = SparseLu::new(&sys.monolithic())?;
    let mut x = sys.rhs();
    lu.solve_in_place(&mut x);
    let (u, p) = x.split_at(sys.nu());
    Ok((u.to_vec(), p.to_vec()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub nonlinear_iterations: usize,
    /// FGMRES iterations of each nonlinear step.
    pub linear_iterations: Vec<usize>,
    /// Whether each step's FGMRES reached its tolerance within the limit.
    pub linear_converged: Vec<bool>,
    /// Residual norm before each step and after the last one.
    pub residuals: Vec<f64>,
    pub energy: f64,
    pub constraint_norm: f64,
    pub converged: bool,
    pub min_multiplier: f64,
    pub min_length_sq: f64,
    pub max_length_sq: f64,
}

impl SolveReport {
    /// Mean FGMRES count over steps whose linear solve converged; `None`
    /// when there are none.
    pub fn avg_linear(&self) -> Option<f64> {
        let counts: Vec<usize> = self
            .linear_iterations
            .iter()
            .zip(&self.linear_converged)
            .filter(|(_, &ok)| ok)
            .map(|(&n, _)| n)
            .collect();
        if counts.is_empty() {
            None
        } else {
            Some(counts.iter().sum::<usize>() as f64 / counts.len() as f64)
        }
    }

    /// Steps whose linear solve hit the iteration limit.
    pub fn exceeded_linear_limit(&self) -> usize {
        self.linear_converged.iter().filter(|ok| !**ok).count()
    }
}

/// Multigrid level data for `problem` when the inner solver needs it.
pub fn level_hierarchy(problem: &Problem, inner: InnerSolver) -> Result<Option<MgHierarchy>> {
    match inner.patch_kind() {
        None => Ok(None),
        Some(kind) => Ok(Some(MgHierarchy::new(problem.levels.clone(), problem.update_bcs.clone(), kind)?)),
    }
}

/// Picard or Newton iteration from `initial` until the constrained residual
/// drops below `atol` or the iteration limit is reached.
pub fn nonlinear_solve(problem: &Problem, config: &SolverConfig, initial: State) -> Result<(State, SolveReport)> {
    config.validate()?;
    initial.check(problem.finest())?;
    let hierarchy = level_hierarchy(problem, config.inner)?;
    let mode = config.linearization.mode();
    let mut state = initial;
    problem.director_bcs.write_dirichlet(&mut state.director);
    problem.director_bcs.sync_ghosts(&mut state.director);
    problem.multiplier_bcs.sync_ghosts(&mut state.multiplier);

    let mut report = SolveReport {
        nonlinear_iterations: 0,
        linear_iterations: Vec::new(),
        linear_converged: Vec::new(),
        residuals: Vec::new(),
        energy: 0.0,
        constraint_norm: 0.0,
        converged: false,
        min_multiplier: 0.0,
        min_length_sq: 0.0,
        max_length_sq: 0.0,
    };
    for k in 0..=config.max_nonlinear {
        let sys = problem.assemble(&state, mode)?;
        let res = sys.f.iter().chain(&sys.g).map(|v| v * v).sum::<f64>().sqrt();
        report.residuals.push(res);
        log::debug!("nonlinear step {k}: residual {res:.3e}");
        if !res.is_finite() {
            break;
        }
        if res <= config.atol {
            report.converged = true;
            break;
        }
        if k == config.max_nonlinear {
            break;
        }
        let inner = build_inner(problem, hierarchy.as_ref(), &state, mode, &sys, config)?;
        let (du, dp, rep) = solve_block(&sys, inner, config.schur, config.rtol, config.max_linear)?;
        if !rep.converged {
            log::warn!("step {k}: FGMRES stopped after {} iterations (residual {:.2e})", rep.iterations, rep.final_residual());
        }
        log::debug!("step {k}: {} FGMRES iterations", rep.iterations);
        report.linear_iterations.push(rep.iterations);
        report.linear_converged.push(rep.converged);
        problem.apply_update(&mut state, &du, &dp);
        report.nonlinear_iterations += 1;
    }
    let disc = problem.finest();
    report.energy = energy(disc, &state, &problem.params)?;
    report.constraint_norm = constraint_norm(disc, &state)?;
    report.min_multiplier = state.multiplier.iter().copied().fold(f64::INFINITY, f64::min);
    let lengths: Vec<f64> = state.director.chunks(3).map(|n| n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).collect();
    report.min_length_sq = lengths.iter().copied().fold(f64::INFINITY, f64::min);
    report.max_length_sq = lengths.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((state, report))
}

/// `‖(A₊ − Bᵀ M_λ⁻¹ B) u‖₂ / ‖u‖_{H¹}` for a director update `u` (full
/// layout) at the linearization point `state`.
pub fn schur_perturbation_norm(disc: &Discretization, state: &State, update: &[f64]) -> Result<f64> {
    state.check(disc)?;
    let unit = ProblemParams::equal(1.0);
    let plain = assemble_operator(disc, state, &unit, OperatorMode::Plain)?;
    let aug = assemble_operator(disc, state, &unit.with_gamma(1.0), OperatorMode::PicardAug)?;
    let aplus = aug.add_scaled(1.0, &plain, -1.0)?;
    let b = assemble_constraint(disc, state)?;
    let m = factor(&assemble_mass_multiplier(&disc.multiplier)?, FactorKind::Cholesky)?;
    let mut bu = b.mul_vec(update);
    m.solve_in_place(&mut bu);
    let btmbu = b.mul_vec_transposed(&bu);
    let au = aplus.mul_vec(update);
    let num = au.iter().zip(&btmbu).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den = h1_norm(&disc.director, update)?;
    if den == 0.0 {
        return invalid("zero update");
    }
    Ok(num / den)
}

fn h1_norm(space: &Space, u: &[f64]) -> Result<f64> {
    Ok(error_norms(space, u, |_| ([0.0; 3], [[0.0; 2]; 3]))?.h1)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralEstimate {
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Largest number of patches overlapping one patch.
    pub n_overlap: usize,
}

/// Eigenvalue estimates of `D⁻¹A` for the additive Schwarz method of the
/// given kind on a constrained operator `a`.
pub fn spectral_diagnostics(
    space: &Space,
    bcs: &BoundaryConditions,
    a: &CsrMatrix,
    kind: PatchKind,
) -> Result<SpectralEstimate> {
    let patches = build_patches(space, bcs, kind)?;
    let n_overlap = overlap_count(space, bcs, &patches);
    let mut d = AdditiveSchwarz::new(a, &patches)?;
    let (lambda_min, lambda_max) = schwarz_spectrum(a, &mut d, &bcs.free_dofs(), 50)?;
    Ok(SpectralEstimate { lambda_min, lambda_max, n_overlap })
}
