//! Geometric multigrid for the augmented director block.
//!
//! Relaxation is a few steps of GMRES preconditioned by an additive Schwarz
//! method over vertex-star or point-block patches. Star patches contain the
//! kernel of the penalty term when the penalty is large, which keeps the cycle
//! robust in `γ`; point blocks do the same for nodal kernels.

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::fespace::{build_prolongation, constrain_prolongation, BoundaryConditions, Family, Space};
use crate::forms::{assemble_operator, Discretization, OperatorMode, ProblemParams, State};
use crate::linalg::{factor_spd_or_lu, gmres, CsrMatrix, DenseFactor, DirectFactorization, LinearOperator, Preconditioner};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PatchKind {
    Star,
    PointBlock,
}

impl FromStr for PatchKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "star" => Ok(PatchKind::Star),
            "pbj" | "point-block" | "point_block" => Ok(PatchKind::PointBlock),
            other => invalid(format!("unknown patch kind '{other}'")),
        }
    }
}

impl fmt::Display for PatchKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PatchKind::Star => "star",
            PatchKind::PointBlock => "pbj",
        })
    }
}

/// Sorted dof sets of one level's constrained director space.
#[derive(Clone, Debug, PartialEq)]
pub struct PatchDecomposition {
    kind: PatchKind,
    ndofs: usize,
    patches: Vec<Vec<usize>>,
}

/// Dofs of a vector space whose basis functions are supported in the star of
/// each vertex (or the dofs of each node, for point blocks). Only free dofs
/// are kept; ghost nodes contribute to the patch of their owner.
pub fn build_patches(space: &Space, bcs: &BoundaryConditions, kind: PatchKind) -> Result<PatchDecomposition> {
    if bcs.ndofs() != space.ndofs() {
        return invalid(format!("constraints cover {} dofs, space has {}", bcs.ndofs(), space.ndofs()));
    }
    let c = space.components();
    let mesh = space.mesh();
    let nv = mesh.n_vertices();
    let is_ghost_node = |node: usize| bcs.is_ghost(node * c);
    let owner_node = |node: usize| bcs.owner(node * c) / c;

    // representatives per owner node (the node itself plus its periodic images)
    let mut images: Vec<Vec<usize>> = (0..space.n_nodes()).map(|v| vec![v]).collect();
    for node in 0..space.n_nodes() {
        if is_ghost_node(node) {
            images[owner_node(node)].push(node);
        }
    }

    let mut patches = Vec::new();
    match kind {
        PatchKind::PointBlock => {
            for node in (0..space.n_nodes()).filter(|&v| !is_ghost_node(v)) {
                patches.push(vec![node]);
            }
        }
        PatchKind::Star => {
            let mut incident: Vec<Vec<usize>> = vec![Vec::new(); nv];
            if space.family() == Family::P2 {
                for (e, &[a, b]) in mesh.edges().iter().enumerate() {
                    incident[a].push(nv + e);
                    incident[b].push(nv + e);
                }
            }
            for v in (0..nv).filter(|&v| !is_ghost_node(v)) {
                let mut nodes = Vec::new();
                for &w in &images[v] {
                    nodes.push(w);
                    nodes.extend(&incident[w]);
                }
                patches.push(nodes);
            }
        }
    }

    let patches = patches
        .into_iter()
        .map(|nodes| {
            let mut dofs: Vec<usize> = nodes
                .iter()
                .flat_map(|&w| (0..c).map(move |k| w * c + k))
                .map(|d| bcs.owner(d))
                .filter(|&d| bcs.is_free(d))
                .collect();
            dofs.sort_unstable();
            dofs.dedup();
            dofs
        })
        .filter(|p| !p.is_empty())
        .collect();
    Ok(PatchDecomposition { kind, ndofs: space.ndofs(), patches })
}

impl PatchDecomposition {
    /// Patches given explicitly (each is sorted and deduplicated).
    pub fn from_patches(kind: PatchKind, ndofs: usize, patches: Vec<Vec<usize>>) -> Result<Self> {
        let mut out = Vec::with_capacity(patches.len());
        for mut p in patches {
            p.sort_unstable();
            p.dedup();
            if p.last().is_some_and(|&d| d >= ndofs) {
                return invalid(format!("patch refers to dof {} of {ndofs}", p.last().unwrap()));
            }
            out.push(p);
        }
        Ok(Self { kind, ndofs, patches: out })
    }

    pub fn kind(&self) -> PatchKind {
        self.kind
    }

    pub fn ndofs(&self) -> usize {
        self.ndofs
    }

    pub fn patches(&self) -> &[Vec<usize>] {
        &self.patches
    }

    pub fn len(&self) -> usize {
        self.patches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patches.is_empty()
    }

    /// Number of patches containing each dof.
    pub fn multiplicity(&self) -> Vec<usize> {
        let mut m = vec![0; self.ndofs];
        for p in &self.patches {
            for &d in p {
                m[d] += 1;
            }
        }
        m
    }

    /// Splits `u` into patch contributions `u_i = I_i (u / m)`, where `m`
    /// counts the patches sharing a dof. The contributions sum to `u` on every
    /// covered dof.
    pub fn nodal_split(&self, u: &[f64]) -> Vec<Vec<(usize, f64)>> {
        let m = self.multiplicity();
        self.patches
            .iter()
            .map(|p| p.iter().map(|&d| (d, u[d] / m[d] as f64)).collect())
            .collect()
    }
}

/// Largest number of patches whose supports overlap a single patch (the
/// patch itself included). Supports are unions of the cells touching each
/// dof's node or its periodic images.
pub fn overlap_count(space: &Space, bcs: &BoundaryConditions, patches: &PatchDecomposition) -> usize {
    let c = space.components();
    let mut cells_of_owner: Vec<Vec<usize>> = vec![Vec::new(); space.n_nodes()];
    for t in 0..space.n_cells() {
        for &node in space.cell_nodes(t) {
            cells_of_owner[bcs.owner(node * c) / c].push(t);
        }
    }
    let supports: Vec<Vec<usize>> = patches
        .patches()
        .iter()
        .map(|p| {
            let mut s: Vec<usize> = p.iter().flat_map(|&d| cells_of_owner[d / c].iter().copied()).collect();
            s.sort_unstable();
            s.dedup();
            s
        })
        .collect();
    let mut by_cell: Vec<Vec<usize>> = vec![Vec::new(); space.n_cells()];
    for (i, s) in supports.iter().enumerate() {
        for &t in s {
            by_cell[t].push(i);
        }
    }
    let mut best = 0;
    let mut seen = vec![usize::MAX; supports.len()];
    for (i, s) in supports.iter().enumerate() {
        let mut count = 0;
        for &t in s {
            for &j in &by_cell[t] {
                if seen[j] != i {
                    seen[j] = i;
                    count += 1;
                }
            }
        }
        best = best.max(count);
    }
    best
}

/// `D⁻¹ = Σ I_i A_i⁻¹ I_iᵀ` with dense factors of the patch blocks.
pub struct AdditiveSchwarz {
    n: usize,
    patches: Vec<Vec<usize>>,
    factors: Vec<DenseFactor>,
    buf: Vec<f64>,
}

impl AdditiveSchwarz {
    pub fn new(a: &CsrMatrix, patches: &PatchDecomposition) -> Result<Self> {
        if a.nrows() != patches.ndofs() || a.ncols() != patches.ndofs() {
            return invalid(format!(
                "operator is {}x{}, patches index {} dofs",
                a.nrows(),
                a.ncols(),
                patches.ndofs()
            ));
        }
        let mut factors = Vec::with_capacity(patches.len());
        let mut fallbacks = 0;
        for (i, p) in patches.patches().iter().enumerate() {
            let f = DenseFactor::new(&a.submatrix(p)).map_err(|e| Error::Patch { patch: i, source: Box::new(e) })?;
            if !f.is_cholesky() {
                fallbacks += 1;
            }
            factors.push(f);
        }
        if fallbacks > 0 {
            log::info!("{fallbacks} of {} patch blocks are indefinite; using LU", patches.len());
        }
        let width = patches.patches().iter().map(Vec::len).max().unwrap_or(0);
        Ok(Self { n: a.nrows(), patches: patches.patches().to_vec(), factors, buf: vec![0.0; width] })
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

impl Preconditioner for AdditiveSchwarz {
    fn apply(&mut self, r: &[f64], z: &mut [f64]) -> Result<()> {
        z.iter_mut().for_each(|v| *v = 0.0);
        for (p, f) in self.patches.iter().zip(&self.factors) {
            let local = &mut self.buf[..p.len()];
            for (l, &d) in local.iter_mut().zip(p) {
                *l = r[d];
            }
            f.solve_in_place(local);
            for (l, &d) in local.iter().zip(p) {
                z[d] += l;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MgConfig {
    pub kind: PatchKind,
    /// GMRES steps per relaxation.
    pub relax_steps: usize,
    pub pre_smooth: bool,
    pub post_smooth: bool,
    /// V-cycles per preconditioner application.
    pub cycles: usize,
}

impl MgConfig {
    pub fn new(kind: PatchKind) -> Self {
        Self { kind, relax_steps: 3, pre_smooth: true, post_smooth: true, cycles: 1 }
    }

    fn validate(&self) -> Result<()> {
        if self.relax_steps == 0 || self.cycles == 0 {
            return invalid("relaxation steps and cycles must be at least 1");
        }
        Ok(())
    }
}

/// `relax_steps` GMRES iterations on `A x = b` from `x`, preconditioned by
/// the additive Schwarz method.
pub fn relax(a: &CsrMatrix, smoother: &mut AdditiveSchwarz, b: &[f64], x: &mut [f64], steps: usize) -> Result<()> {
    let (y, _) = gmres(a, smoother, b, Some(x), 1e-14, steps)?;
    x.copy_from_slice(&y);
    Ok(())
}

struct Level {
    a: CsrMatrix,
    smoother: AdditiveSchwarz,
    /// From the next coarser level.
    prolongation: CsrMatrix,
}

/// A V-cycle preconditioner built for one set of level operators.
pub struct Multigrid {
    config: MgConfig,
    coarse: DirectFactorization,
    coarse_n: usize,
    levels: Vec<Level>,
}

impl Multigrid {
    /// `operators[0]` is the coarsest; `prolongations[l]` maps level `l` to
    /// `l + 1`; `patches[l]` serves level `l + 1`.
    pub fn new(
        operators: Vec<CsrMatrix>,
        prolongations: &[CsrMatrix],
        patches: &[PatchDecomposition],
        config: MgConfig,
    ) -> Result<Self> {
        config.validate()?;
        let nl = operators.len();
        if nl == 0 || prolongations.len() != nl - 1 || patches.len() != nl - 1 {
            return invalid(format!(
                "{nl} operators need {} prolongations and patch sets, got {} and {}",
                nl.saturating_sub(1),
                prolongations.len(),
                patches.len()
            ));
        }
        let mut ops = operators.into_iter();
        let a0 = ops.next().unwrap();
        let coarse_n = a0.nrows();
        let coarse = factor_spd_or_lu(&a0).map_err(|e| Error::Inner { factor: "coarse", source: Box::new(e) })?;
        let mut levels = Vec::with_capacity(nl - 1);
        let mut prev_n = coarse_n;
        for ((a, p), patch) in ops.zip(prolongations).zip(patches) {
            if p.ncols() != prev_n || p.nrows() != a.nrows() {
                return invalid(format!(
                    "prolongation is {}x{}, levels have {} and {} dofs",
                    p.nrows(),
                    p.ncols(),
                    a.nrows(),
                    prev_n
                ));
            }
            prev_n = a.nrows();
            let smoother = AdditiveSchwarz::new(&a, patch)?;
            levels.push(Level { a, smoother, prolongation: p.clone() });
        }
        Ok(Self { config, coarse, coarse_n, levels })
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len() + 1
    }

    pub fn n(&self) -> usize {
        self.levels.last().map_or(self.coarse_n, |l| l.a.nrows())
    }

    pub fn config(&self) -> &MgConfig {
        &self.config
    }

    fn cycle(&mut self, level: usize, b: &[f64], x: &mut [f64]) -> Result<()> {
        if level == 0 {
            x.copy_from_slice(b);
            self.coarse.solve_in_place(x);
            return Ok(());
        }
        let steps = self.config.relax_steps;
        let (pre, post) = (self.config.pre_smooth, self.config.post_smooth);
        let lv = &mut self.levels[level - 1];
        if pre {
            relax(&lv.a, &mut lv.smoother, b, x, steps)?;
        }
        let mut r = vec![0.0; b.len()];
        lv.a.apply(x, &mut r);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        let rc = lv.prolongation.mul_vec_transposed(&r);
        let mut ec = vec![0.0; rc.len()];
        self.cycle(level - 1, &rc, &mut ec)?;
        let lv = &mut self.levels[level - 1];
        let e = lv.prolongation.mul_vec(&ec);
        for (xi, ei) in x.iter_mut().zip(&e) {
            *xi += ei;
        }
        if post {
            relax(&lv.a, &mut lv.smoother, b, x, steps)?;
        }
        Ok(())
    }

    /// Approximates `A⁻¹ b` on the finest level with the configured number
    /// of V-cycles from a zero initial guess.
    pub fn solve(&mut self, b: &[f64], x: &mut [f64]) -> Result<()> {
        if b.len() != self.n() || x.len() != b.len() {
            return invalid(format!("vector of length {} for a {}-dof hierarchy", b.len(), self.n()));
        }
        x.iter_mut().for_each(|v| *v = 0.0);
        let top = self.levels.len();
        if self.config.cycles == 1 {
            return self.cycle(top, b, x);
        }
        let mut r = b.to_vec();
        let mut e = vec![0.0; b.len()];
        for _ in 0..self.config.cycles {
            e.iter_mut().for_each(|v| *v = 0.0);
            self.cycle(top, &r, &mut e)?;
            for (xi, ei) in x.iter_mut().zip(&e) {
                *xi += ei;
            }
            let a = self.levels.last().map(|l| &l.a);
            match a {
                Some(a) => {
                    a.apply(x, &mut r);
                    for (ri, bi) in r.iter_mut().zip(b) {
                        *ri = bi - *ri;
                    }
                }
                None => break,
            }
        }
        Ok(())
    }
}

impl Preconditioner for Multigrid {
    fn apply(&mut self, r: &[f64], z: &mut [f64]) -> Result<()> {
        self.solve(r, z)
    }
}

/// Level data that does not depend on the linearization state: spaces,
/// homogeneous update constraints, constrained prolongations and patches.
pub struct MgHierarchy {
    pub discs: Vec<Discretization>,
    pub bcs: Vec<BoundaryConditions>,
    pub prolongations: Vec<CsrMatrix>,
    pub patches: Vec<PatchDecomposition>,
    pub kind: PatchKind,
}

impl MgHierarchy {
    /// `bcs[l]` constrains the director space of `discs[l]`.
    pub fn new(discs: Vec<Discretization>, bcs: Vec<BoundaryConditions>, kind: PatchKind) -> Result<Self> {
        if discs.is_empty() || discs.len() != bcs.len() {
            return invalid("need one constraint set per level");
        }
        let mut prolongations = Vec::new();
        let mut patches = Vec::new();
        for l in 1..discs.len() {
            let p = build_prolongation(&discs[l - 1].director, &discs[l].director)?;
            prolongations.push(constrain_prolongation(&p, &bcs[l - 1], &bcs[l]));
            patches.push(build_patches(&discs[l].director, &bcs[l], kind)?);
        }
        Ok(Self { discs, bcs, prolongations, patches, kind })
    }

    pub fn n_levels(&self) -> usize {
        self.discs.len()
    }

    pub fn finest(&self) -> &Discretization {
        self.discs.last().unwrap()
    }

    /// Restricts a finest-level state to every level by nodal injection
    /// (coarse nodes are a prefix of the fine nodes).
    pub fn inject(&self, state: &State) -> Result<Vec<State>> {
        state.check(self.finest())?;
        Ok(self
            .discs
            .iter()
            .map(|d| {
                State::new(
                    state.director[..d.director.ndofs()].to_vec(),
                    state.multiplier[..d.multiplier.ndofs()].to_vec(),
                )
            })
            .collect())
    }

    /// Constrained operators on every level, re-assembled from the injected
    /// state.
    pub fn operators(&self, state: &State, params: &ProblemParams, mode: OperatorMode) -> Result<Vec<CsrMatrix>> {
        self.assemble_levels(state, params, mode, self.n_levels())
    }

    /// As [`Self::operators`] without the finest level.
    pub fn coarse_operators(&self, state: &State, params: &ProblemParams, mode: OperatorMode) -> Result<Vec<CsrMatrix>> {
        self.assemble_levels(state, params, mode, self.n_levels() - 1)
    }

    fn assemble_levels(&self, state: &State, params: &ProblemParams, mode: OperatorMode, count: usize) -> Result<Vec<CsrMatrix>> {
        let states = self.inject(state)?;
        self.discs
            .iter()
            .zip(&self.bcs)
            .zip(&states)
            .take(count)
            .map(|((d, bc), s)| {
                let a = assemble_operator(d, s, params, mode)?;
                Ok(bc.apply(&a, &vec![0.0; a.nrows()])?.0)
            })
            .collect()
    }

    /// V-cycle for the given level operators, the finest of which is usually
    /// assembled by the caller together with the right-hand side.
    pub fn multigrid(&self, operators: Vec<CsrMatrix>, config: MgConfig) -> Result<Multigrid> {
        if config.kind != self.kind {
            return invalid(format!("hierarchy has {} patches, config asks for {}", self.kind, config.kind));
        }
        Multigrid::new(operators, &self.prolongations, &self.patches, config)
    }
}

/// Extreme eigenvalue estimates of `D⁻¹A` on the free dofs: power
/// iteration for the largest and power iteration on `λ_max I − D⁻¹A` for the
/// smallest. Iterates are measured in the `A`-inner product, in which `D⁻¹A`
/// is self-adjoint.
pub fn schwarz_spectrum(a: &CsrMatrix, smoother: &mut AdditiveSchwarz, free: &[usize], iters: usize) -> Result<(f64, f64)> {
    let n = a.nrows();
    let mut start = vec![0.0; n];
    for (k, &d) in free.iter().enumerate() {
        start[d] = 1.0 + ((k * 7919) % 97) as f64 / 97.0;
    }
    let mut av = vec![0.0; n];
    let mut w = vec![0.0; n];
    let a_norm = |v: &[f64], av: &mut Vec<f64>| {
        a.apply(v, av);
        v.iter().zip(av.iter()).map(|(x, y)| x * y).sum::<f64>()
    };
    let mut power = |shift: f64, v0: &[f64]| -> Result<f64> {
        let mut v = v0.to_vec();
        let mut est = 0.0;
        for _ in 0..iters {
            let nv = a_norm(&v, &mut av).sqrt();
            if nv == 0.0 {
                return Ok(0.0);
            }
            v.iter_mut().for_each(|x| *x /= nv);
            av.iter_mut().for_each(|x| *x /= nv);
            smoother.apply(&av, &mut w)?;
            // w = (shift I − D⁻¹A) v
            for (wi, vi) in w.iter_mut().zip(&v) {
                *wi = if shift == 0.0 { *wi } else { shift * vi - *wi };
            }
            // Rayleigh quotient ⟨A w, v⟩ / ⟨A v, v⟩ with ⟨Av, v⟩ = 1
            est = w.iter().zip(&av).map(|(x, y)| x * y).sum::<f64>();
            std::mem::swap(&mut v, &mut w);
        }
        Ok(est)
    };
    let lmax = power(0.0, &start)?;
    let shift = lmax * 1.05;
    let mu = power(shift, &start)?;
    Ok((shift - mu, lmax))
}
