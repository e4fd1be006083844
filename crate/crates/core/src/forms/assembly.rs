use crate::error::{invalid, Result};
use crate::fespace::{coupling_pattern, Family, Space};
use crate::forms::quadrature::QuadratureRule;
use crate::forms::{curl3, dot3, Discretization, OperatorMode, ProblemParams, State};
use crate::linalg::CsrMatrix;

/// Basis values and barycentric derivatives at the points of a rule.
pub(crate) struct BasisTable {
    pub npc: usize,
    pub rule: QuadratureRule,
    pub phi: Vec<[f64; 6]>,
    /// `dl[q][a][i] = ∂φ_a/∂λ_i`
    pub dl: Vec<[[f64; 3]; 6]>,
}

impl BasisTable {
    pub fn new(family: Family, rule: QuadratureRule) -> Self {
        let mut phi = Vec::with_capacity(rule.len());
        let mut dl = Vec::with_capacity(rule.len());
        for l in &rule.points {
            let mut p = [0.0; 6];
            let mut d = [[0.0; 3]; 6];
            match family {
                Family::P1 => {
                    p[..3].copy_from_slice(l);
                    for (i, di) in d.iter_mut().take(3).enumerate() {
                        di[i] = 1.0;
                    }
                }
                Family::P2 => {
                    for i in 0..3 {
                        p[i] = l[i] * (2.0 * l[i] - 1.0);
                        d[i][i] = 4.0 * l[i] - 1.0;
                    }
                    for (k, [a, b]) in crate::fespace::EDGE_VERTS.iter().enumerate() {
                        p[3 + k] = 4.0 * l[*a] * l[*b];
                        d[3 + k][*a] = 4.0 * l[*b];
                        d[3 + k][*b] = 4.0 * l[*a];
                    }
                }
            }
            phi.push(p);
            dl.push(d);
        }
        Self { npc: family.nodes_per_cell(), rule, phi, dl }
    }

    pub fn grads(&self, q: usize, gl: &[[f64; 2]; 3]) -> [[f64; 2]; 6] {
        let mut g = [[0.0; 2]; 6];
        for a in 0..self.npc {
            let d = &self.dl[q][a];
            g[a] = [
                d[0] * gl[0][0] + d[1] * gl[1][0] + d[2] * gl[2][0],
                d[0] * gl[0][1] + d[1] * gl[1][1] + d[2] * gl[2][1],
            ];
        }
        g
    }
}

/// A director field sampled at one quadrature point.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct PointValue {
    pub n: [f64; 3],
    /// `grad[i][j] = ∂n_i/∂x_j`
    pub grad: [[f64; 3 - 1]; 3],
}

impl PointValue {
    pub fn div(&self) -> f64 {
        self.grad[0][0] + self.grad[1][1]
    }

    pub fn curl(&self) -> [f64; 3] {
        curl3(&self.grad)
    }
}

pub(crate) fn sample_director(
    space: &Space,
    coeffs: &[f64],
    t: usize,
    phi: &[f64; 6],
    grads: &[[f64; 2]; 6],
) -> PointValue {
    let mut v = PointValue::default();
    for (a, &node) in space.cell_nodes(t).iter().enumerate() {
        for c in 0..3 {
            let u = coeffs[3 * node + c];
            v.n[c] += phi[a] * u;
            v.grad[c][0] += grads[a][0] * u;
            v.grad[c][1] += grads[a][1] * u;
        }
    }
    v
}

/// P1 multiplier value at barycentric point `l` of cell `t`.
pub(crate) fn sample_multiplier(space: &Space, coeffs: &[f64], t: usize, l: &[f64; 3]) -> f64 {
    space.cell_nodes(t).iter().zip(l).map(|(&node, li)| li * coeffs[node]).sum()
}

/// Per-qp data of the trial/test function `φ_a e_c`.
#[derive(Clone, Copy, Default)]
struct Shape {
    comp: usize,
    phi: f64,
    div: f64,
    curl: [f64; 3],
}

fn shapes(npc: usize, phi: &[f64; 6], grads: &[[f64; 2]; 6], out: &mut [Shape; 18]) {
    for a in 0..npc {
        let [gx, gy] = grads[a];
        out[3 * a] = Shape { comp: 0, phi: phi[a], div: gx, curl: [0.0, 0.0, -gy] };
        out[3 * a + 1] = Shape { comp: 1, phi: phi[a], div: gy, curl: [0.0, 0.0, gx] };
        out[3 * a + 2] = Shape { comp: 2, phi: phi[a], div: 0.0, curl: [gy, -gx, 0.0] };
    }
}

fn check_director(disc: &Discretization, state: &State) -> Result<()> {
    state.check(disc)?;
    if disc.director.components() != 3 || disc.multiplier.components() != 1 || disc.multiplier.family() != Family::P1 {
        return invalid("expected a 3-component director space and a scalar P1 multiplier space");
    }
    Ok(())
}

/// Director block of the linearized system at `state`, on the full
/// (unconstrained) dof layout.
pub fn assemble_operator(
    disc: &Discretization,
    state: &State,
    params: &ProblemParams,
    mode: OperatorMode,
) -> Result<CsrMatrix> {
    check_director(disc, state)?;
    let space = &*disc.director;
    let table = BasisTable::new(space.family(), QuadratureRule::degree8());
    let mut mat = space.pattern().clone();
    let nloc = 3 * table.npc;
    let mut local = vec![0.0; nloc * nloc];
    let mut sh = [Shape::default(); 18];
    let (k1, k2, k3, q0) = (params.k1, params.k2, params.k3, params.q0);
    let km1 = params.kappa() - 1.0;
    let gamma = match mode {
        OperatorMode::Plain => 0.0,
        _ => params.gamma,
    };
    let full_newton = mode == OperatorMode::NewtonAug;
    let mut dofs = Vec::with_capacity(nloc);

    for t in 0..space.n_cells() {
        let geo = space.geometry(t);
        local.iter_mut().for_each(|v| *v = 0.0);
        for q in 0..table.rule.len() {
            let w = table.rule.weights[q] * 2.0 * geo.area;
            let grads = table.grads(q, &geo.grad_lambda);
            let f = sample_director(space, &state.director, t, &table.phi[q], &grads);
            let lam = sample_multiplier(&disc.multiplier, &state.multiplier, t, &table.rule.points[q]);
            let n = f.n;
            let c = f.curl();
            let s = dot3(n, c);
            let nn1 = dot3(n, n) - 1.0;
            shapes(table.npc, &table.phi[q], &grads, &mut sh);
            // quantities of each shape used in the pair terms
            let mut nc = [0.0; 18];
            let mut uc = [0.0; 18];
            let mut un = [0.0; 18];
            for i in 0..nloc {
                nc[i] = dot3(n, sh[i].curl);
                uc[i] = sh[i].phi * c[sh[i].comp];
                un[i] = sh[i].phi * n[sh[i].comp];
            }
            let mass_coef = 2.0 * lam + if full_newton { 2.0 * gamma * nn1 } else { 0.0 };
            for i in 0..nloc {
                let si = sh[i];
                for j in i..nloc {
                    let sj = sh[j];
                    // u_j·curl v_i + u_i·curl v_j
                    let vc = sj.phi * si.curl[sj.comp] + si.phi * sj.curl[si.comp];
                    let mut a = k1 * si.div * sj.div
                        + k3 * (dot3(si.curl, sj.curl) + km1 * nc[i] * nc[j])
                        + (k2 - k3) * (uc[j] * nc[i] + uc[i] * nc[j] + s * vc + uc[i] * uc[j])
                        + k2 * q0 * vc;
                    if si.comp == sj.comp {
                        a += mass_coef * si.phi * sj.phi;
                    }
                    if gamma != 0.0 {
                        a += 4.0 * gamma * un[i] * un[j];
                    }
                    local[i * nloc + j] += w * a;
                }
            }
        }
        dofs.clear();
        dofs.extend(space.cell_dofs(t));
        scatter_symmetric(&mut mat, &dofs, &local);
    }
    Ok(mat)
}

/// Adds a local matrix given by its upper triangle.
fn scatter_symmetric(mat: &mut CsrMatrix, dofs: &[usize], local: &[f64]) {
    let nloc = dofs.len();
    for i in 0..nloc {
        for j in i..nloc {
            let v = local[i * nloc + j];
            mat.add_to(dofs[i], dofs[j], v);
            if i != j {
                mat.add_to(dofs[j], dofs[i], v);
            }
        }
    }
}

/// `B_ij = ⟨μ_i, 2 n_k·φ_j⟩`: multiplier rows, director columns.
pub fn assemble_constraint(disc: &Discretization, state: &State) -> Result<CsrMatrix> {
    check_director(disc, state)?;
    let (vs, qs) = (&*disc.director, &*disc.multiplier);
    let table = BasisTable::new(vs.family(), QuadratureRule::degree8());
    let mut mat = coupling_pattern(qs, vs);
    let nloc = 3 * table.npc;
    let mut local = vec![0.0; 3 * nloc];
    for t in 0..vs.n_cells() {
        let geo = vs.geometry(t);
        local.iter_mut().for_each(|v| *v = 0.0);
        for q in 0..table.rule.len() {
            let w = table.rule.weights[q] * 2.0 * geo.area;
            let grads = table.grads(q, &geo.grad_lambda);
            let n = sample_director(vs, &state.director, t, &table.phi[q], &grads).n;
            let l = &table.rule.points[q];
            for i in 0..3 {
                for a in 0..table.npc {
                    for c in 0..3 {
                        local[i * nloc + 3 * a + c] += w * l[i] * 2.0 * n[c] * table.phi[q][a];
                    }
                }
            }
        }
        let cols: Vec<usize> = vs.cell_dofs(t).collect();
        for (i, &row) in qs.cell_nodes(t).iter().enumerate() {
            for (j, &col) in cols.iter().enumerate() {
                mat.add_to(row, col, local[i * nloc + j]);
            }
        }
    }
    Ok(mat)
}

/// Multiplier mass matrix `(M_λ)_ij = ⟨μ_i, μ_j⟩`.
pub fn assemble_mass_multiplier(space: &Space) -> Result<CsrMatrix> {
    if space.family() != Family::P1 || space.components() != 1 {
        return invalid("the multiplier mass matrix needs a scalar P1 space");
    }
    let mut mat = space.pattern().clone();
    for t in 0..space.n_cells() {
        let area = space.geometry(t).area;
        let nodes = space.cell_nodes(t);
        for i in 0..3 {
            for j in 0..3 {
                let v = if i == j { area / 6.0 } else { area / 12.0 };
                mat.add_to(nodes[i], nodes[j], v);
            }
        }
    }
    Ok(mat)
}

/// Right-hand sides of the linearized step at `state`: the negative
/// augmented Lagrangian gradient in the director and the constraint defect
/// `−⟨μ, n·n − 1⟩`.
pub fn assemble_rhs(disc: &Discretization, state: &State, params: &ProblemParams) -> Result<(Vec<f64>, Vec<f64>)> {
    check_director(disc, state)?;
    let (vs, qs) = (&*disc.director, &*disc.multiplier);
    let table = BasisTable::new(vs.family(), QuadratureRule::degree8());
    let mut f = vec![0.0; vs.ndofs()];
    let mut g = vec![0.0; qs.ndofs()];
    let (k1, k2, k3, q0, gamma) = (params.k1, params.k2, params.k3, params.q0, params.gamma);
    let km1 = params.kappa() - 1.0;
    let nloc = 3 * table.npc;
    let mut sh = [Shape::default(); 18];
    let mut local = vec![0.0; nloc];
    for t in 0..vs.n_cells() {
        let geo = vs.geometry(t);
        local.iter_mut().for_each(|v| *v = 0.0);
        let mut gl = [0.0; 3];
        for q in 0..table.rule.len() {
            let w = table.rule.weights[q] * 2.0 * geo.area;
            let grads = table.grads(q, &geo.grad_lambda);
            let fv = sample_director(vs, &state.director, t, &table.phi[q], &grads);
            let l = &table.rule.points[q];
            let lam = sample_multiplier(qs, &state.multiplier, t, l);
            let n = fv.n;
            let c = fv.curl();
            let s = dot3(n, c);
            let divn = fv.div();
            let nn1 = dot3(n, n) - 1.0;
            // Z(n) ∇×n
            let zc = [c[0] + km1 * s * n[0], c[1] + km1 * s * n[1], c[2] + km1 * s * n[2]];
            shapes(table.npc, &table.phi[q], &grads, &mut sh);
            for (i, si) in sh.iter().take(nloc).enumerate() {
                let vc = si.phi * c[si.comp];
                let vn = si.phi * n[si.comp];
                let mut r = k1 * divn * si.div
                    + k3 * dot3(zc, si.curl)
                    + (k2 - k3) * s * vc
                    + k2 * q0 * (vc + dot3(n, si.curl))
                    + 2.0 * lam * vn;
                if gamma != 0.0 {
                    r += 2.0 * gamma * nn1 * vn;
                }
                local[i] -= w * r;
            }
            for i in 0..3 {
                gl[i] -= w * l[i] * nn1;
            }
        }
        for (d, v) in vs.cell_dofs(t).zip(&local) {
            f[d] += v;
        }
        for (&node, v) in qs.cell_nodes(t).iter().zip(&gl) {
            g[node] += v;
        }
    }
    Ok((f, g))
}
