//! Lagrange finite-element spaces, boundary constraints and prolongation.
//!
//! Scalar nodes of a P2 space are the mesh vertices followed by the edge
//! midpoints, in mesh edge order. Vector dofs are interleaved: component `c` of
//! node `i` is dof `3 i + c`. Since refinement appends new vertices after the
//! old ones, node `i` of a coarse P1 or P2 space sits at the same point as node
//! `i` of the next finer space of the same family.

use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use crate::error::{invalid, Error, Result};
use crate::linalg::CsrMatrix;
use crate::mesh::{BoundaryTags, Mesh2d, PeriodicMap};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    P1,
    P2,
}

impl Family {
    pub fn nodes_per_cell(self) -> usize {
        match self {
            Family::P1 => 3,
            Family::P2 => 6,
        }
    }

    pub fn degree(self) -> usize {
        match self {
            Family::P1 => 1,
            Family::P2 => 2,
        }
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "p1" => Ok(Family::P1),
            "p2" => Ok(Family::P2),
            other => invalid(format!("unsupported element family '{other}'")),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::P1 => "P1",
            Family::P2 => "P2",
        })
    }
}

/// Affine map data of one triangle.
#[derive(Clone, Copy, Debug)]
pub struct ElementGeometry {
    pub area: f64,
    /// Gradients of the three barycentric coordinates.
    pub grad_lambda: [[f64; 2]; 3],
}

impl ElementGeometry {
    pub fn new(p: [[f64; 2]; 3]) -> Self {
        let (x0, y0) = (p[0][0], p[0][1]);
        let (x1, y1) = (p[1][0] - x0, p[1][1] - y0);
        let (x2, y2) = (p[2][0] - x0, p[2][1] - y0);
        let det = x1 * y2 - x2 * y1;
        let g1 = [y2 / det, -x2 / det];
        let g2 = [-y1 / det, x1 / det];
        let g0 = [-g1[0] - g2[0], -g1[1] - g2[1]];
        Self { area: 0.5 * det, grad_lambda: [g0, g1, g2] }
    }

    /// Barycentric coordinates of `x` with respect to the triangle `p`.
    pub fn barycentric(p: [[f64; 2]; 3], x: [f64; 2]) -> [f64; 3] {
        let g = Self::new(p);
        let dx = [x[0] - p[0][0], x[1] - p[0][1]];
        let l1 = g.grad_lambda[1][0] * dx[0] + g.grad_lambda[1][1] * dx[1];
        let l2 = g.grad_lambda[2][0] * dx[0] + g.grad_lambda[2][1] * dx[1];
        [1.0 - l1 - l2, l1, l2]
    }
}

/// Local P2 edge `k` joins local vertices `EDGE_VERTS[k]`.
pub const EDGE_VERTS: [[usize; 2]; 3] = [[0, 1], [1, 2], [2, 0]];

/// Basis values at barycentric point `l`; `out` has `nodes_per_cell` entries.
pub fn basis_values(family: Family, l: [f64; 3], out: &mut [f64]) {
    match family {
        Family::P1 => out[..3].copy_from_slice(&l),
        Family::P2 => {
            for i in 0..3 {
                out[i] = l[i] * (2.0 * l[i] - 1.0);
            }
            for (k, [a, b]) in EDGE_VERTS.iter().enumerate() {
                out[3 + k] = 4.0 * l[*a] * l[*b];
            }
        }
    }
}

/// Physical basis gradients at barycentric point `l`.
pub fn basis_gradients(family: Family, l: [f64; 3], gl: &[[f64; 2]; 3], out: &mut [[f64; 2]]) {
    match family {
        Family::P1 => out[..3].copy_from_slice(gl),
        Family::P2 => {
            for i in 0..3 {
                let s = 4.0 * l[i] - 1.0;
                out[i] = [s * gl[i][0], s * gl[i][1]];
            }
            for (k, [a, b]) in EDGE_VERTS.iter().enumerate() {
                out[3 + k] = [
                    4.0 * (l[*a] * gl[*b][0] + l[*b] * gl[*a][0]),
                    4.0 * (l[*a] * gl[*b][1] + l[*b] * gl[*a][1]),
                ];
            }
        }
    }
}

/// A continuous Lagrange space with 1 or 3 components per node.
#[derive(Debug)]
pub struct Space {
    mesh: Arc<Mesh2d>,
    family: Family,
    components: usize,
    cell_nodes: Vec<usize>,
    node_coords: Vec<[f64; 2]>,
    node_tags: Vec<BoundaryTags>,
    pattern: OnceLock<CsrMatrix>,
}

/// Builds the space of the given family with `components` (1 or 3) per node.
pub fn build_space(mesh: &Arc<Mesh2d>, family: Family, components: usize) -> Result<Space> {
    Space::new(mesh, family, components)
}

impl Space {
    pub fn new(mesh: &Arc<Mesh2d>, family: Family, components: usize) -> Result<Self> {
        if components != 1 && components != 3 {
            return invalid(format!("spaces have 1 or 3 components, not {components}"));
        }
        let nv = mesh.n_vertices();
        let npc = family.nodes_per_cell();
        let mut cell_nodes = Vec::with_capacity(npc * mesh.n_triangles());
        for (t, te) in mesh.triangles().iter().zip(mesh.triangle_edges()) {
            cell_nodes.extend_from_slice(t);
            if family == Family::P2 {
                cell_nodes.extend(te.iter().map(|e| nv + e));
            }
        }
        let mut node_coords = mesh.vertices().to_vec();
        let mut node_tags = mesh.vertex_tags().to_vec();
        if family == Family::P2 {
            node_coords.extend((0..mesh.n_edges()).map(|e| mesh.edge_midpoint(e)));
            node_tags.extend_from_slice(mesh.edge_tags());
        }
        Ok(Self {
            mesh: Arc::clone(mesh),
            family,
            components,
            cell_nodes,
            node_coords,
            node_tags,
            pattern: OnceLock::new(),
        })
    }

    pub fn mesh(&self) -> &Arc<Mesh2d> {
        &self.mesh
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn n_nodes(&self) -> usize {
        self.node_coords.len()
    }

    pub fn ndofs(&self) -> usize {
        self.n_nodes() * self.components
    }

    pub fn nodes_per_cell(&self) -> usize {
        self.family.nodes_per_cell()
    }

    pub fn n_cells(&self) -> usize {
        self.mesh.n_triangles()
    }

    pub fn cell_nodes(&self, t: usize) -> &[usize] {
        let npc = self.nodes_per_cell();
        &self.cell_nodes[t * npc..(t + 1) * npc]
    }

    /// Global dofs of cell `t`, node-major then component.
    pub fn cell_dofs(&self, t: usize) -> impl Iterator<Item = usize> + '_ {
        let c = self.components;
        self.cell_nodes(t).iter().flat_map(move |&n| (0..c).map(move |k| n * c + k))
    }

    pub fn dof(&self, node: usize, component: usize) -> usize {
        node * self.components + component
    }

    pub fn node_coords(&self) -> &[[f64; 2]] {
        &self.node_coords
    }

    pub fn node_tags(&self) -> &[BoundaryTags] {
        &self.node_tags
    }

    pub fn geometry(&self, t: usize) -> ElementGeometry {
        ElementGeometry::new(self.mesh.triangles()[t].map(|v| self.mesh.vertices()[v]))
    }

    /// Periodic identification of the nodes on `x = 0` and `x = 1`.
    pub fn periodic_node_pairs(&self) -> Result<PeriodicMap> {
        PeriodicMap::from_points(&self.node_coords, &self.node_tags)
    }

    /// Nodal interpolation of a pointwise function with `C == components` values.
    pub fn interpolate<const C: usize>(&self, f: impl Fn([f64; 2]) -> [f64; C]) -> Result<Vec<f64>> {
        if C != self.components {
            return invalid(format!("function has {C} components, space has {}", self.components));
        }
        Ok(self.node_coords.iter().flat_map(|&p| f(p)).collect())
    }

    /// Values of the discrete function `coeffs` at barycentric point `l` of cell `t`.
    pub fn evaluate(&self, coeffs: &[f64], t: usize, l: [f64; 3], out: &mut [f64]) {
        let mut phi = [0.0; 6];
        basis_values(self.family, l, &mut phi);
        out[..self.components].iter_mut().for_each(|v| *v = 0.0);
        for (a, &node) in self.cell_nodes(t).iter().enumerate() {
            for c in 0..self.components {
                out[c] += phi[a] * coeffs[node * self.components + c];
            }
        }
    }

    /// Sparsity of the operators on this space, with explicit zeros.
    pub fn pattern(&self) -> &CsrMatrix {
        self.pattern.get_or_init(|| coupling_pattern(self, self))
    }
}

/// Pattern of every `(test dof, trial dof)` pair sharing a cell. Both spaces
/// must live on the same mesh.
pub fn coupling_pattern(test: &Space, trial: &Space) -> CsrMatrix {
    assert!(Arc::ptr_eq(&test.mesh, &trial.mesh) || test.n_cells() == trial.n_cells());
    let mut neighbours: Vec<Vec<usize>> = vec![Vec::new(); test.n_nodes()];
    for t in 0..test.n_cells() {
        for &a in test.cell_nodes(t) {
            neighbours[a].extend_from_slice(trial.cell_nodes(t));
        }
    }
    let (ct, cu) = (test.components, trial.components);
    let mut indptr = vec![0usize];
    let mut indices = Vec::new();
    for nb in neighbours.iter_mut() {
        nb.sort_unstable();
        nb.dedup();
        for _ in 0..ct {
            for &b in nb.iter() {
                indices.extend((0..cu).map(|k| b * cu + k));
            }
            indptr.push(indices.len());
        }
    }
    let nnz = indices.len();
    CsrMatrix::from_raw(test.ndofs(), trial.ndofs(), indptr, indices, vec![0.0; nnz])
        .expect("coupling pattern is well formed")
}

/// Dirichlet values and periodic owner/ghost identification on one space.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryConditions {
    is_dirichlet: Vec<bool>,
    value: Vec<f64>,
    owner: Vec<usize>,
    pairs: Vec<(usize, usize)>,
    ghosts_of: Vec<Vec<usize>>,
}

impl BoundaryConditions {
    /// No constraints at all.
    pub fn none(ndofs: usize) -> Self {
        Self::new(ndofs, &[], &[]).unwrap()
    }

    /// Periodic pairs touching a Dirichlet dof are dropped: the Dirichlet
    /// condition takes precedence at corners.
    pub fn new(ndofs: usize, dirichlet: &[(usize, f64)], periodic: &[(usize, usize)]) -> Result<Self> {
        let mut is_dirichlet = vec![false; ndofs];
        let mut value = vec![0.0; ndofs];
        for &(d, v) in dirichlet {
            if d >= ndofs {
                return invalid(format!("Dirichlet dof {d} out of range ({ndofs} dofs)"));
            }
            is_dirichlet[d] = true;
            value[d] = v;
        }
        let mut owner: Vec<usize> = (0..ndofs).collect();
        let mut pairs = Vec::new();
        let mut ghosts_of = vec![Vec::new(); ndofs];
        for &(o, g) in periodic {
            if o >= ndofs || g >= ndofs {
                return invalid(format!("periodic pair ({o}, {g}) out of range ({ndofs} dofs)"));
            }
            if is_dirichlet[o] || is_dirichlet[g] {
                continue;
            }
            if o == g || owner[g] != g || owner[o] != o || !ghosts_of[g].is_empty() {
                return Err(Error::Internal(format!("periodic pair ({o}, {g}) is not an owner/ghost partition")));
            }
            owner[g] = o;
            ghosts_of[o].push(g);
            pairs.push((o, g));
        }
        Ok(Self { is_dirichlet, value, owner, pairs, ghosts_of })
    }

    /// Director constraints: values `g` on every node whose tags meet
    /// `dirichlet_sides`, and (optionally) periodicity in `x`.
    pub fn for_space(
        space: &Space,
        dirichlet_sides: BoundaryTags,
        periodic_x: bool,
        g: &dyn Fn([f64; 2]) -> [f64; 3],
    ) -> Result<Self> {
        let c = space.components();
        let mut dirichlet = Vec::new();
        for (node, (&p, &tag)) in space.node_coords().iter().zip(space.node_tags()).enumerate() {
            if tag.intersects(dirichlet_sides) {
                let v = g(p);
                for k in 0..c {
                    dirichlet.push((node * c + k, v[k]));
                }
            }
        }
        let mut periodic = Vec::new();
        if periodic_x {
            for &(o, gh) in space.periodic_node_pairs()?.pairs() {
                for k in 0..c {
                    periodic.push((o * c + k, gh * c + k));
                }
            }
        }
        Self::new(space.ndofs(), &dirichlet, &periodic)
    }

    /// Same constraints with every Dirichlet value set to zero.
    pub fn homogeneous(&self) -> Self {
        Self { value: vec![0.0; self.value.len()], ..self.clone() }
    }

    pub fn ndofs(&self) -> usize {
        self.owner.len()
    }

    pub fn is_dirichlet(&self, d: usize) -> bool {
        self.is_dirichlet[d]
    }

    pub fn is_ghost(&self, d: usize) -> bool {
        self.owner[d] != d
    }

    pub fn is_free(&self, d: usize) -> bool {
        !self.is_dirichlet[d] && !self.is_ghost(d)
    }

    pub fn owner(&self, d: usize) -> usize {
        self.owner[d]
    }

    pub fn dirichlet_value(&self, d: usize) -> f64 {
        self.value[d]
    }

    pub fn periodic_pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn n_dirichlet(&self) -> usize {
        self.is_dirichlet.iter().filter(|&&b| b).count()
    }

    pub fn n_ghosts(&self) -> usize {
        self.pairs.len()
    }

    /// Dofs that are neither Dirichlet nor ghosts.
    pub fn free_dofs(&self) -> Vec<usize> {
        (0..self.ndofs()).filter(|&d| self.is_free(d)).collect()
    }

    /// Writes the Dirichlet values into `x`.
    pub fn write_dirichlet(&self, x: &mut [f64]) {
        for (d, xd) in x.iter_mut().enumerate() {
            if self.is_dirichlet[d] {
                *xd = self.value[d];
            }
        }
    }

    /// Copies owner values onto their ghosts.
    pub fn sync_ghosts(&self, x: &mut [f64]) {
        for &(o, g) in &self.pairs {
            x[g] = x[o];
        }
    }

    /// Zeroes Dirichlet and ghost entries.
    pub fn zero_constrained(&self, x: &mut [f64]) {
        for (d, xd) in x.iter_mut().enumerate() {
            if !self.is_free(d) {
                *xd = 0.0;
            }
        }
    }

    /// Constrained load vector: ghost entries folded into owners and zeroed,
    /// Dirichlet entries set to their values. Column corrections are not
    /// applied (use [`Self::apply`] for a full system).
    pub fn fold_vector(&self, v: &[f64]) -> Vec<f64> {
        let mut out = v.to_vec();
        for &(o, g) in &self.pairs {
            out[o] += v[g];
            out[g] = 0.0;
        }
        self.write_dirichlet(&mut out);
        out
    }

    /// Constrained square system: ghost rows and columns folded into their
    /// owners (ghost rows become identity rows with zero rhs) and Dirichlet dofs
    /// eliminated symmetrically. Applying it twice is the same as once.
    pub fn apply(&self, a: &CsrMatrix, rhs: &[f64]) -> Result<(CsrMatrix, Vec<f64>)> {
        let n = self.ndofs();
        if a.nrows() != n || a.ncols() != n || rhs.len() != n {
            return invalid(format!(
                "system of size {}x{} (rhs {}) does not match {n} constrained dofs",
                a.nrows(),
                a.ncols(),
                rhs.len()
            ));
        }
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::with_capacity(a.nnz());
        let mut data = Vec::with_capacity(a.nnz());
        let mut out_rhs = vec![0.0; n];
        let mut row: Vec<(usize, f64)> = Vec::new();
        indptr.push(0);
        for r in 0..n {
            if self.is_ghost(r) || self.is_dirichlet[r] {
                indices.push(r);
                data.push(1.0);
                out_rhs[r] = if self.is_dirichlet[r] { self.value[r] } else { 0.0 };
                indptr.push(indices.len());
                continue;
            }
            row.clear();
            let mut b = rhs[r];
            let sources = std::iter::once(r).chain(self.ghosts_of[r].iter().copied().filter(|&g| !is_unit_row(a, g)));
            for src in sources {
                if src != r {
                    b += rhs[src];
                }
                let (cols, vals) = a.row(src);
                for (&c, &v) in cols.iter().zip(vals) {
                    let c = self.owner[c];
                    if self.is_dirichlet[c] {
                        b -= v * self.value[c];
                    } else {
                        row.push((c, v));
                    }
                }
            }
            out_rhs[r] = b;
            push_merged(&mut row, &mut indices, &mut data);
            indptr.push(indices.len());
        }
        Ok((CsrMatrix::from_raw_unchecked(n, n, indptr, indices, data), out_rhs))
    }

    /// Constrained rectangular block with rows constrained by `self` (ghost and
    /// Dirichlet rows become empty) and columns by `cols`. Dirichlet columns are
    /// moved to `rhs`.
    pub fn apply_rect(&self, cols: &Self, b: &CsrMatrix, rhs: &[f64]) -> Result<(CsrMatrix, Vec<f64>)> {
        let (m, n) = (self.ndofs(), cols.ndofs());
        if b.nrows() != m || b.ncols() != n || rhs.len() != m {
            return invalid("rectangular block does not match its constraints");
        }
        let mut indptr = Vec::with_capacity(m + 1);
        let mut indices = Vec::with_capacity(b.nnz());
        let mut data = Vec::with_capacity(b.nnz());
        let mut out_rhs = vec![0.0; m];
        let mut row: Vec<(usize, f64)> = Vec::new();
        indptr.push(0);
        for r in 0..m {
            if !self.is_free(r) {
                indptr.push(indices.len());
                continue;
            }
            row.clear();
            let mut acc = rhs[r];
            for src in std::iter::once(r).chain(self.ghosts_of[r].iter().copied()) {
                if src != r {
                    acc += rhs[src];
                }
                let (cs, vs) = b.row(src);
                for (&c, &v) in cs.iter().zip(vs) {
                    let c = cols.owner[c];
                    if cols.is_dirichlet[c] {
                        acc -= v * cols.value[c];
                    } else {
                        row.push((c, v));
                    }
                }
            }
            out_rhs[r] = acc;
            push_merged(&mut row, &mut indices, &mut data);
            indptr.push(indices.len());
        }
        Ok((CsrMatrix::from_raw_unchecked(m, n, indptr, indices, data), out_rhs))
    }
}

fn is_unit_row(a: &CsrMatrix, r: usize) -> bool {
    let (cols, vals) = a.row(r);
    cols == [r] && vals == [1.0]
}

fn push_merged(row: &mut [(usize, f64)], indices: &mut Vec<usize>, data: &mut Vec<f64>) {
    row.sort_by_key(|e| e.0);
    let start = indices.len();
    for &(c, v) in row.iter() {
        if indices.len() > start && *indices.last().unwrap() == c {
            *data.last_mut().unwrap() += v;
        } else {
            indices.push(c);
            data.push(v);
        }
    }
}

/// Matrix of coarse basis functions evaluated at fine nodes (per component).
///
/// `fine` must be built on the regular refinement of `coarse`'s mesh, where
/// fine triangle `4 t + k` is a child of coarse triangle `t`.
pub fn build_prolongation(coarse: &Space, fine: &Space) -> Result<CsrMatrix> {
    if coarse.family != fine.family || coarse.components != fine.components {
        return invalid(format!(
            "cannot prolong {} x{} into {} x{}",
            coarse.family, coarse.components, fine.family, fine.components
        ));
    }
    let (cm, fm) = (&coarse.mesh, &fine.mesh);
    if fm.n_triangles() != 4 * cm.n_triangles() || fm.n_vertices() != cm.n_vertices() + cm.n_edges() {
        return invalid("fine space is not on the refinement of the coarse mesh");
    }
    let npc = coarse.nodes_per_cell();
    let mut done = vec![false; fine.n_nodes()];
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); fine.n_nodes()];
    let mut phi = [0.0; 6];
    for ft in 0..fm.n_triangles() {
        let t = ft / 4;
        let tri = cm.triangles()[t].map(|v| cm.vertices()[v]);
        for &fnode in fine.cell_nodes(ft) {
            if done[fnode] {
                continue;
            }
            done[fnode] = true;
            let l = ElementGeometry::barycentric(tri, fine.node_coords[fnode]);
            if l.iter().any(|&x| x < -1e-12) {
                return Err(Error::Internal(format!("fine node {fnode} lies outside its parent triangle {t}")));
            }
            basis_values(coarse.family, l, &mut phi);
            for (a, &cnode) in coarse.cell_nodes(t).iter().enumerate().take(npc) {
                if phi[a].abs() > 1e-12 {
                    rows[fnode].push((cnode, phi[a]));
                }
            }
        }
    }
    let c = coarse.components;
    let mut indptr = vec![0usize];
    let mut indices = Vec::new();
    let mut data = Vec::new();
    for r in rows.iter_mut() {
        r.sort_by_key(|e| e.0);
        for k in 0..c {
            for &(cn, v) in r.iter() {
                indices.push(cn * c + k);
                data.push(v);
            }
            indptr.push(indices.len());
        }
    }
    CsrMatrix::from_raw(fine.ndofs(), coarse.ndofs(), indptr, indices, data)
}

/// Prolongation between constrained layouts: coarse ghost columns are merged
/// into their owners, Dirichlet columns dropped, and fine ghost or Dirichlet
/// rows left empty.
pub fn constrain_prolongation(
    p: &CsrMatrix,
    coarse: &BoundaryConditions,
    fine: &BoundaryConditions,
) -> CsrMatrix {
    let mut indptr = vec![0usize];
    let mut indices = Vec::with_capacity(p.nnz());
    let mut data = Vec::with_capacity(p.nnz());
    let mut row = Vec::new();
    for r in 0..p.nrows() {
        if fine.is_free(r) {
            row.clear();
            let (cols, vals) = p.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                let c = coarse.owner(c);
                if !coarse.is_dirichlet(c) {
                    row.push((c, v));
                }
            }
            push_merged(&mut row, &mut indices, &mut data);
        }
        indptr.push(indices.len());
    }
    CsrMatrix::from_raw_unchecked(p.nrows(), p.ncols(), indptr, indices, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_structured_square, refine};
    use proptest::prelude::*;

    fn square(n: usize) -> Arc<Mesh2d> {
        Arc::new(build_structured_square(n).unwrap())
    }

    #[test]
    fn dof_counts() {
        let m = square(10);
        assert_eq!(Space::new(&m, Family::P2, 3).unwrap().ndofs(), 3 * (121 + 320));
        assert_eq!(Space::new(&m, Family::P1, 1).unwrap().ndofs(), 121);
        let m1 = square(1);
        let edges: std::collections::BTreeSet<[usize; 2]> = m1
            .triangles()
            .iter()
            .flat_map(|t| (0..3).map(move |k| {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                [a.min(b), a.max(b)]
            }))
            .collect();
        assert_eq!(edges.len(), 5);
        assert_eq!(Space::new(&m1, Family::P2, 1).unwrap().ndofs(), 4 + edges.len());
    }

    #[test]
    fn unsupported_layouts_rejected() {
        assert!("p3".parse::<Family>().is_err());
        assert!(Space::new(&square(1), Family::P1, 2).is_err());
    }

    #[test]
    fn cell_dofs_cover_every_dof_once_per_layout() {
        let s = Space::new(&square(3), Family::P2, 3).unwrap();
        let mut hit = vec![false; s.ndofs()];
        for t in 0..s.n_cells() {
            for d in s.cell_dofs(t) {
                hit[d] = true;
            }
        }
        assert!(hit.iter().all(|&h| h));
    }

    #[test]
    fn p2_basis_is_nodal() {
        let nodes = [
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.5, 0.5, 0.0],
            [0.0, 0.5, 0.5],
            [0.5, 0.0, 0.5],
        ];
        let mut phi = [0.0; 6];
        for (j, l) in nodes.iter().enumerate() {
            basis_values(Family::P2, *l, &mut phi);
            for (i, v) in phi.iter().enumerate() {
                assert_eq!(*v, if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn basis_gradients_match_finite_differences() {
        let p = [[0.1, 0.2], [0.7, 0.25], [0.3, 0.9]];
        let g = ElementGeometry::new(p);
        let x = [0.35, 0.4];
        let l = ElementGeometry::barycentric(p, x);
        let mut grads = [[0.0; 2]; 6];
        basis_gradients(Family::P2, l, &g.grad_lambda, &mut grads);
        let h = 1e-6;
        for dir in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[dir] += h;
            xm[dir] -= h;
            let (mut fp, mut fm) = ([0.0; 6], [0.0; 6]);
            basis_values(Family::P2, ElementGeometry::barycentric(p, xp), &mut fp);
            basis_values(Family::P2, ElementGeometry::barycentric(p, xm), &mut fm);
            for i in 0..6 {
                assert!(((fp[i] - fm[i]) / (2.0 * h) - grads[i][dir]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn interpolation_is_nodal() {
        let m = square(4);
        let v = Space::new(&m, Family::P2, 3).unwrap();
        let u = v.interpolate(|_| [1.0, 0.0, 0.0]).unwrap();
        for (d, x) in u.iter().enumerate() {
            assert_eq!(*x, if d % 3 == 0 { 1.0 } else { 0.0 });
        }
        let s = Space::new(&m, Family::P1, 1).unwrap();
        let y = s.interpolate(|p| [p[1]]).unwrap();
        for (node, p) in s.node_coords().iter().enumerate() {
            assert_eq!(y[node], p[1]);
        }
        assert!(s.interpolate(|_| [0.0; 3]).is_err());
    }

    #[test]
    fn twist_interpolant_reproduced_at_nodes() {
        let th = std::f64::consts::PI / 8.0;
        let exact = |p: [f64; 2]| {
            let a = th * (2.0 * p[1] - 1.0);
            [a.cos(), 0.0, a.sin()]
        };
        let s = Space::new(&square(3), Family::P2, 3).unwrap();
        let u = s.interpolate(exact).unwrap();
        let corner = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.5, 0.5, 0.0]];
        let mut out = [0.0; 3];
        for t in 0..s.n_cells() {
            for (a, l) in corner.iter().enumerate() {
                s.evaluate(&u, t, *l, &mut out);
                let e = exact(s.node_coords()[s.cell_nodes(t)[a]]);
                for c in 0..3 {
                    assert!((out[c] - e[c]).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn periodic_node_pairs_include_midpoints() {
        let s = Space::new(&square(10), Family::P2, 3).unwrap();
        assert_eq!(s.periodic_node_pairs().unwrap().len(), 21);
    }

    #[test]
    fn homogeneous_dirichlet_everywhere_gives_identity() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 2.0)]).unwrap();
        let bc = BoundaryConditions::new(2, &[(0, 0.0), (1, 0.0)], &[]).unwrap();
        let (ac, rc) = bc.apply(&a, &[3.0, 4.0]).unwrap();
        assert_eq!(ac, CsrMatrix::identity(2));
        assert_eq!(rc, vec![0.0, 0.0]);
    }

    #[test]
    fn periodic_fold_of_two_by_two() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 2.0), (1, 0, 3.0), (1, 1, 4.0)]).unwrap();
        let bc = BoundaryConditions::new(2, &[], &[(0, 1)]).unwrap();
        let (ac, rc) = bc.apply(&a, &[1.0, 1.0]).unwrap();
        assert_eq!(ac.get(0, 0), 10.0);
        assert_eq!(ac.get(1, 1), 1.0);
        assert_eq!(ac.get(0, 1), 0.0);
        assert_eq!(rc, vec![2.0, 0.0]);
    }

    #[test]
    fn dirichlet_takes_precedence_over_periodic() {
        let bc = BoundaryConditions::new(4, &[(1, 0.5)], &[(0, 1), (2, 3)]).unwrap();
        assert_eq!(bc.periodic_pairs(), &[(2, 3)]);
        assert!(!bc.is_ghost(1));
        assert!(bc.is_dirichlet(1));
        assert!(BoundaryConditions::new(2, &[(2, 0.0)], &[]).is_err());
    }

    #[test]
    fn dirichlet_elimination_solves_correctly() {
        // 1D Laplacian, u(0)=1, u(3)=4: the solution is linear
        let mut t = Vec::new();
        for i in 0..4 {
            t.push((i, i, 2.0));
            if i + 1 < 4 {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        let a = CsrMatrix::from_triplets(4, 4, &t).unwrap();
        let bc = BoundaryConditions::new(4, &[(0, 1.0), (3, 4.0)], &[]).unwrap();
        let (ac, rc) = bc.apply(&a, &[0.0; 4]).unwrap();
        let x = crate::linalg::factor(&ac, crate::linalg::FactorKind::Cholesky).unwrap().solve(&rc);
        for (i, xi) in x.iter().enumerate() {
            assert!((xi - (1.0 + i as f64)).abs() < 1e-14);
        }
    }

    fn random_symmetric(n: usize, entries: &[(usize, usize, f64)]) -> CsrMatrix {
        let mut t: Vec<_> = entries.iter().flat_map(|&(i, j, v)| [(i % n, j % n, v), (j % n, i % n, v)]).collect();
        t.extend((0..n).map(|i| (i, i, 10.0)));
        CsrMatrix::from_triplets(n, n, &t).unwrap()
    }

    proptest! {
        #[test]
        fn apply_keeps_symmetry_and_is_idempotent(
            entries in prop::collection::vec((0usize..12, 0usize..12, -3.0f64..3.0), 1..60),
            rhs in prop::collection::vec(-2.0f64..2.0, 12),
            nd in 0usize..3,
        ) {
            let a = random_symmetric(12, &entries);
            let dir: Vec<(usize, f64)> = (0..nd).map(|k| (11 - k, 0.5 * k as f64)).collect();
            let bc = BoundaryConditions::new(12, &dir, &[(0, 4), (1, 5), (2, 9)]).unwrap();
            let (a1, r1) = bc.apply(&a, &rhs).unwrap();
            let (d, _, _) = a1.symmetry_defect();
            prop_assert!(d < 1e-14);
            let (a2, r2) = bc.apply(&a1, &r1).unwrap();
            prop_assert_eq!(&a1, &a2);
            prop_assert_eq!(r1, r2);
        }
    }

    #[test]
    fn p1_prolongation_entries() {
        let cm = square(2);
        let fm = Arc::new(refine(&cm));
        let c = Space::new(&cm, Family::P1, 1).unwrap();
        let f = Space::new(&fm, Family::P1, 1).unwrap();
        let p = build_prolongation(&c, &f).unwrap();
        for v in 0..cm.n_vertices() {
            assert_eq!(p.row(v), (&[v][..], &[1.0][..]));
        }
        for v in cm.n_vertices()..fm.n_vertices() {
            let (cols, vals) = p.row(v);
            assert_eq!(cols.len(), 2);
            assert_eq!(vals, &[0.5, 0.5]);
        }
    }

    #[test]
    fn prolongation_row_sums_are_one_per_component() {
        let cm = square(3);
        let fm = Arc::new(refine(&cm));
        for fam in [Family::P1, Family::P2] {
            let c = Space::new(&cm, fam, 3).unwrap();
            let f = Space::new(&fm, fam, 3).unwrap();
            let p = build_prolongation(&c, &f).unwrap();
            for comp in 0..3 {
                let mut one = vec![0.0; c.ndofs()];
                for n in 0..c.n_nodes() {
                    one[3 * n + comp] = 1.0;
                }
                let y = p.mul_vec(&one);
                for (d, v) in y.iter().enumerate() {
                    let e = if d % 3 == comp { 1.0 } else { 0.0 };
                    assert!((v - e).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn p2_prolongation_reproduces_quadratics() {
        let cm = square(4);
        let fm = Arc::new(refine(&cm));
        let c = Space::new(&cm, Family::P2, 1).unwrap();
        let f = Space::new(&fm, Family::P2, 1).unwrap();
        let p = build_prolongation(&c, &f).unwrap();
        let q = |x: [f64; 2]| [x[0] * x[0] - 0.5 * x[0] * x[1] + x[1]];
        let uc = c.interpolate(q).unwrap();
        let uf = p.mul_vec(&uc);
        let exact = f.interpolate(q).unwrap();
        for (a, b) in uf.iter().zip(&exact) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn family_mismatch_rejected() {
        let cm = square(1);
        let fm = Arc::new(refine(&cm));
        let c = Space::new(&cm, Family::P1, 3).unwrap();
        let f = Space::new(&fm, Family::P2, 3).unwrap();
        assert!(matches!(build_prolongation(&c, &f), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn coarse_nodes_are_a_prefix_of_fine_nodes() {
        let cm = square(3);
        let fm = Arc::new(refine(&cm));
        for fam in [Family::P1, Family::P2] {
            let c = Space::new(&cm, fam, 1).unwrap();
            let f = Space::new(&fm, fam, 1).unwrap();
            assert_eq!(&f.node_coords()[..c.n_nodes()], c.node_coords());
        }
    }
}
