//! Structured triangulations of the unit square and their uniform refinement.
//!
//! Vertices of a freshly built square are numbered lexicographically (rows of
//! constant `y`, then increasing `x`). Refinement keeps the parent vertices in
//! place and appends one midpoint per parent edge, in edge order, so the vertex
//! set of every level is a prefix of the next one.

use std::collections::HashMap;
use std::fmt;
use std::ops::BitOr;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};

/// Set of square sides an entity lies on. Corners carry two sides.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct BoundaryTags(u8);

impl BoundaryTags {
    pub const INTERIOR: Self = Self(0);
    pub const BOTTOM: Self = Self(1);
    pub const TOP: Self = Self(2);
    pub const LEFT: Self = Self(4);
    pub const RIGHT: Self = Self(8);
    pub const ALL: Self = Self(15);

    pub fn from_point(p: [f64; 2]) -> Self {
        let mut t = 0;
        if p[1] == 0.0 {
            t |= Self::BOTTOM.0;
        }
        if p[1] == 1.0 {
            t |= Self::TOP.0;
        }
        if p[0] == 0.0 {
            t |= Self::LEFT.0;
        }
        if p[0] == 1.0 {
            t |= Self::RIGHT.0;
        }
        Self(t)
    }

    pub fn contains(self, other: Self) -> bool {
        self.0 & other.0 == other.0
    }

    pub fn intersects(self, other: Self) -> bool {
        self.0 & other.0 != 0
    }

    pub fn is_interior(self) -> bool {
        self.0 == 0
    }

    pub fn intersection(self, other: Self) -> Self {
        Self(self.0 & other.0)
    }
}

impl BitOr for BoundaryTags {
    type Output = Self;
    fn bitor(self, rhs: Self) -> Self {
        Self(self.0 | rhs.0)
    }
}

/// A conforming triangulation of `[0,1]^2`.
#[derive(Clone, Debug)]
pub struct Mesh2d {
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    /// Sorted vertex pairs, sorted lexicographically.
    edges: Vec<[usize; 2]>,
    /// Local edge `k` joins local vertices `k` and `(k + 1) % 3`.
    triangle_edges: Vec<[usize; 3]>,
    vertex_tags: Vec<BoundaryTags>,
    edge_tags: Vec<BoundaryTags>,
    star_offsets: Vec<usize>,
    star_triangles: Vec<usize>,
}

impl Mesh2d {
    /// Builds a mesh from raw vertices and counterclockwise triangles.
    pub fn from_parts(vertices: Vec<[f64; 2]>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let nv = vertices.len();
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= nv) {
                return invalid(format!("triangle {t} references a missing vertex"));
            }
        }

        let mut edges: Vec<[usize; 2]> = triangles
            .iter()
            .flat_map(|t| (0..3).map(move |k| sorted_pair(t[k], t[(k + 1) % 3])))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        let edge_index: HashMap<[usize; 2], usize> =
            edges.iter().enumerate().map(|(i, e)| (*e, i)).collect();

        let mut edge_count = vec![0usize; edges.len()];
        let triangle_edges: Vec<[usize; 3]> = triangles
            .iter()
            .map(|t| {
                let mut te = [0; 3];
                for k in 0..3 {
                    let e = edge_index[&sorted_pair(t[k], t[(k + 1) % 3])];
                    edge_count[e] += 1;
                    te[k] = e;
                }
                te
            })
            .collect();

        let vertex_tags: Vec<BoundaryTags> =
            vertices.iter().map(|&p| BoundaryTags::from_point(p)).collect();
        let edge_tags = edges
            .iter()
            .zip(&edge_count)
            .map(|(e, &c)| {
                if c == 1 {
                    vertex_tags[e[0]].intersection(vertex_tags[e[1]])
                } else {
                    BoundaryTags::INTERIOR
                }
            })
            .collect();

        let mut star_offsets = vec![0usize; nv + 1];
        for t in &triangles {
            for &v in t {
                star_offsets[v + 1] += 1;
            }
        }
        for v in 0..nv {
            star_offsets[v + 1] += star_offsets[v];
        }
        let mut fill = star_offsets.clone();
        let mut star_triangles = vec![0usize; star_offsets[nv]];
        for (ti, t) in triangles.iter().enumerate() {
            for &v in t {
                star_triangles[fill[v]] = ti;
                fill[v] += 1;
            }
        }

        Ok(Self {
            vertices,
            triangles,
            edges,
            triangle_edges,
            vertex_tags,
            edge_tags,
            star_offsets,
            star_triangles,
        })
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn triangle_edges(&self) -> &[[usize; 3]] {
        &self.triangle_edges
    }

    pub fn vertex_tags(&self) -> &[BoundaryTags] {
        &self.vertex_tags
    }

    pub fn edge_tags(&self) -> &[BoundaryTags] {
        &self.edge_tags
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edge_midpoint(&self, e: usize) -> [f64; 2] {
        let [a, b] = self.edges[e];
        midpoint(self.vertices[a], self.vertices[b])
    }

    /// Signed area, positive for counterclockwise triangles.
    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|v| self.vertices[v]);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_triangles()).map(|t| self.signed_area(t)).sum()
    }

    /// Largest edge length.
    pub fn h_max(&self) -> f64 {
        self.edges
            .iter()
            .map(|&[a, b]| {
                let (p, q) = (self.vertices[a], self.vertices[b]);
                ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// Triangles incident to vertex `v`, in increasing order.
    pub fn vertex_star(&self, v: usize) -> Result<&[usize]> {
        if v >= self.n_vertices() {
            return invalid(format!("vertex {v} out of range (mesh has {})", self.n_vertices()));
        }
        Ok(&self.star_triangles[self.star_offsets[v]..self.star_offsets[v + 1]])
    }

    /// Checks orientation, area, the edge-manifold condition and Euler's relation.
    pub fn validate(&self) -> Result<()> {
        for t in 0..self.n_triangles() {
            if self.signed_area(t) <= 0.0 {
                return Err(Error::Internal(format!("triangle {t} is not counterclockwise")));
            }
        }
        let area = self.total_area();
        if (area - 1.0).abs() > 1e-12 {
            return Err(Error::Internal(format!("total area {area} != 1")));
        }
        let mut count = vec![0usize; self.n_edges()];
        for te in &self.triangle_edges {
            for &e in te {
                count[e] += 1;
            }
        }
        if let Some(e) = count.iter().position(|&c| c == 0 || c > 2) {
            return Err(Error::Internal(format!("edge {e} is shared by {} triangles", count[e])));
        }
        let euler =
            self.n_vertices() as i64 - self.n_edges() as i64 + self.n_triangles() as i64;
        if euler != 1 {
            return Err(Error::Internal(format!("Euler characteristic {euler} != 1")));
        }
        Ok(())
    }
}

impl fmt::Display for Mesh2d {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} vertices, {} edges, {} triangles, h = {:.4}",
            self.n_vertices(),
            self.n_edges(),
            self.n_triangles(),
            self.h_max()
        )
    }
}

fn sorted_pair(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

fn midpoint(p: [f64; 2], q: [f64; 2]) -> [f64; 2] {
    [(p[0] + q[0]) * 0.5, (p[1] + q[1]) * 0.5]
}

/// `n x n` square cells, each cut by the diagonal from its top-left to its
/// bottom-right corner.
pub fn build_structured_square(n: usize) -> Result<Mesh2d> {
    if n == 0 {
        return invalid("subdivision count must be at least 1");
    }
    let nf = n as f64;
    let vertices: Vec<[f64; 2]> = (0..=n)
        .flat_map(|j| (0..=n).map(move |i| [i as f64 / nf, j as f64 / nf]))
        .collect();
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (v00, v10, v01, v11) = (id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1));
            triangles.push([v00, v10, v01]);
            triangles.push([v10, v11, v01]);
        }
    }
    Mesh2d::from_parts(vertices, triangles)
}

/// Regular refinement: every triangle is split into four children through its
/// edge midpoints. Child `k` of coarse triangle `t` is fine triangle `4 t + k`;
/// child 3 is the interior one.
pub fn refine(mesh: &Mesh2d) -> Mesh2d {
    let nv = mesh.n_vertices();
    let mut vertices = mesh.vertices.clone();
    vertices.extend((0..mesh.n_edges()).map(|e| mesh.edge_midpoint(e)));

    let mut triangles = Vec::with_capacity(4 * mesh.n_triangles());
    for (t, te) in mesh.triangles.iter().zip(&mesh.triangle_edges) {
        let [a, b, c] = *t;
        let (mab, mbc, mca) = (nv + te[0], nv + te[1], nv + te[2]);
        triangles.push([a, mab, mca]);
        triangles.push([mab, b, mbc]);
        triangles.push([mca, mbc, c]);
        triangles.push([mab, mbc, mca]);
    }
    Mesh2d::from_parts(vertices, triangles).expect("refinement of a valid mesh is valid")
}

/// Where a fine-level vertex comes from on the next coarser level.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParentEntity {
    Vertex(usize),
    Edge(usize),
}

/// Nested meshes from coarsest (index 0) to finest.
#[derive(Clone, Debug)]
pub struct MeshHierarchy {
    levels: Vec<Arc<Mesh2d>>,
    /// `parents[l]` maps vertices of level `l + 1` to entities of level `l`.
    parents: Vec<Vec<ParentEntity>>,
}

impl MeshHierarchy {
    pub fn new(coarse: Mesh2d, refinements: usize) -> Self {
        let mut levels = vec![Arc::new(coarse)];
        let mut parents = Vec::with_capacity(refinements);
        for _ in 0..refinements {
            let coarse = levels.last().unwrap();
            let fine = refine(coarse);
            let nv = coarse.n_vertices();
            parents.push(
                (0..fine.n_vertices())
                    .map(|v| if v < nv { ParentEntity::Vertex(v) } else { ParentEntity::Edge(v - nv) })
                    .collect(),
            );
            levels.push(Arc::new(fine));
        }
        Self { levels, parents }
    }

    /// Structured `n x n` coarse grid refined `refinements` times.
    pub fn structured(n: usize, refinements: usize) -> Result<Self> {
        Ok(Self::new(build_structured_square(n)?, refinements))
    }

    pub fn levels(&self) -> &[Arc<Mesh2d>] {
        &self.levels
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn finest(&self) -> &Arc<Mesh2d> {
        self.levels.last().unwrap()
    }

    /// Parent entities of the vertices of `level` (which must be at least 1).
    pub fn parents(&self, level: usize) -> &[ParentEntity] {
        &self.parents[level - 1]
    }
}

/// Identification of the `x = 1` side (ghosts) with the `x = 0` side (owners).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PeriodicMap {
    pairs: Vec<(usize, usize)>,
}

impl PeriodicMap {
    /// Pairs every right-side point with the left-side point at the same `y`.
    pub fn from_points(points: &[[f64; 2]], tags: &[BoundaryTags]) -> Result<Self> {
        let mut left: Vec<usize> =
            (0..points.len()).filter(|&i| tags[i].contains(BoundaryTags::LEFT)).collect();
        let mut right: Vec<usize> =
            (0..points.len()).filter(|&i| tags[i].contains(BoundaryTags::RIGHT)).collect();
        if left.len() != right.len() {
            return Err(Error::Internal(format!(
                "{} left-side points but {} right-side points",
                left.len(),
                right.len()
            )));
        }
        let by_y = |a: &usize, b: &usize| points[*a][1].total_cmp(&points[*b][1]);
        left.sort_by(by_y);
        right.sort_by(by_y);
        let mut pairs = Vec::with_capacity(left.len());
        for (&o, &g) in left.iter().zip(&right) {
            if (points[o][1] - points[g][1]).abs() >= 1e-12 {
                return Err(Error::Internal(format!(
                    "boundary point {g} at y = {} has no periodic partner",
                    points[g][1]
                )));
            }
            pairs.push((o, g));
        }
        Ok(Self { pairs })
    }

    /// `(owner, ghost)` pairs, sorted by `y`.
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Periodic vertex pairs of a square mesh in the `x` direction.
pub fn periodic_pairs(mesh: &Mesh2d) -> Result<PeriodicMap> {
    PeriodicMap::from_points(&mesh.vertices, &mesh.vertex_tags)
}
