use crate::error::{invalid, Error, Result};
use crate::linalg::DenseMatrix;

/// Compressed sparse row matrix with sorted, duplicate-free column indices.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<f64>,
}

impl CsrMatrix {
    /// Wraps raw CSR arrays after checking their consistency.
    pub fn from_raw(
        nrows: usize,
        ncols: usize,
        indptr: Vec<usize>,
        indices: Vec<usize>,
        data: Vec<f64>,
    ) -> Result<Self> {
        if indptr.len() != nrows + 1 || indptr[0] != 0 || indptr[nrows] != indices.len() {
            return invalid("malformed row pointer array");
        }
        if indices.len() != data.len() {
            return invalid("index and value arrays differ in length");
        }
        for r in 0..nrows {
            let cols = &indices[indptr[r]..indptr[r + 1]];
            if indptr[r] > indptr[r + 1] {
                return invalid("row pointers must be non-decreasing");
            }
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return invalid(format!("row {r} has unsorted or repeated columns"));
            }
            if cols.last().is_some_and(|&c| c >= ncols) {
                return invalid(format!("row {r} has a column out of range"));
            }
        }
        Ok(Self { nrows, ncols, indptr, indices, data })
    }

    pub(crate) fn from_raw_unchecked(
        nrows: usize,
        ncols: usize,
        indptr: Vec<usize>,
        indices: Vec<usize>,
        data: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(indptr.len(), nrows + 1);
        Self { nrows, ncols, indptr, indices, data }
    }

    /// Sums duplicate entries. Explicit zeros are kept.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        if let Some(&(r, c, _)) = triplets.iter().find(|t| t.0 >= nrows || t.1 >= ncols) {
            return invalid(format!("triplet ({r}, {c}) outside a {nrows}x{ncols} matrix"));
        }
        let mut counts = vec![0usize; nrows + 1];
        for &(r, _, _) in triplets {
            counts[r + 1] += 1;
        }
        for r in 0..nrows {
            counts[r + 1] += counts[r];
        }
        let mut fill = counts.clone();
        let mut entries = vec![(0usize, 0.0f64); triplets.len()];
        for &(r, c, v) in triplets {
            entries[fill[r]] = (c, v);
            fill[r] += 1;
        }
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::with_capacity(triplets.len());
        let mut data = Vec::with_capacity(triplets.len());
        indptr.push(0);
        for r in 0..nrows {
            let row = &mut entries[counts[r]..counts[r + 1]];
            row.sort_by_key(|e| e.0);
            for &(c, v) in row.iter() {
                if indices.len() > indptr[r] && *indices.last().unwrap() == c {
                    *data.last_mut().unwrap() += v;
                } else {
                    indices.push(c);
                    data.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Ok(Self { nrows, ncols, indptr, indices, data })
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, indptr: vec![0; nrows + 1], indices: vec![], data: vec![] }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let n = d.len();
        Self { nrows: n, ncols: n, indptr: (0..=n).collect(), indices: (0..n).collect(), data: d.to_vec() }
    }

    /// Same sparsity with every stored value set to zero.
    pub fn pattern_zeroed(&self) -> Self {
        Self { data: vec![0.0; self.data.len()], ..self.clone() }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.indptr[r], self.indptr[r + 1]);
        (&self.indices[a..b], &self.data[a..b])
    }

    /// Position of entry `(r, c)` in the value array.
    pub fn find(&self, r: usize, c: usize) -> Option<usize> {
        let (a, b) = (self.indptr[r], self.indptr[r + 1]);
        self.indices[a..b].binary_search(&c).ok().map(|k| a + k)
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.find(r, c).map_or(0.0, |k| self.data[k])
    }

    /// Adds `v` to an entry that must already be present in the pattern.
    #[inline]
    pub fn add_to(&mut self, r: usize, c: usize, v: f64) {
        let k = self.find(r, c).unwrap_or_else(|| panic!("entry ({r}, {c}) not in sparsity pattern"));
        self.data[k] += v;
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (r, yr) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.indptr[r]..self.indptr[r + 1] {
                s += self.data[k] * x[self.indices[k]];
            }
            *yr = s;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.matvec(x, &mut y);
        y
    }

    /// `y = Aᵀ x`.
    pub fn mul_vec_transposed(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows);
        let mut y = vec![0.0; self.ncols];
        for (r, &xr) in x.iter().enumerate() {
            if xr == 0.0 {
                continue;
            }
            for k in self.indptr[r]..self.indptr[r + 1] {
                y[self.indices[k]] += self.data[k] * xr;
            }
        }
        y
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.indices {
            counts[c + 1] += 1;
        }
        for c in 0..self.ncols {
            counts[c + 1] += counts[c];
        }
        let mut fill = counts.clone();
        let mut indices = vec![0; self.nnz()];
        let mut data = vec![0.0; self.nnz()];
        for r in 0..self.nrows {
            for k in self.indptr[r]..self.indptr[r + 1] {
                let c = self.indices[k];
                indices[fill[c]] = r;
                data[fill[c]] = self.data[k];
                fill[c] += 1;
            }
        }
        Self { nrows: self.ncols, ncols: self.nrows, indptr: counts, indices, data }
    }

    /// `alpha * self + beta * other` on the union of both patterns.
    pub fn add_scaled(&self, alpha: f64, other: &Self, beta: f64) -> Result<Self> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return invalid("matrix shapes differ");
        }
        let mut indptr = vec![0];
        let mut indices = Vec::with_capacity(self.nnz().max(other.nnz()));
        let mut data = Vec::with_capacity(indices.capacity());
        for r in 0..self.nrows {
            let (ca, va) = self.row(r);
            let (cb, vb) = other.row(r);
            let (mut i, mut j) = (0, 0);
            while i < ca.len() || j < cb.len() {
                if j == cb.len() || (i < ca.len() && ca[i] < cb[j]) {
                    indices.push(ca[i]);
                    data.push(alpha * va[i]);
                    i += 1;
                } else if i == ca.len() || cb[j] < ca[i] {
                    indices.push(cb[j]);
                    data.push(beta * vb[j]);
                    j += 1;
                } else {
                    indices.push(ca[i]);
                    data.push(alpha * va[i] + beta * vb[j]);
                    i += 1;
                    j += 1;
                }
            }
            indptr.push(indices.len());
        }
        Ok(Self { nrows: self.nrows, ncols: self.ncols, indptr, indices, data })
    }

    /// Sparse product `self * other`.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.ncols != other.nrows {
            return invalid("inner dimensions differ");
        }
        let mut acc = vec![0.0; other.ncols];
        let mut mark = vec![usize::MAX; other.ncols];
        let mut cols = Vec::new();
        let mut indptr = vec![0];
        let mut indices = Vec::new();
        let mut data = Vec::new();
        for r in 0..self.nrows {
            cols.clear();
            for k in self.indptr[r]..self.indptr[r + 1] {
                let (m, a) = (self.indices[k], self.data[k]);
                for kk in other.indptr[m]..other.indptr[m + 1] {
                    let c = other.indices[kk];
                    if mark[c] != r {
                        mark[c] = r;
                        acc[c] = 0.0;
                        cols.push(c);
                    }
                    acc[c] += a * other.data[kk];
                }
            }
            cols.sort_unstable();
            for &c in &cols {
                indices.push(c);
                data.push(acc[c]);
            }
            indptr.push(indices.len());
        }
        Ok(Self { nrows: self.nrows, ncols: other.ncols, indptr, indices, data })
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|v| *v *= s);
    }

    pub fn diagonal_values(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.nrows)
            .map(|r| self.row(r).1.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest `|a_ij - a_ji|` and where it occurs.
    pub fn symmetry_defect(&self) -> (f64, usize, usize) {
        let mut worst = (0.0, 0, 0);
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                let d = (v - self.get(c, r)).abs();
                if d > worst.0 {
                    worst = (d, r, c);
                }
            }
        }
        worst
    }

    /// Fails unless the matrix is square and symmetric to `rtol * max|a_ij|`.
    pub fn check_symmetric(&self, rtol: f64) -> Result<()> {
        if self.nrows != self.ncols {
            return invalid("matrix is not square");
        }
        let (defect, row, col) = self.symmetry_defect();
        if defect > rtol * self.max_abs() {
            return Err(Error::NotSymmetric { row, col, defect });
        }
        Ok(())
    }

    /// Dense principal submatrix on the given (sorted or unsorted) index set.
    pub fn submatrix(&self, idx: &[usize]) -> DenseMatrix {
        let n = idx.len();
        let mut out = DenseMatrix::zeros(n, n);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&k| idx[k]);
        let sorted: Vec<usize> = order.iter().map(|&k| idx[k]).collect();
        for (i, &gi) in idx.iter().enumerate() {
            let (cols, vals) = self.row(gi);
            // merge the row with the sorted index set
            let (mut a, mut b) = (0, 0);
            while a < cols.len() && b < n {
                match cols[a].cmp(&sorted[b]) {
                    std::cmp::Ordering::Less => a += 1,
                    std::cmp::Ordering::Greater => b += 1,
                    std::cmp::Ordering::Equal => {
                        out[(i, order[b])] = vals[a];
                        a += 1;
                        b += 1;
                    }
                }
            }
        }
        out
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.nrows, self.ncols);
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                out[(r, c)] = v;
            }
        }
        out
    }

    /// Pattern of `A + Aᵀ` without the diagonal, as adjacency lists in CSR form.
    pub(crate) fn symmetric_adjacency(&self) -> (Vec<usize>, Vec<usize>) {
        let n = self.nrows;
        let t = self.transpose();
        let mut ptr = vec![0usize];
        let mut adj = Vec::with_capacity(2 * self.nnz());
        for r in 0..n {
            let (a, _) = self.row(r);
            let (b, _) = t.row(r);
            let start = adj.len();
            adj.extend(a.iter().chain(b).copied().filter(|&c| c != r));
            adj[start..].sort_unstable();
            let mut w = start;
            for k in start..adj.len() {
                if k == start || adj[k] != adj[w - 1] {
                    adj[w] = adj[k];
                    w += 1;
                }
            }
            adj.truncate(w);
            ptr.push(adj.len());
        }
        (ptr, adj)
    }
}
