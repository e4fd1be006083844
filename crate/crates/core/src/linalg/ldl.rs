//! Up-looking sparse `L D Lᵀ` factorization of a symmetric matrix.

use crate::error::{Error, Result};
use crate::linalg::ordering::{inverse_permutation, nested_dissection};
use crate::linalg::CsrMatrix;

/// `P A Pᵀ = L D Lᵀ` with unit lower-triangular `L` stored by columns.
#[derive(Clone, Debug)]
pub struct SparseLdl {
    n: usize,
    perm: Vec<usize>,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    d: Vec<f64>,
}

impl SparseLdl {
    /// Factors a symmetric matrix. With `require_positive` every pivot must be
    /// strictly positive, which is the Cholesky existence condition.
    pub fn new(a: &CsrMatrix, require_positive: bool) -> Result<Self> {
        let (ptr, adj) = a.symmetric_adjacency();
        let perm = nested_dissection(&ptr, &adj);
        Self::with_permutation(a, perm, require_positive)
    }

    pub fn with_permutation(a: &CsrMatrix, perm: Vec<usize>, require_positive: bool) -> Result<Self> {
        let n = a.nrows();
        let pinv = inverse_permutation(&perm);
        let ai = a.indices();
        let ax = a.data();
        let ap = a.indptr();

        // symbolic: elimination tree and column counts
        let mut parent = vec![usize::MAX; n];
        let mut flag = vec![usize::MAX; n];
        let mut lnz = vec![0usize; n];
        for k in 0..n {
            flag[k] = k;
            let col = perm[k];
            for &orig in &ai[ap[col]..ap[col + 1]] {
                let mut i = pinv[orig];
                if i < k {
                    while flag[i] != k {
                        if parent[i] == usize::MAX {
                            parent[i] = k;
                        }
                        lnz[i] += 1;
                        flag[i] = k;
                        i = parent[i];
                    }
                }
            }
        }
        let mut lp = vec![0usize; n + 1];
        for k in 0..n {
            lp[k + 1] = lp[k] + lnz[k];
        }

        // numeric
        let total = lp[n];
        let mut li = vec![0usize; total];
        let mut lx = vec![0.0; total];
        let mut d = vec![0.0; n];
        let mut y = vec![0.0; n];
        let mut pattern = vec![0usize; n];
        lnz.iter_mut().for_each(|c| *c = 0);
        flag.iter_mut().for_each(|f| *f = usize::MAX);
        for k in 0..n {
            let mut top = n;
            flag[k] = k;
            let col = perm[k];
            for idx in ap[col]..ap[col + 1] {
                let mut i = pinv[ai[idx]];
                if i <= k {
                    y[i] += ax[idx];
                    let mut len = 0;
                    while flag[i] != k {
                        pattern[len] = i;
                        len += 1;
                        flag[i] = k;
                        i = parent[i];
                    }
                    while len > 0 {
                        top -= 1;
                        len -= 1;
                        pattern[top] = pattern[len];
                    }
                }
            }
            d[k] = y[k];
            y[k] = 0.0;
            for &i in &pattern[top..n] {
                let yi = y[i];
                y[i] = 0.0;
                let end = lp[i] + lnz[i];
                for p in lp[i]..end {
                    y[li[p]] -= lx[p] * yi;
                }
                let l_ki = yi / d[i];
                d[k] -= l_ki * yi;
                li[end] = k;
                lx[end] = l_ki;
                lnz[i] += 1;
            }
            let dk = d[k];
            if !dk.is_finite() || dk == 0.0 || (require_positive && dk <= 0.0) {
                return Err(if require_positive {
                    Error::NotPositiveDefinite { pivot: perm[k], value: dk }
                } else {
                    Error::Singular { pivot: perm[k] }
                });
            }
        }
        Ok(Self { n, perm, lp, li, lx, d })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Stored off-diagonal entries of `L`.
    pub fn factor_nnz(&self) -> usize {
        self.lx.len()
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for j in 0..n {
            let xj = x[j];
            if xj != 0.0 {
                for p in self.lp[j]..self.lp[j + 1] {
                    x[self.li[p]] -= self.lx[p] * xj;
                }
            }
        }
        for j in 0..n {
            x[j] /= self.d[j];
        }
        for j in (0..n).rev() {
            let mut s = x[j];
            for p in self.lp[j]..self.lp[j + 1] {
                s -= self.lx[p] * x[self.li[p]];
            }
            x[j] = s;
        }
        for (k, &p) in self.perm.iter().enumerate() {
            b[p] = x[k];
        }
    }
}
