//! Left-looking sparse LU with threshold partial pivoting.

use crate::error::{invalid, Error, Result};
use crate::linalg::ordering::nested_dissection;
use crate::linalg::CsrMatrix;

/// Pivots within this factor of the column maximum may stay on the diagonal.
const PIVOT_THRESHOLD: f64 = 0.1;

/// `P A Q = L U`; `L` unit lower triangular, both stored by columns.
#[derive(Clone, Debug)]
pub struct SparseLu {
    n: usize,
    /// row permutation: `pinv[original row] = pivot position`
    pinv: Vec<usize>,
    /// column order: position `k` eliminates original column `q[k]`
    q: Vec<usize>,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    up: Vec<usize>,
    ui: Vec<usize>,
    ux: Vec<f64>,
}

impl SparseLu {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return invalid("LU needs a square matrix");
        }
        let n = a.nrows();
        let (ptr, adj) = a.symmetric_adjacency();
        let q = nested_dissection(&ptr, &adj);
        // columns of A are the rows of Aᵀ
        let at = a.transpose();
        let (ap, ai, ax) = (at.indptr(), at.indices(), at.data());

        const NONE: usize = usize::MAX;
        let mut pinv = vec![NONE; n];
        let mut lp = Vec::with_capacity(n + 1);
        let mut up = Vec::with_capacity(n + 1);
        let mut li: Vec<usize> = Vec::with_capacity(4 * a.nnz());
        let mut lx: Vec<f64> = Vec::with_capacity(4 * a.nnz());
        let mut ui: Vec<usize> = Vec::with_capacity(4 * a.nnz());
        let mut ux: Vec<f64> = Vec::with_capacity(4 * a.nnz());
        let mut x = vec![0.0; n];
        let mut marked = vec![false; n];
        let mut reach: Vec<usize> = Vec::with_capacity(n);
        let mut stack: Vec<(usize, usize)> = Vec::with_capacity(n);

        for k in 0..n {
            lp.push(li.len());
            up.push(ui.len());
            let col = q[k];
            let rows = &ai[ap[col]..ap[col + 1]];

            // nonzero pattern of L \ A(:, col) in topological order (reversed postorder)
            reach.clear();
            for &r0 in rows {
                if marked[r0] {
                    continue;
                }
                marked[r0] = true;
                stack.push((r0, column_start(&lp, &pinv, r0)));
                while let Some(top) = stack.len().checked_sub(1) {
                    let (j, mut p) = stack[top];
                    let end = column_end(&lp, &li, &pinv, j);
                    let mut pushed = None;
                    while p < end {
                        let i = li[p];
                        p += 1;
                        if !marked[i] {
                            pushed = Some(i);
                            break;
                        }
                    }
                    stack[top].1 = p;
                    match pushed {
                        Some(i) => {
                            marked[i] = true;
                            stack.push((i, column_start(&lp, &pinv, i)));
                        }
                        None => {
                            stack.pop();
                            reach.push(j);
                        }
                    }
                }
            }
            for &j in &reach {
                marked[j] = false;
            }

            // sparse triangular solve
            for (&r, &v) in rows.iter().zip(&ax[ap[col]..ap[col + 1]]) {
                x[r] = v;
            }
            for &j in reach.iter().rev() {
                let jj = pinv[j];
                if jj == NONE {
                    continue;
                }
                let xj = x[j];
                // first stored entry of column jj is the unit diagonal
                for p in lp[jj] + 1..lp[jj + 1] {
                    x[li[p]] -= lx[p] * xj;
                }
            }

            let mut ipiv = NONE;
            let mut amax = -1.0;
            for &i in reach.iter().rev() {
                if pinv[i] == NONE {
                    let t = x[i].abs();
                    if t > amax {
                        amax = t;
                        ipiv = i;
                    }
                } else {
                    ui.push(pinv[i]);
                    ux.push(x[i]);
                }
            }
            if ipiv == NONE || amax <= 0.0 || !amax.is_finite() {
                return Err(Error::Singular { pivot: col });
            }
            if pinv[col] == NONE && x[col].abs() >= PIVOT_THRESHOLD * amax {
                ipiv = col;
            }
            let pivot = x[ipiv];
            ui.push(k);
            ux.push(pivot);
            pinv[ipiv] = k;
            li.push(ipiv);
            lx.push(1.0);
            for &i in reach.iter().rev() {
                if pinv[i] == NONE {
                    li.push(i);
                    lx.push(x[i] / pivot);
                }
                x[i] = 0.0;
            }
        }
        lp.push(li.len());
        up.push(ui.len());
        for r in li.iter_mut() {
            *r = pinv[*r];
        }
        Ok(Self { n, pinv, q, lp, li, lx, up, ui, ux })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn factor_nnz(&self) -> usize {
        self.lx.len() + self.ux.len()
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        let mut x = vec![0.0; n];
        for (r, &k) in self.pinv.iter().enumerate() {
            x[k] = b[r];
        }
        for j in 0..n {
            let xj = x[j];
            if xj != 0.0 {
                for p in self.lp[j] + 1..self.lp[j + 1] {
                    x[self.li[p]] -= self.lx[p] * xj;
                }
            }
        }
        for j in (0..n).rev() {
            // diagonal is the last stored entry of each U column
            let dpos = self.up[j + 1] - 1;
            x[j] /= self.ux[dpos];
            let xj = x[j];
            if xj != 0.0 {
                for p in self.up[j]..dpos {
                    x[self.ui[p]] -= self.ux[p] * xj;
                }
            }
        }
        for (k, &c) in self.q.iter().enumerate() {
            b[c] = x[k];
        }
    }
}

fn column_start(lp: &[usize], pinv: &[usize], row: usize) -> usize {
    match pinv[row] {
        usize::MAX => 0,
        j => lp[j],
    }
}

fn column_end(lp: &[usize], li: &[usize], pinv: &[usize], row: usize) -> usize {
    match pinv[row] {
        usize::MAX => 0,
        j => lp.get(j + 1).copied().unwrap_or(li.len()),
    }
}
