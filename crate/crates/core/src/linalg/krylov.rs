//! Right-preconditioned GMRES and flexible GMRES without restarts.

use crate::error::{Error, Result};
use crate::linalg::dense::{dot, norm2};
use crate::linalg::CsrMatrix;

/// Something that can compute `y = A x`.
pub trait LinearOperator {
    fn nrows(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

impl LinearOperator for CsrMatrix {
    fn nrows(&self) -> usize {
        CsrMatrix::nrows(self)
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.matvec(x, y)
    }
}

/// Approximate inverse `z = M⁻¹ r`. Implementations may change between calls.
pub trait Preconditioner {
    fn apply(&mut self, r: &[f64], z: &mut [f64]) -> Result<()>;
}

/// `M = I`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Identity;

impl Preconditioner for Identity {
    fn apply(&mut self, r: &[f64], z: &mut [f64]) -> Result<()> {
        z.copy_from_slice(r);
        Ok(())
    }
}

impl<P: Preconditioner + ?Sized> Preconditioner for &mut P {
    fn apply(&mut self, r: &[f64], z: &mut [f64]) -> Result<()> {
        (**self).apply(r, z)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KrylovReport {
    pub iterations: usize,
    /// Relative residual estimates `‖b − A x_j‖ / ‖b‖`, starting with `j = 0`.
    pub history: Vec<f64>,
    pub converged: bool,
    /// Set when the Krylov space became invariant before `maxit`.
    pub breakdown: bool,
}

impl KrylovReport {
    pub fn final_residual(&self) -> f64 {
        *self.history.last().unwrap_or(&0.0)
    }
}

/// Right-preconditioned GMRES: the iterate is `x0 + M⁻¹ V y`.
pub fn gmres(
    a: &dyn LinearOperator,
    m: &mut dyn Preconditioner,
    b: &[f64],
    x0: Option<&[f64]>,
    rtol: f64,
    maxit: usize,
) -> Result<(Vec<f64>, KrylovReport)> {
    solve(a, m, b, x0, rtol, maxit, false)
}

/// Flexible GMRES: stores every preconditioned direction, `x = x0 + Z y`.
pub fn fgmres(
    a: &dyn LinearOperator,
    m: &mut dyn Preconditioner,
    b: &[f64],
    x0: Option<&[f64]>,
    rtol: f64,
    maxit: usize,
) -> Result<(Vec<f64>, KrylovReport)> {
    solve(a, m, b, x0, rtol, maxit, true)
}

fn solve(
    a: &dyn LinearOperator,
    m: &mut dyn Preconditioner,
    b: &[f64],
    x0: Option<&[f64]>,
    rtol: f64,
    maxit: usize,
    flexible: bool,
) -> Result<(Vec<f64>, KrylovReport)> {
    let n = b.len();
    if a.nrows() != n {
        return Err(Error::InvalidArgument(format!(
            "operator has {} rows but right-hand side has {n}",
            a.nrows()
        )));
    }
    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        let report = KrylovReport { iterations: 0, history: vec![0.0], converged: true, breakdown: false };
        return Ok((x, report));
    }

    let mut r = vec![0.0; n];
    a.apply(&x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let beta = norm2(&r);
    let mut history = vec![beta / bnorm];
    if history[0] <= rtol {
        let report = KrylovReport { iterations: 0, history, converged: true, breakdown: false };
        return Ok((x, report));
    }

    let mut v: Vec<Vec<f64>> = vec![r.iter().map(|ri| ri / beta).collect()];
    let mut z: Vec<Vec<f64>> = Vec::new();
    // Hessenberg columns after rotation, stored column-wise
    let mut h: Vec<Vec<f64>> = Vec::new();
    let mut cs: Vec<f64> = Vec::new();
    let mut sn: Vec<f64> = Vec::new();
    let mut g = vec![beta];
    let mut w = vec![0.0; n];
    let mut zj = vec![0.0; n];
    let mut converged = false;
    let mut breakdown = false;

    for j in 0..maxit {
        m.apply(&v[j], &mut zj)?;
        a.apply(&zj, &mut w);
        if flexible {
            z.push(zj.clone());
        }
        let wnorm0 = norm2(&w);
        let mut col = vec![0.0; j + 2];
        for (i, vi) in v.iter().enumerate() {
            let hij = dot(&w, vi);
            col[i] = hij;
            for (wk, vk) in w.iter_mut().zip(vi) {
                *wk -= hij * vk;
            }
        }
        let hnext = norm2(&w);
        col[j + 1] = hnext;
        for i in 0..j {
            let t = cs[i] * col[i] + sn[i] * col[i + 1];
            col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1];
            col[i] = t;
        }
        let rho = col[j].hypot(col[j + 1]);
        let (c, s) = if rho == 0.0 { (0.0, 1.0) } else { (col[j] / rho, col[j + 1] / rho) };
        col[j] = rho;
        col[j + 1] = 0.0;
        cs.push(c);
        sn.push(s);
        g.push(-s * g[j]);
        g[j] *= c;
        h.push(col);
        history.push(g[j + 1].abs() / bnorm);

        let invariant = hnext <= f64::EPSILON * wnorm0.max(f64::MIN_POSITIVE);
        if history[j + 1] <= rtol {
            converged = true;
        } else if invariant {
            breakdown = true;
        } else {
            v.push(w.iter().map(|wk| wk / hnext).collect());
        }
        if converged || breakdown {
            break;
        }
    }

    let k = h.len();
    // back substitution on the rotated triangular system
    let mut y = vec![0.0; k];
    for i in (0..k).rev() {
        let mut s = g[i];
        for (jj, hj) in h.iter().enumerate().skip(i + 1) {
            s -= hj[i] * y[jj];
        }
        y[i] = if h[i][i] != 0.0 { s / h[i][i] } else { 0.0 };
    }
    if flexible {
        for (yj, zj) in y.iter().zip(&z) {
            for (xk, zk) in x.iter_mut().zip(zj) {
                *xk += yj * zk;
            }
        }
    } else {
        let mut u = vec![0.0; n];
        for (yj, vj) in y.iter().zip(&v) {
            for (uk, vk) in u.iter_mut().zip(vj) {
                *uk += yj * vk;
            }
        }
        m.apply(&u, &mut zj)?;
        for (xk, zk) in x.iter_mut().zip(&zj) {
            *xk += zk;
        }
    }

    let last = *history.last().unwrap();
    if breakdown && !converged {
        if last <= rtol {
            converged = true;
        } else {
            return Err(Error::Breakdown { iteration: k, residual: last });
        }
    }
    Ok((x, KrylovReport { iterations: k, history, converged, breakdown }))
}
