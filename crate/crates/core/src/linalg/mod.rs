//! Sparse and dense linear algebra: CSR storage, direct factorizations and
//! Krylov solvers.

mod dense;
pub mod krylov;
mod ldl;
mod lu;
pub mod ordering;
mod sparse;

pub use dense::{DenseCholesky, DenseFactor, DenseLu, DenseMatrix};
#[cfg(test)]
pub(crate) use dense::norm2;
pub use krylov::{fgmres, gmres, Identity, KrylovReport, LinearOperator, Preconditioner};
pub use ldl::SparseLdl;
pub use lu::SparseLu;
pub use sparse::CsrMatrix;

use crate::error::{Error, Result};

/// Relative tolerance of the symmetry check done before a Cholesky factorization.
pub const SYMMETRY_RTOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FactorKind {
    /// Symmetric positive definite; fails on the first non-positive pivot.
    Cholesky,
    /// General square matrix.
    Lu,
}

/// A sparse direct factorization ready for repeated solves.
#[derive(Clone, Debug)]
pub enum DirectFactorization {
    Cholesky(SparseLdl),
    Lu(SparseLu),
}

/// Factors `a` with a nested-dissection fill-reducing ordering.
pub fn factor(a: &CsrMatrix, kind: FactorKind) -> Result<DirectFactorization> {
    match kind {
        FactorKind::Cholesky => {
            a.check_symmetric(SYMMETRY_RTOL)?;
            Ok(DirectFactorization::Cholesky(SparseLdl::new(a, true)?))
        }
        FactorKind::Lu => Ok(DirectFactorization::Lu(SparseLu::new(a)?)),
    }
}

/// Cholesky when it succeeds, LU when the matrix turns out to be indefinite
/// or unsymmetric.
pub fn factor_spd_or_lu(a: &CsrMatrix) -> Result<DirectFactorization> {
    match factor(a, FactorKind::Cholesky) {
        Ok(f) => Ok(f),
        Err(e @ (Error::NotPositiveDefinite { .. } | Error::NotSymmetric { .. })) => {
            log::info!("falling back to sparse LU: {e}");
            factor(a, FactorKind::Lu)
        }
        Err(e) => Err(e),
    }
}

impl DirectFactorization {
    pub fn kind(&self) -> FactorKind {
        match self {
            Self::Cholesky(_) => FactorKind::Cholesky,
            Self::Lu(_) => FactorKind::Lu,
        }
    }

    pub fn n(&self) -> usize {
        match self {
            Self::Cholesky(f) => f.n(),
            Self::Lu(f) => f.n(),
        }
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        match self {
            Self::Cholesky(f) => f.solve_in_place(b),
            Self::Lu(f) => f.solve_in_place(b),
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

impl Preconditioner for DirectFactorization {
    fn apply(&mut self, r: &[f64], z: &mut [f64]) -> Result<()> {
        z.copy_from_slice(r);
        self.solve_in_place(z);
        Ok(())
    }
}
