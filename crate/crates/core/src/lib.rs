//! Finite-element discretization and solvers for the Oseen–Frank model of
//! nematic and cholesteric liquid crystals on the unit square.
//!
//! The director is discretized with vector P1 or P2 elements (three
//! components on a two-dimensional domain) and the unit-length constraint with
//! a scalar P1 Lagrange multiplier. Each nonlinear step solves an augmented
//! saddle-point system with FGMRES preconditioned by a block factorization whose
//! director block is handled by a direct solver or a patch-smoothed multigrid
//! V-cycle.

pub mod error;
pub mod fespace;
pub mod forms;
pub mod linalg;
pub mod mesh;
pub mod multigrid;
pub mod saddle;

pub use error::{Error, Result};
