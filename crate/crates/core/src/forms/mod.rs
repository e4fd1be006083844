//! Oseen–Frank energy, its linearizations and the associated discrete
//! operators.
//!
//! The free energy of a director field `n` is
//!
//! ```text
//! J(n) = 1/2 ∫ K1 (∇·n)² + K3 Z(n)∇×n · ∇×n + 2 K2 q0 n·∇×n + K2 q0²
//! ```
//!
//! with `Z(n) = I + (κ − 1) n⊗n` and `κ = K2 / K3`. The unit-length constraint
//! is enforced with a multiplier `λ` and, optionally, a penalty
//! `γ/2 ‖n·n − 1‖²`.

mod assembly;
mod norms;
pub mod quadrature;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

pub use assembly::{assemble_constraint, assemble_mass_multiplier, assemble_operator, assemble_rhs};
pub use norms::{constraint_norm, energy, error_norms, ErrorNorms};
pub use quadrature::QuadratureRule;

use crate::error::{invalid, Error, Result};
use crate::fespace::{Family, Space};
use crate::mesh::Mesh2d;

/// Frank constants, cholesteric pitch and augmentation parameter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProblemParams {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub q0: f64,
    pub gamma: f64,
}

impl ProblemParams {
    pub fn new(k1: f64, k2: f64, k3: f64, q0: f64, gamma: f64) -> Self {
        Self { k1, k2, k3, q0, gamma }
    }

    /// Equal Frank constants `k`, no pitch, no augmentation.
    pub fn equal(k: f64) -> Self {
        Self::new(k, k, k, 0.0, 0.0)
    }

    pub fn kappa(&self) -> f64 {
        self.k2 / self.k3
    }

    pub fn with_gamma(self, gamma: f64) -> Self {
        Self { gamma, ..self }
    }
}

impl Default for ProblemParams {
    fn default() -> Self {
        Self::new(1.0, 1.2, 1.0, 0.0, 0.0)
    }
}

/// Rejects non-physical parameters and returns warnings for parameter
/// combinations where the linearized operator may lose coercivity.
///
/// The coercivity bound involves a Poincaré-type constant that is not
/// computable, so the warning fires on the ratio `K2 q0 / min(K1, K3 η)`
/// (with `η = min(1, κ)`) exceeding one half.
pub fn validate_params(p: &ProblemParams) -> Result<Vec<String>> {
    for (name, k) in [("K1", p.k1), ("K2", p.k2), ("K3", p.k3)] {
        if !(k > 0.0 && k.is_finite()) {
            return invalid(format!("{name} must be positive, got {k}"));
        }
    }
    if !(p.q0 >= 0.0 && p.q0.is_finite()) {
        return invalid(format!("q0 must be non-negative, got {}", p.q0));
    }
    if !(p.gamma >= 0.0 && p.gamma.is_finite()) {
        return invalid(format!("gamma must be non-negative, got {}", p.gamma));
    }
    let mut warnings = Vec::new();
    if p.q0 > 0.0 {
        let eta = p.kappa().min(1.0);
        let bound = p.k1.min(p.k3 * eta);
        let ratio = p.k2 * p.q0 / bound;
        if ratio >= 0.5 {
            warnings.push(format!(
                "K2*q0 = {:.3} is {ratio:.2} times min(K1, K3*eta) = {bound:.3}; the linearized operator may not be coercive",
                p.k2 * p.q0
            ));
        }
    }
    Ok(warnings)
}

/// Which linearization of the director block to assemble.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OperatorMode {
    /// Second variation of the Lagrangian, no penalty.
    Plain,
    /// Second variation including the full penalty Hessian.
    NewtonAug,
    /// Penalty Hessian without the sign-indefinite `2γ⟨n·n − 1, u·v⟩` part.
    PicardAug,
}

/// Director and multiplier spaces on one mesh.
#[derive(Clone, Debug)]
pub struct Discretization {
    pub director: Arc<Space>,
    pub multiplier: Arc<Space>,
}

impl Discretization {
    pub fn new(mesh: &Arc<Mesh2d>, element: Element) -> Result<Self> {
        Ok(Self {
            director: Arc::new(Space::new(mesh, element.director_family(), 3)?),
            multiplier: Arc::new(Space::new(mesh, Family::P1, 1)?),
        })
    }
}

/// Director/multiplier element pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Element {
    P1P1,
    P2P1,
}

impl Element {
    pub fn director_family(self) -> Family {
        match self {
            Element::P1P1 => Family::P1,
            Element::P2P1 => Family::P2,
        }
    }
}

impl FromStr for Element {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "p1p1" => Ok(Element::P1P1),
            "p2p1" => Ok(Element::P2P1),
            other => invalid(format!("unknown element pair '{other}'")),
        }
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Element::P1P1 => "p1p1",
            Element::P2P1 => "p2p1",
        })
    }
}

/// Coefficient vectors of the director and the multiplier.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub director: Vec<f64>,
    pub multiplier: Vec<f64>,
}

impl State {
    pub fn new(director: Vec<f64>, multiplier: Vec<f64>) -> Self {
        Self { director, multiplier }
    }

    /// Interpolated director with a zero multiplier.
    pub fn from_director(disc: &Discretization, n: impl Fn([f64; 2]) -> [f64; 3]) -> Result<Self> {
        Ok(Self { director: disc.director.interpolate(n)?, multiplier: vec![0.0; disc.multiplier.ndofs()] })
    }

    pub(crate) fn check(&self, disc: &Discretization) -> Result<()> {
        if self.director.len() != disc.director.ndofs() || self.multiplier.len() != disc.multiplier.ndofs() {
            return invalid(format!(
                "state has {}+{} coefficients, spaces have {}+{}",
                self.director.len(),
                self.multiplier.len(),
                disc.director.ndofs(),
                disc.multiplier.ndofs()
            ));
        }
        Ok(())
    }
}

/// `∇×n` for a three-component field on the plane (no `z` dependence);
/// `grad[i][j] = ∂n_i/∂x_j`.
pub fn curl3(grad: &[[f64; 2]; 3]) -> [f64; 3] {
    [grad[2][1], -grad[2][0], grad[1][0] - grad[0][1]]
}

/// `Z(n) = I + (κ − 1) n⊗n`.
pub fn z_tensor(n: [f64; 3], kappa: f64) -> [[f64; 3]; 3] {
    let mut z = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            z[i][j] = (kappa - 1.0) * n[i] * n[j] + if i == j { 1.0 } else { 0.0 };
        }
    }
    z
}

pub(crate) fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}
