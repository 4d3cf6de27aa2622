use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coarsening {
    /// QSFEM stencil on the square mesh of spacing `2h/p`.
    OptimizedFd,
    /// Same mesh, order `p/2`.
    GalerkinP,
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outer {
    Richardson,
    /// Left-preconditioned GMRES.
    Krylov,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmootherKind {
    /// Complex-shifted overlapping domain decomposition.
    DomainDecomposition,
    /// `u ← u + A_s⁻¹(f − A u)` with a global factorisation of `A_s`.
    ExactShifted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub alpha_s: f64,
    pub alpha_c: f64,
    pub n_s: usize,
    pub n_dd: usize,
    pub omega_c: f64,
    pub l_dd: usize,
    pub coarsening: Coarsening,
    pub outer: Outer,
    pub smoother: SmootherKind,
    pub stop_rel_residual: f64,
    pub max_iters: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            alpha_s: 0.2,
            alpha_c: 0.0,
            n_s: 1,
            n_dd: 1,
            omega_c: 1.0,
            l_dd: 4,
            coarsening: Coarsening::OptimizedFd,
            outer: Outer::Richardson,
            smoother: SmootherKind::DomainDecomposition,
            stop_rel_residual: 1e-6,
            max_iters: 200,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.alpha_s >= 0.0 && self.alpha_s.is_finite()) {
            return bad(format!("alpha_s must be non-negative, got {}", self.alpha_s));
        }
        if !(self.alpha_c >= 0.0 && self.alpha_c.is_finite()) {
            return bad(format!("alpha_c must be non-negative, got {}", self.alpha_c));
        }
        if self.n_s == 0 || self.n_dd == 0 {
            return bad("n_s and n_dd must be at least 1".into());
        }
        if !(self.omega_c >= 0.0 && self.omega_c <= 1.0) {
            return bad(format!("omega_c must lie in [0, 1], got {}", self.omega_c));
        }
        if self.l_dd < 2 {
            return bad(format!("l_dd must be at least 2, got {}", self.l_dd));
        }
        if !(self.stop_rel_residual > 0.0) {
            return bad("stop_rel_residual must be positive".into());
        }
        Ok(())
    }
}
