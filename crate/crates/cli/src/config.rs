//! Run configuration, one TOML document per run.

use serde::{Deserialize, Serialize};

use helmtg::dispersion::Scheme;
use helmtg::lfa2d::LfaParams;
use helmtg::twogrid::{BoundarySet, Coarsening, ProblemSpec, SolverConfig};
use helmtg::mesh::ElementKind;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub solve: SolveSection,
    pub lfa1d: Lfa1dSection,
    pub lfa2d: Lfa2dSection,
    pub dispersion: DispersionSection,
    pub bench: BenchSection,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveOutput {
    /// `iter,relres` per outer iteration.
    History,
    /// `x,y,u_re,u_im` at every mesh vertex.
    Solution,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveSection {
    pub problem: ProblemSpec,
    pub solver: SolverConfig,
    pub output: SolveOutput,
}

impl Default for SolveSection {
    fn default() -> Self {
        Self { problem: ProblemSpec::default(), solver: SolverConfig::default(), output: SolveOutput::History }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Lfa1dSection {
    /// Stencil half-widths.
    pub m: Vec<u32>,
    pub ppw: Vec<f64>,
    pub k: f64,
    pub d: f64,
    pub alpha_s: f64,
    pub n_theta: usize,
}

impl Default for Lfa1dSection {
    fn default() -> Self {
        Self { m: vec![1, 2], ppw: vec![8.0, 10.0, 12.0, 16.0, 20.0], k: 40.0, d: 0.01, alpha_s: 0.2, n_theta: 4096 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Lfa2dSection {
    /// Defaults for everything not swept.
    pub base: LfaParams,
    pub orders: Vec<u32>,
    pub ppw: Vec<f64>,
    pub coarsenings: Vec<Coarsening>,
    pub n_s: Vec<usize>,
    pub omega_c: Vec<f64>,
}

impl Default for Lfa2dSection {
    fn default() -> Self {
        Self {
            base: LfaParams::default(),
            orders: vec![4],
            ppw: vec![8.0, 10.0],
            coarsenings: vec![Coarsening::OptimizedFd, Coarsening::GalerkinP],
            n_s: vec![1],
            omega_c: vec![1.0],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DispersionOutput {
    /// `scheme,ppw,max_error` per scheme and ppw.
    Errors,
    /// `order,coarsening,ppw,r,rho`: coarse/fine mismatch against the LFA rate.
    Overlay,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DispersionSection {
    pub output: DispersionOutput,
    pub schemes: Vec<Scheme>,
    pub ppw: Vec<f64>,
    pub directions: usize,
    /// Overlay parameters: fine orders, coarsenings, and the LFA setup.
    pub orders: Vec<u32>,
    pub coarsenings: Vec<Coarsening>,
    pub lfa: LfaParams,
}

impl Default for DispersionSection {
    fn default() -> Self {
        let fe = |order| Scheme::Fe { order, element: ElementKind::Square };
        Self {
            output: DispersionOutput::Errors,
            schemes: vec![Scheme::Qsfem, fe(2), fe(4), fe(6), fe(8)],
            ppw: vec![6.0, 8.0, 10.0, 14.0],
            directions: helmtg::dispersion::DIRECTIONS,
            orders: vec![4],
            coarsenings: vec![Coarsening::OptimizedFd, Coarsening::GalerkinP],
            lfa: LfaParams::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchSection {
    /// Template for every run; swept fields are overwritten.
    pub problem: ProblemSpec,
    pub solver: SolverConfig,
    pub orders: Vec<u32>,
    pub ppw: Vec<f64>,
    pub wavelengths: Vec<f64>,
    pub boundaries: Vec<BoundarySet>,
    pub coarsenings: Vec<Coarsening>,
}

impl Default for BenchSection {
    fn default() -> Self {
        Self {
            problem: ProblemSpec::default(),
            solver: SolverConfig::default(),
            orders: vec![4],
            ppw: vec![10.0],
            wavelengths: vec![10.0, 20.0],
            boundaries: vec![BoundarySet::AllAbsorbing, BoundarySet::DirichletTwoSides],
            coarsenings: vec![Coarsening::OptimizedFd, Coarsening::GalerkinP],
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = RunConfig::default();
        assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn partial_documents_fill_defaults() {
        let c = RunConfig::from_toml("[solve.problem]\nwavelengths = 5.0\n[bench]\norders = []\n").unwrap();
        assert_eq!(c.solve.problem.wavelengths, 5.0);
        assert_eq!(c.solve.problem.order, 4);
        assert!(c.bench.orders.is_empty());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::from_toml("[solve]\nfoo = 1\n").is_err());
        assert!(RunConfig::from_toml("[lfa2d.base]\nordr = 4\n").is_err());
        assert!(RunConfig::from_toml("[typo]\n").is_err());
    }

    #[test]
    fn scheme_syntax() {
        let c = RunConfig::from_toml(
            "[dispersion]\nschemes = [{ type = \"qsfem\" }, { type = \"fe\", order = 6, element = \"triangle\" }]\n",
        )
        .unwrap();
        assert_eq!(c.dispersion.schemes[1], Scheme::Fe { order: 6, element: ElementKind::Triangle });
    }
}
