//! Two-grid solver: domain-decomposition smoothing and a coarse correction
//! with either the QSFEM stencil or order-halving Galerkin coarsening.

pub mod config;
pub mod cycle;
pub mod partition;
pub mod problem;
pub mod prolongation;
pub mod smoother;

pub use config::{Coarsening, Outer, SmootherKind, SolverConfig};
pub use cycle::{CoarseLevel, SolveReport, TwoGrid};
pub use partition::{partition, Partition, Subdomain};
pub use problem::{BoundarySet, Problem, ProblemSpec, Rhs};
pub use prolongation::{build_prolongation, coarse_mesh_for, galerkin_inclusion};
pub use smoother::{subdomain_mesh, DomainDecomposition, SubdomainOperator};
