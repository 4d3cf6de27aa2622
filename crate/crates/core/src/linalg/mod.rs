//! Numerical kernels shared by the assembly, solver and analysis modules.

pub mod dense;
pub mod factor;
pub mod sparse;

pub use dense::{spectral_radius_of, DenseLu, DenseMatrix};
pub use factor::{sparse_lu, SparseLu};
pub use sparse::{CsrMatrix, Scalar, SparseComplexMatrix, SparseRealMatrix};
