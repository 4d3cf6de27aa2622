//! Two-grid Helmholtz solver on structured meshes with a dispersion-matched
//! coarse operator, plus Fourier analysis and dispersion tools.

pub mod dispersion;
pub mod error;
pub mod fespace;
pub mod lfa1d;
pub mod lfa2d;
pub mod linalg;
pub mod mesh;
pub mod qsfem;
pub mod twogrid;

pub use error::{Error, Result};
pub use num_complex::Complex64;
