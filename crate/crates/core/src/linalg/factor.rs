use faer::linalg::solvers::Solve;
use faer::sparse::linalg::LuError;
use faer::sparse::{SparseColMat, Triplet};
use faer::MatMut;
use num_complex::Complex64;

use super::sparse::SparseComplexMatrix;
use crate::error::{Error, Result};

/// Sparse LU with fill-reducing column ordering and partial pivoting.
///
/// Backed by faer's supernodal/simplicial sparse LU. Factors are immutable
/// and `solve` takes `&self`, so concurrent solves against one factorization
/// are fine.
pub struct SparseLu {
    n: usize,
    lu: faer::sparse::linalg::solvers::Lu<usize, Complex64>,
}

impl std::fmt::Debug for SparseLu {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SparseLu").field("n", &self.n).finish_non_exhaustive()
    }
}

pub fn sparse_lu(a: &SparseComplexMatrix) -> Result<SparseLu> {
    SparseLu::new(a)
}

impl SparseLu {
    pub fn new(a: &SparseComplexMatrix) -> Result<Self> {
        assert_eq!(a.nrows(), a.ncols(), "LU of a non-square matrix");
        let n = a.nrows();
        let triplets: Vec<Triplet<usize, usize, Complex64>> =
            a.triplets().map(|(r, c, v)| Triplet::new(r, c, v)).collect();
        let mat = SparseColMat::<usize, Complex64>::try_new_from_triplets(n, n, &triplets)
            .map_err(|e| Error::Factorization(format!("{e:?}")))?;
        let lu = mat.sp_lu().map_err(|e| match e {
            LuError::SymbolicSingular { index } => Error::Singular { pivot: index },
            LuError::Generic(g) => Error::Factorization(format!("{g:?}")),
        })?;
        let f = Self { n, lu };
        f.check_numerically_regular()?;
        Ok(f)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut [Complex64]) {
        assert_eq!(x.len(), self.n, "rhs dimension mismatch");
        if self.n == 0 {
            return;
        }
        let rhs = MatMut::from_column_major_slice_mut(x, self.n, 1);
        self.lu.solve_in_place(rhs);
    }

    // faer does not report zero pivots during numeric factorization; a solve
    // with a generic right-hand side exposes them as non-finite values.
    fn check_numerically_regular(&self) -> Result<()> {
        let probe: Vec<Complex64> = (0..self.n).map(|i| Complex64::new(1.0 + (i % 7) as f64, 0.5)).collect();
        let x = self.solve(&probe);
        match x.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
            Some(pivot) => Err(Error::Singular { pivot }),
            None => Ok(()),
        }
    }
}
