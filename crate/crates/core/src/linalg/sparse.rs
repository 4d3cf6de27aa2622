use std::io::{self, Write};

use num_complex::Complex64;

/// Entry type of a [`CsrMatrix`]. Real matrices act on complex vectors
/// through [`Scalar::to_complex`].
pub trait Scalar: Copy + Send + Sync + std::fmt::Debug + std::ops::AddAssign + PartialEq {
    const ZERO: Self;
    fn to_complex(self) -> Complex64;
    fn abs(self) -> f64;
}

impl Scalar for f64 {
    const ZERO: Self = 0.0;
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
    fn abs(self) -> f64 {
        f64::abs(self)
    }
}

impl Scalar for Complex64 {
    const ZERO: Self = Complex64::new(0.0, 0.0);
    fn to_complex(self) -> Complex64 {
        self
    }
    fn abs(self) -> f64 {
        self.norm()
    }
}

/// Compressed sparse row matrix. Duplicate triplets are summed and exact
/// zeros are dropped on construction, so no structural zeros are stored.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix<T> {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<T>,
}

pub type SparseComplexMatrix = CsrMatrix<Complex64>;
pub type SparseRealMatrix = CsrMatrix<f64>;

impl<T: Scalar> CsrMatrix<T> {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, indptr: vec![0; nrows + 1], indices: Vec::new(), values: Vec::new() }
    }

    pub fn identity(n: usize) -> Self
    where
        T: From<f64>,
    {
        Self::from_triplets(n, n, (0..n).map(|i| (i, i, T::from(1.0))))
    }

    pub fn from_triplets<I>(nrows: usize, ncols: usize, triplets: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, T)>,
    {
        let mut entries: Vec<(usize, usize, T)> = triplets.into_iter().collect();
        entries.sort_unstable_by_key(|&(r, c, _)| (r, c));

        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(entries.len());
        let mut values: Vec<T> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in entries {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) outside {nrows}x{ncols}");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indptr[r + 1] += 1;
                indices.push(c);
                values.push(v);
                last = Some((r, c));
            }
        }
        for r in 0..nrows {
            indptr[r + 1] += indptr[r];
        }
        let mut m = Self { nrows, ncols, indptr, indices, values };
        m.drop_zeros();
        m
    }

    fn drop_zeros(&mut self) {
        if self.values.iter().all(|v| *v != T::ZERO) {
            return;
        }
        let mut indptr = vec![0usize; self.nrows + 1];
        let mut indices = Vec::with_capacity(self.indices.len());
        let mut values = Vec::with_capacity(self.values.len());
        for r in 0..self.nrows {
            for k in self.indptr[r]..self.indptr[r + 1] {
                if self.values[k] != T::ZERO {
                    indices.push(self.indices[k]);
                    values.push(self.values[k]);
                }
            }
            indptr[r + 1] = indices.len();
        }
        self.indptr = indptr;
        self.indices = indices;
        self.values = values;
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let range = self.indptr[r]..self.indptr[r + 1];
        self.indices[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        let range = self.indptr[r]..self.indptr[r + 1];
        match self.indices[range.clone()].binary_search(&c) {
            Ok(k) => self.values[range.start + k],
            Err(_) => T::ZERO,
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.nrows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets(self.ncols, self.nrows, self.triplets().map(|(r, c, v)| (c, r, v)))
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> CsrMatrix<U> {
        CsrMatrix::from_triplets(self.nrows, self.ncols, self.triplets().map(|(r, c, v)| (r, c, f(v))))
    }

    /// Sparse matrix-vector product `y = A x`.
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.ncols, "spmv dimension mismatch");
        let mut y = vec![Complex64::new(0.0, 0.0); self.nrows];
        self.apply_into(x, &mut y);
        y
    }

    pub fn apply_into(&self, x: &[Complex64], y: &mut [Complex64]) {
        for (r, yr) in y.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in self.indptr[r]..self.indptr[r + 1] {
                acc += self.values[k].to_complex() * x[self.indices[k]];
            }
            *yr = acc;
        }
    }

    /// `y = Aᵀ x` without forming the transpose.
    pub fn apply_transpose(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.nrows, "spmv dimension mismatch");
        let mut y = vec![Complex64::new(0.0, 0.0); self.ncols];
        for (r, &xr) in x.iter().enumerate() {
            for k in self.indptr[r]..self.indptr[r + 1] {
                y[self.indices[k]] += self.values[k].to_complex() * xr;
            }
        }
        y
    }

    pub fn to_complex(&self) -> SparseComplexMatrix {
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            indptr: self.indptr.clone(),
            indices: self.indices.clone(),
            values: self.values.iter().map(|v| v.to_complex()).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    /// Symmetric restriction `A[idx, idx]` to an index subset (local numbering
    /// follows the order of `idx`).
    pub fn submatrix(&self, idx: &[usize]) -> Self {
        let mut local = vec![usize::MAX; self.ncols];
        for (l, &g) in idx.iter().enumerate() {
            local[g] = l;
        }
        let n = idx.len();
        Self::from_triplets(
            n,
            n,
            idx.iter().enumerate().flat_map(|(lr, &g)| {
                let local = &local;
                self.row(g).filter_map(move |(c, v)| (local[c] != usize::MAX).then_some((lr, local[c], v)))
            }),
        )
    }
}

impl SparseComplexMatrix {
    /// Matrix product `self * other`.
    pub fn matmul<U: Scalar>(&self, other: &CsrMatrix<U>) -> SparseComplexMatrix {
        assert_eq!(self.ncols, other.nrows);
        let mut trip = Vec::new();
        for r in 0..self.nrows {
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    trip.push((r, c, a * b.to_complex()));
                }
            }
        }
        CsrMatrix::from_triplets(self.nrows, other.ncols, trip)
    }

    pub fn add_scaled(&self, other: &SparseComplexMatrix, scale: Complex64) -> SparseComplexMatrix {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        CsrMatrix::from_triplets(
            self.nrows,
            self.ncols,
            self.triplets().chain(other.triplets().map(|(r, c, v)| (r, c, v * scale))),
        )
    }

    /// Debug dump, one `row col re im` line per stored entry.
    pub fn write_triplets<W: Write>(&self, mut out: W) -> io::Result<()> {
        for (r, c, v) in self.triplets() {
            writeln!(out, "{r} {c} {:e} {:e}", v.re, v.im)?;
        }
        Ok(())
    }
}

pub fn norm2(x: &[Complex64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

pub fn axpy(alpha: Complex64, x: &[Complex64], y: &mut [Complex64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn sub(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Unconjugated bilinear pairing `Σ x_i y_i`.
pub fn dot_u(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Hermitian inner product `Σ conj(x_i) y_i`.
pub fn dot_h(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}
