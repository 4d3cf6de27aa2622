//! Two-grid cycle and outer iterations.

use num_complex::Complex64;

use super::config::{Coarsening, Outer, SmootherKind, SolverConfig};
use super::prolongation::{build_prolongation, coarse_mesh_for, galerkin_inclusion};
use super::smoother::DomainDecomposition;
use crate::error::Result;
use crate::fespace::{assemble_helmholtz, FeSpace};
use crate::linalg::sparse::{dot_h, norm2};
use crate::linalg::{SparseComplexMatrix, SparseLu, SparseRealMatrix};
use crate::mesh::CoefficientField;
use crate::qsfem::assemble_qsfem;

enum Smoother {
    Dd(DomainDecomposition),
    Exact(SparseLu),
}

pub struct CoarseLevel {
    pub a_c: SparseComplexMatrix,
    pub prolongation: SparseRealMatrix,
    restriction: SparseRealMatrix,
    lu: SparseLu,
}

/// Operators of the two-grid method for one discrete problem.
pub struct TwoGrid {
    pub config: SolverConfig,
    pub a: SparseComplexMatrix,
    pub a_s: SparseComplexMatrix,
    smoother: Smoother,
    pub coarse: Option<CoarseLevel>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub u: Vec<Complex64>,
    pub iterations: usize,
    /// Relative residual after each iteration, starting with the initial one.
    pub history: Vec<f64>,
    pub converged: bool,
}

fn sub_apply(a: &SparseComplexMatrix, u: &[Complex64], f: &[Complex64]) -> Vec<Complex64> {
    let au = a.apply(u);
    f.iter().zip(&au).map(|(f, a)| f - a).collect()
}

impl TwoGrid {
    pub fn new(space: &FeSpace, coeffs: &CoefficientField, config: &SolverConfig) -> Result<Self> {
        config.validate()?;
        let a = assemble_helmholtz(space, coeffs, 0.0)?;
        let a_s = assemble_helmholtz(space, coeffs, config.alpha_s)?;
        let smoother = match config.smoother {
            SmootherKind::DomainDecomposition => Smoother::Dd(DomainDecomposition::new(space, coeffs, config.alpha_s, config.l_dd)?),
            SmootherKind::ExactShifted => Smoother::Exact(SparseLu::new(&a_s)?),
        };
        let coarse = match config.coarsening {
            Coarsening::None => None,
            Coarsening::OptimizedFd => {
                let cm = coarse_mesh_for(space)?;
                let cs = FeSpace::linear(&cm);
                let cc = coeffs.refine(space.mesh(), &cm, (space.order() / 2) as i64);
                let a_c = assemble_qsfem(&cs, &cc)?;
                let p = build_prolongation(space, &cs)?;
                Some(CoarseLevel::new(a_c, p)?)
            }
            Coarsening::GalerkinP => {
                let cs = FeSpace::new(space.mesh(), space.order() / 2)?;
                let a_c = assemble_helmholtz(&cs, coeffs, config.alpha_c)?;
                let p = galerkin_inclusion(space, &cs)?;
                Some(CoarseLevel::new(a_c, p)?)
            }
        };
        Ok(Self { config: config.clone(), a, a_s, smoother, coarse })
    }

    pub fn n_dofs(&self) -> usize {
        self.a.nrows()
    }

    pub fn domain_decomposition(&self) -> Option<&DomainDecomposition> {
        match &self.smoother {
            Smoother::Dd(dd) => Some(dd),
            Smoother::Exact(_) => None,
        }
    }

    pub fn smooth(&self, u: &[Complex64], f: &[Complex64]) -> Vec<Complex64> {
        match &self.smoother {
            Smoother::Dd(dd) => dd.smooth(u, f, &self.a, &self.a_s, self.config.n_dd),
            Smoother::Exact(lu) => {
                let mut r = sub_apply(&self.a, u, f);
                lu.solve_in_place(&mut r);
                u.iter().zip(&r).map(|(a, b)| a + b).collect()
            }
        }
    }

    /// `u + ω_c I_P A_c⁻¹ I_P*(f − A u)`.
    pub fn coarse_correct(&self, u: &[Complex64], f: &[Complex64]) -> Vec<Complex64> {
        let Some(c) = &self.coarse else { return u.to_vec() };
        let r = sub_apply(&self.a, u, f);
        let mut rc = c.restriction.apply(&r);
        c.lu.solve_in_place(&mut rc);
        let corr = c.prolongation.apply(&rc);
        let w = self.config.omega_c;
        u.iter().zip(&corr).map(|(u, c)| u + c * w).collect()
    }

    pub fn step(&self, u: &[Complex64], f: &[Complex64]) -> Vec<Complex64> {
        let mut u = u.to_vec();
        for _ in 0..self.config.n_s {
            u = self.smooth(&u, f);
        }
        u = self.coarse_correct(&u, f);
        for _ in 0..self.config.n_s {
            u = self.smooth(&u, f);
        }
        u
    }

    pub fn relative_residual(&self, u: &[Complex64], f: &[Complex64]) -> f64 {
        norm2(&sub_apply(&self.a, u, f)) / norm2(f)
    }

    pub fn solve(&self, f: &[Complex64]) -> SolveReport {
        match self.config.outer {
            Outer::Richardson => self.richardson(f),
            Outer::Krylov => self.gmres(f),
        }
    }

    fn richardson(&self, f: &[Complex64]) -> SolveReport {
        let n = f.len();
        let mut u = vec![Complex64::new(0.0, 0.0); n];
        if norm2(f) == 0.0 {
            return SolveReport { u, iterations: 0, history: vec![0.0], converged: true };
        }
        let mut history = vec![1.0];
        for it in 1..=self.config.max_iters {
            u = self.step(&u, f);
            let rr = self.relative_residual(&u, f);
            history.push(rr);
            if rr <= self.config.stop_rel_residual {
                return SolveReport { u, iterations: it, history, converged: true };
            }
            if !rr.is_finite() {
                break;
            }
        }
        let iterations = history.len() - 1;
        SolveReport { u, iterations, history, converged: false }
    }

    /// Power iteration on the error propagator `e ↦ step(e, 0)` from `e0`;
    /// returns `‖M e_n‖ / ‖e_n‖` after `steps` normalised applications.
    pub fn error_contraction(&self, e0: &[Complex64], steps: usize) -> f64 {
        let zero = vec![Complex64::new(0.0, 0.0); e0.len()];
        let mut e = e0.to_vec();
        let mut factor = 0.0;
        for _ in 0..steps.max(1) {
            let n = norm2(&e);
            if n == 0.0 {
                return 0.0;
            }
            e.iter_mut().for_each(|v| *v /= n);
            e = self.step(&e, &zero);
            factor = norm2(&e);
        }
        factor
    }

    fn precondition(&self, r: &[Complex64]) -> Vec<Complex64> {
        self.step(&vec![Complex64::new(0.0, 0.0); r.len()], r)
    }

    /// GMRES on `B A u = B f` with `B` one two-grid step from zero. The
    /// stopping test uses the unpreconditioned residual.
    fn gmres(&self, f: &[Complex64]) -> SolveReport {
        let n = f.len();
        let zero = Complex64::new(0.0, 0.0);
        let mut u = vec![zero; n];
        if norm2(f) == 0.0 {
            return SolveReport { u, iterations: 0, history: vec![0.0], converged: true };
        }
        let m = self.config.max_iters;
        let mut history = vec![1.0];
        let z = self.precondition(f);
        let beta = norm2(&z);
        let mut basis: Vec<Vec<Complex64>> = vec![z.iter().map(|v| v / beta).collect()];
        let mut hess: Vec<Vec<Complex64>> = Vec::new();
        let mut cs: Vec<(Complex64, Complex64)> = Vec::new();
        let mut g = vec![Complex64::new(beta, 0.0)];
        for j in 0..m {
            let mut w = self.precondition(&self.a.apply(&basis[j]));
            let mut hcol = vec![zero; j + 2];
            for (i, v) in basis.iter().enumerate() {
                let hij = dot_h(v, &w);
                hcol[i] = hij;
                w.iter_mut().zip(v).for_each(|(w, v)| *w -= hij * v);
            }
            let wn = norm2(&w);
            hcol[j + 1] = Complex64::new(wn, 0.0);
            for (i, &(c, s)) in cs.iter().enumerate() {
                let (a, b) = (hcol[i], hcol[i + 1]);
                hcol[i] = c.conj() * a + s.conj() * b;
                hcol[i + 1] = -s * a + c * b;
            }
            let (a, b) = (hcol[j], hcol[j + 1]);
            let r = (a.norm_sqr() + b.norm_sqr()).sqrt();
            let (c, s) = if r == 0.0 { (Complex64::new(1.0, 0.0), zero) } else { (a / r, b / r) };
            hcol[j] = Complex64::new(r, 0.0);
            hcol[j + 1] = zero;
            let gj = g[j];
            g[j] = c.conj() * gj;
            g.push(-s * gj);
            cs.push((c, s));
            hess.push(hcol);
            // current iterate from the triangular system
            let k = j + 1;
            let mut y = vec![zero; k];
            for i in (0..k).rev() {
                let mut acc = g[i];
                for l in i + 1..k {
                    acc -= hess[l][i] * y[l];
                }
                y[i] = acc / hess[i][i];
            }
            u = vec![zero; n];
            for (v, yi) in basis.iter().zip(&y) {
                u.iter_mut().zip(v).for_each(|(u, v)| *u += yi * v);
            }
            let rr = self.relative_residual(&u, f);
            history.push(rr);
            if rr <= self.config.stop_rel_residual {
                return SolveReport { u, iterations: k, history, converged: true };
            }
            if wn == 0.0 || !rr.is_finite() {
                break;
            }
            basis.push(w.iter().map(|v| v / wn).collect());
        }
        let iterations = history.len() - 1;
        SolveReport { u, iterations, history, converged: false }
    }
}

impl CoarseLevel {
    fn new(a_c: SparseComplexMatrix, prolongation: SparseRealMatrix) -> Result<Self> {
        let lu = SparseLu::new(&a_c)?;
        let restriction = prolongation.transpose();
        Ok(Self { a_c, prolongation, restriction, lu })
    }

    pub fn n_dofs(&self) -> usize {
        self.a_c.nrows()
    }
}
