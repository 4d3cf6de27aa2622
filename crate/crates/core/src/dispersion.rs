//! Discrete dispersion relations of finite-element and QSFEM discretizations.
//!
//! Zeros of the symbol `Â(θ) = K̂(θ) − (kh)²M̂(θ)` are located along rays from
//! the origin, starting at the true circle `‖ξ‖ = k`. Whenever `kh > π` the
//! folded true circle crosses itself on the torus and the neighbourhoods of
//! the crossings are sampled densely as well. Crossings are detected by a change
//! in the number of negative eigenvalues, which is robust against eigenvalue
//! branches swapping places.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fespace::{assemble_helmholtz, FeSpace};
use crate::lfa2d::{extract_blocks, patch, BlockToeplitzView, UnitCell};
use crate::linalg::DenseMatrix;
use crate::mesh::{CoefficientField, ElementKind};
use crate::qsfem::{golden_max, QsfemStencil};

/// Ray directions in `[0, π/2]` for square meshes. Triangle meshes lack the
/// diagonal mirror symmetries and use twice as many over `[0, π]`.
pub const DIRECTIONS: usize = 360;
/// Radius of the neighbourhoods sampled around fold crossings.
pub const FOLD_RADIUS: f64 = 0.2;
/// Grid spacing inside a fold neighbourhood.
pub const FOLD_SPACING: f64 = 0.02;
/// Rays are searched over `‖ξ‖/k ∈ (1 − MAX_OFFSET, 1 + MAX_OFFSET)`. A ray
/// without a zero there contributes this value as its error.
pub const MAX_OFFSET: f64 = 1.0;
/// Local maxima of the ray errors refined by golden section.
pub const REFINED_PEAKS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum Scheme {
    Fe { order: u32, element: ElementKind },
    Qsfem,
}

impl Scheme {
    /// Dofs per cell side: `p` for finite elements, 1 for the stencil.
    pub fn dofs_per_cell(&self) -> u32 {
        match self {
            Scheme::Fe { order, .. } => *order,
            Scheme::Qsfem => 1,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Scheme::Fe { order, element: ElementKind::Square } => format!("gal{order}"),
            Scheme::Fe { order, element: ElementKind::Triangle } => format!("gal{order}_tri"),
            Scheme::Qsfem => "opt".into(),
        }
    }

    fn square_symmetric(&self) -> bool {
        !matches!(self, Scheme::Fe { element: ElementKind::Triangle, .. })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DispersionQuery {
    pub scheme: Scheme,
    pub ppw: f64,
    pub k: f64,
}

impl DispersionQuery {
    pub fn new(scheme: Scheme, ppw: f64) -> Self {
        Self { scheme, ppw, k: 1.0 }
    }

    /// Cell size giving `ppw` dofs per wavelength.
    pub fn h(&self) -> f64 {
        2.0 * PI * self.scheme.dofs_per_cell() as f64 / (self.k * self.ppw)
    }

    /// `k·h`, the wavenumber in lattice units.
    pub fn kappa(&self) -> f64 {
        self.k * self.h()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ppw > 2.0) || !self.ppw.is_finite() {
            return Err(Error::InvalidParameter(format!("need ppw > 2, got {}", self.ppw)));
        }
        if !(self.k > 0.0) || !self.k.is_finite() {
            return Err(Error::InvalidParameter(format!("need k > 0, got {}", self.k)));
        }
        if let Scheme::Fe { order, .. } = self.scheme {
            if !(1..=8).contains(&order) {
                return Err(Error::UnsupportedOrder(order));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PropagatingMode {
    /// Zero of the symbol, wrapped into `[−π, π)²`.
    pub theta: [f64; 2],
    /// Physical wave vector `(θ + 2πα)/h`.
    pub xi: [f64; 2],
    pub alpha: [i64; 2],
    /// `|‖ξ‖/k − 1|`.
    pub error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ZeroCurve {
    pub query: DispersionQuery,
    /// Ray angles and the zero `‖ξ‖/k` found on each, if any.
    pub rays: Vec<(f64, Option<f64>)>,
    pub modes: Vec<PropagatingMode>,
}

impl ZeroCurve {
    /// Largest error over the modes. Rays without a zero count as
    /// `MAX_OFFSET`.
    pub fn max_error(&self) -> f64 {
        let missing = if self.rays.iter().any(|r| r.1.is_none()) { MAX_OFFSET } else { 0.0 };
        self.modes.iter().map(|m| m.error).fold(missing, f64::max)
    }
}

/// The symbol of a discretization at `h = 1`.
pub enum Symbol {
    Fe(BlockToeplitzView),
    Qsfem(QsfemStencil),
}

impl Symbol {
    pub fn new(query: &DispersionQuery) -> Result<Self> {
        query.validate()?;
        let kappa = query.kappa();
        match query.scheme {
            Scheme::Qsfem => Ok(Symbol::Qsfem(QsfemStencil::new(kappa)?)),
            Scheme::Fe { order, element } => {
                let (mesh, anchors) = patch(element)?;
                let space = FeSpace::new(&mesh, order)?;
                let a = assemble_helmholtz(&space, &CoefficientField::constant(&mesh, kappa), 0.0)?;
                let cell = UnitCell::fine(&space);
                Ok(Symbol::Fe(extract_blocks(&a, &cell, &cell, anchors, 1)?))
            }
        }
    }

    pub fn matrix(&self, theta: [f64; 2]) -> DenseMatrix {
        match self {
            Symbol::Fe(v) => v.symbol(theta),
            Symbol::Qsfem(s) => DenseMatrix::from_fn(1, 1, |_, _| Complex64::new(s.n * s.symbol(theta), 0.0)),
        }
    }

    /// Eigenvalues in nondecreasing order. The symbol is Hermitian at `ε = 0`.
    pub fn eigenvalues(&self, theta: [f64; 2]) -> Vec<f64> {
        match self {
            Symbol::Fe(v) => v.symbol(theta).hermitian_eigenvalues().unwrap_or_default(),
            Symbol::Qsfem(s) => vec![s.n * s.symbol(theta)],
        }
    }

    pub fn negative_count(&self, theta: [f64; 2]) -> usize {
        self.eigenvalues(theta).iter().filter(|&&l| l < 0.0).count()
    }

    /// Signed eigenvalue of smallest modulus.
    pub fn nearest_eigenvalue(&self, theta: [f64; 2]) -> f64 {
        self.eigenvalues(theta).into_iter().min_by(|a, b| a.abs().total_cmp(&b.abs())).unwrap_or(f64::NAN)
    }
}

/// Eigenvalue of smallest modulus of a square matrix.
pub fn smallest_eigenvalue(m: &DenseMatrix) -> Result<Complex64> {
    let eigs = m.eigenvalues()?;
    eigs.into_iter()
        .min_by(|a, b| a.norm().total_cmp(&b.norm()))
        .ok_or_else(|| Error::InvalidParameter("empty matrix".into()))
}

fn wrap(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y >= PI { -PI } else { y }
}

/// The error-minimising preimage of `θ` among `ξ = (θ + 2πα)/h` with
/// `ξ ∈ [−pπ/h, pπ/h]²`. Ties keep the lexicographically smallest `α`.
pub fn identify_wave_vector(theta: [f64; 2], query: &DispersionQuery) -> PropagatingMode {
    let theta = [wrap(theta[0]), wrap(theta[1])];
    let p = query.scheme.dofs_per_cell() as i64;
    let (h, kappa) = (query.h(), query.kappa());
    let lim = p as f64 * PI * (1.0 + 1e-12);
    let range = -(p / 2 + 1)..=(p / 2 + 1);
    let mut best: Option<PropagatingMode> = None;
    for a0 in range.clone() {
        for a1 in range.clone() {
            let t = [theta[0] + 2.0 * PI * a0 as f64, theta[1] + 2.0 * PI * a1 as f64];
            if t[0].abs() > lim || t[1].abs() > lim {
                continue;
            }
            let error = (t[0].hypot(t[1]) / kappa - 1.0).abs();
            if best.map_or(true, |b| error < b.error) {
                best = Some(PropagatingMode { theta, xi: [t[0] / h, t[1] / h], alpha: [a0, a1], error });
            }
        }
    }
    best.expect("alpha = 0 is always admissible")
}

/// Bisection on the negative-eigenvalue count between `a` (count `na`) and a
/// point with a different count, finished by a bracketed secant on the
/// eigenvalue nearest zero.
fn locate_crossing(sym: &Symbol, at: impl Fn(f64) -> [f64; 2], mut a: f64, mut b: f64, na: usize) -> f64 {
    for _ in 0..200 {
        if (b - a).abs() < 1e-7 {
            break;
        }
        let m = 0.5 * (a + b);
        if sym.negative_count(at(m)) == na {
            a = m;
        } else {
            b = m;
        }
    }
    let (mut fa, mut fb) = (sym.nearest_eigenvalue(at(a)), sym.nearest_eigenvalue(at(b)));
    for _ in 0..100 {
        if fa == 0.0 {
            return a;
        }
        if fb == 0.0 || (b - a).abs() < 1e-15 {
            return b;
        }
        let m = if fa * fb < 0.0 { b - fb * (b - a) / (fb - fa) } else { 0.5 * (a + b) };
        let m = if (m - a) * (m - b) < 0.0 { m } else { 0.5 * (a + b) };
        let fm = sym.nearest_eigenvalue(at(m));
        if fm.abs() < 1e-13 {
            return m;
        }
        if sym.negative_count(at(m)) == na {
            (a, fa) = (m, fm);
        } else {
            (b, fb) = (m, fm);
        }
    }
    0.5 * (a + b)
}

/// First offset from the true circle probed on each ray.
pub const RAY_FIRST_OFFSET: f64 = 1e-4;
/// Ratio between consecutive ray offsets.
pub const RAY_GROWTH: f64 = 1.1;

/// Zero `‖ξ‖/k` on the ray at angle `t` nearest the true circle. Offsets
/// grow geometrically on both sides of `q = 1` and the negative-eigenvalue
/// count is compared between neighbouring points, so pairs of crossings near
/// folds are seen as long as they fall into different intervals.
pub fn ray_zero(sym: &Symbol, kappa: f64, t: f64) -> Option<f64> {
    let (c, s) = (t.cos(), t.sin());
    let at = |q: f64| [kappa * q * c, kappa * q * s];
    let n0 = sym.negative_count(at(1.0));
    let mut prev = [(1.0, n0), (1.0, n0)];
    let mut d = RAY_FIRST_OFFSET;
    while d <= MAX_OFFSET {
        let mut found = Vec::new();
        for (side, sign) in [(0, 1.0), (1, -1.0)] {
            let q = 1.0 + sign * d;
            if q <= 0.0 {
                continue;
            }
            let n = sym.negative_count(at(q));
            if n != prev[side].1 {
                found.push(locate_crossing(sym, at, prev[side].0, q, prev[side].1));
            }
            prev[side] = (q, n);
        }
        if let Some(q) = found.into_iter().min_by(|a, b| (a - 1.0).abs().total_cmp(&(b - 1.0).abs())) {
            return Some(q);
        }
        d *= RAY_GROWTH;
    }
    None
}

fn ray_angles(scheme: &Scheme, n: usize) -> Vec<f64> {
    if scheme.square_symmetric() {
        (0..n).map(|i| 0.5 * PI * i as f64 / (n - 1) as f64).collect()
    } else {
        let m = 2 * n;
        (0..m).map(|i| PI * i as f64 / m as f64).collect()
    }
}

/// Crossing points of the true circle with its translates by `2πα`, wrapped
/// into the torus and reduced modulo the lattice symmetries.
pub fn fold_crossings(kappa: f64, square_symmetric: bool) -> Vec<[f64; 2]> {
    let mut out: Vec<[f64; 2]> = Vec::new();
    let amax = (kappa / PI).ceil() as i64;
    for a0 in -amax..=amax {
        for a1 in -amax..=amax {
            let n2 = (a0 * a0 + a1 * a1) as f64;
            if n2 == 0.0 || PI * PI * n2 >= kappa * kappa {
                continue;
            }
            let n = n2.sqrt();
            let s = (kappa * kappa - PI * PI * n2).sqrt();
            for sign in [1.0, -1.0] {
                let x = -PI * a0 as f64 + sign * s * (-a1 as f64) / n;
                let y = -PI * a1 as f64 + sign * s * a0 as f64 / n;
                let mut p = [wrap(x), wrap(y)];
                if square_symmetric {
                    let (u, v) = (p[0].abs(), p[1].abs());
                    p = [u.max(v), u.min(v)];
                }
                let dup = out.iter().any(|q| {
                    let d0 = wrap(q[0] - p[0]);
                    let d1 = wrap(q[1] - p[1]);
                    d0.hypot(d1) < 1e-9
                });
                if !dup {
                    out.push(p);
                }
            }
        }
    }
    out
}

fn fold_modes(sym: &Symbol, query: &DispersionQuery, centre: [f64; 2]) -> Vec<PropagatingMode> {
    let n = (FOLD_RADIUS / FOLD_SPACING).round() as i64;
    let pt = |i: i64, j: i64| [centre[0] + FOLD_SPACING * i as f64, centre[1] + FOLD_SPACING * j as f64];
    let inside = |i: i64, j: i64| i * i + j * j <= n * n;
    let mut counts = std::collections::HashMap::new();
    for i in -n..=n {
        for j in -n..=n {
            if inside(i, j) {
                counts.insert((i, j), sym.negative_count(pt(i, j)));
            }
        }
    }
    let mut modes = Vec::new();
    for (&(i, j), &c) in &counts {
        for (di, dj) in [(1, 0), (0, 1)] {
            let Some(&c2) = counts.get(&(i + di, j + dj)) else { continue };
            if c2 == c {
                continue;
            }
            let (a, b) = (pt(i, j), pt(i + di, j + dj));
            let at = |s: f64| [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
            let s = locate_crossing(sym, at, 0.0, 1.0, c);
            modes.push(identify_wave_vector(at(s), query));
        }
    }
    modes.sort_by(|a, b| a.theta.partial_cmp(&b.theta).unwrap());
    modes
}

/// Both search phases with the default direction count.
pub fn find_zero_curve(query: &DispersionQuery) -> Result<ZeroCurve> {
    find_zero_curve_with(query, DIRECTIONS)
}

pub fn find_zero_curve_with(query: &DispersionQuery, directions: usize) -> Result<ZeroCurve> {
    if directions < 2 {
        return Err(Error::InvalidParameter("need at least two directions".into()));
    }
    let sym = Symbol::new(query)?;
    let kappa = query.kappa();
    let angles = ray_angles(&query.scheme, directions);
    let rays: Vec<(f64, Option<f64>)> = angles.par_iter().map(|&t| (t, ray_zero(&sym, kappa, t))).collect();
    let ray_mode = |t: f64, q: f64| identify_wave_vector([kappa * q * t.cos(), kappa * q * t.sin()], query);
    let mut modes: Vec<PropagatingMode> = rays.iter().filter_map(|&(t, q)| q.map(|q| ray_mode(t, q))).collect();

    // refine the largest local maxima along the rays
    let errs: Vec<f64> = rays.iter().map(|&(t, q)| q.map_or(-1.0, |q| ray_mode(t, q).error)).collect();
    let err = |t: f64| ray_zero(&sym, kappa, t).map_or(-1.0, |q| ray_mode(t, q).error);
    let n = rays.len();
    let mut peaks: Vec<usize> = (0..n)
        .filter(|&i| errs[i] >= 0.0 && errs[i] >= errs[i.saturating_sub(1)] && errs[i] >= errs[(i + 1).min(n - 1)])
        .collect();
    peaks.sort_by(|&a, &b| errs[b].total_cmp(&errs[a]));
    peaks.truncate(REFINED_PEAKS);
    for i in peaks {
        let (l, r) = (i.saturating_sub(1), (i + 1).min(n - 1));
        let (t, _) = golden_max(err, rays[l].0, rays[r].0, 1e-10);
        if let Some(q) = ray_zero(&sym, kappa, t) {
            modes.push(ray_mode(t, q));
        }
    }

    if kappa > PI {
        let centres = fold_crossings(kappa, query.scheme.square_symmetric());
        let extra: Vec<Vec<PropagatingMode>> = centres.par_iter().map(|&c| fold_modes(&sym, query, c)).collect();
        modes.extend(extra.into_iter().flatten());
    }
    Ok(ZeroCurve { query: *query, rays, modes })
}

pub fn max_dispersion_error(query: &DispersionQuery) -> Result<f64> {
    Ok(find_zero_curve(query)?.max_error())
}

#[derive(Clone, Debug, Serialize)]
pub struct DeltaReport {
    pub angles: Vec<f64>,
    /// `(ζ_c − ζ_f)/(kh)` per ray.
    pub delta: Vec<f64>,
    /// `2π·max|δ|/D`.
    pub r: f64,
}

/// Coarse-minus-fine radial zero per ray and the resulting mismatch factor.
/// Both queries must describe the same wavenumber.
pub fn delta_and_r(fine: &DispersionQuery, coarse: &DispersionQuery, d: f64) -> Result<DeltaReport> {
    if !(d > 0.0) {
        return Err(Error::InvalidParameter("D must be positive".into()));
    }
    if (fine.k - coarse.k).abs() > 1e-12 * fine.k {
        return Err(Error::InvalidParameter("fine and coarse k differ".into()));
    }
    let (sf, sc) = (Symbol::new(fine)?, Symbol::new(coarse)?);
    let (kf, kc) = (fine.kappa(), coarse.kappa());
    let mut angles = ray_angles(&fine.scheme, DIRECTIONS);
    if !coarse.scheme.square_symmetric() && fine.scheme.square_symmetric() {
        angles = ray_angles(&coarse.scheme, DIRECTIONS);
    }
    let delta = angles
        .par_iter()
        .map(|&t| {
            let qf = ray_zero(&sf, kf, t);
            let qc = ray_zero(&sc, kc, t);
            match (qf, qc) {
                (Some(a), Some(b)) => Ok(b - a),
                _ => Err(Error::NoPropagatingZero(format!("direction {t}"))),
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    let worst = delta.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    Ok(DeltaReport { angles, delta, r: 2.0 * PI * worst / d })
}
