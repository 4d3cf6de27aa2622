//! Fourier analysis of a 1-D finite-difference two-grid method with an
//! exactly inverted complex-shifted smoother.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qsfem::golden_max;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToyConfig {
    /// Half-width of the central difference stencil: 1 or 2.
    pub m: u32,
    pub h: f64,
    pub k: f64,
    /// Damping per wavelength; `ε = k²D/π`.
    pub d: f64,
    pub alpha_s: f64,
    pub nu1: u32,
    pub nu2: u32,
}

impl ToyConfig {
    pub fn from_ppw(m: u32, ppw: f64, k: f64, d: f64, alpha_s: f64) -> Self {
        Self { m, h: 2.0 * PI / (k * ppw), k, d, alpha_s, nu1: 1, nu2: 1 }
    }

    pub fn eps(&self) -> f64 {
        self.k * self.k * self.d / PI
    }

    pub fn ppw(&self) -> f64 {
        2.0 * PI / (self.k * self.h)
    }
}

fn stencil_part(theta: f64, m: u32) -> f64 {
    match m {
        1 => 2.0 - 2.0 * theta.cos(),
        2 => 2.5 - 8.0 / 3.0 * theta.cos() + (2.0 * theta).cos() / 6.0,
        _ => panic!("stencil half-width must be 1 or 2"),
    }
}

/// `h⁻²·s_M(θ) − (k² + iε)` for the second- and fourth-order central stencils.
pub fn fd_symbol(theta: f64, m: u32, h: f64, k: f64, eps: f64) -> Complex64 {
    Complex64::new(stencil_part(theta, m) / (h * h) - k * k, -eps)
}

/// Restriction `[½ + ½cos θ, ½ − ½cos θ]`; prolongation is its transpose.
pub fn transfer_symbols(theta: f64) -> ([f64; 2], [f64; 2]) {
    let r = [0.5 + 0.5 * theta.cos(), 0.5 - 0.5 * theta.cos()];
    (r, r)
}

pub type Mat2 = [[Complex64; 2]; 2];

fn mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut c = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

/// Spectral radius of a 2×2 matrix from the characteristic polynomial.
pub fn spectral_radius2(a: &Mat2) -> f64 {
    let tr = a[0][0] + a[1][1];
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let disc = (tr * tr - det * 4.0).sqrt();
    ((tr + disc) * 0.5).norm().max(((tr - disc) * 0.5).norm())
}

/// Coarse-grid correction symbol `K̂(θ)`.
pub fn coarse_symbol(theta: f64, cfg: &ToyConfig) -> Result<Mat2> {
    let eps = cfg.eps();
    let ac = fd_symbol(2.0 * theta, cfg.m, 2.0 * cfg.h, cfg.k, eps);
    if ac.norm() == 0.0 {
        return Err(Error::InvalidParameter(format!("coarse symbol vanishes at theta = {theta}")));
    }
    let a = [fd_symbol(theta, cfg.m, cfg.h, cfg.k, eps), fd_symbol(theta + PI, cfg.m, cfg.h, cfg.k, eps)];
    let (r, p) = transfer_symbols(theta);
    let mut kh = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let id = if i == j { 1.0 } else { 0.0 };
            kh[i][j] = Complex64::new(id, 0.0) - p[i] * r[j] * a[j] / ac;
        }
    }
    Ok(kh)
}

/// Smoother symbol `diag(S̃(θ), S̃(θ+π))` with `S̃ = 1 − Ã/Ã_s`.
pub fn smoother_symbol(theta: f64, cfg: &ToyConfig) -> Mat2 {
    let eps = cfg.eps();
    let s = |t: f64| {
        let a = fd_symbol(t, cfg.m, cfg.h, cfg.k, eps);
        let a_s = a - Complex64::new(0.0, cfg.alpha_s * cfg.k * cfg.k);
        Complex64::new(1.0, 0.0) - a / a_s
    };
    let z = Complex64::new(0.0, 0.0);
    [[s(theta), z], [z, s(theta + PI)]]
}

/// `M̂(θ) = Ŝ^ν2 K̂(θ) Ŝ^ν1`.
pub fn two_grid_symbol(theta: f64, cfg: &ToyConfig) -> Result<Mat2> {
    let s = smoother_symbol(theta, cfg);
    let mut m = coarse_symbol(theta, cfg)?;
    for _ in 0..cfg.nu1 {
        m = mul(&m, &s);
    }
    for _ in 0..cfg.nu2 {
        m = mul(&s, &m);
    }
    Ok(m)
}

/// `sup_{θ ∈ [−π/2, π/2)} ρ(M̂(θ))` over a uniform grid, refined by a
/// golden-section search around the grid maximiser.
pub fn asymptotic_rate(cfg: &ToyConfig, n_theta: usize) -> Result<f64> {
    assert!(n_theta >= 64, "theta grid too coarse");
    let rho = |t: f64| two_grid_symbol(t, cfg).map(|m| spectral_radius2(&m)).unwrap_or(f64::INFINITY);
    let step = PI / n_theta as f64;
    let (mut tbest, mut best) = (0.0, -1.0);
    for i in 0..n_theta {
        let t = -PI / 2.0 + i as f64 * step;
        let r = rho(t);
        if r > best {
            (tbest, best) = (t, r);
        }
    }
    let (_, refined) = golden_max(rho, tbest - step, tbest + step, 1e-12);
    Ok(best.max(refined))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DispersionZeros {
    pub zeta_f: f64,
    pub zeta_c: f64,
    pub delta: f64,
    pub r: f64,
}

fn first_zero(f: impl Fn(f64) -> f64) -> Option<f64> {
    let n = 4096;
    let mut a = 1e-12;
    let mut fa = f(a);
    for i in 1..=n {
        let b = PI * i as f64 / n as f64;
        let fb = f(b);
        if fa * fb <= 0.0 {
            let (mut lo, mut hi, mut flo) = (a, b, fa);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let fm = f(mid);
                if fm * flo <= 0.0 {
                    hi = mid;
                } else {
                    (lo, flo) = (mid, fm);
                }
            }
            return Some(0.5 * (lo + hi));
        }
        (a, fa) = (b, fb);
    }
    None
}

/// Undamped zeros of the fine and coarse symbols on the fine normalised
/// scale, their relative mismatch `δ = (ζ_c − ζ_f)/(kh)` and `R = 2π|δ|/D`.
pub fn dispersion_zeros(cfg: &ToyConfig) -> Result<DispersionZeros> {
    let kh = cfg.k * cfg.h;
    let zeta_f = first_zero(|t| fd_symbol(t, cfg.m, cfg.h, cfg.k, 0.0).re)
        .ok_or_else(|| Error::NoPropagatingZero("fine symbol has no zero in (0, pi)".into()))?;
    let zc_coarse = first_zero(|t| fd_symbol(t, cfg.m, 2.0 * cfg.h, cfg.k, 0.0).re)
        .ok_or_else(|| Error::NoPropagatingZero("coarse symbol has no zero in (0, pi)".into()))?;
    let zeta_c = zc_coarse / 2.0;
    let delta = (zeta_c - zeta_f) / kh;
    Ok(DispersionZeros { zeta_f, zeta_c, delta, r: 2.0 * PI * delta.abs() / cfg.d })
}

/// `max_θ |1 − c(θ − ζ_f − iε̃)/(θ − ζ_c − iε̃)|` in closed form, with
/// `R = |ζ_f − ζ_c|/ε̃`.
pub fn lemma_max(c: f64, r: f64) -> f64 {
    ((1.0 - c).powi(2) + (c * r / 2.0).abs().powi(2)).sqrt() + c * r / 2.0
}

/// The function maximised in [`lemma_max`].
pub fn lemma_f(theta: f64, c: f64, zeta_f: f64, zeta_c: f64, eps: f64) -> Complex64 {
    let i_eps = Complex64::new(0.0, eps);
    Complex64::new(1.0, 0.0) - c * (theta - zeta_f - i_eps) / (theta - zeta_c - i_eps)
}

/// Prolongation/restriction factor `¼(1 + cos kh)²` of the `(1,1)` entry.
pub fn transfer_factor(kh: f64) -> f64 {
    0.25 * (1.0 + kh.cos()).powi(2)
}
