//! Dispersion-minimising 9-point stencil and its quasi-finite-element
//! assembly on square meshes.

use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fespace::{assemble_form, eliminate_dirichlet, FeSpace};
use crate::linalg::SparseComplexMatrix;
use crate::mesh::{BoundaryTag, CoefficientField, ElementKind};

/// Stencil `[P2 P1 P2; P1 P0 P1; P2 P1 P2]` at `η = k·h` with scaling `N(η)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QsfemStencil {
    pub eta: f64,
    pub p0: f64,
    pub p1: f64,
    pub p2: f64,
    pub n: f64,
}

pub fn stencil_coefficients(eta: f64) -> Result<(f64, f64, f64)> {
    if !(eta > 0.0 && eta < PI) {
        return Err(Error::DegenerateStencil { eta, reason: "eta must lie in (0, pi)" });
    }
    let c1 = (eta * (PI / 16.0).cos()).cos();
    let s1 = (eta * (PI / 16.0).sin()).cos();
    let c2 = (eta * (3.0 * PI / 16.0).cos()).cos();
    let s2 = (eta * (3.0 * PI / 16.0).sin()).cos();
    let d = c2 * s2 * (c1 + s1) - c1 * s1 * (c2 + s2);
    if d.abs() < 1e-14 {
        return Err(Error::DegenerateStencil { eta, reason: "vanishing denominator" });
    }
    Ok((4.0, 2.0 * (c1 * s1 - c2 * s2) / d, (c2 + s2 - c1 - s1) / d))
}

impl QsfemStencil {
    pub fn new(eta: f64) -> Result<Self> {
        let (p0, p1, p2) = stencil_coefficients(eta)?;
        let s0 = p0 + 4.0 * p1 + 4.0 * p2;
        if s0 == 0.0 {
            return Err(Error::DegenerateStencil { eta, reason: "symbol vanishes at zero" });
        }
        Ok(Self { eta, p0, p1, p2, n: -eta * eta / s0 })
    }

    /// Unscaled symbol at normalised wave vector `θ = h·ξ`, written in
    /// `sᵢ = sin²(θᵢ/2)` to avoid cancellation near the zero set:
    /// `σ(0) − (4P1 + 8P2)(s₁ + s₂) + 16P2·s₁s₂`.
    pub fn symbol(&self, [t1, t2]: [f64; 2]) -> f64 {
        let (a, b) = ((0.5 * t1).sin().powi(2), (0.5 * t2).sin().powi(2));
        let s0 = self.p0 + 4.0 * self.p1 + 4.0 * self.p2;
        s0 - (4.0 * self.p1 + 8.0 * self.p2) * (a + b) + 16.0 * self.p2 * a * b
    }

    /// Per-cell weights `(q0, q1, q2)` for the centre, edge-neighbour and
    /// diagonal couplings.
    pub fn weights(&self) -> (f64, f64, f64) {
        (self.n * self.p0 / 4.0, self.n * self.p1 / 2.0, self.n * self.p2)
    }

    /// Smallest `ρ ∈ (0, π)` with `σ_P(ρ cos t, ρ sin t) = 0`.
    pub fn radial_zero(&self, t: f64) -> Option<f64> {
        let (c, s) = (t.cos(), t.sin());
        let f = |r: f64| self.symbol([r * c, r * s]);
        let samples = 256;
        let mut a = 0.0;
        let mut fa = f(a);
        for i in 1..=samples {
            let b = PI * i as f64 / samples as f64;
            let fb = f(b);
            if fa == 0.0 {
                return (a > 0.0).then_some(a);
            }
            if fa * fb <= 0.0 {
                return Some(bisect(f, a, b, fa));
            }
            (a, fa) = (b, fb);
        }
        None
    }
}

fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if fa * fm < 0.0 {
            b = m;
        } else {
            (a, fa) = (m, fm);
        }
    }
    0.5 * (a + b)
}

/// `h_c⁻²·N(η)·σ_P(h_c ξ)` with `η = k·h_c`.
pub fn scaled_symbol(xi: [f64; 2], k: f64, hc: f64) -> Result<Complex64> {
    let s = QsfemStencil::new(k * hc)?;
    Ok(Complex64::new(s.n * s.symbol([hc * xi[0], hc * xi[1]]) / (hc * hc), 0.0))
}

/// Golden-section maximisation of `f` on `[a, b]`.
pub fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > tol {
        if f1 < f2 {
            a = x1;
            (x1, f1) = (x2, f2);
            x2 = a + g * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            (x2, f2) = (x1, f1);
            x1 = b - g * (b - a);
            f1 = f(x1);
        }
    }
    if f1 > f2 { (x1, f1) } else { (x2, f2) }
}

/// Directions sampled for the zero-set distance.
pub const DIRECTION_SAMPLES: usize = 720;

/// Largest radial deviation `|ρ(t)/h_c − k|` of the symbol's zero set from
/// the circle `‖ξ‖ = k`, maximised over directions `t`.
pub fn zero_set_distance(k: f64, hc: f64) -> Result<f64> {
    let s = QsfemStencil::new(k * hc)?;
    let dev = |t: f64| -> Result<f64> {
        s.radial_zero(t)
            .map(|r| (r / hc - k).abs())
            .ok_or_else(|| Error::NoPropagatingZero(format!("direction {t} at eta {}", k * hc)))
    };
    let step = 2.0 * PI / DIRECTION_SAMPLES as f64;
    let devs = (0..DIRECTION_SAMPLES).map(|i| dev(-PI + i as f64 * step)).collect::<Result<Vec<f64>>>()?;
    let n = devs.len();
    let mut best = devs.iter().cloned().fold(0.0, f64::max);
    // every local maximum on the periodic grid is refined; near-equal peaks
    // are common because the deviation vanishes in several directions
    for i in 0..n {
        if devs[i] >= devs[(i + n - 1) % n] && devs[i] >= devs[(i + 1) % n] {
            let t = -PI + i as f64 * step;
            let (_, v) = golden_max(|t| dev(t).unwrap_or(f64::INFINITY), t - step, t + step, 1e-10);
            best = best.max(v);
        }
    }
    Ok(best)
}

/// QSFEM coarse operator on a bilinear space over a square mesh: per-cell
/// stencil weights at `η = h_c·k(c)`, the `iε` term as a bilinear mass and
/// the absorbing boundary term, followed by Dirichlet elimination.
pub fn assemble_qsfem(space: &FeSpace, coeffs: &CoefficientField) -> Result<SparseComplexMatrix> {
    let mesh = space.mesh();
    if mesh.kind() != ElementKind::Square || space.order() != 1 {
        return Err(Error::InvalidParameter("QSFEM needs a bilinear space on a square mesh".into()));
    }
    coeffs.validate()?;
    if coeffs.len() != mesh.n_cells() {
        return Err(Error::InvalidParameter("coefficient field does not match the coarse mesh".into()));
    }
    mesh.require_tags()?;
    let hc = mesh.h();
    let n = space.n_dofs();
    let mut cache: HashMap<u64, (f64, f64, f64)> = HashMap::new();
    let mut trip = Vec::with_capacity(16 * mesh.n_cells());
    for c in 0..mesh.n_cells() {
        let k = coeffs.k[c];
        let (q0, q1, q2) = match cache.get(&k.to_bits()) {
            Some(&w) => w,
            None => {
                let w = QsfemStencil::new(k * hc)?.weights();
                cache.insert(k.to_bits(), w);
                w
            }
        };
        // local vertex order (0,0), (1,0), (1,1), (0,1)
        let dofs = space.element_dofs(c);
        for a in 0..4 {
            for b in 0..4 {
                let q = match (a + 4 - b) % 4 {
                    0 => q0,
                    2 => q2,
                    _ => q1,
                };
                trip.push((dofs[a], dofs[b], Complex64::new(q, 0.0)));
            }
        }
    }
    let rest = assemble_form(
        space,
        |_| Complex64::new(0.0, 0.0),
        |c| Complex64::new(0.0, -coeffs.eps[c]),
        |be| match be.tag {
            Some(BoundaryTag::Absorbing) => Complex64::new(0.0, -coeffs.k[be.cell]),
            _ => Complex64::new(0.0, 0.0),
        },
        false,
    );
    trip.extend(rest.triplets());
    let a = SparseComplexMatrix::from_triplets(n, n, trip);
    Ok(eliminate_dirichlet(&a, space.dirichlet_mask()))
}
