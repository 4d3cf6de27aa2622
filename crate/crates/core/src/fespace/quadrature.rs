//! Quadrature rules on the reference cell.

use std::f64::consts::PI;

use super::basis::{legendre, ElementShape};

/// Gauss–Legendre points and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut t = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let [p, d, _] = legendre(n as u32, t);
            let dt = p / d;
            t -= dt;
            if dt.abs() < 1e-16 {
                break;
            }
        }
        let d = legendre(n as u32, t)[1];
        x[n - 1 - i] = 0.5 * (1.0 + t);
        w[n - 1 - i] = 1.0 / ((1.0 - t * t) * d * d);
    }
    (x, w)
}

#[derive(Clone, Debug)]
pub struct Rule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

/// A rule exact for polynomials of degree `2p` on the given element: tensor
/// Gauss on the square, collapsed (Duffy) Gauss on the triangles.
pub fn element_rule(p: u32, shape: ElementShape) -> Rule {
    let n = p as usize + 1;
    let (x, w) = gauss_legendre(n);
    let mut points = Vec::new();
    let mut weights = Vec::new();
    match shape {
        ElementShape::Square => {
            for j in 0..n {
                for i in 0..n {
                    points.push([x[i], x[j]]);
                    weights.push(w[i] * w[j]);
                }
            }
        }
        _ => {
            let (u, wu) = gauss_legendre(n + 1);
            for a in 0..u.len() {
                for b in 0..n {
                    let (s, t) = (u[a], u[a] * x[b]);
                    points.push(if shape == ElementShape::LowerTriangle { [s, t] } else { [t, s] });
                    weights.push(wu[a] * w[b] * u[a]);
                }
            }
        }
    }
    Rule { points, weights }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_integrates_monomials() {
        for n in 1..10 {
            let (x, w) = gauss_legendre(n);
            for d in 0..2 * n {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(d as i32)).sum();
                assert!((q - 1.0 / (d + 1) as f64).abs() < 1e-14, "n={n} d={d}");
            }
        }
    }

    #[test]
    fn triangle_rule_degree_2p() {
        for p in 1..=8u32 {
            for shape in [ElementShape::LowerTriangle, ElementShape::UpperTriangle] {
                let r = element_rule(p, shape);
                for a in 0..=2 * p as i32 {
                    for b in 0..=2 * p as i32 - a {
                        let q: f64 = r.points.iter().zip(&r.weights).map(|(x, w)| w * x[0].powi(a) * x[1].powi(b)).sum();
                        // ∫ over {y ≤ x} of x^a y^b = 1 / ((b+1)(a+b+2))
                        let exact = if shape == ElementShape::LowerTriangle {
                            1.0 / ((b + 1) as f64 * (a + b + 2) as f64)
                        } else {
                            1.0 / ((a + 1) as f64 * (a + b + 2) as f64)
                        };
                        assert!((q - exact).abs() < 1e-14, "p={p} a={a} b={b}");
                    }
                }
            }
        }
    }

    #[test]
    fn square_rule_degree() {
        let r = element_rule(4, ElementShape::Square);
        let q: f64 = r.points.iter().zip(&r.weights).map(|(x, w)| w * x[0].powi(9) * x[1].powi(8)).sum();
        assert!((q - 1.0 / 90.0).abs() < 1e-14);
    }
}
