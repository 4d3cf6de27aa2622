//! Assembly of the Helmholtz bilinear form and its parts.

use num_complex::Complex64;

use super::basis::{CellSide, ReferenceBasis};
use super::quadrature::{element_rule, gauss_legendre};
use super::FeSpace;
use crate::error::{Error, Result};
use crate::linalg::SparseComplexMatrix;
use crate::mesh::{BoundaryEdge, BoundaryTag, CoefficientField, Side};

/// Reference stiffness, mass and side-mass matrices of one element on the
/// unit cell, stored row-major. On a cell of size `h` the stiffness is
/// unchanged, the mass scales with `h²` and the side mass with `h`.
#[derive(Clone, Debug)]
pub struct ElementMatrices {
    pub n: usize,
    pub stiffness: Vec<f64>,
    pub mass: Vec<f64>,
    pub sides: Vec<(CellSide, Vec<f64>)>,
}

impl ElementMatrices {
    pub fn new(basis: &ReferenceBasis) -> Self {
        let n = basis.len();
        let rule = element_rule(basis.order, basis.shape);
        let mut stiffness = vec![0.0; n * n];
        let mut mass = vec![0.0; n * n];
        for (x, w) in rule.points.iter().zip(&rule.weights) {
            let vg: Vec<(f64, [f64; 2])> = basis.functions.iter().map(|f| f.value_grad(*x)).collect();
            for i in 0..n {
                for j in 0..n {
                    stiffness[i * n + j] += w * (vg[i].1[0] * vg[j].1[0] + vg[i].1[1] * vg[j].1[1]);
                    mass[i * n + j] += w * vg[i].0 * vg[j].0;
                }
            }
        }
        let (s, ws) = gauss_legendre(basis.order as usize + 1);
        let sides = basis
            .shape
            .sides()
            .iter()
            .map(|&side| {
                let mut b = vec![0.0; n * n];
                for (s, w) in s.iter().zip(&ws) {
                    let v: Vec<f64> = basis.functions.iter().map(|f| f.value(side.point(*s))).collect();
                    for i in 0..n {
                        for j in 0..n {
                            b[i * n + j] += w * v[i] * v[j];
                        }
                    }
                }
                (side, b)
            })
            .collect();
        Self { n, stiffness, mass, sides }
    }

    pub fn side(&self, side: CellSide) -> &[f64] {
        &self.sides.iter().find(|(s, _)| *s == side).expect("side not on element").1
    }
}

fn cell_side(s: Side) -> CellSide {
    match s {
        Side::Bottom => CellSide::Bottom,
        Side::Right => CellSide::Right,
        Side::Top => CellSide::Top,
        Side::Left => CellSide::Left,
    }
}

const TINY: f64 = 1e-15;

/// `Σ_c s(c)·∫∇φ·∇φ + m(c)·∫φφ + Σ_edges b(e)·∫φφ ds`, optionally with
/// Dirichlet rows and columns replaced by the identity.
pub fn assemble_form(
    space: &FeSpace,
    stiffness: impl Fn(usize) -> Complex64,
    mass: impl Fn(usize) -> Complex64,
    boundary: impl Fn(&BoundaryEdge) -> Complex64,
    eliminate_dirichlet: bool,
) -> SparseComplexMatrix {
    let h = space.mesh().h();
    let n = space.n_dofs();
    let mut trip: Vec<(usize, usize, Complex64)> = Vec::new();
    let push = |trip: &mut Vec<_>, dofs: &[usize], m: &[f64], w: Complex64| {
        let nl = dofs.len();
        for i in 0..nl {
            for j in 0..nl {
                let v = m[i * nl + j];
                if v.abs() > TINY {
                    trip.push((dofs[i], dofs[j], w * v));
                }
            }
        }
    };
    for e in 0..space.n_elements() {
        let c = space.element_cell(e);
        let em = space.element_matrices(space.element_part(e));
        let dofs = space.element_dofs(e);
        let s = stiffness(c);
        if s != Complex64::new(0.0, 0.0) {
            push(&mut trip, dofs, &em.stiffness, s);
        }
        let m = mass(c);
        if m != Complex64::new(0.0, 0.0) {
            push(&mut trip, dofs, &em.mass, m * (h * h));
        }
    }
    for be in space.mesh().boundary_edges() {
        let b = boundary(be);
        if b == Complex64::new(0.0, 0.0) {
            continue;
        }
        let e = space.side_element(be.cell, be.side);
        let em = space.element_matrices(space.element_part(e));
        push(&mut trip, space.element_dofs(e), em.side(cell_side(be.side)), b * h);
    }
    if eliminate_dirichlet {
        dirichlet_triplets(&mut trip, space.dirichlet_mask());
    }
    SparseComplexMatrix::from_triplets(n, n, trip)
}

fn dirichlet_triplets(trip: &mut Vec<(usize, usize, Complex64)>, mask: &[bool]) {
    trip.retain(|&(r, c, _)| !mask[r] && !mask[c]);
    trip.extend((0..mask.len()).filter(|&i| mask[i]).map(|i| (i, i, Complex64::new(1.0, 0.0))));
}

/// Replaces rows and columns of masked dofs by the identity.
pub fn eliminate_dirichlet(a: &SparseComplexMatrix, mask: &[bool]) -> SparseComplexMatrix {
    let mut trip: Vec<_> = a.triplets().collect();
    dirichlet_triplets(&mut trip, mask);
    SparseComplexMatrix::from_triplets(a.nrows(), a.ncols(), trip)
}

fn check_coefficients(space: &FeSpace, coeffs: &CoefficientField) -> Result<()> {
    coeffs.validate()?;
    if coeffs.len() != space.mesh().n_cells() {
        return Err(Error::InvalidParameter(format!(
            "coefficient field has {} cells, mesh has {}",
            coeffs.len(),
            space.mesh().n_cells()
        )));
    }
    Ok(())
}

/// `∫∇u·∇v − ∫(k²(1+iα)+iε)uv − ∫_{Γ_abs} ik uv` with Dirichlet elimination.
pub fn assemble_helmholtz(space: &FeSpace, coeffs: &CoefficientField, alpha: f64) -> Result<SparseComplexMatrix> {
    check_coefficients(space, coeffs)?;
    space.mesh().require_tags()?;
    if !(alpha >= 0.0) {
        return Err(Error::InvalidParameter(format!("shift must be non-negative, got {alpha}")));
    }
    let one = Complex64::new(1.0, 0.0);
    Ok(assemble_form(
        space,
        |_| one,
        |c| -Complex64::new(coeffs.k[c] * coeffs.k[c], coeffs.k[c] * coeffs.k[c] * alpha + coeffs.eps[c]),
        |be| match be.tag {
            Some(BoundaryTag::Absorbing) => Complex64::new(0.0, -coeffs.k[be.cell]),
            _ => Complex64::new(0.0, 0.0),
        },
        true,
    ))
}

/// Pure stiffness matrix without boundary terms or elimination.
pub fn assemble_stiffness(space: &FeSpace) -> SparseComplexMatrix {
    assemble_form(space, |_| Complex64::new(1.0, 0.0), |_| Complex64::new(0.0, 0.0), |_| Complex64::new(0.0, 0.0), false)
}

/// `Σ_c w(c)·∫_c φ_i φ_j` without elimination.
pub fn assemble_mass_weighted(space: &FeSpace, weight: &[Complex64]) -> SparseComplexMatrix {
    assert_eq!(weight.len(), space.mesh().n_cells());
    assemble_form(space, |_| Complex64::new(0.0, 0.0), |c| weight[c], |_| Complex64::new(0.0, 0.0), false)
}

/// `∫_{Γ_abs} ik φ_i φ_j ds` with `k` of the adjacent cell, without elimination.
pub fn boundary_mass(space: &FeSpace, coeffs: &CoefficientField) -> SparseComplexMatrix {
    assemble_form(
        space,
        |_| Complex64::new(0.0, 0.0),
        |_| Complex64::new(0.0, 0.0),
        |be| match be.tag {
            Some(BoundaryTag::Absorbing) => Complex64::new(0.0, coeffs.k[be.cell]),
            _ => Complex64::new(0.0, 0.0),
        },
        false,
    )
}
