//! Benchmark problems on the unit square.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fespace::{build_space, FeSpace};
use crate::mesh::{absorbing_layer, layer_cells_for_dofs, BoundaryTag, CoefficientField, ElementKind, Side, StructuredMesh};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundarySet {
    /// Robin conditions on every side.
    AllAbsorbing,
    /// Dirichlet on left and bottom, absorbing elsewhere.
    DirichletTwoSides,
    /// Neumann on left and bottom, absorbing elsewhere.
    NeumannTwoSides,
    /// Absorbing layers attached outside every side of the unit square, with
    /// Neumann conditions behind them.
    Layers,
}

impl BoundarySet {
    pub fn name(self) -> &'static str {
        match self {
            BoundarySet::AllAbsorbing => "all_absorbing",
            BoundarySet::DirichletTwoSides => "dirichlet_two_sides",
            BoundarySet::NeumannTwoSides => "neumann_two_sides",
            BoundarySet::Layers => "layers",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemSpec {
    pub wavelengths: f64,
    pub ppw: f64,
    pub order: u32,
    pub element: ElementKind,
    pub boundary: BoundarySet,
    /// Layer width in dofs for `BoundarySet::Layers`.
    pub layer_dofs: usize,
    pub rhs: Rhs,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rhs {
    /// Unit entry at the vertex dof nearest the centre.
    PointLoad,
    Zero,
}

impl Default for ProblemSpec {
    fn default() -> Self {
        Self {
            wavelengths: 20.0,
            ppw: 10.0,
            order: 4,
            element: ElementKind::Square,
            boundary: BoundarySet::AllAbsorbing,
            layer_dofs: 40,
            rhs: Rhs::PointLoad,
        }
    }
}

pub struct Problem {
    pub space: FeSpace,
    pub coeffs: CoefficientField,
    pub rhs: Vec<Complex64>,
    pub k: f64,
}

impl ProblemSpec {
    pub fn k(&self) -> f64 {
        2.0 * PI * self.wavelengths
    }

    /// Cells per side: `wavelengths · ppw / p`, rounded.
    pub fn cells_per_side(&self) -> usize {
        (self.wavelengths * self.ppw / self.order as f64).round().max(1.0) as usize
    }

    pub fn build(&self) -> Result<Problem> {
        if !(self.wavelengths > 0.0 && self.ppw > 0.0) {
            return Err(Error::InvalidParameter("wavelengths and ppw must be positive".into()));
        }
        let n = self.cells_per_side();
        let pad = match self.boundary {
            BoundarySet::Layers => layer_cells_for_dofs(self.layer_dofs, self.order),
            _ => 0,
        };
        let mesh = if pad == 0 {
            StructuredMesh::unit_square(n, self.element)?
        } else {
            let (lo, hi) = (-(pad as i64), (n + pad) as i64);
            let cells = (lo..hi).flat_map(|j| (lo..hi).map(move |i| [i, j])).collect();
            StructuredMesh::from_cells(1.0 / n as f64, cells, self.element)?
        };
        let k = self.k();
        let tag = |s: Side| match (self.boundary, s) {
            (BoundarySet::AllAbsorbing, _) => BoundaryTag::Absorbing,
            (BoundarySet::DirichletTwoSides, Side::Left | Side::Bottom) => BoundaryTag::Dirichlet,
            (BoundarySet::NeumannTwoSides, Side::Left | Side::Bottom) => BoundaryTag::Neumann,
            (BoundarySet::Layers, _) => BoundaryTag::Neumann,
            _ => BoundaryTag::Absorbing,
        };
        let sides: BTreeMap<Side, BoundaryTag> = Side::ALL.iter().map(|&s| (s, tag(s))).collect();
        let mesh = mesh.tag_boundary(&sides)?;
        let coeffs = match self.boundary {
            BoundarySet::Layers => absorbing_layer(&mesh, k, &Side::ALL, pad as f64 * mesh.h())?,
            _ => CoefficientField::constant(&mesh, k),
        };
        let space = build_space(&mesh, self.order)?;
        let mut rhs = vec![Complex64::new(0.0, 0.0); space.n_dofs()];
        if self.rhs == Rhs::PointLoad {
            let c = space.center_dof();
            if !space.is_dirichlet(c) {
                rhs[c] = Complex64::new(1.0, 0.0);
            }
        }
        Ok(Problem { space, coeffs, rhs, k })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn benchmark_sizes() {
        let s = ProblemSpec::default();
        assert_eq!(s.cells_per_side(), 50);
        let s6 = ProblemSpec { order: 6, ppw: 8.0, ..Default::default() };
        assert_eq!(s6.cells_per_side(), 27);
    }

    #[test]
    fn boundary_sets() {
        let p = ProblemSpec { wavelengths: 2.0, boundary: BoundarySet::DirichletTwoSides, ..Default::default() }.build().unwrap();
        assert!(p.space.dirichlet_mask().iter().any(|&d| d));
        assert_eq!(p.rhs.iter().filter(|v| v.re == 1.0).count(), 1);
        let l = ProblemSpec { wavelengths: 4.0, boundary: BoundarySet::Layers, layer_dofs: 8, ..Default::default() }.build().unwrap();
        // 10 cells of the unit square plus 2 layer cells on each side
        assert_eq!(l.space.mesh().n_cells(), 14 * 14);
        let m = l.space.mesh();
        for (c, &e) in l.coeffs.eps.iter().enumerate() {
            let [x, y] = m.cell_midpoint(c);
            let inside = (0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y);
            assert_eq!(inside, e == 0.0, "{x} {y}");
        }
        assert_eq!(m.point(m.vertices()[0]), [-0.2, -0.2]);
    }
}
