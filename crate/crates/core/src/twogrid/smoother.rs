//! Complex-shifted overlapping domain-decomposition smoother.

use num_complex::Complex64;
use rayon::prelude::*;

use super::partition::{partition, Partition};
use crate::error::{Error, Result};
use crate::fespace::{assemble_helmholtz, FeSpace};
use crate::linalg::{SparseComplexMatrix, SparseLu};
use crate::mesh::{BoundaryTag, CoefficientField, StructuredMesh};

/// Factorised shifted operator on one overlapping subdomain.
#[derive(Debug)]
pub struct SubdomainOperator {
    /// Global dof of each local dof.
    pub dofs: Vec<usize>,
    /// Local dofs lying in the closure of the non-overlapping block.
    pub core_dofs: Vec<usize>,
    lu: SparseLu,
}

#[derive(Debug)]
pub struct DomainDecomposition {
    pub partition: Partition,
    pub subdomains: Vec<SubdomainOperator>,
    /// `1 / L_j`.
    pub inv_multiplicity: Vec<f64>,
    dirichlet: Vec<bool>,
}

/// Mesh of the cells `cells` with inherited tags on the original boundary
/// and absorbing conditions on the cut.
pub fn subdomain_mesh(mesh: &StructuredMesh, cells: &[usize]) -> Result<StructuredMesh> {
    let lattice = cells.iter().map(|&c| mesh.cells()[c]).collect();
    let sub = StructuredMesh::from_cells(mesh.h(), lattice, mesh.kind())?;
    Ok(sub.tag_edges(|e| Some(mesh.boundary_tag(e.key).unwrap_or(BoundaryTag::Absorbing))))
}

impl DomainDecomposition {
    pub fn new(space: &FeSpace, coeffs: &CoefficientField, alpha_s: f64, l_dd: usize) -> Result<Self> {
        let mesh = space.mesh();
        let part = partition(mesh, l_dd);
        let mut count = vec![0u32; space.n_dofs()];
        let built: Vec<Result<SubdomainOperator>> = part
            .subdomains
            .par_iter()
            .map(|sd| {
                let sub = subdomain_mesh(mesh, &sd.cells)?;
                let sub_space = FeSpace::new(&sub, space.order())?;
                let sub_coeffs = coeffs.restrict(mesh, &sub);
                let a = assemble_helmholtz(&sub_space, &sub_coeffs, alpha_s)?;
                let lu = SparseLu::new(&a)?;
                let mut dofs = vec![0; sub_space.n_dofs()];
                for (e, r) in sub_space.entities() {
                    let g = space.entity_dofs(e).ok_or_else(|| Error::Mesh("subdomain entity missing globally".into()))?;
                    for (l, d) in r.enumerate() {
                        dofs[d] = g.start + l;
                    }
                }
                let mut is_core = vec![false; sub_space.n_dofs()];
                for &c in &sd.core {
                    let local = sub.cell_index(mesh.cells()[c]).expect("core cell inside subdomain");
                    for part in 0..sub_space.elements_per_cell() {
                        for &d in sub_space.element_dofs(local * sub_space.elements_per_cell() + part) {
                            is_core[d] = true;
                        }
                    }
                }
                let core_dofs = (0..sub_space.n_dofs()).filter(|&d| is_core[d]).collect();
                Ok(SubdomainOperator { dofs, core_dofs, lu })
            })
            .collect();
        let subdomains = built.into_iter().collect::<Result<Vec<_>>>()?;
        for s in &subdomains {
            for &l in &s.core_dofs {
                count[s.dofs[l]] += 1;
            }
        }
        if count.iter().any(|&c| c == 0) {
            return Err(Error::Mesh("a dof is not covered by any block".into()));
        }
        let inv_multiplicity = count.iter().map(|&c| 1.0 / c as f64).collect();
        Ok(Self { partition: part, subdomains, inv_multiplicity, dirichlet: space.dirichlet_mask().to_vec() })
    }

    pub fn len(&self) -> usize {
        self.subdomains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subdomains.is_empty()
    }

    /// One additive step on `A_s u = f`: every subdomain solves
    /// `A_s^(i) w_i = R_i f − (R_i A_s − A_s^(i) R_i) u` from the same `u`,
    /// and the results are averaged over block membership.
    pub fn dd_step(&self, u: &[Complex64], f: &[Complex64], a_s: &SparseComplexMatrix) -> Vec<Complex64> {
        let mut r = f.to_vec();
        let au = a_s.apply(u);
        r.iter_mut().zip(&au).for_each(|(r, a)| *r -= a);
        let corrections: Vec<Vec<Complex64>> = self
            .subdomains
            .par_iter()
            .map(|s| {
                let mut g: Vec<Complex64> = s.dofs.iter().map(|&d| r[d]).collect();
                s.lu.solve_in_place(&mut g);
                s.core_dofs.iter().map(|&l| g[l]).collect()
            })
            .collect();
        let mut out = u.to_vec();
        for (s, w) in self.subdomains.iter().zip(&corrections) {
            for (&l, wv) in s.core_dofs.iter().zip(w) {
                let d = s.dofs[l];
                out[d] += wv * self.inv_multiplicity[d];
            }
        }
        // identity rows: the exact update
        for (d, &isd) in self.dirichlet.iter().enumerate() {
            if isd {
                out[d] = u[d] + r[d];
            }
        }
        out
    }

    /// `r = f − A u; v = 0; n_dd × (v ← dd_step(v, r)); u + v`.
    pub fn smooth(&self, u: &[Complex64], f: &[Complex64], a: &SparseComplexMatrix, a_s: &SparseComplexMatrix, n_dd: usize) -> Vec<Complex64> {
        let mut r = f.to_vec();
        let au = a.apply(u);
        r.iter_mut().zip(&au).for_each(|(r, a)| *r -= a);
        let mut v = vec![Complex64::new(0.0, 0.0); u.len()];
        for _ in 0..n_dd {
            v = self.dd_step(&v, &r, a_s);
        }
        u.iter().zip(&v).map(|(a, b)| a + b).collect()
    }
}
