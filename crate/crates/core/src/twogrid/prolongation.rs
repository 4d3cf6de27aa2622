//! Coarse spaces and the transfer between coarse and fine dofs.

use crate::error::{Error, Result};
use crate::fespace::{local_interpolation, FeSpace};
use crate::linalg::SparseRealMatrix;
use crate::mesh::{ElementKind, StructuredMesh};

/// Square mesh of spacing `2h/p` covering the same cells, with boundary tags
/// inherited from the fine mesh.
pub fn coarse_mesh_for(space: &FeSpace) -> Result<StructuredMesh> {
    let p = space.order();
    if p % 2 != 0 {
        return Err(Error::UnsupportedOrder(p));
    }
    space.mesh().refined((p / 2) as usize, ElementKind::Square)
}

/// Fine coefficients of the degree-`p/2` piecewise polynomial interpolating
/// the coarse nodal values in each fine cell. Vertices come first, then the
/// edge coefficients fitted at the coarse nodes inside each edge, then the
/// interior coefficients fitted at the remaining nodes. Rows of fine
/// Dirichlet dofs and columns of coarse Dirichlet dofs are zero.
pub fn build_prolongation(fine: &FeSpace, coarse: &FeSpace) -> Result<SparseRealMatrix> {
    let p = fine.order();
    if p % 2 != 0 {
        return Err(Error::UnsupportedOrder(p));
    }
    let r = p / 2;
    if coarse.order() != 1 || coarse.mesh().kind() != ElementKind::Square {
        return Err(Error::InvalidParameter("coarse space must be bilinear on squares".into()));
    }
    if (coarse.mesh().h() * r as f64 - fine.mesh().h()).abs() > 1e-12 * fine.mesh().h() {
        return Err(Error::InvalidParameter("coarse spacing must be 2h/p".into()));
    }
    let interps = fine.bases().iter().map(|b| local_interpolation(b, r)).collect::<Result<Vec<_>>>()?;
    let ri = r as i64;
    let mut done = vec![false; fine.n_dofs()];
    let mut trip = Vec::new();
    for e in 0..fine.n_elements() {
        let li = &interps[fine.element_part(e)];
        let [ci, cj] = fine.mesh().cells()[fine.element_cell(e)];
        let dofs = fine.element_dofs(e);
        for (fi, w) in &li.rows {
            let d = dofs[*fi];
            if done[d] {
                continue;
            }
            done[d] = true;
            if fine.is_dirichlet(d) {
                continue;
            }
            for (n, &wt) in w.iter().enumerate() {
                if wt.abs() < 1e-14 {
                    continue;
                }
                let [a, b] = li.node(n);
                let cd = coarse
                    .vertex_dof([ri * ci + a as i64, ri * cj + b as i64])
                    .ok_or_else(|| Error::Mesh("coarse vertex missing".into()))?;
                if !coarse.is_dirichlet(cd) {
                    trip.push((d, cd, wt));
                }
            }
        }
    }
    Ok(SparseRealMatrix::from_triplets(fine.n_dofs(), coarse.n_dofs(), trip))
}

/// 0/1 inclusion of the order-`p/2` space into the order-`p` space on the
/// same mesh, with Dirichlet dofs removed.
pub fn galerkin_inclusion(fine: &FeSpace, coarse: &FeSpace) -> Result<SparseRealMatrix> {
    let mut trip = Vec::with_capacity(coarse.n_dofs());
    for (e, r) in coarse.entities() {
        let f = fine.entity_dofs(e).ok_or_else(|| Error::Mesh("coarse entity missing in the fine space".into()))?;
        if f.len() < r.len() {
            return Err(Error::InvalidParameter("coarse order exceeds fine order".into()));
        }
        for (l, cd) in r.enumerate() {
            if !coarse.is_dirichlet(cd) {
                trip.push((f.start + l, cd, 1.0));
            }
        }
    }
    Ok(SparseRealMatrix::from_triplets(fine.n_dofs(), coarse.n_dofs(), trip))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fespace::build_space;
    use crate::mesh::BoundaryTag;
    use num_complex::Complex64;

    fn spaces(n: usize, p: u32, kind: ElementKind) -> (FeSpace, FeSpace) {
        let m = StructuredMesh::unit_square(n, kind).unwrap().tag_all(BoundaryTag::Absorbing);
        let f = build_space(&m, p).unwrap();
        let c = FeSpace::linear(&coarse_mesh_for(&f).unwrap());
        (f, c)
    }

    #[test]
    fn coarse_spacing() {
        let (f, c) = spaces(10, 4, ElementKind::Square);
        assert!((c.mesh().h() - 0.05).abs() < 1e-15);
        let (_, c2) = spaces(10, 2, ElementKind::Square);
        assert!((c2.mesh().h() - 0.1).abs() < 1e-15);
        let ratio = f.n_dofs() as f64 / c.n_dofs() as f64;
        assert!((ratio - 4.0).abs() < 0.2, "{ratio}");
    }

    #[test]
    fn constants_map_to_vertex_ones() {
        let (f, c) = spaces(3, 6, ElementKind::Triangle);
        let ip = build_prolongation(&f, &c).unwrap();
        let u = ip.apply(&vec![Complex64::new(1.0, 0.0); c.n_dofs()]);
        for d in 0..f.n_dofs() {
            let expect = if matches!(f.dof_entity(d).0, crate::fespace::Entity::Vertex(_)) { 1.0 } else { 0.0 };
            assert!((u[d] - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn reproduces_low_degree_polynomials() {
        for kind in [ElementKind::Square, ElementKind::Triangle] {
            for p in [2, 4, 6, 8] {
                let (f, c) = spaces(3, p, kind);
                let ip = build_prolongation(&f, &c).unwrap();
                let q = (p / 2) as i32;
                let g = |x: [f64; 2]| (0..=q).map(|a| (1.0 + a as f64) * x[0].powi(a) * x[1].powi(q - a)).sum::<f64>() - 0.5 * x[0];
                let h = c.mesh().h();
                let uc: Vec<Complex64> = (0..c.n_dofs())
                    .map(|d| match c.dof_entity(d).0 {
                        crate::fespace::Entity::Vertex([i, j]) => Complex64::new(g([i as f64 * h, j as f64 * h]), 0.0),
                        _ => unreachable!(),
                    })
                    .collect();
                let uf = ip.apply(&uc);
                for x in [[0.11, 0.37], [0.52, 0.91], [0.97, 0.03], [0.4, 0.4]] {
                    assert!((f.evaluate(&uf, x).unwrap().re - g(x)).abs() < 1e-10, "{kind:?} p={p}");
                }
            }
        }
    }

    #[test]
    fn p2_is_bilinear_interpolation() {
        let (f, c) = spaces(4, 2, ElementKind::Square);
        let ip = build_prolongation(&f, &c).unwrap();
        for (d, e) in (0..f.n_dofs()).map(|d| (d, f.dof_entity(d).0)) {
            let row: Vec<_> = ip.row(d).collect();
            match e {
                crate::fespace::Entity::Vertex(v) => assert_eq!(row, vec![(c.vertex_dof(v).unwrap(), 1.0)]),
                _ => assert!(row.is_empty()),
            }
        }
    }

    #[test]
    fn inclusion_is_orthonormal_subset() {
        let m = StructuredMesh::unit_square(3, ElementKind::Square).unwrap().tag_all(BoundaryTag::Absorbing);
        let f = build_space(&m, 6).unwrap();
        let c = FeSpace::new(&m, 3).unwrap();
        let ip = galerkin_inclusion(&f, &c).unwrap();
        let ptp = ip.transpose().to_complex().matmul(&ip.to_complex());
        for i in 0..c.n_dofs() {
            let row: Vec<_> = ptp.row(i).collect();
            assert_eq!(row, vec![(i, Complex64::new(1.0, 0.0))]);
        }
    }
}
