//! Staged local interpolation: vertex values first, then edge coefficients,
//! then interior coefficients, each fitted at lattice nodes of the cell.

use num_complex::Complex64;

use super::basis::{LocalEntity, ReferenceBasis};
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Weights mapping values at the nodes `(a/r, b/r)`, `0 ≤ a, b ≤ r`, of the
/// reference cell to coefficients of the order-`r` hierarchical subspace.
#[derive(Clone, Debug)]
pub struct LocalInterpolation {
    pub r: u32,
    /// `(local function, weights over node a + (r+1)·b)`.
    pub rows: Vec<(usize, Vec<f64>)>,
}

impl LocalInterpolation {
    pub fn n_nodes(&self) -> usize {
        ((self.r + 1) * (self.r + 1)) as usize
    }

    pub fn node(&self, n: usize) -> [u32; 2] {
        let w = self.r as usize + 1;
        [(n % w) as u32, (n / w) as u32]
    }
}

fn on_entity(e: LocalEntity, [a, b]: [u32; 2], r: u32) -> bool {
    let corner = (a == 0 || a == r) && (b == 0 || b == r);
    match e {
        LocalEntity::Vertex(v) => a == v[0] as u32 * r && b == v[1] as u32 * r,
        LocalEntity::Horizontal(dy) => !corner && b == dy as u32 * r,
        LocalEntity::Vertical(dx) => !corner && a == dx as u32 * r,
        LocalEntity::Diagonal => !corner && a == b,
        LocalEntity::Interior => false,
    }
}

pub fn local_interpolation(basis: &ReferenceBasis, r: u32) -> Result<LocalInterpolation> {
    assert!(r >= 1 && r <= basis.order);
    let w = r as usize + 1;
    let n_nodes = w * w;
    let node_xy = |n: usize| [(n % w) as f64 / r as f64, (n / w) as f64 / r as f64];
    let inside: Vec<usize> = (0..n_nodes).filter(|&n| basis.shape.contains(node_xy(n))).collect();
    let selected = basis.subspace(r);

    let mut coef: Vec<Option<Vec<f64>>> = vec![None; basis.len()];
    let mut assigned: Vec<usize> = Vec::new();
    // vertices
    for &f in &selected {
        if let LocalEntity::Vertex(v) = basis.functions[f].entity {
            let node = (v[0] as usize) * r as usize + (v[1] as usize) * r as usize * w;
            let mut wts = vec![0.0; n_nodes];
            wts[node] = 1.0;
            coef[f] = Some(wts);
            assigned.push(f);
        }
    }
    let mut groups: Vec<LocalEntity> = Vec::new();
    for &f in &selected {
        let e = basis.functions[f].entity;
        if !matches!(e, LocalEntity::Vertex(_)) && !groups.contains(&e) {
            groups.push(e);
        }
    }
    // edges before the interior
    groups.sort_by_key(|e| matches!(e, LocalEntity::Interior));
    for e in groups {
        let mut fns: Vec<usize> = selected.iter().copied().filter(|&f| basis.functions[f].entity == e).collect();
        fns.sort_by_key(|&f| basis.functions[f].index);
        let nodes: Vec<usize> = if e == LocalEntity::Interior {
            let boundary: Vec<LocalEntity> = basis.functions.iter().map(|f| f.entity).filter(|e| *e != LocalEntity::Interior).collect();
            inside
                .iter()
                .copied()
                .filter(|&n| {
                    let an = [(n % w) as u32, (n / w) as u32];
                    !boundary.iter().any(|&b| on_entity(b, an, r))
                })
                .collect()
        } else {
            inside.iter().copied().filter(|&n| on_entity(e, [(n % w) as u32, (n / w) as u32], r)).collect()
        };
        if nodes.len() != fns.len() {
            return Err(Error::SingularInterpolation);
        }
        let m = fns.len();
        let v = DenseMatrix::from_fn(m, m, |i, j| Complex64::new(basis.functions[fns[j]].value(node_xy(nodes[i])), 0.0));
        let lu = v.lu().map_err(|_| Error::SingularInterpolation)?;
        // residual weights: e_node − Σ_assigned φ_g(node)·coef_g
        let mut resid = vec![vec![0.0; n_nodes]; m];
        for (i, &n) in nodes.iter().enumerate() {
            resid[i][n] += 1.0;
            for &g in &assigned {
                let phi = basis.functions[g].value(node_xy(n));
                if phi != 0.0 {
                    for (rw, cw) in resid[i].iter_mut().zip(coef[g].as_ref().unwrap()) {
                        *rw -= phi * cw;
                    }
                }
            }
        }
        let mut out = vec![vec![0.0; n_nodes]; m];
        for col in 0..n_nodes {
            let rhs: Vec<Complex64> = (0..m).map(|i| Complex64::new(resid[i][col], 0.0)).collect();
            if rhs.iter().all(|z| z.re == 0.0) {
                continue;
            }
            for (i, z) in lu.solve(&rhs).into_iter().enumerate() {
                out[i][col] = z.re;
            }
        }
        for (i, &f) in fns.iter().enumerate() {
            coef[f] = Some(std::mem::take(&mut out[i]));
            assigned.push(f);
        }
    }
    let mut rows: Vec<(usize, Vec<f64>)> = selected.iter().map(|&f| (f, coef[f].take().unwrap())).collect();
    rows.sort_by_key(|r| r.0);
    Ok(LocalInterpolation { r, rows })
}
