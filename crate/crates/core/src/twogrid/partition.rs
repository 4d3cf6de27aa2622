//! Block partition of the cells and the overlapping subdomains.

use std::collections::BTreeMap;

use crate::mesh::{Lattice, StructuredMesh};

#[derive(Clone, Debug)]
pub struct Subdomain {
    /// Block index in the partition lattice.
    pub block: [i64; 2],
    /// Indices of the non-overlapping cells `U`.
    pub core: Vec<usize>,
    /// Indices of the overlapping cells `Ω ⊇ U`.
    pub cells: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct Partition {
    pub l_dd: usize,
    pub subdomains: Vec<Subdomain>,
}

/// Blocks of `l_dd × l_dd` cells counted from the lower-left corner of the
/// bounding box; the last block in each direction holds the remainder. Each
/// subdomain adds every cell sharing an edge or a vertex with its block.
pub fn partition(mesh: &StructuredMesh, l_dd: usize) -> Partition {
    assert!(l_dd >= 2, "l_dd must be at least 2");
    let (lo, _) = mesh.bounds();
    let l = l_dd as i64;
    let mut blocks: BTreeMap<(i64, i64), Vec<usize>> = BTreeMap::new();
    for (c, &[i, j]) in mesh.cells().iter().enumerate() {
        let b = ((j - lo[1]).div_euclid(l), (i - lo[0]).div_euclid(l));
        blocks.entry(b).or_default().push(c);
    }
    let subdomains = blocks
        .into_iter()
        .map(|((bj, bi), core)| {
            let mut in_omega = vec![false; mesh.n_cells()];
            for &c in &core {
                let [i, j] = mesh.cells()[c];
                for dj in -1..=1 {
                    for di in -1..=1 {
                        if let Some(n) = mesh.cell_index([i + di, j + dj] as Lattice) {
                            in_omega[n] = true;
                        }
                    }
                }
            }
            let cells = (0..mesh.n_cells()).filter(|&c| in_omega[c]).collect();
            Subdomain { block: [bi, bj], core, cells }
        })
        .collect();
    Partition { l_dd, subdomains }
}
