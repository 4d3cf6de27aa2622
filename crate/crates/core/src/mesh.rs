//! Regular square and triangle meshes on unions of lattice squares.
//!
//! Cells are the `h × h` squares of the underlying lattice, addressed by the
//! integer coordinate of their lower-left corner. A triangle mesh splits every
//! square along the diagonal from its lower-left to its upper-right corner.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Lattice = [i64; 2];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElementKind {
    Square,
    Triangle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryTag {
    Dirichlet,
    Neumann,
    Absorbing,
}

/// Outward normal direction of a boundary edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Left, Side::Right, Side::Bottom, Side::Top];
}

/// Mesh edge addressed by its start vertex. Horizontal edges run `+x`,
/// vertical edges `+y`, diagonals from lower-left to upper-right; these are
/// also the orientations used by the hierarchical edge functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeKey {
    Horizontal(Lattice),
    Vertical(Lattice),
    Diagonal(Lattice),
}

impl EdgeKey {
    pub fn start(self) -> Lattice {
        match self {
            EdgeKey::Horizontal(s) | EdgeKey::Vertical(s) | EdgeKey::Diagonal(s) => s,
        }
    }

    pub fn end(self) -> Lattice {
        match self {
            EdgeKey::Horizontal([i, j]) => [i + 1, j],
            EdgeKey::Vertical([i, j]) => [i, j + 1],
            EdgeKey::Diagonal([i, j]) => [i + 1, j + 1],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryEdge {
    pub key: EdgeKey,
    /// Index of the adjacent cell.
    pub cell: usize,
    pub side: Side,
    pub tag: Option<BoundaryTag>,
}

#[derive(Clone, Debug)]
pub struct StructuredMesh {
    h: f64,
    kind: ElementKind,
    cells: Vec<Lattice>,
    lo: Lattice,
    hi: Lattice,
    lookup: Vec<u32>,
    boundary: Vec<BoundaryEdge>,
    boundary_index: HashMap<EdgeKey, usize>,
}

const NO_CELL: u32 = u32::MAX;

impl StructuredMesh {
    /// Unit square split into `n × n` cells of size `1/n`.
    pub fn unit_square(n: usize, kind: ElementKind) -> Result<Self> {
        if n == 0 {
            return Err(Error::Mesh("unit square needs at least one cell per side".into()));
        }
        Self::rectangle(n, n, 1.0 / n as f64, kind)
    }

    pub fn rectangle(nx: usize, ny: usize, h: f64, kind: ElementKind) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::Mesh("rectangle needs at least one cell per side".into()));
        }
        let cells = (0..ny as i64).flat_map(|j| (0..nx as i64).map(move |i| [i, j])).collect();
        Self::from_cells(h, cells, kind)
    }

    /// General union of lattice squares. The union must be edge-connected.
    pub fn from_cells(h: f64, mut cells: Vec<Lattice>, kind: ElementKind) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Mesh(format!("spacing must be positive, got {h}")));
        }
        if cells.is_empty() {
            return Err(Error::Mesh("no cells".into()));
        }
        cells.sort_unstable_by_key(|&[i, j]| (j, i));
        cells.dedup();
        let lo = [cells.iter().map(|c| c[0]).min().unwrap(), cells.iter().map(|c| c[1]).min().unwrap()];
        let hi = [cells.iter().map(|c| c[0]).max().unwrap() + 1, cells.iter().map(|c| c[1]).max().unwrap() + 1];
        let width = (hi[0] - lo[0]) as usize;
        let mut lookup = vec![NO_CELL; width * (hi[1] - lo[1]) as usize];
        for (idx, &[i, j]) in cells.iter().enumerate() {
            lookup[(j - lo[1]) as usize * width + (i - lo[0]) as usize] = idx as u32;
        }
        let mut mesh = Self { h, kind, cells, lo, hi, lookup, boundary: Vec::new(), boundary_index: HashMap::new() };
        if !mesh.is_connected() {
            return Err(Error::Mesh("cell set is not connected".into()));
        }
        mesh.boundary = mesh.trace_boundary();
        mesh.boundary_index = mesh.boundary.iter().enumerate().map(|(i, e)| (e.key, i)).collect();
        Ok(mesh)
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn kind(&self) -> ElementKind {
        self.kind
    }

    pub fn cells(&self) -> &[Lattice] {
        &self.cells
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    /// Number of finite elements (twice the cell count on triangle meshes).
    pub fn n_elements(&self) -> usize {
        match self.kind {
            ElementKind::Square => self.cells.len(),
            ElementKind::Triangle => 2 * self.cells.len(),
        }
    }

    /// Lattice bounding box `[lo, hi)` of the cells.
    pub fn bounds(&self) -> (Lattice, Lattice) {
        (self.lo, self.hi)
    }

    pub fn cell_index(&self, [i, j]: Lattice) -> Option<usize> {
        if i < self.lo[0] || j < self.lo[1] || i >= self.hi[0] || j >= self.hi[1] {
            return None;
        }
        let width = (self.hi[0] - self.lo[0]) as usize;
        match self.lookup[(j - self.lo[1]) as usize * width + (i - self.lo[0]) as usize] {
            NO_CELL => None,
            idx => Some(idx as usize),
        }
    }

    pub fn has_cell(&self, c: Lattice) -> bool {
        self.cell_index(c).is_some()
    }

    pub fn cell_midpoint(&self, cell: usize) -> [f64; 2] {
        let [i, j] = self.cells[cell];
        [(i as f64 + 0.5) * self.h, (j as f64 + 0.5) * self.h]
    }

    pub fn point(&self, [i, j]: Lattice) -> [f64; 2] {
        [i as f64 * self.h, j as f64 * self.h]
    }

    /// Mesh vertices in row-major lattice order.
    pub fn vertices(&self) -> Vec<Lattice> {
        let mut v: Vec<Lattice> = self
            .cells
            .iter()
            .flat_map(|&[i, j]| [[i, j], [i + 1, j], [i + 1, j + 1], [i, j + 1]])
            .collect();
        v.sort_unstable_by_key(|&[i, j]| (j, i));
        v.dedup();
        v
    }

    /// All mesh edges, including triangle diagonals.
    pub fn edges(&self) -> Vec<EdgeKey> {
        let mut e: Vec<EdgeKey> = self
            .cells
            .iter()
            .flat_map(|&[i, j]| {
                let mut v = vec![
                    EdgeKey::Horizontal([i, j]),
                    EdgeKey::Horizontal([i, j + 1]),
                    EdgeKey::Vertical([i, j]),
                    EdgeKey::Vertical([i + 1, j]),
                ];
                if self.kind == ElementKind::Triangle {
                    v.push(EdgeKey::Diagonal([i, j]));
                }
                v
            })
            .collect();
        e.sort_unstable();
        e.dedup();
        e
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary
    }

    pub fn boundary_edge(&self, key: EdgeKey) -> Option<&BoundaryEdge> {
        self.boundary_index.get(&key).map(|&i| &self.boundary[i])
    }

    pub fn boundary_tag(&self, key: EdgeKey) -> Option<BoundaryTag> {
        self.boundary_edge(key).and_then(|e| e.tag)
    }

    pub fn is_fully_tagged(&self) -> bool {
        self.boundary.iter().all(|e| e.tag.is_some())
    }

    /// Fails on the first untagged boundary edge.
    pub fn require_tags(&self) -> Result<()> {
        match self.boundary.iter().position(|e| e.tag.is_none()) {
            Some(edge) => Err(Error::UntaggedBoundary { edge }),
            None => Ok(()),
        }
    }

    /// Tags boundary edges by the direction of their outward normal. Every
    /// boundary edge must end up tagged.
    pub fn tag_boundary(mut self, side_tags: &BTreeMap<Side, BoundaryTag>) -> Result<Self> {
        for e in &mut self.boundary {
            if let Some(&t) = side_tags.get(&e.side) {
                e.tag = Some(t);
            }
        }
        self.require_tags()?;
        Ok(self)
    }

    /// Same tag for every side.
    pub fn tag_all(self, tag: BoundaryTag) -> Self {
        self.tag_edges(|_| Some(tag))
    }

    /// Per-edge tagging; `None` leaves an edge's current tag in place.
    pub fn tag_edges(mut self, mut f: impl FnMut(&BoundaryEdge) -> Option<BoundaryTag>) -> Self {
        for e in &mut self.boundary {
            if let Some(t) = f(e) {
                e.tag = Some(t);
            }
        }
        self
    }

    /// Each cell split into `r × r` cells of the given kind. Boundary edges
    /// inherit the tag of the edge they subdivide.
    pub fn refined(&self, r: usize, kind: ElementKind) -> Result<Self> {
        if r == 0 {
            return Err(Error::Mesh("refinement ratio must be positive".into()));
        }
        let r = r as i64;
        let cells = self
            .cells
            .iter()
            .flat_map(|&[i, j]| (0..r).flat_map(move |b| (0..r).map(move |a| [r * i + a, r * j + b])))
            .collect();
        let fine = Self::from_cells(self.h / r as f64, cells, kind)?;
        Ok(fine.tag_edges(|e| {
            let parent = match e.key {
                EdgeKey::Horizontal([i, j]) => EdgeKey::Horizontal([i.div_euclid(r), j.div_euclid(r)]),
                EdgeKey::Vertical([i, j]) => EdgeKey::Vertical([i.div_euclid(r), j.div_euclid(r)]),
                EdgeKey::Diagonal(_) => unreachable!("diagonals are never boundary edges"),
            };
            self.boundary_tag(parent)
        }))
    }

    fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.cells.len()];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(c) = queue.pop_front() {
            let [i, j] = self.cells[c];
            for n in [[i - 1, j], [i + 1, j], [i, j - 1], [i, j + 1]] {
                if let Some(ni) = self.cell_index(n) {
                    if !seen[ni] {
                        seen[ni] = true;
                        count += 1;
                        queue.push_back(ni);
                    }
                }
            }
        }
        count == self.cells.len()
    }

    /// Boundary edges oriented with the domain on the left and chained into
    /// loops, so a rectangle is traversed counterclockwise from its
    /// lower-left corner.
    fn trace_boundary(&self) -> Vec<BoundaryEdge> {
        struct Oriented {
            from: Lattice,
            to: Lattice,
            edge: BoundaryEdge,
        }
        let mut pieces = Vec::new();
        for (idx, &[i, j]) in self.cells.iter().enumerate() {
            let sides = [
                (Side::Bottom, [i, j - 1], EdgeKey::Horizontal([i, j]), [i, j], [i + 1, j]),
                (Side::Right, [i + 1, j], EdgeKey::Vertical([i + 1, j]), [i + 1, j], [i + 1, j + 1]),
                (Side::Top, [i, j + 1], EdgeKey::Horizontal([i, j + 1]), [i + 1, j + 1], [i, j + 1]),
                (Side::Left, [i - 1, j], EdgeKey::Vertical([i, j]), [i, j + 1], [i, j]),
            ];
            for (side, nb, key, from, to) in sides {
                if !self.has_cell(nb) {
                    pieces.push(Oriented { from, to, edge: BoundaryEdge { key, cell: idx, side, tag: None } });
                }
            }
        }
        let mut by_start: HashMap<Lattice, Vec<usize>> = HashMap::new();
        for (k, p) in pieces.iter().enumerate() {
            by_start.entry(p.from).or_default().push(k);
        }
        let mut used = vec![false; pieces.len()];
        let mut order = Vec::with_capacity(pieces.len());
        loop {
            let first = (0..pieces.len())
                .filter(|&k| !used[k])
                .min_by_key(|&k| (pieces[k].from[1], pieces[k].from[0], pieces[k].edge.side));
            let Some(mut cur) = first else { break };
            loop {
                used[cur] = true;
                order.push(cur);
                let next = by_start.get(&pieces[cur].to).and_then(|c| c.iter().copied().find(|&k| !used[k]));
                match next {
                    Some(n) => cur = n,
                    None => break,
                }
            }
        }
        order.into_iter().map(|k| pieces[k].edge.clone()).collect()
    }
}

/// Cell-wise wavenumber `k(c) > 0` and damping `ε(c) ≥ 0`, indexed like the
/// cells of the mesh they were built for.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientField {
    pub k: Vec<f64>,
    pub eps: Vec<f64>,
}

impl CoefficientField {
    pub fn constant(mesh: &StructuredMesh, k: f64) -> Self {
        Self { k: vec![k; mesh.n_cells()], eps: vec![0.0; mesh.n_cells()] }
    }

    pub fn constant_damped(mesh: &StructuredMesh, k: f64, eps: f64) -> Self {
        Self { k: vec![k; mesh.n_cells()], eps: vec![eps; mesh.n_cells()] }
    }

    pub fn new(k: Vec<f64>, eps: Vec<f64>) -> Result<Self> {
        let f = Self { k, eps };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k.len() != self.eps.len() {
            return Err(Error::InvalidParameter("k and eps have different lengths".into()));
        }
        if let Some(v) = self.k.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidParameter(format!("wavenumber must be positive, got {v}")));
        }
        if let Some(v) = self.eps.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidParameter(format!("damping must be non-negative, got {v}")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.k.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k.is_empty()
    }

    /// Coefficients of `to`, a mesh whose cells are lattice-coincident with
    /// cells of `from` (a subdomain).
    pub fn restrict(&self, from: &StructuredMesh, to: &StructuredMesh) -> Self {
        self.pull_back(from, to, |c| c)
    }

    /// Coefficients on a mesh refined by `ratio` in each direction.
    pub fn refine(&self, from: &StructuredMesh, to: &StructuredMesh, ratio: i64) -> Self {
        self.pull_back(from, to, |[i, j]| [i.div_euclid(ratio), j.div_euclid(ratio)])
    }

    fn pull_back(&self, from: &StructuredMesh, to: &StructuredMesh, parent: impl Fn(Lattice) -> Lattice) -> Self {
        let idx: Vec<usize> = to
            .cells()
            .iter()
            .map(|&c| from.cell_index(parent(c)).expect("target cell outside the source mesh"))
            .collect();
        Self { k: idx.iter().map(|&i| self.k[i]).collect(), eps: idx.iter().map(|&i| self.eps[i]).collect() }
    }
}

/// `(2k²/π)·sin²(π/2 · d/w)` for penetration depth `d` clamped to `[0, w]`.
pub fn layer_profile(k: f64, depth: f64, width: f64) -> f64 {
    let d = depth.clamp(0.0, width);
    let s = (0.5 * PI * d / width).sin();
    2.0 * k * k / PI * s * s
}

/// Cells needed for a layer of about `dofs` degrees of freedom at order `p`.
pub fn layer_cells_for_dofs(dofs: usize, p: u32) -> usize {
    dofs.div_ceil(p as usize)
}

/// Absorbing-layer damping on top of a constant wavenumber. The layer
/// occupies the strip of width `layer_width` along each listed side of the
/// bounding box; where strips overlap the deeper penetration wins.
pub fn absorbing_layer(mesh: &StructuredMesh, k: f64, layer_sides: &[Side], layer_width: f64) -> Result<CoefficientField> {
    let h = mesh.h();
    let cells = layer_width / h;
    if !(layer_width > 0.0) || (cells - cells.round()).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!("layer width {layer_width} is not a whole number of cells (h = {h})")));
    }
    let (lo, hi) = mesh.bounds();
    let lo = [lo[0] as f64 * h, lo[1] as f64 * h];
    let hi = [hi[0] as f64 * h, hi[1] as f64 * h];
    for &s in layer_sides {
        let extent = match s {
            Side::Left | Side::Right => hi[0] - lo[0],
            Side::Bottom | Side::Top => hi[1] - lo[1],
        };
        if layer_width > extent + 1e-12 {
            return Err(Error::InvalidParameter(format!("layer width {layer_width} exceeds domain extent {extent}")));
        }
    }
    let mut field = CoefficientField::constant(mesh, k);
    for c in 0..mesh.n_cells() {
        let [x, y] = mesh.cell_midpoint(c);
        let depth = layer_sides
            .iter()
            .map(|s| match s {
                Side::Left => lo[0] + layer_width - x,
                Side::Right => x - (hi[0] - layer_width),
                Side::Bottom => lo[1] + layer_width - y,
                Side::Top => y - (hi[1] - layer_width),
            })
            .fold(f64::NEG_INFINITY, f64::max);
        if depth > 0.0 {
            field.eps[c] = layer_profile(k, depth, layer_width);
        }
    }
    Ok(field)
}
