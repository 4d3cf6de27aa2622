//! Continuous Galerkin spaces of order `p` on structured meshes.

pub mod assembly;
pub mod basis;
pub mod interp;
pub mod quadrature;

use std::collections::HashMap;
use std::ops::Range;

use num_complex::Complex64;

pub use assembly::{
    assemble_form, assemble_helmholtz, assemble_mass_weighted, assemble_stiffness, boundary_mass, eliminate_dirichlet, ElementMatrices,
};
pub use basis::{CellSide, ElementShape, LocalEntity, ReferenceBasis};
pub use interp::{local_interpolation, LocalInterpolation};

use crate::error::{Error, Result};
use crate::mesh::{BoundaryTag, EdgeKey, ElementKind, Lattice, Side, StructuredMesh};

/// Mesh entity carrying degrees of freedom. The lattice coordinate is the
/// owner: the lower-left vertex of the cell the entity belongs to when the
/// mesh is cut into unit cells.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Entity {
    Vertex(Lattice),
    Horizontal(Lattice),
    Vertical(Lattice),
    Diagonal(Lattice),
    /// Interior of a cell; part 0 is the square or the lower triangle.
    Cell(Lattice, u8),
}

impl Entity {
    pub fn owner(self) -> Lattice {
        match self {
            Entity::Vertex(l) | Entity::Horizontal(l) | Entity::Vertical(l) | Entity::Diagonal(l) | Entity::Cell(l, _) => l,
        }
    }

    fn rank(self) -> u8 {
        match self {
            Entity::Vertex(_) => 0,
            Entity::Horizontal(_) => 1,
            Entity::Vertical(_) => 2,
            Entity::Diagonal(_) => 3,
            Entity::Cell(_, part) => 4 + part,
        }
    }

    fn sort_key(self) -> (i64, i64, u8) {
        let [i, j] = self.owner();
        (j, i, self.rank())
    }

    pub fn from_edge(e: EdgeKey) -> Self {
        match e {
            EdgeKey::Horizontal(l) => Entity::Horizontal(l),
            EdgeKey::Vertical(l) => Entity::Vertical(l),
            EdgeKey::Diagonal(l) => Entity::Diagonal(l),
        }
    }

    fn from_local(e: LocalEntity, [i, j]: Lattice, part: u8) -> Self {
        match e {
            LocalEntity::Vertex([a, b]) => Entity::Vertex([i + a, j + b]),
            LocalEntity::Horizontal(dy) => Entity::Horizontal([i, j + dy]),
            LocalEntity::Vertical(dx) => Entity::Vertical([i + dx, j]),
            LocalEntity::Diagonal => Entity::Diagonal([i, j]),
            LocalEntity::Interior => Entity::Cell([i, j], part),
        }
    }
}

#[derive(Clone, Debug)]
pub struct FeSpace {
    mesh: StructuredMesh,
    order: u32,
    bases: Vec<ReferenceBasis>,
    matrices: Vec<ElementMatrices>,
    entities: Vec<(Entity, usize, usize)>,
    lookup: HashMap<Entity, usize>,
    dof_entity: Vec<(u32, u16)>,
    elem_dofs: Vec<usize>,
    n_local: usize,
    dirichlet: Vec<bool>,
    n_dofs: usize,
}

/// Order-`p` space for `p ∈ {2, 4, 6, 8}`.
pub fn build_space(mesh: &StructuredMesh, p: u32) -> Result<FeSpace> {
    if !(2..=8).contains(&p) || p % 2 != 0 {
        return Err(Error::UnsupportedOrder(p));
    }
    FeSpace::new(mesh, p)
}

impl FeSpace {
    /// Any order in `1..=8`. Odd orders cannot be coarsened by halving and
    /// are used for the bilinear coarse space and for checks.
    pub fn new(mesh: &StructuredMesh, p: u32) -> Result<Self> {
        if !(1..=8).contains(&p) {
            return Err(Error::UnsupportedOrder(p));
        }
        let shapes: &[ElementShape] = match mesh.kind() {
            ElementKind::Square => &[ElementShape::Square],
            ElementKind::Triangle => &[ElementShape::LowerTriangle, ElementShape::UpperTriangle],
        };
        let bases: Vec<ReferenceBasis> = shapes.iter().map(|&s| ReferenceBasis::new(p, s)).collect();
        let matrices = bases.iter().map(ElementMatrices::new).collect();
        let n_local = bases[0].len();

        let mut ents: Vec<Entity> = Vec::new();
        for &c in mesh.cells() {
            for (part, b) in bases.iter().enumerate() {
                for f in &b.functions {
                    ents.push(Entity::from_local(f.entity, c, part as u8));
                }
            }
        }
        ents.sort_unstable_by_key(|e| e.sort_key());
        ents.dedup();
        let count = |e: Entity| match e {
            Entity::Vertex(_) => 1,
            Entity::Cell(_, part) => basis::interior_dofs(p, shapes[part as usize]),
            _ => basis::edge_dofs(p),
        };
        let mut entities = Vec::with_capacity(ents.len());
        let mut lookup = HashMap::with_capacity(ents.len());
        let mut dof_entity = Vec::new();
        let mut next = 0;
        for e in ents {
            let n = count(e);
            if n == 0 {
                continue;
            }
            lookup.insert(e, entities.len());
            for l in 0..n {
                dof_entity.push((entities.len() as u32, l as u16));
            }
            entities.push((e, next, n));
            next += n;
        }
        let n_dofs = next;

        let mut elem_dofs = Vec::with_capacity(mesh.n_elements() * n_local);
        for &c in mesh.cells() {
            for (part, b) in bases.iter().enumerate() {
                for f in &b.functions {
                    let e = Entity::from_local(f.entity, c, part as u8);
                    elem_dofs.push(entities[lookup[&e]].1 + f.index);
                }
            }
        }

        let mut dirichlet = vec![false; n_dofs];
        for be in mesh.boundary_edges() {
            if be.tag == Some(BoundaryTag::Dirichlet) {
                for e in [Entity::from_edge(be.key), Entity::Vertex(be.key.start()), Entity::Vertex(be.key.end())] {
                    if let Some(&k) = lookup.get(&e) {
                        let (_, s, n) = entities[k];
                        dirichlet[s..s + n].iter_mut().for_each(|d| *d = true);
                    }
                }
            }
        }

        Ok(Self { mesh: mesh.clone(), order: p, bases, matrices, entities, lookup, dof_entity, elem_dofs, n_local, dirichlet, n_dofs })
    }

    /// Bilinear (square) or linear (triangle) space.
    pub fn linear(mesh: &StructuredMesh) -> Self {
        Self::new(mesh, 1).expect("order 1 is always valid")
    }

    pub fn mesh(&self) -> &StructuredMesh {
        &self.mesh
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    pub fn n_elements(&self) -> usize {
        self.mesh.n_elements()
    }

    pub fn elements_per_cell(&self) -> usize {
        self.bases.len()
    }

    pub fn element_cell(&self, e: usize) -> usize {
        e / self.bases.len()
    }

    pub fn element_part(&self, e: usize) -> usize {
        e % self.bases.len()
    }

    pub fn element_basis(&self, e: usize) -> &ReferenceBasis {
        &self.bases[self.element_part(e)]
    }

    pub fn bases(&self) -> &[ReferenceBasis] {
        &self.bases
    }

    pub(crate) fn element_matrices(&self, part: usize) -> &ElementMatrices {
        &self.matrices[part]
    }

    pub fn element_dofs(&self, e: usize) -> &[usize] {
        &self.elem_dofs[e * self.n_local..(e + 1) * self.n_local]
    }

    /// Element adjacent to a boundary edge of the given cell.
    pub fn side_element(&self, cell: usize, side: Side) -> usize {
        let part = match (self.mesh.kind(), side) {
            (ElementKind::Square, _) => 0,
            (ElementKind::Triangle, Side::Bottom | Side::Right) => 0,
            (ElementKind::Triangle, Side::Top | Side::Left) => 1,
        };
        cell * self.bases.len() + part
    }

    pub fn entities(&self) -> impl Iterator<Item = (Entity, Range<usize>)> + '_ {
        self.entities.iter().map(|&(e, s, n)| (e, s..s + n))
    }

    pub fn entity_dofs(&self, e: Entity) -> Option<Range<usize>> {
        self.lookup.get(&e).map(|&k| {
            let (_, s, n) = self.entities[k];
            s..s + n
        })
    }

    /// `(entity, index within the entity)` of a dof.
    pub fn dof_entity(&self, dof: usize) -> (Entity, usize) {
        let (k, l) = self.dof_entity[dof];
        (self.entities[k as usize].0, l as usize)
    }

    pub fn vertex_dof(&self, v: Lattice) -> Option<usize> {
        self.entity_dofs(Entity::Vertex(v)).map(|r| r.start)
    }

    /// Dofs owned by lattice point `owner` (contiguous by construction).
    pub fn owned_dofs(&self, owner: Lattice) -> Range<usize> {
        let key = (owner[1], owner[0]);
        let lo = self.entities.partition_point(|(e, _, _)| (e.sort_key().0, e.sort_key().1) < key);
        let hi = self.entities.partition_point(|(e, _, _)| (e.sort_key().0, e.sort_key().1) <= key);
        if lo == hi {
            return 0..0;
        }
        self.entities[lo].1..self.entities[hi - 1].1 + self.entities[hi - 1].2
    }

    pub fn is_dirichlet(&self, dof: usize) -> bool {
        self.dirichlet[dof]
    }

    pub fn dirichlet_mask(&self) -> &[bool] {
        &self.dirichlet
    }

    /// Zeroes Dirichlet entries in place.
    pub fn zero_dirichlet(&self, u: &mut [Complex64]) {
        for (v, &d) in u.iter_mut().zip(&self.dirichlet) {
            if d {
                *v = Complex64::new(0.0, 0.0);
            }
        }
    }

    /// Vertex dof nearest to the centre of the bounding box.
    pub fn center_dof(&self) -> usize {
        let (lo, hi) = self.mesh.bounds();
        let c = [(lo[0] + hi[0]) as f64 / 2.0, (lo[1] + hi[1]) as f64 / 2.0];
        self.mesh
            .vertices()
            .into_iter()
            .min_by(|a, b| {
                let da = (a[0] as f64 - c[0]).powi(2) + (a[1] as f64 - c[1]).powi(2);
                let db = (b[0] as f64 - c[0]).powi(2) + (b[1] as f64 - c[1]).powi(2);
                da.total_cmp(&db)
            })
            .and_then(|v| self.vertex_dof(v))
            .expect("mesh has vertices")
    }

    /// Staged nodal interpolation of `f`. The result is exact for functions
    /// in the space.
    pub fn interpolate(&self, f: impl Fn([f64; 2]) -> Complex64) -> Vec<Complex64> {
        let interps: Vec<LocalInterpolation> =
            self.bases.iter().map(|b| local_interpolation(b, self.order).expect("interpolation nodes are unisolvent")).collect();
        let h = self.mesh.h();
        let r = self.order as f64;
        let mut u = vec![Complex64::new(0.0, 0.0); self.n_dofs];
        for e in 0..self.n_elements() {
            let li = &interps[self.element_part(e)];
            let [ci, cj] = self.mesh.cells()[self.element_cell(e)];
            let vals: Vec<Complex64> = (0..li.n_nodes())
                .map(|n| {
                    let [a, b] = li.node(n);
                    f([(ci as f64 + a as f64 / r) * h, (cj as f64 + b as f64 / r) * h])
                })
                .collect();
            let dofs = self.element_dofs(e);
            for (fi, w) in &li.rows {
                u[dofs[*fi]] = w.iter().zip(&vals).map(|(w, v)| v * *w).sum();
            }
        }
        u
    }

    /// Value and gradient of the finite-element function `u` at `x`.
    pub fn evaluate_grad(&self, u: &[Complex64], x: [f64; 2]) -> Option<(Complex64, [Complex64; 2])> {
        let h = self.mesh.h();
        let gx = x[0] / h;
        let gy = x[1] / h;
        let (fi, fj) = (gx.floor() as i64, gy.floor() as i64);
        for ci in [fi, fi - 1] {
            for cj in [fj, fj - 1] {
                let Some(c) = self.mesh.cell_index([ci, cj]) else { continue };
                let lx = [gx - ci as f64, gy - cj as f64];
                if !(ElementShape::Square.contains(lx)) {
                    continue;
                }
                for part in 0..self.bases.len() {
                    let b = &self.bases[part];
                    if !b.shape.contains(lx) {
                        continue;
                    }
                    let dofs = self.element_dofs(c * self.bases.len() + part);
                    let mut v = Complex64::new(0.0, 0.0);
                    let mut g = [Complex64::new(0.0, 0.0); 2];
                    for (f, &d) in b.functions.iter().zip(dofs) {
                        let (fv, fg) = f.value_grad(lx);
                        v += u[d] * fv;
                        g[0] += u[d] * (fg[0] / h);
                        g[1] += u[d] * (fg[1] / h);
                    }
                    return Some((v, g));
                }
            }
        }
        None
    }

    pub fn evaluate(&self, u: &[Complex64], x: [f64; 2]) -> Option<Complex64> {
        self.evaluate_grad(u, x).map(|(v, _)| v)
    }
}
