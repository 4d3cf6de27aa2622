//! Bloch-wave Fourier analysis of the finite-element two-grid method.
//!
//! Operators are assembled on a small all-Neumann patch with `h = 1`. Their
//! translation-invariant blocks are read at the patch centre and summed into
//! symbols on the `(hZ)²` torus. Coarse QSFEM dofs are grouped per fine cell.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fespace::{assemble_helmholtz, build_space, FeSpace};
use crate::linalg::{DenseMatrix, SparseComplexMatrix};
use crate::mesh::{BoundaryTag, CoefficientField, ElementKind, Lattice, StructuredMesh};
use crate::qsfem::assemble_qsfem;
use crate::twogrid::{build_prolongation, coarse_mesh_for, galerkin_inclusion, Coarsening};

/// Condition number above which a symbol is treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// Grouping of dofs into translates of one unit cell.
#[derive(Clone, Debug)]
pub struct UnitCell {
    size: usize,
    locate: Vec<(Lattice, usize)>,
    dofs: BTreeMap<Lattice, Vec<usize>>,
}

impl UnitCell {
    /// Dofs owned by each lattice point: the lower-left vertex, the lower
    /// and left edges (and the diagonal) and the cell interior.
    pub fn fine(space: &FeSpace) -> Self {
        let mut locate = vec![([0, 0], 0); space.n_dofs()];
        let mut dofs: BTreeMap<Lattice, Vec<usize>> = BTreeMap::new();
        for (e, r) in space.entities() {
            let list = dofs.entry(e.owner()).or_default();
            for d in r {
                locate[d] = (e.owner(), list.len());
                list.push(d);
            }
        }
        let size = dofs.values().map(Vec::len).max().unwrap_or(0);
        Self { size, locate, dofs }
    }

    /// Vertices of a bilinear space on spacing `h/r`, grouped `r × r` per
    /// cell of spacing `h`.
    pub fn coarse_lattice(space: &FeSpace, r: usize) -> Result<Self> {
        if space.order() != 1 {
            return Err(Error::InvalidParameter("coarse lattice grouping needs a bilinear space".into()));
        }
        let ri = r as i64;
        let mut locate = vec![([0, 0], 0); space.n_dofs()];
        let mut slots: BTreeMap<Lattice, Vec<Option<usize>>> = BTreeMap::new();
        for (e, rng) in space.entities() {
            let [i, j] = e.owner();
            let owner = [i.div_euclid(ri), j.div_euclid(ri)];
            let local = (i.rem_euclid(ri) + ri * j.rem_euclid(ri)) as usize;
            locate[rng.start] = (owner, local);
            slots.entry(owner).or_insert_with(|| vec![None; r * r])[local] = Some(rng.start);
        }
        let dofs = slots.into_iter().map(|(o, v)| (o, v.into_iter().flatten().collect())).collect();
        Ok(Self { size: r * r, locate, dofs })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Owner lattice point and local index of a global dof.
    pub fn locate(&self, dof: usize) -> (Lattice, usize) {
        self.locate[dof]
    }

    /// Global dofs at `owner` in local order, if that translate is complete.
    pub fn dofs_at(&self, owner: Lattice) -> Option<&[usize]> {
        self.dofs.get(&owner).filter(|d| d.len() == self.size).map(Vec::as_slice)
    }
}

/// Blocks `P_{0,β}` of a translation-invariant operator, `|β|_∞ ≤ window`.
#[derive(Clone, Debug)]
pub struct BlockToeplitzView {
    pub window: i64,
    pub nrows: usize,
    pub ncols: usize,
    pub blocks: BTreeMap<Lattice, DenseMatrix>,
}

fn extract_at(matrix: &SparseComplexMatrix, rows: &UnitCell, cols: &UnitCell, anchor: Lattice, window: i64) -> Result<BlockToeplitzView> {
    let row_dofs = rows.dofs_at(anchor).ok_or_else(|| Error::Mesh(format!("unit cell at {anchor:?} is incomplete")))?;
    let mut blocks: BTreeMap<Lattice, DenseMatrix> = BTreeMap::new();
    for (j, &g) in row_dofs.iter().enumerate() {
        for (c, v) in matrix.row(g) {
            if v == Complex64::new(0.0, 0.0) {
                continue;
            }
            let (owner, l) = cols.locate(c);
            let beta = [owner[0] - anchor[0], owner[1] - anchor[1]];
            if beta[0].abs().max(beta[1].abs()) > window {
                return Err(Error::WindowTooSmall(beta));
            }
            blocks.entry(beta).or_insert_with(|| DenseMatrix::zeros(rows.size(), cols.size()))[(j, l)] = v;
        }
    }
    Ok(BlockToeplitzView { window, nrows: rows.size(), ncols: cols.size(), blocks })
}

/// Reads the blocks at `anchors[0]` and checks they agree with those at
/// `anchors[1]` to `1e-12` relative to the largest entry.
pub fn extract_blocks(
    matrix: &SparseComplexMatrix,
    rows: &UnitCell,
    cols: &UnitCell,
    anchors: [Lattice; 2],
    window: i64,
) -> Result<BlockToeplitzView> {
    let a = extract_at(matrix, rows, cols, anchors[0], window)?;
    let b = extract_at(matrix, rows, cols, anchors[1], window)?;
    let scale = a.blocks.values().map(DenseMatrix::max_abs).fold(1.0, f64::max);
    let zero = DenseMatrix::zeros(a.nrows, a.ncols);
    let mut worst: f64 = 0.0;
    for beta in a.blocks.keys().chain(b.blocks.keys()) {
        let pa = a.blocks.get(beta).unwrap_or(&zero);
        let pb = b.blocks.get(beta).unwrap_or(&zero);
        worst = worst.max((pa - pb).max_abs());
    }
    if worst > 1e-12 * scale {
        return Err(Error::NotTranslationInvariant(worst));
    }
    Ok(a)
}

impl BlockToeplitzView {
    /// `σ(θ) = Σ_β e^{iθ·β} P_{0,β}`.
    pub fn symbol(&self, theta: [f64; 2]) -> DenseMatrix {
        let mut s = DenseMatrix::zeros(self.nrows, self.ncols);
        for (beta, block) in &self.blocks {
            let phase = Complex64::from_polar(1.0, theta[0] * beta[0] as f64 + theta[1] * beta[1] as f64);
            s = &s + &block.scale(phase);
        }
        s
    }
}

/// Dense inverse with a 1-norm condition check.
pub fn inverse_symbol(m: &DenseMatrix) -> Result<DenseMatrix> {
    let inv = m.inverse()?;
    let cond = m.norm1() * inv.norm1();
    if !(cond <= MAX_CONDITION) {
        return Err(Error::IllConditioned(cond));
    }
    Ok(inv)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LfaParams {
    pub order: u32,
    pub element: ElementKind,
    pub coarsening: Coarsening,
    /// Dofs per wavelength, `2πp/(kh)`.
    pub ppw: f64,
    /// Damping per wavelength; `ε = k²D/π`.
    pub d: f64,
    pub alpha_s: f64,
    pub alpha_c: f64,
    pub n_s: usize,
    pub omega_c: f64,
}

impl Default for LfaParams {
    fn default() -> Self {
        Self {
            order: 4,
            element: ElementKind::Square,
            coarsening: Coarsening::OptimizedFd,
            ppw: 10.0,
            d: 0.01,
            alpha_s: 0.2,
            alpha_c: 0.0,
            n_s: 1,
            omega_c: 1.0,
        }
    }
}

impl LfaParams {
    /// `kh` on the fine cell lattice.
    pub fn kh(&self) -> f64 {
        2.0 * PI * self.order as f64 / self.ppw
    }

    pub fn validate(&self) -> Result<()> {
        if self.order % 2 != 0 || !(2..=8).contains(&self.order) {
            return Err(Error::UnsupportedOrder(self.order));
        }
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        if !(self.ppw > 0.0 && self.ppw.is_finite()) {
            return bad("ppw must be positive");
        }
        if !(self.d > 0.0) {
            return bad("the analysis needs positive damping");
        }
        if !(self.alpha_s >= 0.0 && self.alpha_c >= 0.0) {
            return bad("shifts must be non-negative");
        }
        if self.n_s == 0 {
            return bad("n_s must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.omega_c) {
            return bad("omega_c must lie in [0, 1]");
        }
        Ok(())
    }
}

/// Block views of the five operators of the two-grid method.
#[derive(Clone, Debug)]
pub struct LfaOperators {
    pub params: LfaParams,
    pub a: BlockToeplitzView,
    pub a_s: BlockToeplitzView,
    pub coarse: Option<CoarseViews>,
}

#[derive(Clone, Debug)]
pub struct CoarseViews {
    pub a_c: BlockToeplitzView,
    pub prolongation: BlockToeplitzView,
    pub restriction: BlockToeplitzView,
}

/// Cells per side of the analysis patch.
pub const PATCH_CELLS: usize = 7;

/// All-Neumann patch with `h = 1` and its two anchors.
pub fn patch(kind: ElementKind) -> Result<(StructuredMesh, [Lattice; 2])> {
    let m = StructuredMesh::rectangle(PATCH_CELLS, PATCH_CELLS, 1.0, kind)?.tag_all(BoundaryTag::Neumann);
    let c = (PATCH_CELLS / 2) as i64;
    Ok((m, [[c, c], [c + 1, c]]))
}

impl LfaOperators {
    pub fn new(params: &LfaParams) -> Result<Self> {
        params.validate()?;
        let (mesh, anchors) = patch(params.element)?;
        let kh = params.kh();
        let coeffs = CoefficientField::constant_damped(&mesh, kh, kh * kh * params.d / PI);
        let fine = build_space(&mesh, params.order)?;
        let fcell = UnitCell::fine(&fine);
        let view = |m: &SparseComplexMatrix, r: &UnitCell, c: &UnitCell| extract_blocks(m, r, c, anchors, 1);
        let a = view(&assemble_helmholtz(&fine, &coeffs, 0.0)?, &fcell, &fcell)?;
        let a_s = view(&assemble_helmholtz(&fine, &coeffs, params.alpha_s)?, &fcell, &fcell)?;
        let coarse = match params.coarsening {
            Coarsening::None => None,
            Coarsening::OptimizedFd => {
                let r = (params.order / 2) as usize;
                let cm = coarse_mesh_for(&fine)?;
                let cs = FeSpace::linear(&cm);
                let ccell = UnitCell::coarse_lattice(&cs, r)?;
                let cc = coeffs.refine(&mesh, &cm, r as i64);
                let p = build_prolongation(&fine, &cs)?;
                Some(CoarseViews {
                    a_c: view(&assemble_qsfem(&cs, &cc)?, &ccell, &ccell)?,
                    prolongation: view(&p.to_complex(), &fcell, &ccell)?,
                    restriction: view(&p.transpose().to_complex(), &ccell, &fcell)?,
                })
            }
            Coarsening::GalerkinP => {
                let cs = FeSpace::new(&mesh, params.order / 2)?;
                let ccell = UnitCell::fine(&cs);
                let p = galerkin_inclusion(&fine, &cs)?;
                Some(CoarseViews {
                    a_c: view(&assemble_helmholtz(&cs, &coeffs, params.alpha_c)?, &ccell, &ccell)?,
                    prolongation: view(&p.to_complex(), &fcell, &ccell)?,
                    restriction: view(&p.transpose().to_complex(), &ccell, &fcell)?,
                })
            }
        };
        Ok(Self { params: params.clone(), a, a_s, coarse })
    }

    /// `M̂(θ) = Ŝ^{n_s} K̂ Ŝ^{n_s}`.
    pub fn two_grid_symbol(&self, theta: [f64; 2]) -> Result<DenseMatrix> {
        let n = self.a.nrows;
        let id = DenseMatrix::identity(n);
        let a = self.a.symbol(theta);
        let s = &id - &(&inverse_symbol(&self.a_s.symbol(theta))? * &a);
        let k = match &self.coarse {
            None => id,
            Some(c) => {
                let ac_inv = inverse_symbol(&c.a_c.symbol(theta))?;
                let corr = &(&c.prolongation.symbol(theta) * &ac_inv) * &(&c.restriction.symbol(theta) * &a);
                &id - &corr.scale(Complex64::new(self.params.omega_c, 0.0))
            }
        };
        let sp = s.pow(self.params.n_s);
        Ok(&(&sp * &k) * &sp)
    }

    pub fn spectral_radius(&self, theta: [f64; 2]) -> Result<f64> {
        self.two_grid_symbol(theta)?.spectral_radius()
    }
}

/// Sample points: a uniform grid on `[−π, π)²` and points spread over the
/// annulus `0.8 kh ≤ ‖θ‖ ≤ 1.2 kh`.
pub fn theta_samples(n_grid: usize, n_annulus: usize, kh: f64) -> Vec<[f64; 2]> {
    let step = 2.0 * PI / n_grid as f64;
    let mut out: Vec<[f64; 2]> = (0..n_grid * n_grid)
        .map(|i| [-PI + (i % n_grid) as f64 * step, -PI + (i / n_grid) as f64 * step])
        .collect();
    let golden = PI * (3.0 - 5f64.sqrt());
    for i in 0..n_annulus {
        let r = kh * (0.8 + 0.4 * (i as f64 + 0.5) / n_annulus as f64);
        let phi = golden * i as f64;
        out.push([r * phi.cos(), r * phi.sin()]);
    }
    out
}

/// Default sampling: 64 × 64 grid plus 512 annulus points.
pub fn default_samples(kh: f64) -> Vec<[f64; 2]> {
    theta_samples(64, 512, kh)
}

/// Offset applied to samples where a symbol is numerically singular.
pub const PERTURBATION: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct RateReport {
    pub rho: f64,
    pub theta_max: [f64; 2],
    pub samples: Vec<([f64; 2], f64)>,
    /// Samples evaluated at `θ + PERTURBATION·(1, 1)` instead.
    pub perturbed: Vec<[f64; 2]>,
    /// Samples where even the perturbed point failed.
    pub skipped: Vec<[f64; 2]>,
}

/// Number of best samples used as starting points for local refinement.
pub const REFINE_STARTS: usize = 8;

/// Evaluation budget of one compass search.
pub const REFINE_BUDGET: usize = 240;

/// Compass search maximising `f` from `start` with initial step `step`.
fn compass_max(f: impl Fn([f64; 2]) -> Option<f64>, start: [f64; 2], start_value: f64, mut step: f64) -> ([f64; 2], f64) {
    let (mut x, mut fx) = (start, start_value);
    let mut evals = 0;
    while step > 1e-7 && evals < REFINE_BUDGET {
        let mut moved = false;
        for d in [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]] {
            let y = [x[0] + step * d[0], x[1] + step * d[1]];
            evals += 1;
            if let Some(fy) = f(y) {
                if fy > fx {
                    (x, fx, moved) = (y, fy, true);
                    break;
                }
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    (x, fx)
}

/// `sup_θ ρ(M̂(θ))` over `thetas`, followed by a local compass search from
/// the best samples; `step` is the initial search step.
pub fn two_grid_rate_refined(ops: &LfaOperators, thetas: &[[f64; 2]], step: f64) -> RateReport {
    let mut rep = two_grid_rate(ops, thetas);
    let mut best: Vec<([f64; 2], f64)> = rep.samples.clone();
    best.sort_by(|a, b| b.1.total_cmp(&a.1));
    best.truncate(REFINE_STARTS);
    let refined: Vec<([f64; 2], f64)> = best
        .par_iter()
        .map(|&(t, r)| compass_max(|y| ops.spectral_radius(y).ok(), t, r, step))
        .collect();
    for (t, r) in refined {
        let t = t.map(|x| (x + PI).rem_euclid(2.0 * PI) - PI);
        rep.samples.push((t, r));
        if r > rep.rho {
            rep.rho = r;
            rep.theta_max = t;
        }
    }
    rep
}

/// Default analysis: [`default_samples`] plus local refinement.
pub fn asymptotic_rate(ops: &LfaOperators) -> RateReport {
    two_grid_rate_refined(ops, &default_samples(ops.params.kh()), 2.0 * PI / 64.0)
}

pub fn two_grid_rate(ops: &LfaOperators, thetas: &[[f64; 2]]) -> RateReport {
    enum Outcome {
        Direct(f64),
        Perturbed(f64),
        Failed,
    }
    let outcomes: Vec<Outcome> = thetas
        .par_iter()
        .map(|&t| match ops.spectral_radius(t) {
            Ok(r) => Outcome::Direct(r),
            Err(_) => match ops.spectral_radius([t[0] + PERTURBATION, t[1] + PERTURBATION]) {
                Ok(r) => Outcome::Perturbed(r),
                Err(_) => Outcome::Failed,
            },
        })
        .collect();
    let mut rep = RateReport { rho: 0.0, theta_max: [0.0, 0.0], samples: Vec::new(), perturbed: Vec::new(), skipped: Vec::new() };
    for (&t, o) in thetas.iter().zip(outcomes) {
        let r = match o {
            Outcome::Direct(r) => r,
            Outcome::Perturbed(r) => {
                rep.perturbed.push(t);
                r
            }
            Outcome::Failed => {
                rep.skipped.push(t);
                continue;
            }
        };
        if r > rep.rho {
            rep.rho = r;
            rep.theta_max = t;
        }
        rep.samples.push((t, r));
    }
    rep
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub order: u32,
    pub ppw: f64,
    pub coarsening: Coarsening,
    pub n_s: usize,
    pub omega_c: f64,
    pub rho: f64,
    pub theta1_max: f64,
    pub theta2_max: f64,
}

/// Rates over the Cartesian product of the lists, in that nesting order.
pub fn parameter_sweep(
    base: &LfaParams,
    orders: &[u32],
    ppws: &[f64],
    coarsenings: &[Coarsening],
    n_s_list: &[usize],
    omega_list: &[f64],
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for &order in orders {
        for &ppw in ppws {
            for &coarsening in coarsenings {
                let mut ops = LfaOperators::new(&LfaParams { order, ppw, coarsening, ..base.clone() })?;
                let thetas = default_samples(ops.params.kh());
                for &n_s in n_s_list {
                    for &omega_c in omega_list {
                        ops.params = LfaParams { n_s, omega_c, ..ops.params.clone() };
                        ops.params.validate()?;
                        let rep = two_grid_rate_refined(&ops, &thetas, 2.0 * PI / 64.0);
                        rows.push(SweepRow {
                            order,
                            ppw,
                            coarsening,
                            n_s,
                            omega_c,
                            rho: rep.rho,
                            theta1_max: rep.theta_max[0],
                            theta2_max: rep.theta_max[1],
                        });
                    }
                }
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fespace::assemble_stiffness;
    use crate::linalg::SparseRealMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn close(a: &DenseMatrix, b: &DenseMatrix, tol: f64) -> bool {
        (a - b).max_abs() <= tol * b.max_abs().max(1.0)
    }

    #[test]
    fn unit_cells_partition_dofs() {
        for kind in [ElementKind::Square, ElementKind::Triangle] {
            let (m, [a, _]) = patch(kind).unwrap();
            let s = build_space(&m, 6).unwrap();
            let u = UnitCell::fine(&s);
            assert_eq!(u.size(), 36);
            assert_eq!(u.dofs_at(a).unwrap().len(), 36);
            let total: usize = u.dofs.values().map(Vec::len).sum();
            assert_eq!(total, s.n_dofs());
            let cs = FeSpace::linear(&coarse_mesh_for(&s).unwrap());
            let cu = UnitCell::coarse_lattice(&cs, 3).unwrap();
            assert_eq!(cu.dofs_at(a).unwrap().len(), 9);
            let (owner, l) = cu.locate(cs.vertex_dof([3 * a[0] + 2, 3 * a[1] + 1]).unwrap());
            assert_eq!((owner, l), (a, 2 + 3));
        }
    }

    #[test]
    fn bilinear_stiffness_stencil() {
        let (m, anchors) = patch(ElementKind::Square).unwrap();
        let s = FeSpace::linear(&m);
        let u = UnitCell::fine(&s);
        let v = extract_blocks(&assemble_stiffness(&s), &u, &u, anchors, 1).unwrap();
        assert_eq!(v.blocks.len(), 9);
        for (b, blk) in &v.blocks {
            let expect = if *b == [0, 0] { 8.0 / 3.0 } else { -1.0 / 3.0 };
            assert!((blk[(0, 0)] - c(expect)).norm() < 1e-14);
        }
        for t in [[PI, PI], [0.3, -1.2], [0.0, 0.0]] {
            let direct = 8.0 / 3.0 - 2.0 / 3.0 * (t[0].cos() + t[1].cos()) - 4.0 / 3.0 * t[0].cos() * t[1].cos();
            assert!((v.symbol(t)[(0, 0)] - c(direct)).norm() < 1e-14);
        }
        assert!((v.symbol([PI, PI])[(0, 0)] - c(8.0 / 3.0)).norm() < 1e-14);
    }

    #[test]
    fn identity_has_single_block() {
        let (m, anchors) = patch(ElementKind::Triangle).unwrap();
        let s = build_space(&m, 4).unwrap();
        let u = UnitCell::fine(&s);
        let v = extract_blocks(&SparseComplexMatrix::identity(s.n_dofs()), &u, &u, anchors, 1).unwrap();
        assert_eq!(v.blocks.keys().collect::<Vec<_>>(), vec![&[0, 0]]);
        assert!(close(&v.symbol([0.7, 2.0]), &DenseMatrix::identity(16), 0.0));
        assert!(close(&inverse_symbol(&v.symbol([1.0, 1.0])).unwrap(), &DenseMatrix::identity(16), 1e-15));
    }

    #[test]
    fn window_and_invariance_checks() {
        let (m, anchors) = patch(ElementKind::Square).unwrap();
        let s = FeSpace::linear(&m);
        let u = UnitCell::fine(&s);
        let a = assemble_stiffness(&s);
        assert!(matches!(extract_blocks(&a, &u, &u, anchors, 0), Err(Error::WindowTooSmall(_))));
        // a boundary row breaks translation invariance
        let edge = [[1, 0], [3, 3]];
        assert!(matches!(extract_blocks(&a, &u, &u, edge, 1), Err(Error::NotTranslationInvariant(_))));
    }

    #[test]
    fn bloch_vectors_are_eigenvectors_of_the_blocks() {
        let params = LfaParams { order: 4, ..Default::default() };
        let (mesh, [anchor, _]) = patch(params.element).unwrap();
        let fine = build_space(&mesh, 4).unwrap();
        let kh = params.kh();
        let coeffs = CoefficientField::constant_damped(&mesh, kh, 0.1);
        let a = assemble_helmholtz(&fine, &coeffs, 0.2).unwrap();
        let cs = FeSpace::linear(&coarse_mesh_for(&fine).unwrap());
        let p = build_prolongation(&fine, &cs).unwrap().to_complex();
        let (fu, cu) = (UnitCell::fine(&fine), UnitCell::coarse_lattice(&cs, 2).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..5 {
            let theta = [rng.gen_range(-PI..PI), rng.gen_range(-PI..PI)];
            for (m, rows, cols) in [(&a, &fu, &fu), (&p, &fu, &cu)] {
                let view = extract_blocks(m, rows, cols, [anchor, [anchor[0], anchor[1] + 1]], 1).unwrap();
                let coef: Vec<Complex64> = (0..cols.size()).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
                let bloch: Vec<Complex64> = (0..m.ncols())
                    .map(|d| {
                        let (o, l) = cols.locate(d);
                        Complex64::from_polar(1.0, theta[0] * o[0] as f64 + theta[1] * o[1] as f64) * coef[l]
                    })
                    .collect();
                let out = m.apply(&bloch);
                let want = view.symbol(theta).mul_vec(&coef);
                let phase = Complex64::from_polar(1.0, theta[0] * anchor[0] as f64 + theta[1] * anchor[1] as f64);
                for (j, &g) in rows.dofs_at(anchor).unwrap().iter().enumerate() {
                    assert!((out[g] - phase * want[j]).norm() < 1e-10 * (1.0 + want[j].norm()));
                }
            }
        }
    }

    #[test]
    fn adjoint_composition_and_periodicity() {
        let ops = LfaOperators::new(&LfaParams { order: 6, ppw: 8.0, ..Default::default() }).unwrap();
        let cv = ops.coarse.as_ref().unwrap();
        // I_R A on a larger patch, window 2
        let m = StructuredMesh::rectangle(11, 11, 1.0, ElementKind::Square).unwrap().tag_all(BoundaryTag::Neumann);
        let fine = build_space(&m, 6).unwrap();
        let kh = ops.params.kh();
        let coeffs = CoefficientField::constant_damped(&m, kh, kh * kh * 0.01 / PI);
        let a = assemble_helmholtz(&fine, &coeffs, 0.0).unwrap();
        let cs = FeSpace::linear(&coarse_mesh_for(&fine).unwrap());
        let r: SparseRealMatrix = build_prolongation(&fine, &cs).unwrap().transpose();
        let ra = r.to_complex().matmul(&a);
        let (fu, cu) = (UnitCell::fine(&fine), UnitCell::coarse_lattice(&cs, 3).unwrap());
        let v = extract_blocks(&ra, &cu, &fu, [[5, 5], [6, 5]], 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            let t = [rng.gen_range(-PI..PI), rng.gen_range(-PI..PI)];
            assert!(close(&v.symbol(t), &(&cv.restriction.symbol(t) * &ops.a.symbol(t)), 1e-12));
            assert!(close(&cv.restriction.symbol(t), &cv.prolongation.symbol(t).adjoint(), 1e-14));
            let shifted = [t[0] + 2.0 * PI, t[1] - 2.0 * PI];
            assert!(close(&ops.a.symbol(shifted), &ops.a.symbol(t), 1e-12));
            let prod = &ops.a_s.symbol(t) * &inverse_symbol(&ops.a_s.symbol(t)).unwrap();
            assert!(close(&prod, &DenseMatrix::identity(36), 1e-12));
        }
    }

    #[test]
    fn shift_is_mass_symbol() {
        let p = LfaParams { order: 2, coarsening: Coarsening::None, ..Default::default() };
        let ops = LfaOperators::new(&p).unwrap();
        let (m, anchors) = patch(ElementKind::Square).unwrap();
        let s = build_space(&m, 2).unwrap();
        let u = UnitCell::fine(&s);
        let ones = vec![c(1.0); m.n_cells()];
        let mass = extract_blocks(&crate::fespace::assemble_mass_weighted(&s, &ones), &u, &u, anchors, 1).unwrap();
        let kh = p.kh();
        let t = [0.4, -2.2];
        let expect = &ops.a.symbol(t) - &mass.symbol(t).scale(Complex64::new(0.0, p.alpha_s * kh * kh));
        assert!(close(&ops.a_s.symbol(t), &expect, 1e-13));
    }

    #[test]
    fn damped_symbol_invertible_on_grid() {
        let ops = LfaOperators::new(&LfaParams::default()).unwrap();
        for t in theta_samples(16, 32, ops.params.kh()) {
            inverse_symbol(&ops.a.symbol(t)).unwrap();
        }
    }

    #[test]
    fn singular_symbol_rejected() {
        let mut m = DenseMatrix::identity(3);
        m[(2, 2)] = c(1e-14);
        assert!(inverse_symbol(&m).is_err());
    }

    #[test]
    fn sample_layout() {
        let s = theta_samples(8, 16, 1.0);
        assert_eq!(s.len(), 80);
        assert_eq!(s[0], [-PI, -PI]);
        for t in &s[64..] {
            let r = t[0].hypot(t[1]);
            assert!((0.8..=1.2).contains(&r));
        }
    }

    #[test]
    fn refinement_only_raises_the_estimate() {
        let ops = LfaOperators::new(&LfaParams { order: 2, ppw: 8.0, ..Default::default() }).unwrap();
        let coarse = theta_samples(16, 64, ops.params.kh());
        let plain = two_grid_rate(&ops, &coarse);
        let refined = two_grid_rate_refined(&ops, &coarse, 2.0 * PI / 16.0);
        assert!(refined.rho >= plain.rho);
        assert_eq!(refined.samples.len(), plain.samples.len() + REFINE_STARTS);
        let fine = two_grid_rate(&ops, &theta_samples(256, 1024, ops.params.kh()));
        assert!(refined.rho >= fine.rho - 1e-2, "{} {}", refined.rho, fine.rho);
    }

    #[test]
    fn qsfem_coarsening_converges_at_ten_ppw() {
        let ops = LfaOperators::new(&LfaParams::default()).unwrap();
        let rep = asymptotic_rate(&ops);
        assert!(rep.rho < 1.0, "{}", rep.rho);
        assert!(rep.skipped.is_empty());
    }

    #[test]
    fn second_order_galerkin_diverges() {
        let ops = LfaOperators::new(&LfaParams { order: 2, coarsening: Coarsening::GalerkinP, ..Default::default() }).unwrap();
        let rep = asymptotic_rate(&ops);
        assert!(rep.rho >= 1.0, "{}", rep.rho);
    }

    #[test]
    fn heavy_damping_converges_fast() {
        for coarsening in [Coarsening::OptimizedFd, Coarsening::GalerkinP] {
            let ops = LfaOperators::new(&LfaParams { d: 10.0, coarsening, ..Default::default() }).unwrap();
            let rep = two_grid_rate(&ops, &theta_samples(32, 128, ops.params.kh()));
            assert!(rep.rho < 0.2, "{coarsening:?} {}", rep.rho);
        }
    }

    #[test]
    fn one_dimensional_slice_resonates_near_kh() {
        let ops = LfaOperators::new(&LfaParams { order: 2, coarsening: Coarsening::GalerkinP, ..Default::default() }).unwrap();
        let kh = ops.params.kh();
        let line: Vec<[f64; 2]> = (0..2000).map(|i| [-PI + 2.0 * PI * i as f64 / 2000.0, 0.0]).collect();
        let rep = two_grid_rate(&ops, &line);
        assert!(rep.rho.is_finite());
        let t = rep.theta_max[0].abs();
        assert!((t - kh).abs() < 0.25 * kh, "{t} vs {kh}");
    }

    #[test]
    fn sweep_rows_follow_nesting() {
        let base = LfaParams { d: 1.0, ..Default::default() };
        let rows = parameter_sweep(&base, &[2], &[10.0], &[Coarsening::OptimizedFd], &[1, 2], &[1.0, 0.5]).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!((rows[1].n_s, rows[1].omega_c), (1, 0.5));
        assert_eq!((rows[2].n_s, rows[2].omega_c), (2, 1.0));
        assert!(parameter_sweep(&base, &[], &[10.0], &[Coarsening::OptimizedFd], &[1], &[1.0]).unwrap().is_empty());
    }
}
