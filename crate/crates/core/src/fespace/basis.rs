//! Hierarchical shape functions on the reference cell `[0,1]²`.
//!
//! Every function is a product of factors `f(a0 + a1·x + a2·y)` where `f` is
//! the identity, a Legendre polynomial, an integrated Legendre polynomial or
//! the triangle edge kernel. Values and gradients follow from the product rule.

/// Which part of the reference cell an element occupies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ElementShape {
    Square,
    /// Triangle `(0,0), (1,0), (1,1)` below the diagonal.
    LowerTriangle,
    /// Triangle `(0,0), (1,1), (0,1)` above the diagonal.
    UpperTriangle,
}

impl ElementShape {
    pub fn contains(self, [x, y]: [f64; 2]) -> bool {
        let inside = (0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y);
        match self {
            ElementShape::Square => inside,
            ElementShape::LowerTriangle => inside && y <= x,
            ElementShape::UpperTriangle => inside && y >= x,
        }
    }

    /// Cell sides (as `Side` ordinals bottom/right/top/left) on the element boundary.
    pub fn sides(self) -> &'static [CellSide] {
        match self {
            ElementShape::Square => &[CellSide::Bottom, CellSide::Right, CellSide::Top, CellSide::Left],
            ElementShape::LowerTriangle => &[CellSide::Bottom, CellSide::Right],
            ElementShape::UpperTriangle => &[CellSide::Top, CellSide::Left],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CellSide {
    Bottom,
    Right,
    Top,
    Left,
}

impl CellSide {
    /// Point on the side at arclength parameter `s ∈ [0,1]`.
    pub fn point(self, s: f64) -> [f64; 2] {
        match self {
            CellSide::Bottom => [s, 0.0],
            CellSide::Right => [1.0, s],
            CellSide::Top => [s, 1.0],
            CellSide::Left => [0.0, s],
        }
    }
}

/// Entity of the reference cell a shape function is attached to, with
/// lattice offsets relative to the cell's lower-left corner.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LocalEntity {
    Vertex([i64; 2]),
    /// Horizontal edge starting at `(0, dy)`.
    Horizontal(i64),
    /// Vertical edge starting at `(dx, 0)`.
    Vertical(i64),
    Diagonal,
    Interior,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Kind {
    Identity,
    Legendre(u32),
    IntegratedLegendre(u32),
    EdgeKernel(u32),
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Factor {
    kind: Kind,
    a: [f64; 3],
}

/// `(P_n(t), P_n'(t), P_n''(t))`.
pub fn legendre(n: u32, t: f64) -> [f64; 3] {
    let (mut p0, mut d0, mut s0) = (1.0, 0.0, 0.0);
    if n == 0 {
        return [p0, d0, s0];
    }
    let (mut p1, mut d1, mut s1) = (t, 1.0, 0.0);
    for m in 1..n {
        let m = m as f64;
        let p2 = ((2.0 * m + 1.0) * t * p1 - m * p0) / (m + 1.0);
        let d2 = d0 + (2.0 * m + 1.0) * p1;
        let s2 = s0 + (2.0 * m + 1.0) * d1;
        (p0, d0, s0) = (p1, d1, s1);
        (p1, d1, s1) = (p2, d2, s2);
    }
    [p1, d1, s1]
}

impl Factor {
    fn affine(a0: f64, ax: f64, ay: f64) -> Self {
        Self { kind: Kind::Identity, a: [a0, ax, ay] }
    }

    fn of(kind: Kind, a0: f64, ax: f64, ay: f64) -> Self {
        Self { kind, a: [a0, ax, ay] }
    }

    fn eval(&self, x: f64, y: f64) -> (f64, [f64; 2]) {
        let t = self.a[0] + self.a[1] * x + self.a[2] * y;
        let (v, d) = match self.kind {
            Kind::Identity => (t, 1.0),
            Kind::Legendre(n) => {
                let l = legendre(n, t);
                (l[0], l[1])
            }
            Kind::IntegratedLegendre(k) => {
                let hi = legendre(k, t);
                let lo = legendre(k - 2, t);
                ((hi[0] - lo[0]) / (2 * k - 1) as f64, legendre(k - 1, t)[0])
            }
            Kind::EdgeKernel(k) => {
                let l = legendre(k - 1, t);
                let c = -4.0 / (k * (k - 1)) as f64;
                (c * l[1], c * l[2])
            }
        };
        (v, [d * self.a[1], d * self.a[2]])
    }
}

#[derive(Clone, Debug)]
pub struct ShapeFunction {
    pub entity: LocalEntity,
    /// Position within the entity's dof list.
    pub index: usize,
    /// Polynomial degree for edge functions, hierarchy level for interior ones.
    pub level: u32,
    factors: Vec<Factor>,
}

impl ShapeFunction {
    pub fn value_grad(&self, [x, y]: [f64; 2]) -> (f64, [f64; 2]) {
        let mut v = 1.0;
        let mut g = [0.0, 0.0];
        for f in &self.factors {
            let (fv, fg) = f.eval(x, y);
            g = [g[0] * fv + v * fg[0], g[1] * fv + v * fg[1]];
            v *= fv;
        }
        (v, g)
    }

    pub fn value(&self, x: [f64; 2]) -> f64 {
        self.value_grad(x).0
    }
}

#[derive(Clone, Debug)]
pub struct ReferenceBasis {
    pub order: u32,
    pub shape: ElementShape,
    pub functions: Vec<ShapeFunction>,
}

pub fn edge_dofs(p: u32) -> usize {
    p.saturating_sub(1) as usize
}

pub fn interior_dofs(p: u32, shape: ElementShape) -> usize {
    let p = p as usize;
    match shape {
        ElementShape::Square => p.saturating_sub(1).pow(2),
        _ if p < 3 => 0,
        _ => (p - 1) * (p - 2) / 2,
    }
}

impl ReferenceBasis {
    pub fn new(order: u32, shape: ElementShape) -> Self {
        assert!((1..=8).contains(&order), "order {order} out of range");
        let functions = match shape {
            ElementShape::Square => square_functions(order),
            ElementShape::LowerTriangle => triangle_functions(order, false),
            ElementShape::UpperTriangle => triangle_functions(order, true),
        };
        Self { order, shape, functions }
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    /// Local indices of the functions spanning the order-`q` subspace.
    pub fn subspace(&self, q: u32) -> Vec<usize> {
        let n_int = interior_dofs(q, self.shape);
        (0..self.len())
            .filter(|&i| {
                let f = &self.functions[i];
                match f.entity {
                    LocalEntity::Vertex(_) => true,
                    LocalEntity::Interior => f.index < n_int,
                    _ => f.index < edge_dofs(q),
                }
            })
            .collect()
    }
}

fn square_functions(p: u32) -> Vec<ShapeFunction> {
    let one_minus_x = Factor::affine(1.0, -1.0, 0.0);
    let one_minus_y = Factor::affine(1.0, 0.0, -1.0);
    let x = Factor::affine(0.0, 1.0, 0.0);
    let y = Factor::affine(0.0, 0.0, 1.0);
    let mut out = Vec::new();
    let vertex = |e: [i64; 2], f: Vec<Factor>| ShapeFunction { entity: LocalEntity::Vertex(e), index: 0, level: 1, factors: f };
    out.push(vertex([0, 0], vec![one_minus_x, one_minus_y]));
    out.push(vertex([1, 0], vec![x, one_minus_y]));
    out.push(vertex([1, 1], vec![x, y]));
    out.push(vertex([0, 1], vec![one_minus_x, y]));
    for k in 2..=p {
        let nx = Factor::of(Kind::IntegratedLegendre(k), -1.0, 2.0, 0.0);
        let ny = Factor::of(Kind::IntegratedLegendre(k), -1.0, 0.0, 2.0);
        let idx = (k - 2) as usize;
        let edge = |entity, f: Vec<Factor>| ShapeFunction { entity, index: idx, level: k, factors: f };
        out.push(edge(LocalEntity::Horizontal(0), vec![nx, one_minus_y]));
        out.push(edge(LocalEntity::Horizontal(1), vec![nx, y]));
        out.push(edge(LocalEntity::Vertical(0), vec![ny, one_minus_x]));
        out.push(edge(LocalEntity::Vertical(1), vec![ny, x]));
    }
    let mut index = 0;
    for level in 2..=p {
        for a in 2..=level {
            for b in 2..=level {
                if a.max(b) != level {
                    continue;
                }
                out.push(ShapeFunction {
                    entity: LocalEntity::Interior,
                    index,
                    level,
                    factors: vec![
                        Factor::of(Kind::IntegratedLegendre(a), -1.0, 2.0, 0.0),
                        Factor::of(Kind::IntegratedLegendre(b), -1.0, 0.0, 2.0),
                    ],
                });
                index += 1;
            }
        }
    }
    out
}

fn triangle_functions(p: u32, upper: bool) -> Vec<ShapeFunction> {
    // barycentric coordinates as affine maps [a0, ax, ay]
    let (verts, lam): ([[i64; 2]; 3], [[f64; 3]; 3]) = if upper {
        ([[0, 0], [1, 1], [0, 1]], [[1.0, 0.0, -1.0], [0.0, 1.0, 0.0], [0.0, -1.0, 1.0]])
    } else {
        ([[0, 0], [1, 0], [1, 1]], [[1.0, -1.0, 0.0], [0.0, 1.0, -1.0], [0.0, 0.0, 1.0]])
    };
    let lf = |i: usize| Factor::affine(lam[i][0], lam[i][1], lam[i][2]);
    let mut out: Vec<ShapeFunction> = (0..3)
        .map(|i| ShapeFunction { entity: LocalEntity::Vertex(verts[i]), index: 0, level: 1, factors: vec![lf(i)] })
        .collect();
    // edges as (from, to) in global orientation
    let edges: [(usize, usize, LocalEntity); 3] = if upper {
        [(0, 1, LocalEntity::Diagonal), (2, 1, LocalEntity::Horizontal(1)), (0, 2, LocalEntity::Vertical(0))]
    } else {
        [(0, 1, LocalEntity::Horizontal(0)), (1, 2, LocalEntity::Vertical(1)), (0, 2, LocalEntity::Diagonal)]
    };
    for k in 2..=p {
        for &(a, b, entity) in &edges {
            let t = [lam[b][0] - lam[a][0], lam[b][1] - lam[a][1], lam[b][2] - lam[a][2]];
            out.push(ShapeFunction {
                entity,
                index: (k - 2) as usize,
                level: k,
                factors: vec![lf(a), lf(b), Factor::of(Kind::EdgeKernel(k), t[0], t[1], t[2])],
            });
        }
    }
    let mut index = 0;
    if p >= 3 {
        for level in 0..=p - 3 {
            for a in (0..=level).rev() {
                let b = level - a;
                out.push(ShapeFunction {
                    entity: LocalEntity::Interior,
                    index,
                    level,
                    factors: vec![
                        lf(0),
                        lf(1),
                        lf(2),
                        Factor::of(Kind::Legendre(a), -1.0, 2.0, 0.0),
                        Factor::of(Kind::Legendre(b), -1.0, 0.0, 2.0),
                    ],
                });
                index += 1;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;
    use num_complex::Complex64;

    const SHAPES: [ElementShape; 3] = [ElementShape::Square, ElementShape::LowerTriangle, ElementShape::UpperTriangle];

    fn vertices(shape: ElementShape) -> Vec<[f64; 2]> {
        match shape {
            ElementShape::Square => vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            ElementShape::LowerTriangle => vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]],
            ElementShape::UpperTriangle => vec![[0.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
        }
    }

    fn boundary_samples(shape: ElementShape) -> Vec<[f64; 2]> {
        let v = vertices(shape);
        let mut pts = Vec::new();
        for i in 0..v.len() {
            let (a, b) = (v[i], v[(i + 1) % v.len()]);
            for s in [0.13, 0.5, 0.77] {
                pts.push([a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]);
            }
        }
        pts
    }

    #[test]
    fn legendre_matches_closed_forms() {
        let t = 0.3_f64;
        assert!((legendre(2, t)[0] - 0.5 * (3.0 * t * t - 1.0)).abs() < 1e-15);
        assert!((legendre(3, t)[1] - 0.5 * (15.0 * t * t - 3.0)).abs() < 1e-14);
        assert!((legendre(3, t)[2] - 15.0 * t).abs() < 1e-14);
    }

    #[test]
    fn counts() {
        for p in 1..=8 {
            let sq = ReferenceBasis::new(p, ElementShape::Square);
            assert_eq!(sq.len(), ((p + 1) * (p + 1)) as usize);
            let tri = ReferenceBasis::new(p, ElementShape::LowerTriangle);
            assert_eq!(tri.len(), ((p + 1) * (p + 2) / 2) as usize);
        }
    }

    #[test]
    fn vertex_functions_are_hats() {
        for shape in SHAPES {
            let b = ReferenceBasis::new(4, shape);
            let v = vertices(shape);
            for f in &b.functions {
                for (j, x) in v.iter().enumerate() {
                    let expect = match f.entity {
                        LocalEntity::Vertex(e) if [e[0] as f64, e[1] as f64] == *x => 1.0,
                        _ => 0.0,
                    };
                    assert!((f.value(*x) - expect).abs() < 1e-14, "{shape:?} {:?} at vertex {j}", f.entity);
                }
            }
        }
    }

    #[test]
    fn interior_functions_vanish_on_boundary() {
        for shape in SHAPES {
            let b = ReferenceBasis::new(8, shape);
            for f in b.functions.iter().filter(|f| f.entity == LocalEntity::Interior) {
                for x in boundary_samples(shape) {
                    assert!(f.value(x).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        for shape in SHAPES {
            let b = ReferenceBasis::new(6, shape);
            let x = match shape {
                ElementShape::UpperTriangle => [0.21, 0.63],
                _ => [0.63, 0.21],
            };
            let step = 1e-6;
            for f in &b.functions {
                let (_, g) = f.value_grad(x);
                let gx = (f.value([x[0] + step, x[1]]) - f.value([x[0] - step, x[1]])) / (2.0 * step);
                let gy = (f.value([x[0], x[1] + step]) - f.value([x[0], x[1] - step])) / (2.0 * step);
                assert!((g[0] - gx).abs() < 1e-6 && (g[1] - gy).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn triangle_edge_traces_match_square() {
        // the shared trace on a lattice edge must be the same from both sides
        let sq = ReferenceBasis::new(5, ElementShape::Square);
        let lo = ReferenceBasis::new(5, ElementShape::LowerTriangle);
        let up = ReferenceBasis::new(5, ElementShape::UpperTriangle);
        let find = |b: &ReferenceBasis, e: LocalEntity, i: usize| b.functions.iter().find(|f| f.entity == e && f.index == i).unwrap().clone();
        for i in 0..4 {
            for s in [0.1, 0.4, 0.9] {
                let a = find(&sq, LocalEntity::Horizontal(0), i).value([s, 0.0]);
                assert!((a - find(&lo, LocalEntity::Horizontal(0), i).value([s, 0.0])).abs() < 1e-14);
                assert!((a - find(&up, LocalEntity::Horizontal(1), i).value([s, 1.0])).abs() < 1e-14);
                assert!((a - find(&lo, LocalEntity::Vertical(1), i).value([1.0, s])).abs() < 1e-14);
                assert!((a - find(&up, LocalEntity::Vertical(0), i).value([0.0, s])).abs() < 1e-14);
                let d1 = find(&lo, LocalEntity::Diagonal, i).value([s, s]);
                let d2 = find(&up, LocalEntity::Diagonal, i).value([s, s]);
                assert!((d1 - d2).abs() < 1e-14);
            }
        }
    }

    fn spans(b: &ReferenceBasis, monomials: &[(i32, i32)]) -> bool {
        // the basis spans the monomial space iff the collocation matrix at
        // enough generic points has full rank n = dim; we check that the basis
        // collocation matrix is square-invertible and every monomial is
        // reproduced by solving for coefficients
        let n = b.len();
        assert_eq!(n, monomials.len());
        let pts: Vec<[f64; 2]> = (0..n)
            .map(|i| {
                let u = ((i as f64 + 0.5) * 0.618_033_988_75).fract();
                let v = ((i as f64 + 0.5) * 0.754_877_666_2).fract();
                match b.shape {
                    ElementShape::Square => [u, v],
                    ElementShape::LowerTriangle => [u.max(v), u.min(v)],
                    ElementShape::UpperTriangle => [u.min(v), u.max(v)],
                }
            })
            .collect();
        let v = DenseMatrix::from_fn(n, n, |r, c| Complex64::new(b.functions[c].value(pts[r]), 0.0));
        let Ok(lu) = v.lu() else { return false };
        let check = [0.37, 0.29];
        monomials.iter().all(|&(a, e)| {
            let rhs: Vec<Complex64> = pts.iter().map(|x| Complex64::new(x[0].powi(a) * x[1].powi(e), 0.0)).collect();
            let c = lu.solve(&rhs);
            let approx: f64 = b.functions.iter().zip(&c).map(|(f, ci)| f.value(check) * ci.re).sum();
            (approx - check[0].powi(a) * check[1].powi(e)).abs() < 1e-8
        })
    }

    #[test]
    fn spans_polynomial_spaces() {
        for p in 1..=8i32 {
            let q: Vec<_> = (0..=p).flat_map(|a| (0..=p).map(move |b| (a, b))).collect();
            assert!(spans(&ReferenceBasis::new(p as u32, ElementShape::Square), &q), "Q_{p}");
            let pp: Vec<_> = (0..=p).flat_map(|a| (0..=p - a).map(move |b| (a, b))).collect();
            assert!(spans(&ReferenceBasis::new(p as u32, ElementShape::LowerTriangle), &pp), "P_{p} lower");
            assert!(spans(&ReferenceBasis::new(p as u32, ElementShape::UpperTriangle), &pp), "P_{p} upper");
        }
    }

    #[test]
    fn subspace_is_lower_order_basis() {
        for shape in SHAPES {
            let hi = ReferenceBasis::new(8, shape);
            let lo = ReferenceBasis::new(4, shape);
            let sub = hi.subspace(4);
            assert_eq!(sub.len(), lo.len());
            for (&i, g) in sub.iter().zip(&lo.functions) {
                let f = &hi.functions[i];
                assert_eq!((f.entity, f.index), (g.entity, g.index));
                assert!((f.value([0.7, 0.4]) - g.value([0.7, 0.4])).abs() < 1e-14);
            }
        }
    }
}
