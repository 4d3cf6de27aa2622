//! Acceptance criteria. Every test prints one `PASS`/`FAIL` line and then
//! asserts, so a failing criterion shows up both in the log and as a test
//! failure.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use helmtg::dispersion::{max_dispersion_error, DispersionQuery, Scheme};
use helmtg::fespace::{assemble_helmholtz, assemble_mass_weighted, assemble_stiffness, build_space, FeSpace};
use helmtg::lfa1d::{asymptotic_rate as rate_1d, dispersion_zeros, lemma_max, ToyConfig};
use helmtg::lfa2d::{asymptotic_rate, extract_blocks, patch, LfaOperators, LfaParams, UnitCell};
use helmtg::mesh::{BoundaryTag, CoefficientField, ElementKind, StructuredMesh};
use helmtg::qsfem::{golden_max, scaled_symbol, zero_set_distance};
use helmtg::twogrid::{
    build_prolongation, coarse_mesh_for, BoundarySet, Coarsening, ProblemSpec, SmootherKind, SolverConfig, TwoGrid,
};

fn report(id: u32, ok: bool, what: &str, detail: String, start: Instant) {
    println!(
        "{} C{id}: {what} [{detail}] ({:.1}s)",
        if ok { "PASS" } else { "FAIL" },
        start.elapsed().as_secs_f64()
    );
    assert!(ok, "criterion {id} failed: {detail}");
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn rel(a: &[Complex64], b: &[Complex64]) -> f64 {
    let d: Vec<Complex64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&d) / norm(b).max(1e-300)
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    (0..n).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

fn iterations(spec: &ProblemSpec, solver: &SolverConfig) -> (usize, bool) {
    let p = spec.build().unwrap();
    let tg = TwoGrid::new(&p.space, &p.coeffs, solver).unwrap();
    let rep = tg.solve(&p.rhs);
    (rep.iterations, rep.converged)
}

fn solve_spec(wavelengths: f64, boundary: BoundarySet) -> ProblemSpec {
    ProblemSpec { wavelengths, boundary, order: 4, ppw: 10.0, ..Default::default() }
}

fn galerkin_solver() -> SolverConfig {
    SolverConfig { coarsening: Coarsening::GalerkinP, alpha_s: 0.02, alpha_c: 0.02, l_dd: 10, ..Default::default() }
}

#[test]
fn c01_qsfem_scaling_identity() {
    let t = Instant::now();
    let hc = 0.01;
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let eta = 0.3 + 2.2 * (i as f64 + 0.5) / 50.0;
        let k = eta / hc;
        let s = scaled_symbol([0.0, 0.0], k, hc).unwrap();
        worst = worst.max((s + k * k).norm() / (k * k));
    }
    report(1, worst < 1e-12, "scaled QSFEM symbol at zero equals -k^2", format!("max rel dev {worst:.2e}"), t);
}

/// Direct grid search of `|1 − c(θ−ζf−iε)/(θ−ζc−iε)|`, with `θ = ζc + ε tan φ`.
fn brute_force(c: f64, zf: f64, zc: f64, eps: f64) -> f64 {
    let f = |phi: f64| {
        let th = zc + eps * phi.tan();
        let num = Complex64::new(th - zf, -eps);
        let den = Complex64::new(th - zc, -eps);
        (Complex64::new(1.0, 0.0) - num / den * c).norm()
    };
    let n = 20_000;
    let step = PI / n as f64;
    let (mut pb, mut best) = (0.0, 0.0);
    for i in 1..n {
        let phi = -PI / 2.0 + i as f64 * step;
        let v = f(phi);
        if v > best {
            (pb, best) = (phi, v);
        }
    }
    let lo = (pb - step).max(-PI / 2.0 + 1e-12);
    let hi = (pb + step).min(PI / 2.0 - 1e-12);
    best.max(golden_max(f, lo, hi, 1e-13).1)
}

#[test]
fn c02_lemma_reproduction() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let c = rng.gen_range(0.05..1.0);
        let zf = rng.gen_range(0.2..1.2);
        let eps = rng.gen_range(1e-3..5e-2);
        let r = rng.gen_range(0.0..5.0);
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let zc = zf + sign * r * eps;
        let closed = lemma_max(c, r);
        worst = worst.max((brute_force(c, zf, zc, eps) - closed).abs() / closed);
    }
    report(2, worst < 1e-3, "closed-form lemma maximum vs brute force", format!("max rel dev {worst:.2e}"), t);
}

#[test]
fn c03_one_dimensional_rate_tracks_mismatch() {
    let t = Instant::now();
    let ppws = [8.0, 10.0, 12.0, 16.0, 20.0];
    let mut rows = Vec::new();
    for &ppw in &ppws {
        let cfg = ToyConfig::from_ppw(2, ppw, 40.0, 0.01, 0.2);
        let rho = rate_1d(&cfg, 4096).unwrap();
        let r = dispersion_zeros(&cfg).unwrap().r;
        rows.push((ppw, rho, r));
    }
    let ratio_ok = rows.iter().all(|&(_, rho, r)| (0.5..=2.0).contains(&(rho / r)));
    let decreasing = rows.windows(2).all(|w| w[1].1 < w[0].1 && w[1].2 < w[0].2);
    let detail = rows.iter().map(|(p, a, b)| format!("ppw {p}: rho {a:.3} R {b:.3}")).collect::<Vec<_>>().join(", ");
    report(3, ratio_ok && decreasing, "1-D rho/R in [0.5, 2], both decreasing", detail, t);
}

fn lfa_rho(order: u32, ppw: f64, coarsening: Coarsening, n_s: usize, omega_c: f64) -> f64 {
    let params = LfaParams { order, ppw, coarsening, n_s, omega_c, ..Default::default() };
    asymptotic_rate(&LfaOperators::new(&params).unwrap()).rho
}

#[test]
fn c04_lfa_convergence_thresholds() {
    let t = Instant::now();
    let mut ok = true;
    let mut detail = Vec::new();
    for (order, ppws) in [(4, vec![8.0, 10.0]), (6, vec![7.0, 8.0])] {
        for ppw in ppws {
            let opt = lfa_rho(order, ppw, Coarsening::OptimizedFd, 1, 1.0);
            let gal = lfa_rho(order, ppw, Coarsening::GalerkinP, 1, 1.0);
            ok &= opt < 1.0 && gal > opt;
            detail.push(format!("p{order} ppw {ppw}: opt {opt:.3} gal {gal:.3}"));
        }
    }
    report(4, ok, "QSFEM rho < 1 at p=4 ppw>=8 and p=6 ppw>=7, Galerkin larger", detail.join(", "), t);
}

#[test]
fn c05_smoothing_parameters_help_at_six_ppw() {
    let t = Instant::now();
    let a = lfa_rho(6, 6.0, Coarsening::OptimizedFd, 2, 0.8);
    let b = lfa_rho(6, 6.0, Coarsening::OptimizedFd, 1, 1.0);
    report(5, a <= b + 0.02, "p=6 ppw=6: rho(2, 0.8) <= rho(1, 1) + 0.02", format!("{a:.3} vs {b:.3}"), t);
}

#[test]
fn c06_dispersion_ordering() {
    let t = Instant::now();
    let fe = |order| Scheme::Fe { order, element: ElementKind::Square };
    let schemes = [Scheme::Qsfem, fe(8), fe(6), fe(4), fe(2)];
    let ppws = [6.0, 8.0, 10.0, 14.0];
    let errors: Vec<Vec<f64>> = schemes
        .iter()
        .map(|&s| ppws.iter().map(|&p| max_dispersion_error(&DispersionQuery::new(s, p)).unwrap()).collect())
        .collect();
    let at8: Vec<f64> = errors.iter().map(|e| e[1]).collect();
    let ordered = at8.windows(2).all(|w| w[0] < w[1]);
    let decreasing = errors.iter().all(|e| e.windows(2).all(|w| w[1] < w[0]));
    let mut cross: f64 = 0.0;
    for &ppw in &ppws {
        let q = DispersionQuery { k: 25.0, ..DispersionQuery::new(Scheme::Qsfem, ppw) };
        let a = max_dispersion_error(&q).unwrap();
        let b = zero_set_distance(q.k, q.h()).unwrap() / q.k;
        cross = cross.max((a - b).abs() / b);
    }
    let detail = format!(
        "ppw 8: {}; cross-check rel dev {cross:.1e}",
        schemes.iter().zip(&at8).map(|(s, e)| format!("{} {e:.2e}", s.label())).collect::<Vec<_>>().join(" < ")
    );
    report(6, ordered && decreasing && cross < 1e-6, "dispersion ordering, monotone curves, QSFEM cross-check", detail, t);
}

#[test]
fn c07_iteration_count() {
    let t = Instant::now();
    let (its, conv) = iterations(&solve_spec(20.0, BoundarySet::AllAbsorbing), &SolverConfig::default());
    report(7, conv && (4..=10).contains(&its), "20 wavelengths, QSFEM coarsening, iterations in [4, 10]", format!("{its} iterations"), t);
}

#[test]
fn c08_size_robustness() {
    let t = Instant::now();
    let sizes = [10.0, 20.0, 40.0];
    let opt: Vec<(usize, bool)> =
        sizes.iter().map(|&w| iterations(&solve_spec(w, BoundarySet::AllAbsorbing), &SolverConfig::default())).collect();
    let gal: Vec<(usize, bool)> =
        sizes.iter().map(|&w| iterations(&solve_spec(w, BoundarySet::AllAbsorbing), &galerkin_solver())).collect();
    let (mx, mn) = (opt.iter().map(|o| o.0).max().unwrap(), opt.iter().map(|o| o.0).min().unwrap());
    let ratio = mx as f64 / mn as f64;
    let increasing = gal.windows(2).all(|w| w[1].0 > w[0].0);
    let conv = opt.iter().chain(&gal).all(|o| o.1);
    let detail = format!("opt {:?} (ratio {ratio:.3}), gal {:?}", opt.iter().map(|o| o.0).collect::<Vec<_>>(), gal.iter().map(|o| o.0).collect::<Vec<_>>());
    report(8, conv && ratio <= 1.5 && increasing, "QSFEM flat over size, Galerkin increasing", detail, t);
}

#[test]
fn c09_boundary_condition_effect() {
    let t = Instant::now();
    let (abs, c1) = iterations(&solve_spec(20.0, BoundarySet::AllAbsorbing), &galerkin_solver());
    let (dir, c2) = iterations(&solve_spec(20.0, BoundarySet::DirichletTwoSides), &galerkin_solver());
    let ratio = dir as f64 / abs as f64;
    let sets = [BoundarySet::AllAbsorbing, BoundarySet::DirichletTwoSides, BoundarySet::NeumannTwoSides, BoundarySet::Layers];
    let opt: Vec<(usize, bool)> = sets.iter().map(|&b| iterations(&solve_spec(20.0, b), &SolverConfig::default())).collect();
    let (mx, mn) = (opt.iter().map(|o| o.0).max().unwrap(), opt.iter().map(|o| o.0).min().unwrap());
    let spread = (mx - mn) as f64 / mn as f64;
    let conv = c1 && c2 && opt.iter().all(|o| o.1);
    let detail = format!(
        "gal dirichlet/absorbing {dir}/{abs} = {ratio:.2}; opt {:?} spread {:.1}%",
        opt.iter().map(|o| o.0).collect::<Vec<_>>(),
        100.0 * spread
    );
    report(9, conv && (1.4..=2.6).contains(&ratio) && spread < 0.3, "boundary-condition effect", detail, t);
}

#[test]
fn c10_two_grid_matches_lfa() {
    let t = Instant::now();
    let p = solve_spec(20.0, BoundarySet::AllAbsorbing).build().unwrap();
    let solver = SolverConfig { smoother: SmootherKind::ExactShifted, ..Default::default() };
    let tg = TwoGrid::new(&p.space, &p.coeffs, &solver).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let e0 = random_vec(&mut rng, tg.n_dofs());
    let measured = tg.error_contraction(&e0, 20);
    let lfa = lfa_rho(4, 10.0, Coarsening::OptimizedFd, 1, 1.0);
    let ok = (measured - lfa).abs() <= 0.15;
    report(10, ok, "measured contraction within 0.15 of LFA rho", format!("measured {measured:.3}, lfa {lfa:.3}"), t);
}

#[test]
fn c11_structural_properties() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut notes = Vec::new();

    // fixed point and linearity of one two-grid step
    let p = ProblemSpec { wavelengths: 3.0, ..Default::default() }.build().unwrap();
    let tg = TwoGrid::new(&p.space, &p.coeffs, &SolverConfig::default()).unwrap();
    let u = random_vec(&mut rng, tg.n_dofs());
    let f = tg.a.apply(&u);
    let fixed = rel(&tg.step(&u, &f), &u);
    let (v, g) = (random_vec(&mut rng, tg.n_dofs()), random_vec(&mut rng, tg.n_dofs()));
    let s = Complex64::new(0.3, -1.7);
    let lhs = tg.step(&u.iter().zip(&v).map(|(a, b)| a + b * s).collect::<Vec<_>>(), &f.iter().zip(&g).map(|(a, b)| a + b * s).collect::<Vec<_>>());
    let rhs: Vec<Complex64> = tg.step(&u, &f).iter().zip(tg.step(&v, &g)).map(|(a, b)| a + b * s).collect();
    let linear = rel(&lhs, &rhs);
    notes.push(format!("fixed point {fixed:.1e}, linearity {linear:.1e}"));
    let mut ok = fixed < 1e-12 && linear < 1e-12;

    // prolongation reproduces degree-p/2 polynomials
    let mut interp: f64 = 0.0;
    for order in [2, 4, 6, 8] {
        let m = StructuredMesh::unit_square(3, ElementKind::Square).unwrap().tag_all(BoundaryTag::Absorbing);
        let fs = build_space(&m, order).unwrap();
        let cs = FeSpace::linear(&coarse_mesh_for(&fs).unwrap());
        let ip = build_prolongation(&fs, &cs).unwrap();
        let q = (order / 2) as i32;
        let poly = |x: [f64; 2]| (0..=q).map(|a| (2.0 + a as f64) * x[0].powi(a) * x[1].powi(q - a)).sum::<f64>() + 0.25;
        let h = cs.mesh().h();
        let mut uc = vec![Complex64::new(0.0, 0.0); cs.n_dofs()];
        for v in cs.mesh().vertices() {
            uc[cs.vertex_dof(v).unwrap()] = Complex64::new(poly([v[0] as f64 * h, v[1] as f64 * h]), 0.0);
        }
        let uf = ip.apply(&uc);
        for x in [[0.13, 0.71], [0.5, 0.5], [0.88, 0.29]] {
            interp = interp.max((fs.evaluate(&uf, x).unwrap().re - poly(x)).abs());
        }
    }
    notes.push(format!("polynomial reproduction {interp:.1e}"));
    ok &= interp < 1e-10;

    // Bloch symbol against the assembled operator on a Bloch wave
    let mut bloch: f64 = 0.0;
    for (kind, order) in [(ElementKind::Square, 4), (ElementKind::Triangle, 6)] {
        let (mesh, anchors) = patch(kind).unwrap();
        let space = build_space(&mesh, order).unwrap();
        let a = assemble_helmholtz(&space, &CoefficientField::constant_damped(&mesh, 1.3, 0.02), 0.2).unwrap();
        let cell = UnitCell::fine(&space);
        let view = extract_blocks(&a, &cell, &cell, anchors, 1).unwrap();
        let theta = [0.7, -2.1];
        let local = random_vec(&mut rng, cell.size());
        let wave: Vec<Complex64> = (0..space.n_dofs())
            .map(|d| {
                let (o, l) = cell.locate(d);
                local[l] * Complex64::from_polar(1.0, theta[0] * o[0] as f64 + theta[1] * o[1] as f64)
            })
            .collect();
        let aw = a.apply(&wave);
        let sym = view.symbol(theta).mul_vec(&local);
        let c = anchors[0];
        let phase = Complex64::from_polar(1.0, theta[0] * c[0] as f64 + theta[1] * c[1] as f64);
        let got: Vec<Complex64> = cell.dofs_at(c).unwrap().iter().map(|&d| aw[d]).collect();
        let want: Vec<Complex64> = sym.iter().map(|s| s * phase).collect();
        bloch = bloch.max(rel(&got, &want));
    }
    notes.push(format!("Bloch consistency {bloch:.1e}"));
    ok &= bloch < 1e-10;

    // bilinear stiffness and mass stencils
    let h = 0.25;
    let m = StructuredMesh::rectangle(4, 4, h, ElementKind::Square).unwrap().tag_all(BoundaryTag::Neumann);
    let space = FeSpace::linear(&m);
    let st = assemble_stiffness(&space);
    let ms = assemble_mass_weighted(&space, &vec![Complex64::new(1.0, 0.0); m.n_cells()]);
    let centre = space.vertex_dof([2, 2]).unwrap();
    let mut stencil: f64 = 0.0;
    for di in -1..=1i64 {
        for dj in -1..=1i64 {
            let d = space.vertex_dof([2 + di, 2 + dj]).unwrap();
            let (s_want, m_want) = match (di.abs(), dj.abs()) {
                (0, 0) => (8.0 / 3.0, 4.0 / 9.0),
                (1, 1) => (-1.0 / 3.0, 1.0 / 36.0),
                _ => (-1.0 / 3.0, 1.0 / 9.0),
            };
            let s = st.row(centre).find(|e| e.0 == d).map_or(0.0, |e| e.1.re);
            let mm = ms.row(centre).find(|e| e.0 == d).map_or(0.0, |e| e.1.re);
            stencil = stencil.max((s - s_want).abs()).max((mm - h * h * m_want).abs());
        }
    }
    notes.push(format!("p=1 stencils {stencil:.1e}"));
    ok &= stencil < 1e-14;

    report(11, ok, "structural properties", notes.join(", "), t);
}
