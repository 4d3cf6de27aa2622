//! Subcommand implementations. Each writes one CSV table.

use std::io::Write;

use serde::Serialize;

use helmtg::dispersion::{delta_and_r, find_zero_curve_with, DispersionQuery, Scheme};
use helmtg::lfa1d::{asymptotic_rate as rate_1d, dispersion_zeros, ToyConfig};
use helmtg::lfa2d::{asymptotic_rate, parameter_sweep, LfaOperators, LfaParams};
use helmtg::mesh::ElementKind;
use helmtg::twogrid::{Coarsening, ProblemSpec, SolverConfig, TwoGrid};

use crate::config::{
    BenchSection, DispersionOutput, DispersionSection, Lfa1dSection, Lfa2dSection, SolveOutput, SolveSection,
};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("solver did not converge after {0} iterations")]
    NotConverged(usize),
    #[error("{0}")]
    Run(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::NotConverged(_) => 3,
            CliError::Run(_) => 1,
        }
    }
}

impl From<helmtg::Error> for CliError {
    fn from(e: helmtg::Error) -> Self {
        use helmtg::Error as E;
        match e {
            E::InvalidParameter(_) | E::UnsupportedOrder(_) | E::DegenerateStencil { .. } => CliError::Config(e.to_string()),
            _ => CliError::Run(e.to_string()),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Run(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Run(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn positive(name: &str, v: f64) -> CliResult<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name} must be positive, got {v}")))
    }
}

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().has_headers(false).from_writer(out)
}

fn header<W: Write>(w: &mut csv::Writer<W>, cols: &[&str]) -> CliResult<()> {
    Ok(w.write_record(cols)?)
}

fn check_problem(p: &ProblemSpec) -> CliResult<()> {
    positive("wavelengths", p.wavelengths)?;
    positive("ppw", p.ppw)
}

#[derive(Serialize)]
struct HistoryRow {
    iter: usize,
    relres: f64,
}

#[derive(Serialize)]
struct SolutionRow {
    x: f64,
    y: f64,
    u_re: f64,
    u_im: f64,
}

/// Runs one solve. Returns the summary line.
pub fn solve<W: Write>(cfg: &SolveSection, out: W) -> CliResult<String> {
    check_problem(&cfg.problem)?;
    cfg.solver.validate()?;
    let problem = cfg.problem.build()?;
    let tg = TwoGrid::new(&problem.space, &problem.coeffs, &cfg.solver)?;
    let report = tg.solve(&problem.rhs);
    let mut w = writer(out);
    match cfg.output {
        SolveOutput::History => {
            header(&mut w, &["iter", "relres"])?;
            for (iter, &relres) in report.history.iter().enumerate() {
                w.serialize(HistoryRow { iter, relres })?;
            }
        }
        SolveOutput::Solution => {
            header(&mut w, &["x", "y", "u_re", "u_im"])?;
            let mesh = problem.space.mesh();
            for v in mesh.vertices() {
                let [x, y] = mesh.point(v);
                let u = problem.space.vertex_dof(v).map_or(Default::default(), |d| report.u[d]);
                w.serialize(SolutionRow { x, y, u_re: u.re, u_im: u.im })?;
            }
        }
    }
    w.flush()?;
    let summary = format!(
        "order={} ppw={} wavelengths={} coarsening={} iters={}",
        cfg.problem.order,
        cfg.problem.ppw,
        cfg.problem.wavelengths,
        coarsening_name(cfg.solver.coarsening),
        report.iterations
    );
    if !report.converged {
        return Err(CliError::NotConverged(report.iterations));
    }
    Ok(summary)
}

fn coarsening_name(c: Coarsening) -> &'static str {
    match c {
        Coarsening::OptimizedFd => "optimized_fd",
        Coarsening::GalerkinP => "galerkin_p",
        Coarsening::None => "none",
    }
}

#[derive(Serialize)]
struct Lfa1dRow {
    m: u32,
    ppw: f64,
    rho: f64,
    r: f64,
}

pub fn lfa1d<W: Write>(cfg: &Lfa1dSection, out: W) -> CliResult<()> {
    positive("k", cfg.k)?;
    positive("d", cfg.d)?;
    if cfg.n_theta < 64 {
        return Err(CliError::Config("n_theta must be at least 64".into()));
    }
    if !(cfg.alpha_s >= 0.0) {
        return Err(CliError::Config("alpha_s must be non-negative".into()));
    }
    for &m in &cfg.m {
        if !(m == 1 || m == 2) {
            return Err(CliError::Config(format!("stencil half-width must be 1 or 2, got {m}")));
        }
    }
    for &p in &cfg.ppw {
        positive("ppw", p)?;
    }
    let mut w = writer(out);
    header(&mut w, &["m", "ppw", "rho", "r"])?;
    for &m in &cfg.m {
        for &ppw in &cfg.ppw {
            let toy = ToyConfig::from_ppw(m, ppw, cfg.k, cfg.d, cfg.alpha_s);
            let rho = rate_1d(&toy, cfg.n_theta)?;
            let r = dispersion_zeros(&toy).map_or(f64::NAN, |z| z.r);
            w.serialize(Lfa1dRow { m, ppw, rho, r })?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn lfa2d<W: Write>(cfg: &Lfa2dSection, out: W) -> CliResult<()> {
    cfg.base.validate()?;
    let mut w = writer(out);
    header(&mut w, &["order", "ppw", "coarsening", "n_s", "omega_c", "rho", "theta1_max", "theta2_max"])?;
    for row in parameter_sweep(&cfg.base, &cfg.orders, &cfg.ppw, &cfg.coarsenings, &cfg.n_s, &cfg.omega_c)? {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct ErrorRow {
    scheme: String,
    ppw: f64,
    max_error: f64,
}

#[derive(Serialize)]
struct OverlayRow {
    order: u32,
    coarsening: Coarsening,
    ppw: f64,
    r: f64,
    rho: f64,
}

pub fn dispersion<W: Write>(cfg: &DispersionSection, out: W) -> CliResult<()> {
    if cfg.directions < 2 {
        return Err(CliError::Config("directions must be at least 2".into()));
    }
    let mut w = writer(out);
    match cfg.output {
        DispersionOutput::Errors => {
            header(&mut w, &["scheme", "ppw", "max_error"])?;
            for s in &cfg.schemes {
                for &ppw in &cfg.ppw {
                    let q = DispersionQuery::new(*s, ppw);
                    q.validate()?;
                    let e = find_zero_curve_with(&q, cfg.directions)?.max_error();
                    w.serialize(ErrorRow { scheme: s.label(), ppw, max_error: e })?;
                }
            }
        }
        DispersionOutput::Overlay => {
            cfg.lfa.validate()?;
            header(&mut w, &["order", "coarsening", "ppw", "r", "rho"])?;
            for &order in &cfg.orders {
                for &coarsening in &cfg.coarsenings {
                    for &ppw in &cfg.ppw {
                        let fine = DispersionQuery::new(Scheme::Fe { order, element: ElementKind::Square }, ppw);
                        let coarse_scheme = match coarsening {
                            Coarsening::OptimizedFd => Scheme::Qsfem,
                            Coarsening::GalerkinP => Scheme::Fe { order: order / 2, element: ElementKind::Square },
                            Coarsening::None => return Err(CliError::Config("overlay needs a coarse space".into())),
                        };
                        let coarse = DispersionQuery::new(coarse_scheme, ppw / 2.0);
                        let r = delta_and_r(&fine, &coarse, cfg.lfa.d)?.r;
                        let params = LfaParams { order, ppw, coarsening, ..cfg.lfa.clone() };
                        let rho = asymptotic_rate(&LfaOperators::new(&params)?).rho;
                        w.serialize(OverlayRow { order, coarsening, ppw, r, rho })?;
                    }
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct BenchRow {
    order: u32,
    ppw: f64,
    wavelengths: f64,
    boundary: &'static str,
    coarsening: &'static str,
    n_dofs: usize,
    iterations: usize,
    converged: bool,
    final_relres: f64,
}

pub fn bench<W: Write>(cfg: &BenchSection, out: W) -> CliResult<()> {
    cfg.solver.validate()?;
    for &v in cfg.ppw.iter().chain(&cfg.wavelengths) {
        positive("ppw and wavelengths", v)?;
    }
    let mut w = writer(out);
    header(
        &mut w,
        &["order", "ppw", "wavelengths", "boundary", "coarsening", "n_dofs", "iterations", "converged", "final_relres"],
    )?;
    for &order in &cfg.orders {
        for &ppw in &cfg.ppw {
            for &wavelengths in &cfg.wavelengths {
                for &boundary in &cfg.boundaries {
                    for &coarsening in &cfg.coarsenings {
                        let spec = ProblemSpec { order, ppw, wavelengths, boundary, ..cfg.problem.clone() };
                        let solver = SolverConfig { coarsening, ..cfg.solver.clone() };
                        let problem = spec.build()?;
                        let tg = TwoGrid::new(&problem.space, &problem.coeffs, &solver)?;
                        let rep = tg.solve(&problem.rhs);
                        w.serialize(BenchRow {
                            order,
                            ppw,
                            wavelengths,
                            boundary: boundary.name(),
                            coarsening: coarsening_name(coarsening),
                            n_dofs: tg.n_dofs(),
                            iterations: rep.iterations,
                            converged: rep.converged,
                            final_relres: *rep.history.last().unwrap_or(&f64::NAN),
                        })?;
                        w.flush()?;
                    }
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}
