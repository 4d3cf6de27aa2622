use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use helmtg_cli::commands;
use helmtg_cli::{CliError, CliResult, RunConfig};

#[derive(Parser)]
#[command(name = "helmtg", version, about = "Two-grid Helmholtz solver and Fourier analysis tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration. Missing sections and keys take defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// CSV output file (default: stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for the parallel parts.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one benchmark problem from the [solve] section.
    ///
    /// CSV columns: iter,relres (output = "history") or x,y,u_re,u_im at
    /// every mesh vertex (output = "solution"). A summary line goes to stderr.
    Solve,
    /// Convergence rate and mismatch factor of the 1-D model problem.
    ///
    /// CSV columns: m,ppw,rho,r.
    Lfa1d,
    /// Two-grid convergence rates from Fourier analysis of the FE problem.
    ///
    /// CSV columns: order,ppw,coarsening,n_s,omega_c,rho,theta1_max,theta2_max.
    Lfa2d,
    /// Maximum dispersion errors, or mismatch factors next to LFA rates.
    ///
    /// CSV columns: scheme,ppw,max_error (output = "errors") or
    /// order,coarsening,ppw,r,rho (output = "overlay").
    Dispersion,
    /// Iteration counts over orders, ppw, sizes, boundary sets and coarsenings.
    ///
    /// CSV columns: order,ppw,wavelengths,boundary,coarsening,n_dofs,iterations,converged,final_relres.
    Bench,
}

fn load(path: &Option<PathBuf>) -> CliResult<RunConfig> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            RunConfig::from_toml(&text).map_err(CliError::Config)
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let cfg = load(&cli.config)?;
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Run(e.to_string()))?;
    }
    let out: Box<dyn Write> = match &cli.out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    };
    match cli.command {
        Command::Solve => {
            let summary = commands::solve(&cfg.solve, out)?;
            eprintln!("{summary}");
        }
        Command::Lfa1d => commands::lfa1d(&cfg.lfa1d, out)?,
        Command::Lfa2d => commands::lfa2d(&cfg.lfa2d, out)?,
        Command::Dispersion => commands::dispersion(&cfg.dispersion, out)?,
        Command::Bench => commands::bench(&cfg.bench, out)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("helmtg: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
