use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ssqw::config::RunConfig;
use ssqw::{io, pipeline, scenarios, Error};

/// Environment variable overriding the output directory of the config.
const OUT_ENV: &str = "SSQW_OUT_DIR";
const DEFAULT_OUT: &str = "ssqw-out";

#[derive(Parser)]
#[command(name = "ssqw", version, about = "Split-step quantum walks: simulation, spectra and weak limit laws")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve the initial state and write position distributions
    Simulate(Common),
    /// Compute the limit law of X_t/t and write its density
    Density(Common),
    /// Compare simulated laws with the limit law over a list of times
    Compare(Common),
    /// Write the dispersion relation of the reference walk(s)
    Spectrum(Common),
}

#[derive(Args)]
struct Common {
    /// TOML run config, or `builtin:NAME` for a shipped scenario
    #[arg(long, value_name = "PATH")]
    config: String,
    /// Output directory (overrides the config and SSQW_OUT_DIR)
    #[arg(long, value_name = "DIR", env = OUT_ENV)]
    out: Option<PathBuf>,
    /// Worker threads, 0 for one per core
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

fn load(spec: &str) -> Result<RunConfig, Error> {
    match spec.strip_prefix("builtin:") {
        Some(name) => Ok(scenarios::load(name)?),
        None => RunConfig::load(Path::new(spec)).map_err(|e| match e {
            Error::Io(io) => Error::Usage(format!("cannot read config `{spec}`: {io}")),
            other => other,
        }),
    }
}

fn run(command: Command) -> Result<Vec<PathBuf>, Error> {
    let common = match &command {
        Command::Simulate(c) | Command::Density(c) | Command::Compare(c) | Command::Spectrum(c) => c,
    };
    if common.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(common.threads)
            .build_global()
            .map_err(|e| Error::Usage(format!("cannot start thread pool: {e}")))?;
    }
    let cfg = load(&common.config)?;
    let out = common
        .out
        .clone()
        .or_else(|| cfg.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    std::fs::create_dir_all(&out)?;

    match command {
        Command::Simulate(_) => {
            let psi0 = pipeline::initial_state(&cfg)?;
            let sim = pipeline::simulate(&cfg, &psi0)?;
            io::write_simulation(&out, &sim)
        }
        Command::Spectrum(_) => io::write_spectrum(&out, &pipeline::spectrum(&cfg)?),
        Command::Density(_) => {
            let psi0 = pipeline::initial_state(&cfg)?;
            let d = pipeline::density(&cfg, &psi0)?;
            report_density(&d);
            io::write_density(&out, &d)
        }
        Command::Compare(_) => {
            let psi0 = pipeline::initial_state(&cfg)?;
            let c = pipeline::compare(&cfg, &psi0)?;
            report_density(&c.density);
            for r in &c.report.records {
                eprintln!("t = {:>6}  ks = {:.4e}  m2 gap = {:.3e}", r.t, r.ks, r.moment_gaps[1]);
            }
            io::write_compare(&out, &c)
        }
    }
}

fn report_density(d: &pipeline::DensityRun) {
    let sc = &d.scattering;
    eprintln!("w0 = {:.6}  mass = {:.6}", d.density.w0, d.mass());
    if !sc.converged {
        let last = sc.residuals.last().map_or(f64::NAN, |r| r.1);
        eprintln!(
            "warning: wave operator residual {last:.3e} above tol {:.1e} at T = {} (set scattering.require_convergence to fail instead)",
            sc.tol, sc.t_used
        );
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(pipeline::exit_code(&e) as u8)
        }
    }
}
