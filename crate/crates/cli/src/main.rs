use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod error;
mod expr;
mod field;
mod output;

use config::Overrides;
use error::CliError;

/// Geometry of parameterized SU(2) dynamics: metric, Berry curvature,
/// topological invariants and adaptive estimation near phase transitions.
#[derive(Parser)]
#[command(name = "qgeo", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// All geometric quantities at one parameter point.
    Geometry(Common),
    /// Requested quantities over a 1D or 2D grid.
    Scan(Common),
    /// Replay a step schedule or run an automatic search toward the transition.
    Adaptive(Common),
    /// Closed forms against finite-difference and Trotterized oracles.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct Common {
    /// TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// canonical | ssh | custom
    #[arg(long)]
    model: Option<String>,
    /// Evolution time (expression).
    #[arg(long = "T", value_name = "T", allow_hyphen_values = true)]
    t: Option<String>,
    /// ground | optimal:<param> | x,y,z
    #[arg(long)]
    probe: Option<String>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv | json
    #[arg(long)]
    format: Option<String>,
    /// Scan axis name=from:to:n, repeatable; replaces the config axes.
    #[arg(long, value_name = "AXIS")]
    grid: Vec<String>,
    /// Standard deviation of additive QMT measurement noise.
    #[arg(long, allow_hyphen_values = true)]
    noise_sigma: Option<String>,
    /// Finite-difference step.
    #[arg(long, allow_hyphen_values = true)]
    fd_step: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Parameter value name=expr, repeatable.
    #[arg(long = "param", value_name = "NAME=EXPR")]
    params: Vec<String>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    /// none | flip-berry-sign
    #[arg(long)]
    fault: Option<String>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            model: self.model.clone(),
            t: self.t.clone(),
            probe: self.probe.clone(),
            out: self.out.clone(),
            format: self.format.clone(),
            grid: self.grid.clone(),
            noise_sigma: self.noise_sigma.clone(),
            fd_step: self.fd_step.clone(),
            seed: self.seed,
            params: self.params.clone(),
            fault: None,
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (common, fault) = match &cli.cmd {
        Cmd::Geometry(c) | Cmd::Scan(c) | Cmd::Adaptive(c) => (c, None),
        Cmd::Verify(v) => (&v.common, v.fault.clone()),
    };
    let mut ov = common.overrides();
    ov.fault = fault;
    let cfg = config::load(common.config.as_ref(), &ov)?;
    let out = cfg.out.as_deref();
    match cli.cmd {
        Cmd::Geometry(_) => commands::geometry(&cfg)?.emit(cfg.format, out),
        Cmd::Scan(_) => commands::scan(&cfg)?.emit(cfg.format, out),
        Cmd::Adaptive(_) => {
            let (table, converged) = commands::adaptive(&cfg)?;
            table.emit(cfg.format, out)?;
            if converged { Ok(()) } else { Err(CliError::NotConverged) }
        }
        Cmd::Verify(_) => {
            let (table, failed) = commands::verify(&cfg)?;
            table.emit(cfg.format, out)?;
            if failed.is_empty() { Ok(()) } else { Err(CliError::Verification(failed)) }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qgeo: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
