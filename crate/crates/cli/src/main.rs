//! `spinboson`: dynamics, regime tables, sweeps and oracle validation for the
//! zero-temperature Ohmic spin-boson model.
//!
//! Exit codes: 0 success, 1 numerical failure (a diagnostic `error.json` is
//! written to the output directory), 2 usage error.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use spinboson_core::io::to_json;

use crate::config::{usage, RunConfig, UsageError};

#[derive(Parser)]
#[command(
    name = "spinboson",
    version,
    about = "Ohmic spin-boson dynamics and entanglement entropy at T = 0"
)]
struct Cli {
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bloch trajectories, entropy series and summaries for one or more couplings.
    Dynamics(RunArgs),
    /// Regime classification over an alpha grid plus the located boundaries.
    Regime(RunArgs),
    /// S_eq and entropy statistics over an (alpha, delta) grid.
    Sweep(RunArgs),
    /// Oracle agreement suites with a pass/fail report.
    Validate(ValidateArgs),
}

#[derive(Args, Clone, Default)]
struct RunArgs {
    /// key = value file; flags given here override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Coupling strength.
    #[arg(long)]
    alpha: Option<f64>,
    /// Coupling grid, `a,b,c` or `start:stop:step`.
    #[arg(long)]
    alphas: Option<String>,
    /// Bare tunnelling in units of omega_c.
    #[arg(long)]
    delta: Option<f64>,
    /// Tunnelling grid (sweep only), `a,b,c` or `start:stop:step`.
    #[arg(long)]
    deltas: Option<String>,
    /// Final time in units of 1/omega_c.
    #[arg(long)]
    tmax: Option<f64>,
    /// Output spacing in units of 1/omega_c.
    #[arg(long)]
    dt: Option<f64>,
    /// Comma-separated: full, residue, markov, volterra, ed.
    #[arg(long)]
    methods: Option<String>,
    /// Unit of the time column: omega_c or delta_r.
    #[arg(long)]
    time_axis: Option<String>,
    /// Output directory, created if missing (default `out`).
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct ValidateArgs {
    #[command(flatten)]
    run: RunArgs,
    /// quick, or full (adds exact diagonalization).
    #[arg(long)]
    level: Option<String>,
}

impl RunArgs {
    fn resolve(&self) -> anyhow::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        let overrides: [(&str, Option<String>); 9] = [
            ("alpha", self.alpha.map(|v| v.to_string())),
            ("alphas", self.alphas.clone()),
            ("delta", self.delta.map(|v| v.to_string())),
            ("deltas", self.deltas.clone()),
            ("tmax", self.tmax.map(|v| v.to_string())),
            ("dt", self.dt.map(|v| v.to_string())),
            ("methods", self.methods.clone()),
            ("time_axis", self.time_axis.clone()),
            (
                "out_dir",
                self.out_dir.as_ref().map(|p| p.display().to_string()),
            ),
        ];
        for (k, v) in overrides {
            if let Some(v) = v {
                cfg.set(k, &v)?;
            }
        }
        // an explicit single alpha beats a grid coming from the file
        if self.alpha.is_some() && self.alphas.is_none() {
            cfg.alphas.clear();
        }
        Ok(cfg)
    }
}

#[derive(Serialize)]
struct Diagnostic<'a> {
    error: &'a str,
    command: &'a str,
    message: String,
    causes: Vec<String>,
}

fn run(cli: &Cli) -> anyhow::Result<bool> {
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(usage("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| usage(format!("cannot size the worker pool: {e}")))?;
    }
    match &cli.command {
        Command::Dynamics(a) => commands::dynamics(&a.resolve()?).map(|_| true),
        Command::Regime(a) => commands::regime(&a.resolve()?).map(|_| true),
        Command::Sweep(a) => commands::sweep(&a.resolve()?).map(|_| true),
        Command::Validate(v) => {
            let mut cfg = v.run.resolve()?;
            if let Some(l) = &v.level {
                cfg.set("level", l)?;
            }
            commands::validate(&cfg)
        }
    }
}

fn out_dir_of(cli: &Cli) -> PathBuf {
    let args = match &cli.command {
        Command::Dynamics(a) | Command::Regime(a) | Command::Sweep(a) => a,
        Command::Validate(v) => &v.run,
    };
    args.resolve()
        .map(|c| c.out_dir)
        .unwrap_or_else(|_| RunConfig::default().out_dir)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = match &cli.command {
        Command::Dynamics(_) => "dynamics",
        Command::Regime(_) => "regime",
        Command::Sweep(_) => "sweep",
        Command::Validate(_) => "validate",
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("validation failed; see validation.json");
            ExitCode::from(1)
        }
        Err(e) if e.is::<UsageError>() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("numerical failure: {e:#}");
            let diag = Diagnostic {
                error: "numerical",
                command: name,
                message: e.to_string(),
                causes: e.chain().skip(1).map(|c| c.to_string()).collect(),
            };
            let dir = out_dir_of(&cli);
            if let Ok(json) = to_json(&diag) {
                let _ = std::fs::create_dir_all(&dir);
                let _ = std::fs::write(dir.join("error.json"), json);
            }
            ExitCode::from(1)
        }
    }
}
