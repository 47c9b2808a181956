//! `disperse` runs the laboratory's experiments from the command line and
//! writes one CSV table and one JSON report per run.

mod config;
mod experiments;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{resolve, ExperimentConfig};
use experiments::RunError;

#[derive(Parser)]
#[command(name = "disperse", version, about = "dispersive propagator laboratory")]
struct Cli {
    /// JSON config file; explicit flags override its fields
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// output directory (default: $DISPERSE_OUT_DIR, then the working dir)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// run resolution overrides even when they violate the aliasing budget
    #[arg(long, global = true)]
    force: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// fast self-checks across transforms, propagators, projections, norms
    Verify(CommonArgs),
    /// fixed-time kernel magnitude against distance, with fitted slopes
    KernelDecay(CommonArgs),
    /// non-stationary-phase decay probes and the far-field bound
    Nonstationary(CommonArgs),
    /// operator-norm growth across dyadic annuli, one mode
    Scaling(CommonArgs),
    /// local and global sweeps side by side, with the slope comparison
    Transference(CommonArgs),
    /// weighted level-by-level summability of the maximal estimate
    LpSummation(CommonArgs),
    /// small-time convergence of the running maximal deviation
    Convergence(CommonArgs),
}

impl Cmd {
    fn name(&self) -> &'static str {
        match self {
            Cmd::Verify(_) => "verify",
            Cmd::KernelDecay(_) => "kernel-decay",
            Cmd::Nonstationary(_) => "nonstationary",
            Cmd::Scaling(_) => "scaling",
            Cmd::Transference(_) => "transference",
            Cmd::LpSummation(_) => "lp-summation",
            Cmd::Convergence(_) => "convergence",
        }
    }

    fn args(&self) -> &CommonArgs {
        match self {
            Cmd::Verify(a)
            | Cmd::KernelDecay(a)
            | Cmd::Nonstationary(a)
            | Cmd::Scaling(a)
            | Cmd::Transference(a)
            | Cmd::LpSummation(a)
            | Cmd::Convergence(a) => a,
        }
    }
}

#[derive(Args)]
struct CommonArgs {
    /// phase symbol: wave, schrodinger, or airy
    #[arg(long)]
    phase: Option<String>,
    /// spatial dimension, 1 or 2
    #[arg(long)]
    dim: Option<usize>,
    /// sweep mode: local or global
    #[arg(long)]
    mode: Option<String>,
    /// comma-separated dyadic radii, e.g. 4,8,16,32
    #[arg(long, value_delimiter = ',')]
    radii: Option<Vec<f64>>,
    /// time horizon
    #[arg(long)]
    t_max: Option<f64>,
    /// probe/restart count per radius
    #[arg(long)]
    restarts: Option<usize>,
    /// RNG seed; identical config and seed give identical output bytes
    #[arg(long)]
    seed: Option<u64>,
    /// override: grid points per axis
    #[arg(long)]
    n: Option<usize>,
    /// override: torus side length
    #[arg(long)]
    l: Option<f64>,
    /// override: time-grid node count
    #[arg(long)]
    nt: Option<usize>,
    /// Sobolev exponent for the summability run
    #[arg(long)]
    s: Option<f64>,
    /// summability loss epsilon
    #[arg(long)]
    eps: Option<f64>,
    /// highest dyadic level for the summability run
    #[arg(long)]
    k_max: Option<usize>,
}

impl CommonArgs {
    fn to_config(&self) -> ExperimentConfig {
        ExperimentConfig {
            experiment: None,
            phase: self.phase.clone(),
            dim: self.dim,
            n: self.n,
            l: self.l,
            r_list: self.radii.clone(),
            t_max: self.t_max,
            nt: self.nt,
            restarts: self.restarts,
            seed: self.seed,
            mode: self.mode.clone(),
            s: self.s,
            eps: self.eps,
            k_max: self.k_max,
            out_dir: None,
            force: None,
            tolerances: None,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn execute(cli: &Cli) -> Result<bool, RunError> {
    let file_cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_file(path).map_err(RunError::Config)?,
        None => ExperimentConfig::default(),
    };
    let merged = cli.cmd.args().to_config().merged_over(file_cfg);
    let out_dir = cli
        .out
        .clone()
        .or_else(|| merged.out_dir.clone())
        .or_else(|| std::env::var_os("DISPERSE_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let mut resolved = resolve(cli.cmd.name(), &merged).map_err(RunError::Config)?;
    if cli.force {
        resolved.force = true;
    }
    let rep = experiments::run(resolved)?;
    let (csv_path, json_path) = rep.write_files(&out_dir)?;
    rep.print_summary();
    println!("wrote {} and {}", csv_path.display(), json_path.display());
    Ok(rep.all_pass())
}
