//! `hopf-twistor`: builds Hopf hypersurfaces, runs the verification suites
//! and writes JSON or CSV reports.
//!
//! Exit status: 0 when certified, 1 on verification failure, 2 on a
//! configuration error.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hopf_twistor::hopf::ExampleKind;
use hopf_twistor::report::{self, CkoConstants, Command, Format, RunConfig, DEFAULT_TOLERANCES};
use hopf_twistor::twistor::Sign;

#[derive(Parser, Debug)]
#[command(name = "hopf-twistor", version, about = "Hopf hypersurfaces in complex hyperbolic space from twistor data")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    n: Option<usize>,
    /// plus | minus | zero
    #[arg(long, global = true)]
    s: Option<Sign>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    r: Option<f64>,
    #[arg(long, global = true)]
    k: Option<usize>,
    /// tube-chk | tube-rhn | horosphere
    #[arg(long, global = true)]
    example: Option<ExampleKind>,
    /// Samples per chart coordinate.
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Cap on the number of grid points.
    #[arg(long, global = true)]
    max_points: Option<usize>,
    /// Finite-difference step.
    #[arg(long, global = true)]
    step: Option<f64>,
    /// Tolerance override, `name=value`; repeatable.
    #[arg(long = "tol", global = true)]
    tol: Vec<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// json | csv
    #[arg(long, global = true)]
    format: Option<Format>,
    /// JSON file of CKO constants.
    #[arg(long, global = true)]
    constants: Option<PathBuf>,
    /// Record wall time in the report (breaks byte-reproducibility).
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Cmd {
    VerifyCurves,
    BuildExample,
    VerifyHopf,
    CkoRun,
    McCheck,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::VerifyCurves => Command::VerifyCurves,
            Cmd::BuildExample => Command::BuildExample,
            Cmd::VerifyHopf => Command::VerifyHopf,
            Cmd::CkoRun => Command::CkoRun,
            Cmd::McCheck => Command::McCheck,
        }
    }
}

fn read(path: &PathBuf) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))
}

fn resolve(cli: &Cli) -> Result<RunConfig, String> {
    let mut cfg = match &cli.config {
        Some(path) => serde_json::from_str::<RunConfig>(&read(path)?)
            .map_err(|e| format!("malformed config {}: {e}", path.display()))?,
        None => RunConfig::default(),
    };
    for (name, value) in DEFAULT_TOLERANCES {
        cfg.tolerances.entry(name.to_string()).or_insert(value);
    }
    cfg.command = cli.command.into();
    if let Some(v) = cli.n {
        cfg.n = v;
    }
    if cli.s.is_some() {
        cfg.s = cli.s;
    }
    if cli.r.is_some() {
        cfg.r = cli.r;
    }
    if let Some(v) = cli.k {
        cfg.k = v;
    }
    if cli.example.is_some() {
        cfg.example = cli.example;
    }
    if let Some(v) = cli.grid {
        cfg.grid_density = v;
    }
    if let Some(v) = cli.max_points {
        cfg.max_points = v;
    }
    if let Some(v) = cli.step {
        cfg.fd_step = v;
    }
    for pair in &cli.tol {
        cfg.set_tolerance(pair).map_err(|e| e.to_string())?;
    }
    if let Some(v) = cli.seed {
        cfg.seed = v;
    }
    if let Some(p) = &cli.out {
        cfg.output_path = Some(p.display().to_string());
    }
    if let Some(f) = cli.format {
        cfg.format = f;
    }
    if let Some(path) = &cli.constants {
        let k: CkoConstants = serde_json::from_str(&read(path)?)
            .map_err(|e| format!("malformed constants {}: {e}", path.display()))?;
        cfg.constants = Some(k);
    }
    cfg.timing |= cli.timing;
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn init_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("HOPF_TWISTOR_THREADS") else {
        return Ok(());
    };
    let threads: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| format!("HOPF_TWISTOR_THREADS must be a positive integer, got '{v}'"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match init_threads().and_then(|_| resolve(&cli)) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let env = match report::run(&cfg) {
        Ok(env) => env,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let text = match report::render(&env, cfg.format) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match &cfg.output_path {
        Some(path) => {
            if let Err(e) = fs::write(path, text) {
                eprintln!("error: cannot write {path}: {e}");
                return ExitCode::from(2);
            }
        }
        None => print!("{text}"),
    }
    for e in &env.errors {
        eprintln!("{e}");
    }
    for r in &env.reports {
        for f in &r.failures {
            eprintln!("{}: {f}", r.label);
        }
    }
    if env.certified {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
