use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use sphere_cover::experiments::config::out_dir;
use sphere_cover::experiments::{emit_report, run, ExperimentConfig, ExperimentId};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    Kernels,
    Gw,
    Barriers,
    Cover,
    Clock,
    Plane,
    Wasserstein,
}

impl From<Command> for ExperimentId {
    fn from(c: Command) -> Self {
        match c {
            Command::Kernels => ExperimentId::Kernels,
            Command::Gw => ExperimentId::Gw,
            Command::Barriers => ExperimentId::Barriers,
            Command::Cover => ExperimentId::Cover,
            Command::Clock => ExperimentId::Clock,
            Command::Plane => ExperimentId::Plane,
            Command::Wasserstein => ExperimentId::Wasserstein,
        }
    }
}

/// Seeded Brownian cover-time experiments on the two-sphere.
#[derive(Debug, Parser)]
#[command(name = "scl", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// JSON config; omitted sections take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    fast_mode: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("scl: {e}");
            ExitCode::from(2)
        }
    }
}

fn execute(cli: &Cli) -> sphere_cover::Result<bool> {
    let mut config = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let id = ExperimentId::from(cli.command);
    config.experiment = Some(id);
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    if cli.trials.is_some() {
        config.trials = cli.trials;
    }
    config.fast_mode |= cli.fast_mode;
    let dir = out_dir(&config, cli.out.as_deref());
    let report = run(id, &config)?;
    for path in emit_report(&report, &dir)? {
        eprintln!("wrote {}", path.display());
    }
    for row in &report.rows {
        let verdict = match (row.pass, row.required) {
            (true, _) => "PASS",
            (false, true) => "FAIL",
            (false, false) => "fail (optional)",
        };
        println!("{verdict:>15}  {}  estimate={} reference={}", row.id, row.estimate, row.reference);
    }
    Ok(report.passed())
}
