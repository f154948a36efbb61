use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fermiscale::harness::{run_experiment, ExperimentConfig, ExperimentKind, RunFlags};

#[derive(Parser)]
#[command(
    name = "fermiscale",
    version,
    about = "Resolvent-convergence experiments for fermionic few-body operators"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment file (sectioned key = value)
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads for sweep rows
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,

    /// Overrides `experiment.seed`
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output root; artifacts go to OUT/<label>
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Calibrate λ_ε to a fixed two-body binding energy
    Calibrate,
    /// Odd-sector norms ‖v_ε R₀(z)‖ along an ε sweep
    NormSweep,
    /// Resolvent-difference norms with exponent fits
    RateFit,
    /// Factorized resolvent identity on a dense coarse grid
    KkCheck,
    /// Hardy, log-Hölder, cutoff and Vandermonde checks
    Verify,
    /// Matched-grid ε² scaling and fermionic stability
    ThomasCheck,
    /// Summary of fitted against predicted exponents under OUT
    Report,
}

impl Command {
    fn kind(self) -> ExperimentKind {
        match self {
            Command::Calibrate => ExperimentKind::Calibrate,
            Command::NormSweep => ExperimentKind::NormSweep,
            Command::RateFit => ExperimentKind::RateFit,
            Command::KkCheck => ExperimentKind::KkCheck,
            Command::Verify => ExperimentKind::Verify,
            Command::ThomasCheck => ExperimentKind::ThomasCheck,
            Command::Report => ExperimentKind::Report,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let kind = cli.command.kind();
    let cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p, Some(kind)),
        None => Ok(ExperimentConfig::defaults(kind)),
    };
    let cfg = match cfg {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let flags = RunFlags {
        workers: cli.workers,
        seed: cli.seed.unwrap_or(cfg.seed),
        out: cfg.out.clone().unwrap_or(cli.out),
        config_path: cli.config,
    };
    match run_experiment(&cfg, &flags) {
        Ok(s) => {
            print!("{}", s.text);
            println!("manifest: {}", s.manifest.display());
            if s.pass == Some(false) {
                eprintln!("{}: check failed", s.kind);
                return ExitCode::from(1);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
