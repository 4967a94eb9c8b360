use clap::Parser;
use parext_core::par;
use parext_core::runner::{run_experiment, ExperimentConfig, ExperimentKind};
use parext_core::Error;
use std::path::PathBuf;
use std::process::ExitCode;

/// Run a parext experiment described by a TOML config file.
#[derive(Parser, Debug)]
#[command(name = "parext", version)]
struct Args {
    /// quotient | sequence | search | verify-symmetry | separation | shifted-limit
    kind: ExperimentKind,
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides `seed` from the config.
    #[arg(long)]
    seed: Option<u64>,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_REFUSAL: u8 = 3;
const EXIT_INTERNAL: u8 = 4;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidParameter(_) => EXIT_CONFIG,
        e if e.is_numerical_refusal() => EXIT_REFUSAL,
        _ => EXIT_INTERNAL,
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let mut cfg = match ExperimentConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("parext: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let threads = args.threads.unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
    if threads == 0 {
        eprintln!("parext: --threads must be positive");
        return ExitCode::from(EXIT_CONFIG);
    }
    let kind = args.kind;
    let out = args.out.clone();
    let result = std::panic::catch_unwind(|| par::with_threads(threads, || run_experiment(&cfg, kind, out.as_deref())));
    match result {
        Ok(Ok(report)) => {
            println!("{}: wrote {} table(s) in {:.2} s", kind, report.tables.len(), report.wall_clock_seconds);
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            ExitCode::SUCCESS
        }
        Ok(Err(e)) => {
            eprintln!("parext: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(_) => {
            eprintln!("parext: internal error (panic)");
            ExitCode::from(EXIT_INTERNAL)
        }
    }
}
