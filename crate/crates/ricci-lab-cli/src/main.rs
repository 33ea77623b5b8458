use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ricci_lab::cli_report::{error_status, run_experiment, ExperimentConfig, Mode, RunOptions, EXIT_INVALID};

/// Monte Carlo checks of curvature-pinching inequalities and small-time
/// curvature recovery.
#[derive(Parser)]
#[command(name = "ricci-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the configured inequalities (and recovery, if any).
    Verify(RunArgs),
    /// Run only the configured recovery.
    Recover(RunArgs),
    /// Check the inequality families on the configured evolving metric.
    Flowcert(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment file, TOML or JSON.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Paths per ensemble; overrides the config.
    #[arg(long)]
    paths: Option<usize>,
    /// Worker threads. RICCI_LAB_JOBS takes precedence.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

fn jobs(flag: usize) -> Result<usize, String> {
    match std::env::var("RICCI_LAB_JOBS") {
        Ok(v) => v.trim().parse::<usize>().map_err(|_| format!("RICCI_LAB_JOBS must be a positive integer, got {v:?}")),
        Err(_) => Ok(flag),
    }
}

fn run(mode: Mode, args: RunArgs) -> i32 {
    let config = ExperimentConfig::load(&args.config).map(|mut c| {
        if let Some(s) = args.seed {
            c.mc.seed = s;
        }
        if let Some(n) = args.paths {
            c.mc.n_paths = n;
        }
        c
    });
    let config = match config {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return match e {
                ricci_lab::Error::Io(_) => ricci_lab::cli_report::EXIT_RUNTIME,
                _ => EXIT_INVALID,
            };
        }
    };
    let jobs = match jobs(args.jobs) {
        Ok(j) => j,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_INVALID;
        }
    };
    match run_experiment(&config, mode, &RunOptions { jobs, out: args.out }) {
        Ok(m) => {
            eprintln!(
                "{} reports ({} violated, {} inconclusive), {} low-confidence recoveries; config {}",
                m.n_reports, m.n_violated, m.n_inconclusive, m.n_low_confidence, m.config_hash
            );
            m.exit_status
        }
        Err(e) => {
            eprintln!("error: {e}");
            error_status(&e)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Verify(a) => run(Mode::Verify, a),
        Command::Recover(a) => run(Mode::Recover, a),
        Command::Flowcert(a) => run(Mode::FlowCert, a),
    };
    ExitCode::from(code as u8)
}
