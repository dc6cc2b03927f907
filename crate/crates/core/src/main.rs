use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ddlink_core::cli::{self, exit, Overrides};

#[derive(Parser)]
#[command(name = "ddlink-sim", version, about = "OTFS-NOMA downlink link simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// HM spectral efficiency, Real vs Ideal channel
    HmSweep(RunArgs),
    /// LM-side spectral efficiency
    LmSweep(RunArgs),
    /// HM outage probability
    Outage(RunArgs),
    /// Run the invariant and oracle suite
    Validate(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON config, or a manifest from a previous run
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Defaults to the available parallelism
    #[arg(long)]
    workers: Option<usize>,
}

fn run(command: Command) -> ddlink_core::Result<i32> {
    let (name, args) = match &command {
        Command::HmSweep(a) => ("hm-sweep", a),
        Command::LmSweep(a) => ("lm-sweep", a),
        Command::Outage(a) => ("outage", a),
        Command::Validate(a) => ("validate", a),
    };
    let overrides = Overrides {
        seed: args.seed,
        trials: args.trials,
    };
    let cfg = overrides.apply(cli::load_config(&args.config).map_err(|e| match e {
        // a missing or unreadable config is a config problem, not an output one
        ddlink_core::Error::Io(io) => ddlink_core::Error::InvalidArgument(format!("{}: {io}", args.config.display())),
        other => other,
    })?)?;
    let workers = args
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));

    let output = match command {
        Command::HmSweep(_) => cli::cmd_hm_sweep(&cfg, &args.out, workers)?,
        Command::LmSweep(_) => cli::cmd_lm_sweep(&cfg, &args.out, workers)?,
        Command::Outage(_) => cli::cmd_outage(&cfg, &args.out, workers)?,
        Command::Validate(_) => {
            let outcomes = cli::cmd_validate(&cfg, &args.out)?;
            for c in &outcomes {
                println!("{c}");
            }
            let failed = outcomes.iter().filter(|c| !c.passed).count();
            println!("{} checks, {failed} failed", outcomes.len());
            return Ok(if failed == 0 { exit::OK } else { exit::VALIDATION_FAILED });
        }
    };
    println!(
        "{name}: {} points, {} trials -> {}",
        output.summary.points.len(),
        cfg.trials,
        output.csv.display()
    );
    Ok(exit::OK)
}

fn main() -> ExitCode {
    let parsed = Cli::parse();
    let code = match run(parsed.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("ddlink-sim: {e}");
            cli::exit_code(&e)
        }
    };
    ExitCode::from(code as u8)
}
