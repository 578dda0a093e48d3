use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use defl::commands::{cmd_compare, cmd_plan, cmd_simulate, cmd_sweep, thread_pool_from_env};
use defl::config::{load_config, SweepAxis};
use defl::{DeflError, Result};

/// Delay-efficient federated learning planner and simulator.
#[derive(Parser)]
#[command(name = "defl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form and oracle plans with KKT certificates.
    Plan {
        #[command(flatten)]
        common: Common,
    },
    /// Simulate the planned schedule and emit a CSV trace.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Sweep epsilon, b or theta and emit CSV.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Overrides the config's sweep axis.
        #[arg(long, value_parser = parse_axis)]
        axis: Option<SweepAxis>,
        /// Comma-separated values; overrides the config's sweep values.
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,
        /// Also simulate each row and report the final gap.
        #[arg(long)]
        simulate: bool,
    },
    /// Compare planned schedules against the configured baselines.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Add simulated time to the target gap for each row.
        #[arg(long)]
        simulate: bool,
    },
}

fn parse_axis(s: &str) -> std::result::Result<SweepAxis, String> {
    match s {
        "epsilon" => Ok(SweepAxis::Epsilon),
        "b" => Ok(SweepAxis::B),
        "theta" => Ok(SweepAxis::Theta),
        _ => Err(format!("unknown axis {s:?}, expected epsilon, b or theta")),
    }
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Plan { common } => {
            let report = cmd_plan(&load_config(&common.config)?)?;
            print!("{}", report.to_text());
            if let Some(p) = &common.out {
                std::fs::write(p, report.to_json()?)?;
            }
        }
        Command::Simulate { common } => {
            let cfg = load_config(&common.config)?;
            let mut w = sink(&common.out)?;
            let summary = cmd_simulate(&cfg, common.seed, &mut w)?;
            if common.out.is_some() {
                eprintln!(
                    "b={} V={} H={} final_gap={:?} overall_time_s={}",
                    summary.batch, summary.local_rounds, summary.rounds, summary.final_gap, summary.overall_time
                );
            }
        }
        Command::Sweep { common, axis, values, simulate } => {
            let cfg = load_config(&common.config)?;
            let (axis, values) = match (axis, values, &cfg.sweep) {
                (Some(a), Some(v), _) => (a, v),
                (a, v, Some(s)) => (a.unwrap_or(s.axis), v.unwrap_or_else(|| s.values.clone())),
                _ => return Err(DeflError::Config("sweep needs --axis and --values or a sweep section".into())),
            };
            let report = cmd_sweep(&cfg, axis, &values, simulate, common.seed)?;
            report.write_csv(&mut sink(&common.out)?)?;
        }
        Command::Compare { common, simulate } => {
            let report = cmd_compare(&load_config(&common.config)?, simulate, common.seed)?;
            print!("{}", report.to_text());
            if let Some(p) = &common.out {
                report.write_csv(&mut BufWriter::new(File::create(p)?))?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = thread_pool_from_env().and_then(|pool| pool.install(|| run(cli)));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("defl: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
