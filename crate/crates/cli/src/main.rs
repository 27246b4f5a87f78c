use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mclt_cli::{exit_code, registry, run_file, RunOptions};

/// Seed override for ad-hoc exploration. Reports made with it are not
/// reproducible from the config file alone.
const SEED_ENV: &str = "MCLT_SEED";

#[derive(Parser)]
#[command(name = "mclt", version, about = "Monte Carlo and exact checks for martingale limit theorems")]
struct Cli {
    /// Checks run concurrently.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Multiplies every sample count.
    #[arg(long, global = true, default_value_t = 1.0)]
    samples_scale: f64,
    /// Overrides the config's output directory.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and write its report.
    Run { config: PathBuf },
    /// List available checks.
    ListChecks,
    /// Show the parameters of a check.
    Describe { check: String },
}

fn seed_override() -> anyhow::Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(s) => Ok(Some(s.trim().parse().map_err(|e| anyhow::anyhow!("{SEED_ENV}={s}: {e}"))?)),
        Err(_) => Ok(None),
    }
}

fn run(cli: Cli) -> anyhow::Result<i32> {
    match cli.command {
        Command::ListChecks => {
            print!("{}", registry::list_text());
            Ok(0)
        }
        Command::Describe { check } => match registry::find(&check) {
            Some(info) => {
                print!("{}", registry::describe_text(info));
                Ok(0)
            }
            None => anyhow::bail!("unknown check `{check}`; see `mclt list-checks`"),
        },
        Command::Run { config } => {
            let opts = RunOptions {
                jobs: cli.jobs,
                samples_scale: cli.samples_scale,
                output_dir: cli.output_dir,
                seed_override: seed_override()?,
            };
            if opts.seed_override.is_some() {
                log::warn!("{SEED_ENV} overrides the config seed; the report will not match golden files");
            }
            let written = run_file(&config, &opts)?;
            let report = &written.outcome.report;
            for e in &report.entries {
                println!(
                    "{}\t{}\tn={}\t{}\tstatistic={}\tthreshold={}",
                    if e.pass { "PASS" } else { "FAIL" },
                    e.check_name,
                    e.n,
                    e.param,
                    e.statistic,
                    e.threshold
                );
            }
            println!("report written to {}", written.dir.display());
            Ok(exit_code(report))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
