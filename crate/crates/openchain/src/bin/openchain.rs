use clap::{Args, Parser, Subcommand};
use openchain::cli::{self, CliOverrides};

/// Verification driver for open XXZ/XXX chains with general integrable
/// boundaries.
#[derive(Parser)]
#[command(name = "openchain", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration (schema 1).
    #[arg(long)]
    config: String,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output path: JSONL log for verify/sweep (default runs.jsonl), CSV for
    /// report.
    #[arg(long)]
    out: Option<String>,
    /// Worker threads for sweep.
    #[arg(long, default_value_t = 4)]
    workers: usize,
    /// Tolerance override KEY=VALUE; repeatable.
    #[arg(long = "tol-override")]
    tol_override: Vec<String>,
    /// Largest chain length accepted.
    #[arg(long = "max-n")]
    max_n: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run every enabled check for one configuration.
    Verify(Common),
    /// Run seeded variations of the configuration in parallel.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Number of seeded samples.
        #[arg(long, default_value_t = 1)]
        samples: usize,
    },
    /// Classify the resolved boundary against the exceptional sets.
    Regimes(Common),
    /// Summarize a JSONL run log as Markdown (stdout) and CSV (--out).
    Report(Common),
}

fn overrides(common: &Common) -> Result<CliOverrides, cli::ConfigError> {
    Ok(CliOverrides {
        seed: common.seed,
        tol: cli::parse_tol_overrides(&common.tol_override)?,
        max_n: common.max_n,
    })
}

fn dispatch(cmd: &Cmd) -> Result<u8, cli::ConfigError> {
    match cmd {
        Cmd::Verify(common) => {
            cli::cmd_verify(&common.config, common.out.as_deref(), &overrides(common)?)
        }
        Cmd::Sweep { common, samples } => cli::cmd_sweep(
            &common.config,
            *samples,
            common.workers,
            common.out.as_deref(),
            &overrides(common)?,
        ),
        Cmd::Regimes(common) => cli::cmd_regimes(&common.config, &overrides(common)?),
        Cmd::Report(common) => cli::cmd_report(&common.config, common.out.as_deref()),
    }
}

fn main() -> std::process::ExitCode {
    let args = Cli::parse();
    match dispatch(&args.cmd) {
        Ok(code) => std::process::ExitCode::from(code),
        Err(e) => {
            eprintln!("config error: {e}");
            std::process::ExitCode::from(2)
        }
    }
}
