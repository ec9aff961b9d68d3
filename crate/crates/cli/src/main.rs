mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "burkholder", version, about = "Run, verify and compare Burkholder-potential learners")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Play a learner on a sequence and write the regret report as CSV.
    Run {
        #[arg(long)]
        config: Option<String>,
        #[arg(long)]
        out: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a verification suite: p1, p2, p3, khintchine, mgf, supermartingale, necessity or all.
    Verify {
        #[arg(long)]
        suite: String,
        #[arg(long)]
        config: Option<String>,
        #[arg(long)]
        out: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Play several strategies on one sequence and write side-by-side regret.
    Compare {
        #[arg(long)]
        config: Option<String>,
        #[arg(long)]
        out: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "linearized")]
        strategies: String,
        /// Repetitions of randomized strategies.
        #[arg(long)]
        trials: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.cmd {
        Cmd::Run { config, out, seed } => commands::cmd_run(config.as_deref(), out.as_deref(), *seed),
        Cmd::Verify { suite, config, out, seed, trials } => {
            commands::cmd_verify(suite, config.as_deref(), out.as_deref(), *seed, *trials)
        }
        Cmd::Compare { config, out, seed, strategies, trials } => {
            commands::cmd_compare(config.as_deref(), out.as_deref(), *seed, strategies, *trials)
        }
    };
    match res {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) if e.downcast_ref::<config::Usage>().is_some() => {
            eprintln!("usage error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
