use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use edgecache_cli::reproduce::{self, Target};
use edgecache_cli::{experiment, CliError, Overrides};

/// Throughput, delay and access optimisation of a caching helper with bursty traffic.
#[derive(Debug, Parser)]
#[command(name = "edgecache", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form throughput and delay.
    Analyze {
        #[command(flatten)]
        args: Overrides,
    },
    /// Optimal access probabilities (q_S, q_C).
    Optimize {
        #[command(flatten)]
        args: Overrides,
    },
    /// Monte Carlo simulation next to the closed forms.
    Simulate {
        #[command(flatten)]
        args: Overrides,
        /// Print this many slots of the first replication to stderr.
        #[arg(long)]
        trace: Option<u64>,
    },
    /// Regenerate a reference table or figure on the reference deployment.
    Reproduce {
        /// Target name, or `all`.
        target: String,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Only its [simulate] section is used.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Add simulated columns where the target has a simulated counterpart.
        #[arg(long)]
        simulate: bool,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Analyze { args } => experiment::analyze(&args.load()?)?.write_to(args.out.as_deref()),
        Command::Optimize { args } => experiment::optimize(&args.load()?)?.write_to(args.out.as_deref()),
        Command::Simulate { args, trace } => {
            let exp = args.load()?;
            if let Some(slots) = trace {
                experiment::trace(&exp, slots, &mut std::io::stderr().lock())?;
            }
            experiment::simulate(&exp)?.write_to(args.out.as_deref())
        }
        Command::Reproduce {
            target,
            out,
            config,
            seed,
            simulate,
        } => {
            let targets = if target == "all" {
                Target::ALL.to_vec()
            } else {
                vec![<Target as clap::ValueEnum>::from_str(&target, true).map_err(|_| {
                    let names: Vec<&str> = Target::ALL.iter().map(|t| t.name()).collect();
                    CliError::Config(format!("unknown target '{target}' (one of {}, all)", names.join(", ")))
                })?]
            };
            let overlay = if simulate {
                let args = Overrides {
                    config,
                    seed,
                    ..Overrides::default()
                };
                Some(args.load()?.simulation)
            } else {
                None
            };
            let mut failed = Vec::new();
            for t in targets {
                let r = reproduce::write_target(t, &out, overlay)?;
                let passed = r.checks.iter().filter(|c| c.passed).count();
                eprintln!("{t}: {passed}/{} checks passed", r.checks.len());
                if !r.passed() {
                    failed.push(t.name());
                }
            }
            if failed.is_empty() {
                Ok(())
            } else {
                Err(CliError::Tolerance(failed.join(", ")))
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("edgecache: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
