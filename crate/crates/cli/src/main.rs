use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use grpsparse_cli::run::output_dir;
use grpsparse_cli::{cmd_eval, cmd_stability, cmd_sweep, cmd_train, parse_lambdas, RunConfig};

#[derive(Parser)]
#[command(
    name = "grpsparse",
    version,
    about = "Group-sparse input selection for feed-forward networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: the config's output.dir, else `.`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides train.seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Train one model.
    Train {
        #[command(flatten)]
        common: Common,
    },
    /// Train one model per lambda.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated penalty strengths.
        #[arg(long)]
        lambdas: String,
        /// Parallel rows.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Start every row from the same initialization.
        #[arg(long)]
        pin_seed: bool,
    },
    /// Bootstrap selection stability.
    Stability {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        runs: usize,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Evaluate a saved model on the config's evaluation set.
    Eval {
        #[arg(long)]
        snapshot: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the confusion matrix as CSV.
        #[arg(long)]
        confusion: bool,
    },
}

fn run(cli: Cli) -> grpsparse_cli::Result<()> {
    match cli.command {
        Command::Train { common } => {
            let cfg = RunConfig::load(&common.config)?;
            let r = cmd_train(&cfg, &output_dir(&cfg, common.out), common.seed)?;
            println!(
                "sparse groups: {} of {} {:?}; test accuracy {:.4}",
                r.sparse_count, r.num_groups, r.sparse_groups, r.test.accuracy
            );
        }
        Command::Sweep {
            common,
            lambdas,
            jobs,
            pin_seed,
        } => {
            let cfg = RunConfig::load(&common.config)?;
            let lambdas = parse_lambdas(&lambdas)?;
            let res = cmd_sweep(
                &cfg,
                &lambdas,
                &output_dir(&cfg, common.out),
                common.seed,
                pin_seed,
                jobs,
            )?;
            for row in &res.rows {
                match (&row.error, row.sparse_count, row.accuracy) {
                    (Some(e), _, _) => println!("lambda {:e}: failed: {e}", row.lambda),
                    (None, Some(k), Some(acc)) => println!("lambda {:e}: {k} sparse, accuracy {acc:.4}", row.lambda),
                    _ => {}
                }
            }
        }
        Command::Stability { common, runs, jobs } => {
            let cfg = RunConfig::load(&common.config)?;
            let r = cmd_stability(&cfg, runs, &output_dir(&cfg, common.out), common.seed, jobs)?;
            println!("mean pairwise Jaccard over {} runs: {:.4}", r.runs, r.mean_jaccard);
        }
        Command::Eval {
            snapshot,
            config,
            out,
            confusion,
        } => {
            let cfg = RunConfig::load(&config)?;
            let r = cmd_eval(&snapshot, &cfg, &output_dir(&cfg, out), confusion)?;
            println!("accuracy {:.4}; sparse groups {:?}", r.report.accuracy, r.sparse_groups);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
