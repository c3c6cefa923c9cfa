//! Command-line entry point: seeded training runs, frozen-policy
//! evaluation, learning-curve plots, and the exact constrained solver.

use clap::{Parser, Subcommand};
use rcpo::harness::{
    emit_plots, evaluate_policy, load_env_file, run_experiment, ExperimentConfig,
};
use rcpo::policy::SoftmaxPolicy;
use rcpo::trajectory::{ConstraintKind, ConstraintSpec};
use rcpo::{solve_cmdp_enumeration, Error};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "rcpo",
    about = "Constrained policy optimization on tabular CMDPs",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured experiment for every seed and write artifacts.
    Train {
        /// Experiment config file (flat key=value).
        #[arg(long)]
        config: PathBuf,
        /// Train only this seed instead of the configured list.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the configured output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a saved policy on an environment file.
    Evaluate {
        /// Policy file (`policy v1 …`).
        #[arg(long)]
        policy: PathBuf,
        /// Environment file: CMDP text (`cmdp v1 …`) or a rover map.
        #[arg(long)]
        env: PathBuf,
        /// Number of evaluation episodes.
        #[arg(long)]
        episodes: usize,
        /// Constraint kind (`discounted:<g>`, `mean`, `prob`); defaults to
        /// the environment's natural kind.
        #[arg(long)]
        constraint: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Render metrics CSVs as a two-panel SVG learning-curve figure.
    Plot {
        /// Output SVG path.
        #[arg(long)]
        out: PathBuf,
        /// Threshold drawn as a dashed line in the constraint panel.
        #[arg(long)]
        alpha: Option<f64>,
        /// Metrics CSV files (one curve each).
        #[arg(required = true)]
        csvs: Vec<PathBuf>,
    },
    /// Solve an environment exactly by policy enumeration.
    Oracle {
        /// Environment file: CMDP text or a rover map.
        #[arg(long)]
        env: PathBuf,
        /// Constraint threshold.
        #[arg(long)]
        alpha: f64,
        /// Constraint kind; defaults to the environment's natural kind.
        #[arg(long)]
        constraint: Option<String>,
        /// Also write the full per-policy ledger CSV here.
        #[arg(long)]
        ledger: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Io(_) => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn dispatch(command: Command) -> Result<(), Error> {
    match command {
        Command::Train { config, seed, out } => {
            let mut cfg = ExperimentConfig::read_file(&config)?;
            if let Some(seed) = seed {
                cfg.seeds = vec![seed];
            }
            if let Some(out) = out {
                cfg.out_dir = out;
            }
            let artifacts = run_experiment(&cfg)?;
            for art in &artifacts {
                println!(
                    "seed={} final_reward={} final_constraint={} feasible={} metrics={}",
                    art.seed,
                    art.summary.final_reward,
                    art.summary.final_constraint,
                    art.summary.feasible,
                    art.metrics_path.display()
                );
            }
            Ok(())
        }
        Command::Evaluate {
            policy,
            env,
            episodes,
            constraint,
            seed,
        } => {
            let (env, natural_kind) = load_env_file(&env)?;
            let kind = match constraint {
                Some(token) => ConstraintKind::parse(&token)?,
                None => natural_kind,
            };
            // The threshold only matters for feasibility verdicts, not for
            // the estimates reported here; 0.5 is always in-range.
            let spec = ConstraintSpec::new(kind, 0.5)?;
            let text = std::fs::read_to_string(&policy)?;
            let policy = SoftmaxPolicy::from_text(&text)?;
            let (reward, constraint, stderr) =
                evaluate_policy(&env, &policy, &spec, episodes, seed)?;
            println!(
                "reward_mean={reward} constraint_mean={constraint} constraint_stderr={stderr}"
            );
            Ok(())
        }
        Command::Plot { out, alpha, csvs } => {
            emit_plots(&csvs, &out, alpha)?;
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::Oracle {
            env,
            alpha,
            constraint,
            ledger,
        } => {
            let (env, natural_kind) = load_env_file(&env)?;
            let kind = match constraint {
                Some(token) => ConstraintKind::parse(&token)?,
                None => natural_kind,
            };
            let spec = ConstraintSpec::new(kind, alpha)?;
            let solution = solve_cmdp_enumeration(&env.cmdp, &spec)?;
            println!(
                "feasible={} best_feasible_value={} policies_enumerated={}",
                solution.feasible,
                solution.best_feasible_value,
                solution.ledger.len()
            );
            if let Some(path) = ledger {
                std::fs::write(&path, solution.ledger_csv())?;
                println!("ledger={}", path.display());
            }
            Ok(())
        }
    }
}
