//! Seeded experiment execution and artifact persistence.

use super::config::ExperimentConfig;
use crate::agents::{
    evaluate_actor, lagrange_mc_train, rcpo_train, reward_shaping_train, Algorithm, MetricsRow,
    TrainRun,
};
use crate::envs::Env;
use crate::error::{Error, Result};
use crate::sim::ActionSampler;
use crate::trajectory::ConstraintSpec;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use std::fs;
use std::path::{Path, PathBuf};

pub const METRICS_HEADER: &str =
    "step,episodes,lambda,eval_reward_mean,eval_constraint_mean,eval_constraint_stderr";

/// Final-row digest of one seed's run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSummary {
    pub final_reward: f64,
    pub final_constraint: f64,
    /// `final_constraint ≤ α`, the paper's validity criterion.
    pub feasible: bool,
}

/// Everything one seed leaves on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct RunArtifacts {
    pub seed: u64,
    pub metrics_path: PathBuf,
    pub policy_path: PathBuf,
    pub config_path: PathBuf,
    pub summary_path: PathBuf,
    /// The parsed config re-serialized (parses back to an equal config).
    pub config_echo: String,
    pub summary: RunSummary,
}

fn summary_text(seed: u64, s: &RunSummary) -> String {
    format!(
        "seed={seed}\nfinal_reward={}\nfinal_constraint={}\nfeasible={}\n",
        s.final_reward, s.final_constraint, s.feasible
    )
}

/// Trains every configured seed sequentially and deterministically, writing
/// `metrics.csv`, `policy.txt`, `config.txt`, and `summary.txt` under
/// `<out>/seed_<N>/`. Feasibility never affects the result status.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<RunArtifacts>> {
    cfg.validate()?;
    let env = cfg.build_env()?;
    let echo = cfg.to_text();
    let mut artifacts = Vec::with_capacity(cfg.seeds.len());
    for &seed in &cfg.seeds {
        let run = train_one_seed(&env, cfg, seed)?;
        artifacts.push(persist_run(cfg, &echo, seed, &run)?);
    }
    Ok(artifacts)
}

/// One seed of the configured experiment (no I/O).
pub fn train_one_seed(env: &Env, cfg: &ExperimentConfig, seed: u64) -> Result<TrainRun> {
    let mut tc = cfg.train.clone();
    tc.seed = seed;
    match cfg.algorithm {
        Algorithm::Rcpo => rcpo_train(env, &tc),
        Algorithm::LagrangeMc => lagrange_mc_train(env, &tc),
        Algorithm::Shaping { lambda_fixed } => reward_shaping_train(env, lambda_fixed, &tc),
    }
}

fn persist_run(
    cfg: &ExperimentConfig,
    echo: &str,
    seed: u64,
    run: &TrainRun,
) -> Result<RunArtifacts> {
    let dir = cfg.out_dir.join(format!("seed_{seed}"));
    fs::create_dir_all(&dir)?;
    let metrics_path = dir.join("metrics.csv");
    let policy_path = dir.join("policy.txt");
    let config_path = dir.join("config.txt");
    let summary_path = dir.join("summary.txt");

    let last = run.final_metrics();
    let summary = RunSummary {
        final_reward: last.eval_reward_mean,
        final_constraint: last.eval_constraint_mean,
        feasible: last.eval_constraint_mean <= cfg.train.constraint.threshold,
    };
    fs::write(&metrics_path, run.metrics_csv())?;
    fs::write(&policy_path, run.policy_text())?;
    fs::write(&config_path, echo)?;
    fs::write(&summary_path, summary_text(seed, &summary))?;
    Ok(RunArtifacts {
        seed,
        metrics_path,
        policy_path,
        config_path,
        summary_path,
        config_echo: echo.to_string(),
        summary,
    })
}

/// Stochastic evaluation of a frozen policy: `episodes` rollouts from the
/// CMDP's canonical initial distribution (never the training restart
/// mixture), reward discounted at the environment's own γ. Returns
/// (reward mean, constraint mean, constraint standard error).
pub fn evaluate_policy(
    env: &Env,
    actor: &impl ActionSampler,
    spec: &ConstraintSpec,
    episodes: usize,
    seed: u64,
) -> Result<(f64, f64, f64)> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(1);
    evaluate_actor(&env.cmdp, actor, spec, env.cmdp.discount(), episodes, &mut rng)
}

/// Parses a metrics CSV written by [`run_experiment`], enforcing the exact
/// schema.
pub fn read_metrics_csv(path: &Path) -> Result<Vec<MetricsRow>> {
    let text = fs::read_to_string(path)?;
    parse_metrics_csv(&text).map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_metrics_csv(text: &str) -> Result<Vec<MetricsRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == METRICS_HEADER => {}
        other => {
            return Err(Error::Parse(format!(
                "metrics schema mismatch: expected '{METRICS_HEADER}', found {other:?}"
            )))
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(Error::Parse(format!(
                "row {}: expected 6 fields, found {}",
                i + 2,
                fields.len()
            )));
        }
        let num = |j: usize| -> Result<f64> {
            fields[j]
                .parse()
                .map_err(|e| Error::Parse(format!("row {}: field {}: {e}", i + 2, j + 1)))
        };
        rows.push(MetricsRow {
            step: fields[0]
                .parse()
                .map_err(|e| Error::Parse(format!("row {}: field 1: {e}", i + 2)))?,
            episodes: fields[1]
                .parse()
                .map_err(|e| Error::Parse(format!("row {}: field 2: {e}", i + 2)))?,
            lambda: num(2)?,
            eval_reward_mean: num(3)?,
            eval_constraint_mean: num(4)?,
            eval_constraint_stderr: num(5)?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::PolicyTable;
    use crate::testutil;

    fn toy_config(dir: &Path) -> ExperimentConfig {
        ExperimentConfig::parse(&format!(
            "algo.name=rcpo\n\
             env.kind=torque\n\
             env.alpha=0.25\n\
             algo.total_steps=400\n\
             algo.eval_every_episodes=40\n\
             algo.eval_episodes=16\n\
             run.seeds=0,1\n\
             run.out={}\n",
            dir.display()
        ))
        .unwrap()
    }

    #[test]
    fn run_experiment_writes_consistent_artifacts() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = toy_config(tmp.path());
        let artifacts = run_experiment(&cfg).unwrap();
        assert_eq!(artifacts.len(), 2);
        for art in &artifacts {
            let rows = read_metrics_csv(&art.metrics_path).unwrap();
            assert!(rows.len() >= 2);
            assert!(rows.windows(2).all(|w| w[0].step < w[1].step));
            assert!(rows.iter().all(|r| r.lambda >= 0.0));
            // Summary mirrors the CSV's last row.
            let last = rows.last().unwrap();
            assert_eq!(art.summary.final_constraint, last.eval_constraint_mean);
            assert_eq!(
                art.summary.feasible,
                last.eval_constraint_mean <= 0.25
            );
            // Config echo re-parses to the same config.
            let echoed = ExperimentConfig::parse(&art.config_echo).unwrap();
            assert_eq!(&echoed, &cfg);
            assert_eq!(
                std::fs::read_to_string(&art.config_path).unwrap(),
                art.config_echo
            );
            // Policy file parses back.
            let text = std::fs::read_to_string(&art.policy_path).unwrap();
            crate::policy::SoftmaxPolicy::from_text(&text).unwrap();
            let summary = std::fs::read_to_string(&art.summary_path).unwrap();
            assert!(summary.contains(&format!("seed={}", art.seed)));
        }
    }

    #[test]
    fn reruns_are_byte_identical() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = toy_config(tmp.path());
        let first = run_experiment(&cfg).unwrap();
        let bytes_a = std::fs::read(&first[0].metrics_path).unwrap();
        let second = run_experiment(&cfg).unwrap();
        let bytes_b = std::fs::read(&second[0].metrics_path).unwrap();
        assert_eq!(bytes_a, bytes_b);
        assert!(!bytes_a.is_empty());
    }

    #[test]
    fn evaluate_policy_is_deterministic_and_degenerate_cases_hold() {
        let cmdp = testutil::terminal_chain();
        let env = Env::plain(cmdp);
        let spec = ConstraintSpec::new(crate::trajectory::ConstraintKind::MeanValue, 0.5).unwrap();
        // Single action ⇒ the uniform policy is deterministic; the chain is
        // deterministic too, so every episode is identical.
        let policy = PolicyTable::uniform(env.cmdp.n_states(), env.cmdp.n_actions());
        let (r1, c1, se1) = evaluate_policy(&env, &policy, &spec, 32, 9).unwrap();
        let (r2, c2, se2) = evaluate_policy(&env, &policy, &spec, 32, 9).unwrap();
        assert_eq!((r1, c1, se1), (r2, c2, se2));
        assert_eq!(se1, 0.0);
        // 0.9-discounted two-move chain: 1 + 0.9.
        assert!((r1 - 1.9).abs() < 1e-12);
        // Single episode reports stderr 0 by convention.
        let (_, _, se) = evaluate_policy(&env, &policy, &spec, 1, 9).unwrap();
        assert_eq!(se, 0.0);
    }

    #[test]
    fn metrics_csv_schema_is_enforced() {
        assert!(parse_metrics_csv("step,episodes\n1,2\n").is_err());
        let good = format!("{METRICS_HEADER}\n0,0,0.5,-1,0.25,0.01\n");
        let rows = parse_metrics_csv(&good).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].lambda, 0.5);
        let bad = format!("{METRICS_HEADER}\n0,0,x,-1,0.25,0.01\n");
        assert!(parse_metrics_csv(&bad).is_err());
    }
}
