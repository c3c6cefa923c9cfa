//! Flat key=value experiment configuration.
//!
//! Keys are grouped by prefix (`env.`, `algo.`, `sched.`, `run.`); values
//! are plain tokens so configs diff cleanly. Parsing resolves every
//! default, and [`ExperimentConfig::to_text`] re-serializes the resolved
//! config in a fixed key order, so echo → parse is an identity.

use crate::agents::{Algorithm, TrainConfig};
use crate::cmdp::TabularCmdp;
use crate::envs::rover::{rover_build, RoverConfig, RoverMap};
use crate::envs::torque::{torque_toy_build, TorqueToyConfig};
use crate::envs::{Env, RestartRule};
use crate::error::{Error, Result};
use crate::schedules::StepSchedule;
use crate::trajectory::{ConstraintKind, ConstraintSpec};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Which simulated domain an experiment trains on.
#[derive(Debug, Clone, PartialEq)]
pub enum EnvSpec {
    /// Grid-world rover; `map: None` uses the bundled layout.
    Rover {
        map: Option<PathBuf>,
        slip: f64,
        r_step: f64,
        r_goal: f64,
        discount: f64,
    },
    /// Mean-torque chain.
    Torque {
        horizon: usize,
        torque_levels: Vec<f64>,
        gain: f64,
        discount: f64,
    },
    /// A CMDP loaded from its text serialization.
    CmdpFile { path: PathBuf },
}

impl EnvSpec {
    fn kind_token(&self) -> &'static str {
        match self {
            Self::Rover { .. } => "rover",
            Self::Torque { .. } => "torque",
            Self::CmdpFile { .. } => "cmdp",
        }
    }
}

/// A full experiment: algorithm, environment, trainer settings, seeds, and
/// where artifacts go. `train.seed` is a placeholder overwritten per run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    pub env: EnvSpec,
    pub restart: RestartRule,
    pub train: TrainConfig,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
}

fn restart_token(r: RestartRule) -> &'static str {
    match r {
        RestartRule::InitialDist => "initial",
        RestartRule::LinearDecayUniform => "linear_decay",
    }
}

fn parse_restart(token: &str) -> Result<RestartRule> {
    match token {
        "initial" => Ok(RestartRule::InitialDist),
        "linear_decay" => Ok(RestartRule::LinearDecayUniform),
        _ => Err(Error::Parse(format!("unknown restart rule '{token}'"))),
    }
}

fn constraint_token(kind: ConstraintKind) -> String {
    match kind {
        ConstraintKind::DiscountedSum(g) => format!("discounted:{g}"),
        ConstraintKind::MeanValue => "mean".into(),
        ConstraintKind::Probabilistic => "prob".into(),
    }
}

struct KeyTable {
    entries: BTreeMap<String, (usize, String)>,
    consumed: std::collections::BTreeSet<String>,
}

impl KeyTable {
    fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Parse(format!("line {}: expected key=value, got '{line}'", i + 1))
            })?;
            let key = key.trim().to_string();
            if entries
                .insert(key.clone(), (i + 1, value.trim().to_string()))
                .is_some()
            {
                return Err(Error::Parse(format!(
                    "line {}: duplicate key '{key}'",
                    i + 1
                )));
            }
        }
        Ok(Self {
            entries,
            consumed: Default::default(),
        })
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.consumed.insert(key.to_string());
        self.entries.get(key).map(|(_, v)| v.clone())
    }

    fn required(&mut self, key: &str) -> Result<String> {
        self.take(key)
            .ok_or_else(|| Error::Parse(format!("missing required key '{key}'")))
    }

    fn parsed<T: std::str::FromStr>(&mut self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        match self.take(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|e| Error::Parse(format!("key '{key}': bad value '{v}': {e}"))),
        }
    }

    fn required_parsed<T: std::str::FromStr>(&mut self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let v = self.required(key)?;
        v.parse()
            .map_err(|e| Error::Parse(format!("key '{key}': bad value '{v}': {e}")))
    }

    fn finish(self) -> Result<()> {
        for (key, (line, _)) in &self.entries {
            if !self.consumed.contains(key) {
                return Err(Error::Parse(format!(
                    "line {line}: unknown key '{key}' for this environment kind"
                )));
            }
        }
        Ok(())
    }
}

fn parse_f64_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|e| Error::Parse(format!("key '{key}': bad number '{t}': {e}")))
        })
        .collect()
}

fn parse_u64_list(key: &str, value: &str) -> Result<Vec<u64>> {
    value
        .split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|e| Error::Parse(format!("key '{key}': bad number '{t}': {e}")))
        })
        .collect()
}

fn join<T: std::fmt::Display>(values: &[T]) -> String {
    values
        .iter()
        .map(T::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut keys = KeyTable::parse(text)?;

        let algorithm = Algorithm::parse(&keys.required("algo.name")?)?;
        let kind = keys.required("env.kind")?;
        let (env, default_constraint, default_restart, default_cadence, default_len) =
            match kind.as_str() {
                "rover" => {
                    let env = EnvSpec::Rover {
                        map: keys.take("env.map").map(PathBuf::from),
                        slip: keys.parsed("env.slip", 0.05)?,
                        r_step: keys.parsed("env.r_step", -0.01)?,
                        r_goal: keys.parsed("env.r_goal", 0.0)?,
                        discount: keys.parsed("env.discount", 0.99)?,
                    };
                    (
                        env,
                        Some(ConstraintKind::Probabilistic),
                        RestartRule::LinearDecayUniform,
                        5120u64,
                        1024usize,
                    )
                }
                "torque" => {
                    let levels = match keys.take("env.torque_levels") {
                        None => vec![0.0, 1.0],
                        Some(v) => parse_f64_list("env.torque_levels", &v)?,
                    };
                    let env = EnvSpec::Torque {
                        horizon: keys.parsed("env.horizon", 4)?,
                        torque_levels: levels,
                        gain: keys.parsed("env.gain", 1.0)?,
                        discount: keys.parsed("env.discount", 0.99)?,
                    };
                    (
                        env,
                        Some(ConstraintKind::MeanValue),
                        RestartRule::InitialDist,
                        1000,
                        200,
                    )
                }
                "cmdp" => {
                    let env = EnvSpec::CmdpFile {
                        path: PathBuf::from(keys.required("env.path")?),
                    };
                    (env, None, RestartRule::InitialDist, 1000, 200)
                }
                _ => {
                    return Err(Error::Parse(format!(
                        "key 'env.kind': unknown environment '{kind}'"
                    )))
                }
            };

        let restart = match keys.take("env.restart") {
            None => default_restart,
            Some(v) => parse_restart(&v)?,
        };
        let constraint_kind = match (keys.take("env.constraint"), default_constraint) {
            (Some(v), _) => ConstraintKind::parse(&v)?,
            (None, Some(d)) => d,
            (None, None) => {
                return Err(Error::Parse(
                    "missing required key 'env.constraint' (cmdp environments do not imply one)"
                        .into(),
                ))
            }
        };
        let alpha: f64 = keys.required_parsed("env.alpha")?;
        let constraint = ConstraintSpec::new(constraint_kind, alpha)?;

        let mut train = TrainConfig::new(constraint, keys.required_parsed("algo.total_steps")?, 0);
        train.t_max = keys.parsed("algo.t_max", train.t_max)?;
        train.gamma = keys.parsed("algo.gamma", train.gamma)?;
        train.gae_tau = match keys.take("algo.gae_tau") {
            None => None,
            Some(v) => Some(v.parse().map_err(|e| {
                Error::Parse(format!("key 'algo.gae_tau': bad value '{v}': {e}"))
            })?),
        };
        train.lambda0 = keys.parsed("algo.lambda0", train.lambda0)?;
        train.lambda_max = keys.parsed("algo.lambda_max", train.lambda_max)?;
        train.lambda_window = keys.parsed("algo.lambda_window", train.lambda_window)?;
        train.actor_box = keys.parsed("algo.actor_box", train.actor_box)?;
        train.hidden = match keys.take("algo.hidden") {
            None => None,
            Some(v) => Some(v.parse().map_err(|e| {
                Error::Parse(format!("key 'algo.hidden': bad value '{v}': {e}"))
            })?),
        };
        train.mc_reward_baseline =
            keys.parsed("algo.mc_reward_baseline", train.mc_reward_baseline)?;
        train.eval_every_episodes = keys.parsed("algo.eval_every_episodes", default_cadence)?;
        train.eval_episodes = keys.parsed("algo.eval_episodes", default_len)?;
        for (key, slot) in [
            ("sched.eta1", &mut train.eta1),
            ("sched.eta2", &mut train.eta2),
            ("sched.eta3", &mut train.eta3),
        ] {
            if let Some(v) = keys.take(key) {
                *slot = StepSchedule::parse(&v)?;
            }
        }

        let seeds = parse_u64_list("run.seeds", &keys.required("run.seeds")?)?;
        let out_dir = PathBuf::from(keys.required("run.out")?);
        keys.finish()?;

        let cfg = Self {
            algorithm,
            env,
            restart,
            train,
            seeds,
            out_dir,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("run.seeds must list at least one seed".into()));
        }
        if let EnvSpec::Torque { torque_levels, .. } = &self.env {
            if torque_levels.is_empty() {
                return Err(Error::InvalidConfig("env.torque_levels must be non-empty".into()));
            }
        }
        self.train.validate()
    }

    /// Canonical serialization: every resolved field, fixed key order.
    /// `parse(to_text(c)) == c`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| writeln!(out, "{k}={v}").expect("string write");
        kv("algo.name", self.algorithm.token());
        kv("env.kind", self.env.kind_token().into());
        match &self.env {
            EnvSpec::Rover {
                map,
                slip,
                r_step,
                r_goal,
                discount,
            } => {
                if let Some(p) = map {
                    kv("env.map", p.display().to_string());
                }
                kv("env.slip", slip.to_string());
                kv("env.r_step", r_step.to_string());
                kv("env.r_goal", r_goal.to_string());
                kv("env.discount", discount.to_string());
            }
            EnvSpec::Torque {
                horizon,
                torque_levels,
                gain,
                discount,
            } => {
                kv("env.horizon", horizon.to_string());
                kv("env.torque_levels", join(torque_levels));
                kv("env.gain", gain.to_string());
                kv("env.discount", discount.to_string());
            }
            EnvSpec::CmdpFile { path } => {
                kv("env.path", path.display().to_string());
            }
        }
        kv("env.restart", restart_token(self.restart).into());
        kv("env.constraint", constraint_token(self.train.constraint.kind));
        kv("env.alpha", self.train.constraint.threshold.to_string());
        kv("algo.t_max", self.train.t_max.to_string());
        kv("algo.total_steps", self.train.total_steps.to_string());
        kv("algo.gamma", self.train.gamma.to_string());
        if let Some(tau) = self.train.gae_tau {
            kv("algo.gae_tau", tau.to_string());
        }
        kv("algo.lambda0", self.train.lambda0.to_string());
        kv("algo.lambda_max", self.train.lambda_max.to_string());
        kv("algo.lambda_window", self.train.lambda_window.to_string());
        kv("algo.actor_box", self.train.actor_box.to_string());
        if let Some(h) = self.train.hidden {
            kv("algo.hidden", h.to_string());
        }
        kv(
            "algo.mc_reward_baseline",
            self.train.mc_reward_baseline.to_string(),
        );
        kv(
            "algo.eval_every_episodes",
            self.train.eval_every_episodes.to_string(),
        );
        kv("algo.eval_episodes", self.train.eval_episodes.to_string());
        kv("sched.eta1", self.train.eta1.token());
        kv("sched.eta2", self.train.eta2.token());
        kv("sched.eta3", self.train.eta3.token());
        kv("run.seeds", join(&self.seeds));
        kv("run.out", self.out_dir.display().to_string());
        out
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Instantiates the environment (reading any referenced files).
    pub fn build_env(&self) -> Result<Env> {
        let cmdp = match &self.env {
            EnvSpec::Rover {
                map,
                slip,
                r_step,
                r_goal,
                discount,
            } => {
                let map = match map {
                    Some(p) => RoverMap::parse(&std::fs::read_to_string(p)?)?,
                    None => RoverMap::bundled(),
                };
                let rc = RoverConfig::from_map(&map, *slip, *r_step, *r_goal, *discount);
                rover_build(&rc)?.cmdp
            }
            EnvSpec::Torque {
                horizon,
                torque_levels,
                gain,
                discount,
            } => torque_toy_build(&TorqueToyConfig {
                horizon: *horizon,
                torque_levels: torque_levels.clone(),
                gain: *gain,
                alpha: self.train.constraint.threshold,
                discount: *discount,
            })?,
            EnvSpec::CmdpFile { path } => {
                TabularCmdp::from_text(&std::fs::read_to_string(path)?)?
            }
        };
        Ok(Env {
            cmdp,
            restart: self.restart,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ROVER_CFG: &str = "\
# seeded rover run
algo.name=rcpo
env.kind=rover
env.alpha=0.5
algo.total_steps=100000
algo.lambda0=0.6
run.seeds=0,1,2,3,4
run.out=results/rover
";

    #[test]
    fn rover_defaults_resolve_and_round_trip() {
        let cfg = ExperimentConfig::parse(ROVER_CFG).unwrap();
        assert_eq!(cfg.algorithm, Algorithm::Rcpo);
        assert_eq!(cfg.restart, RestartRule::LinearDecayUniform);
        assert_eq!(cfg.train.constraint.kind, ConstraintKind::Probabilistic);
        assert_eq!(cfg.train.constraint.threshold, 0.5);
        assert_eq!(cfg.train.eval_every_episodes, 5120);
        assert_eq!(cfg.train.eval_episodes, 1024);
        assert_eq!(cfg.train.lambda0, 0.6);
        assert_eq!(cfg.seeds, vec![0, 1, 2, 3, 4]);
        match &cfg.env {
            EnvSpec::Rover { slip, r_step, .. } => {
                assert_eq!(*slip, 0.05);
                assert_eq!(*r_step, -0.01);
            }
            other => panic!("wrong env {other:?}"),
        }

        let echo = cfg.to_text();
        let again = ExperimentConfig::parse(&echo).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(echo, again.to_text());
    }

    #[test]
    fn torque_and_cmdp_round_trip() {
        let text = "\
algo.name=shaping:100
env.kind=torque
env.horizon=6
env.torque_levels=0,0.5,1
env.alpha=0.25
algo.total_steps=50000
algo.gae_tau=0.95
algo.hidden=16
run.seeds=7
run.out=/tmp/t
";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(
            cfg.algorithm,
            Algorithm::Shaping {
                lambda_fixed: 100.0
            }
        );
        assert_eq!(cfg.train.constraint.kind, ConstraintKind::MeanValue);
        assert_eq!(cfg.train.gae_tau, Some(0.95));
        assert_eq!(cfg.train.hidden, Some(16));
        assert_eq!(cfg.train.eval_every_episodes, 1000);
        let again = ExperimentConfig::parse(&cfg.to_text()).unwrap();
        assert_eq!(cfg, again);

        let text = "\
algo.name=lagrange_mc
env.kind=cmdp
env.path=envs/chain.cmdp
env.constraint=discounted:0.9
env.alpha=0.2
algo.total_steps=1000
run.seeds=1,2
run.out=out
";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(
            cfg.train.constraint.kind,
            ConstraintKind::DiscountedSum(0.9)
        );
        assert_eq!(cfg.restart, RestartRule::InitialDist);
        let again = ExperimentConfig::parse(&cfg.to_text()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn parse_rejects_malformed_configs() {
        // Unknown key, with its line number in the message.
        let bad = format!("{ROVER_CFG}env.slipp=0.1\n");
        let err = ExperimentConfig::parse(&bad).unwrap_err().to_string();
        assert!(err.contains("env.slipp"), "{err}");
        assert!(err.contains("line 9"), "{err}");

        // Duplicate key.
        let bad = format!("{ROVER_CFG}env.alpha=0.6\n");
        assert!(ExperimentConfig::parse(&bad)
            .unwrap_err()
            .to_string()
            .contains("duplicate"));

        // Missing required key.
        let bad = ROVER_CFG.replace("env.alpha=0.5\n", "");
        assert!(ExperimentConfig::parse(&bad)
            .unwrap_err()
            .to_string()
            .contains("env.alpha"));

        // Missing '='.
        assert!(ExperimentConfig::parse("algo.name rcpo\n")
            .unwrap_err()
            .to_string()
            .contains("key=value"));

        // cmdp environments must state their constraint kind.
        let bad = "\
algo.name=rcpo
env.kind=cmdp
env.path=x.cmdp
env.alpha=0.2
algo.total_steps=10
run.seeds=0
run.out=o
";
        assert!(ExperimentConfig::parse(bad)
            .unwrap_err()
            .to_string()
            .contains("env.constraint"));

        // Empty seed list.
        let bad = ROVER_CFG.replace("run.seeds=0,1,2,3,4", "run.seeds=");
        assert!(ExperimentConfig::parse(&bad).is_err());
    }

    #[test]
    fn misordered_timescales_get_a_diagnostic() {
        let bad = format!("{ROVER_CFG}sched.eta1=const:0.5\n");
        let err = ExperimentConfig::parse(&bad).unwrap_err().to_string();
        assert!(err.contains("timescale ordering"), "{err}");
    }

    #[test]
    fn bundled_rover_env_builds() {
        let cfg = ExperimentConfig::parse(ROVER_CFG).unwrap();
        let env = cfg.build_env().unwrap();
        assert_eq!(env.cmdp.n_states(), 144);
        assert_eq!(env.restart, RestartRule::LinearDecayUniform);
    }
}
