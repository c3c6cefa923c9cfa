//! Experiment orchestration: config files, seeded runs, artifact
//! persistence, policy evaluation, and learning-curve plots.

mod config;
mod plot;
mod run;

pub use config::{EnvSpec, ExperimentConfig};
pub use plot::emit_plots;
pub use run::{
    evaluate_policy, parse_metrics_csv, read_metrics_csv, run_experiment, train_one_seed,
    RunArtifacts, RunSummary, METRICS_HEADER,
};

use crate::envs::rover::{rover_build, RoverConfig, RoverMap};
use crate::envs::{Env, RestartRule};
use crate::error::Result;
use crate::TabularCmdp;
use crate::trajectory::ConstraintKind;
use std::path::Path;

/// Loads an environment file for the evaluation and oracle entry points.
/// `cmdp v1 …` text loads directly; anything else is parsed as a rover map
/// and built with the stock rover dynamics (slip 0.05, step −0.01, goal 0,
/// γ 0.99). Returns the environment and its natural constraint kind.
pub fn load_env_file(path: &Path) -> Result<(Env, ConstraintKind)> {
    let text = std::fs::read_to_string(path)?;
    if text.trim_start().starts_with("cmdp ") {
        let cmdp = TabularCmdp::from_text(&text)?;
        let kind = ConstraintKind::DiscountedSum(cmdp.discount());
        Ok((Env::plain(cmdp), kind))
    } else {
        let map = RoverMap::parse(&text)?;
        let cfg = RoverConfig::from_map(&map, 0.05, -0.01, 0.0, 0.99);
        let domain = rover_build(&cfg)?;
        Ok((
            Env {
                cmdp: domain.cmdp,
                restart: RestartRule::LinearDecayUniform,
            },
            ConstraintKind::Probabilistic,
        ))
    }
}
