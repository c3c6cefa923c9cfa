//! Constrained reinforcement learning on finite CMDPs.
//!
//! The crate trains policies that maximize discounted reward subject to a
//! constraint on a separate penalty signal (a discounted sum, a per-episode
//! mean, or a failure probability). Three trainers share one loop shape:
//!
//! * a three-timescale Lagrangian actor-critic that adapts the penalty
//!   multiplier λ online while the actor and critic learn,
//! * a Monte-Carlo primal-dual baseline that updates from whole episodes,
//! * fixed-penalty reward shaping (λ frozen, no dual ascent).
//!
//! Everything observable is reproducible: all randomness flows from one seed,
//! and exact tabular solvers (policy evaluation, constrained solving by
//! policy enumeration) provide ground truth for tests and experiment reports.

pub mod agents;
pub mod cmdp;
pub mod envs;
pub mod error;
pub mod eval;
pub mod harness;
pub mod oracle;
pub mod policy;
pub mod schedules;
pub mod sim;
pub mod trajectory;

#[cfg(test)]
mod testutil;

pub use agents::{
    critic_td_update, gae_advantages, lagrange_mc_train, lambda_update, policy_gradient_step,
    rcpo_train, reward_shaping_train, Algorithm, CriticTable, LagrangeState, MetricsRow,
    TrainConfig, TrainRun,
};
pub use cmdp::TabularCmdp;
pub use envs::{Env, RestartRule};
pub use error::{Error, Result};
pub use harness::{
    emit_plots, evaluate_policy, run_experiment, EnvSpec, ExperimentConfig, RunArtifacts,
    RunSummary,
};
pub use oracle::{
    exact_jc, exact_jr, failure_probability_exact, mean_value_exact, solve_cmdp_enumeration,
    LedgerEntry, OracleSolution,
};
pub use eval::{
    evaluate_policy_exact, penalized_reward, penalized_value_exact, policy_value_with_discount,
    PenalizedValueTable,
};
pub use policy::{PolicyTable, SoftmaxPolicy};
pub use schedules::{
    project_lambda, project_theta, schedule_value, validate_timescales, ProjectionBox,
    StepSchedule, TimescaleVerdict, Validity,
};
pub use trajectory::{
    discounted_return, estimate_jc, evaluate_constraint, ConstraintKind, ConstraintSpec, Signal,
    Step, Trajectory,
};
