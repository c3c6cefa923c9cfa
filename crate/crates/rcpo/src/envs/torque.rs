//! Mean-torque toy: a fixed-length chain where each action applies a torque
//! level `u ∈ [0,1]`, earning reward `gain·u` while the episode's mean torque
//! is constrained to stay at or below α.
//!
//! The constrained optimum has a closed form: spend the torque budget `α·T`
//! greedily on the earliest (least-discounted) steps.

use crate::cmdp::TabularCmdp;
use crate::error::{Error, Result};
use crate::trajectory::{ConstraintKind, ConstraintSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct TorqueToyConfig {
    /// Episode length `T`; the chain has `T` decision states plus a terminal.
    pub horizon: usize,
    /// Available torque levels, sorted ascending within [0,1].
    pub torque_levels: Vec<f64>,
    /// Reward per unit torque.
    pub gain: f64,
    /// Mean-torque threshold α.
    pub alpha: f64,
    pub discount: f64,
}

impl Default for TorqueToyConfig {
    fn default() -> Self {
        Self {
            horizon: 4,
            torque_levels: vec![0.0, 1.0],
            gain: 1.0,
            alpha: 0.25,
            discount: 0.99,
        }
    }
}

impl TorqueToyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::InvalidConfig("torque horizon must be ≥ 1".into()));
        }
        if self.torque_levels.is_empty()
            || self
                .torque_levels
                .iter()
                .any(|u| !(0.0..=1.0).contains(u))
            || self.torque_levels.windows(2).any(|w| w[0] > w[1])
        {
            return Err(Error::InvalidConfig(
                "torque levels must be sorted within [0,1]".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.discount) {
            return Err(Error::InvalidConfig(format!(
                "discount {} outside [0,1)",
                self.discount
            )));
        }
        if !self.gain.is_finite() || !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidConfig(
                "gain must be finite and α within [0,1]".into(),
            ));
        }
        Ok(())
    }

    pub fn n_states(&self) -> usize {
        self.horizon + 1
    }

    pub fn constraint_spec(&self) -> ConstraintSpec {
        ConstraintSpec::new(ConstraintKind::MeanValue, self.alpha)
            .expect("mean-value spec with finite threshold")
    }
}

/// Builds the `T`-step chain: state `t` at time `t`, every action advances,
/// state `T` terminal. Reward `gain·u` and penalty `u` for torque level `u`.
pub fn torque_toy_build(cfg: &TorqueToyConfig) -> Result<TabularCmdp> {
    cfg.validate()?;
    let t_max = cfg.horizon;
    let n = cfg.n_states();
    let n_actions = cfg.torque_levels.len();
    let mut transition = vec![0.0; n * n_actions * n];
    let mut reward = vec![0.0; n * n_actions * n];
    let mut penalty = vec![0.0; n * n_actions];
    for s in 0..t_max {
        for (a, &u) in cfg.torque_levels.iter().enumerate() {
            let base = (s * n_actions + a) * n;
            transition[base + s + 1] = 1.0;
            reward[base + s + 1] = cfg.gain * u;
            penalty[s * n_actions + a] = u;
        }
    }
    for a in 0..n_actions {
        transition[(t_max * n_actions + a) * n + t_max] = 1.0;
    }
    let mut initial = vec![0.0; n];
    initial[0] = 1.0;
    let mut terminal = vec![false; n];
    terminal[t_max] = true;
    TabularCmdp::new(
        n,
        n_actions,
        transition,
        reward,
        penalty,
        initial,
        cfg.discount,
        terminal,
        vec![],
    )
}

/// Exact best feasible discounted reward under the mean-torque constraint.
///
/// Rewards are linear in torque, so the optimum front-loads the budget
/// `α·T` (stochastic mixing reaches any per-step expected torque between the
/// smallest and largest level). `None` when even minimal torque everywhere
/// violates α.
pub fn torque_toy_best_feasible(cfg: &TorqueToyConfig) -> Result<Option<f64>> {
    cfg.validate()?;
    let u_min = cfg.torque_levels[0];
    let u_max = *cfg.torque_levels.last().unwrap();
    let t_max = cfg.horizon as f64;
    let mut budget = cfg.alpha * t_max - u_min * t_max;
    if budget < -1e-12 {
        return Ok(None);
    }
    budget = budget.max(0.0);
    let headroom = u_max - u_min;
    let mut value = 0.0;
    for t in 0..cfg.horizon {
        let extra = if headroom == 0.0 {
            0.0
        } else {
            budget.min(headroom)
        };
        let u = u_min + extra;
        budget -= extra;
        value += cfg.gain * u * cfg.discount.powi(t as i32);
    }
    Ok(Some(value))
}
