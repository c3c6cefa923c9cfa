//! Simulated constrained environments: the rover grid-world, a mean-torque
//! toy chain, and random tabular CMDP generators for oracle-backed testing.

pub mod random;
pub mod rover;
pub mod torque;

pub use random::{random_cmdp, random_episodic_cmdp};
pub use rover::{rover_build, rover_restart_dist, RoverConfig, RoverDomain};
pub use torque::{torque_toy_best_feasible, torque_toy_build, TorqueToyConfig};

use crate::cmdp::TabularCmdp;

/// How training episodes choose their start state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RestartRule {
    /// Always the CMDP's own initial distribution.
    InitialDist,
    /// Uniform over non-terminal states with probability `1/episode_index`,
    /// the initial distribution otherwise (exploration decays linearly).
    LinearDecayUniform,
}

/// A CMDP paired with its training restart rule. Evaluation always uses the
/// CMDP's canonical initial distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct Env {
    pub cmdp: TabularCmdp,
    pub restart: RestartRule,
}

impl Env {
    pub fn plain(cmdp: TabularCmdp) -> Self {
        Self {
            cmdp,
            restart: RestartRule::InitialDist,
        }
    }

    /// Start distribution for the given 1-based episode index.
    pub fn restart_dist(&self, episode_index: u64) -> Vec<f64> {
        assert!(episode_index >= 1, "episode index is 1-based");
        match self.restart {
            RestartRule::InitialDist => self.cmdp.initial_dist().to_vec(),
            RestartRule::LinearDecayUniform => linear_decay_restart(&self.cmdp, episode_index),
        }
    }
}

/// Uniform over non-terminal states with probability `1/episode_index`,
/// the CMDP's initial distribution otherwise.
pub(crate) fn linear_decay_restart(cmdp: &TabularCmdp, episode_index: u64) -> Vec<f64> {
    let explore = 1.0 / episode_index as f64;
    let free: Vec<usize> = cmdp.non_terminal_states().collect();
    let per_free = explore / free.len() as f64;
    let mut dist: Vec<f64> = cmdp
        .initial_dist()
        .iter()
        .map(|&p| (1.0 - explore) * p)
        .collect();
    for s in free {
        dist[s] += per_free;
    }
    dist
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil;

    #[test]
    fn restart_dist_sums_to_one_and_decays() {
        let env = Env {
            cmdp: testutil::terminal_chain(),
            restart: RestartRule::LinearDecayUniform,
        };
        for it in [1u64, 2, 4, 100] {
            let d = env.restart_dist(it);
            assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            // Terminal states get no restart mass.
            assert_eq!(d[2], 0.0);
        }
        // iteration=1: uniform over the two non-terminal states.
        assert_eq!(env.restart_dist(1), vec![0.5, 0.5, 0.0]);
        // iteration=4: 3/4 on the start, plus 1/4 spread over 2 states.
        let d = env.restart_dist(4);
        assert!((d[0] - (0.75 + 0.125)).abs() < 1e-12);
        assert!((d[1] - 0.125).abs() < 1e-12);
        // Mass concentrates on the initial distribution as iterations grow.
        assert!(env.restart_dist(1000)[0] > 0.999);
    }
}
