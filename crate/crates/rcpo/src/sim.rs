//! Trajectory sampling: CDF inverse draws for actions, transitions and
//! starts, and whole-episode rollouts with a truncation cap.
//!
//! All draws consume exactly one uniform from the caller's RNG, which keeps
//! runs byte-reproducible under a fixed seed and stream layout.

use rand::Rng;

use crate::cmdp::TabularCmdp;
use crate::error::{Error, Result};
use crate::policy::{PolicyTable, SoftmaxPolicy};
use crate::trajectory::{Step, Trajectory};

/// Anything that can draw an action in a state.
pub trait ActionSampler {
    fn sample_action(&self, s: usize, rng: &mut impl Rng) -> usize;
}

impl ActionSampler for PolicyTable {
    fn sample_action(&self, s: usize, rng: &mut impl Rng) -> usize {
        sample_index(self.row(s), rng)
    }
}

impl ActionSampler for SoftmaxPolicy {
    fn sample_action(&self, s: usize, rng: &mut impl Rng) -> usize {
        sample_index(&self.action_probs(s), rng)
    }
}

/// Draws an index from a probability vector by inverse CDF (one uniform).
pub fn sample_index(probs: &[f64], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // Rounding left acc marginally below 1; the draw belongs to the tail.
    probs.len() - 1
}

/// One environment transition: `(next_state, reward, realized penalty)`.
pub fn sample_transition(
    cmdp: &TabularCmdp,
    s: usize,
    a: usize,
    rng: &mut impl Rng,
) -> (usize, f64, f64) {
    let next = sample_index(cmdp.transition_row(s, a), rng);
    (next, cmdp.reward(s, a, next), cmdp.realized_penalty(s, a, next))
}

/// Full episode from `start_dist`, truncated after `cap` steps if no
/// terminal state is reached.
pub fn sample_episode(
    cmdp: &TabularCmdp,
    actor: &impl ActionSampler,
    start_dist: &[f64],
    cap: usize,
    rng: &mut impl Rng,
) -> Result<Trajectory> {
    let mut s = sample_index(start_dist, rng);
    if cmdp.is_terminal(s) {
        return Err(Error::Inconsistent(format!(
            "episode started in terminal state {s}"
        )));
    }
    let mut steps = Vec::new();
    for _ in 0..cap {
        let a = actor.sample_action(s, rng);
        let (next, reward, penalty) = sample_transition(cmdp, s, a, rng);
        steps.push(Step {
            state: s,
            action: a,
            reward,
            penalty,
            next_state: next,
            terminal: cmdp.is_terminal(next),
        });
        if cmdp.is_terminal(next) {
            break;
        }
        s = next;
    }
    Trajectory::new(steps)
}
