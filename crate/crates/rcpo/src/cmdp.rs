//! Finite constrained MDP model: transition/reward/penalty tables plus the
//! validation and plain-text serialization shared by every other module.
//!
//! The reward is stored per `(s, a, s')` and the penalty per `(s, a)`. When a
//! CMDP carries failure states (crash-style domains), the per-step penalty a
//! sampler observes is the indicator of entering a failure state, and the
//! `(s, a)` table must equal its conditional expectation so exact evaluation
//! and sampled trajectories describe the same signal.

use crate::error::{Error, Result};

const PROB_TOL: f64 = 1e-12;

/// Finite CMDP `(S, A, R, P, mu, gamma)` with a nonnegative penalty channel,
/// terminal-state markers and an optional failure subset of the terminals.
///
/// Immutable after construction; all solvers treat terminal states as
/// zero-value absorbing states.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularCmdp {
    n_states: usize,
    n_actions: usize,
    /// `P(s'|s,a)` flattened as `[(s * n_actions + a) * n_states + s']`.
    transition: Vec<f64>,
    /// `r(s,a,s')`, same layout as `transition`.
    reward: Vec<f64>,
    /// `c(s,a)` flattened as `[s * n_actions + a]`.
    penalty: Vec<f64>,
    /// Initial state distribution `mu`.
    initial_dist: Vec<f64>,
    /// Discount factor `gamma` in `[0, 1)`.
    discount: f64,
    terminal: Vec<bool>,
    /// Failure subset of the terminal states (empty for most domains).
    failure: Vec<bool>,
}

impl TabularCmdp {
    /// Builds and validates a CMDP. `failure` may be empty (no failure
    /// marking) or one flag per state, each implying `terminal`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        n_states: usize,
        n_actions: usize,
        transition: Vec<f64>,
        reward: Vec<f64>,
        penalty: Vec<f64>,
        initial_dist: Vec<f64>,
        discount: f64,
        terminal: Vec<bool>,
        failure: Vec<bool>,
    ) -> Result<Self> {
        let failure = if failure.is_empty() {
            vec![false; n_states]
        } else {
            failure
        };
        let cmdp = Self {
            n_states,
            n_actions,
            transition,
            reward,
            penalty,
            initial_dist,
            discount,
            terminal,
            failure,
        };
        cmdp.validate()?;
        Ok(cmdp)
    }

    fn validate(&self) -> Result<()> {
        let (s_n, a_n) = (self.n_states, self.n_actions);
        if s_n == 0 || a_n == 0 {
            return Err(Error::InvalidCmdp("need at least one state and action".into()));
        }
        if self.transition.len() != s_n * a_n * s_n {
            return Err(Error::InvalidCmdp(format!(
                "transition table has {} entries, expected {}",
                self.transition.len(),
                s_n * a_n * s_n
            )));
        }
        if self.reward.len() != s_n * a_n * s_n {
            return Err(Error::InvalidCmdp("reward table size mismatch".into()));
        }
        if self.penalty.len() != s_n * a_n {
            return Err(Error::InvalidCmdp("penalty table size mismatch".into()));
        }
        if self.initial_dist.len() != s_n || self.terminal.len() != s_n || self.failure.len() != s_n
        {
            return Err(Error::InvalidCmdp("state-indexed vector size mismatch".into()));
        }
        if !(0.0..1.0).contains(&self.discount) {
            return Err(Error::InvalidCmdp(format!(
                "discount {} outside [0, 1)",
                self.discount
            )));
        }
        for (s, a) in self.state_action_pairs() {
            let row = self.transition_row(s, a);
            let mut sum = 0.0;
            for &p in row {
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::InvalidCmdp(format!(
                        "P({s},{a},.) contains probability {p} outside [0,1]"
                    )));
                }
                sum += p;
            }
            if (sum - 1.0).abs() > PROB_TOL {
                return Err(Error::InvalidCmdp(format!(
                    "P({s},{a},.) sums to {sum}, not 1"
                )));
            }
            if self.penalty[s * a_n + a] < 0.0 {
                return Err(Error::InvalidCmdp(format!(
                    "penalty c({s},{a}) is negative"
                )));
            }
        }
        let mu_sum: f64 = self.initial_dist.iter().sum();
        if (mu_sum - 1.0).abs() > PROB_TOL
            || self.initial_dist.iter().any(|&p| !(0.0..=1.0).contains(&p))
        {
            return Err(Error::InvalidCmdp(format!(
                "initial distribution sums to {mu_sum} or leaves [0,1]"
            )));
        }
        for s in 0..s_n {
            if self.failure[s] && !self.terminal[s] {
                return Err(Error::InvalidCmdp(format!(
                    "failure state {s} is not terminal"
                )));
            }
            if self.terminal[s] {
                // Terminal states are zero-value absorbing self-loops so the
                // serialized tables carry no stray information.
                for a in 0..a_n {
                    let row = self.transition_row(s, a);
                    if (row[s] - 1.0).abs() > PROB_TOL {
                        return Err(Error::InvalidCmdp(format!(
                            "terminal state {s} is not absorbing under action {a}"
                        )));
                    }
                    if self.reward_row(s, a).iter().any(|&r| r != 0.0)
                        || self.penalty[s * a_n + a] != 0.0
                    {
                        return Err(Error::InvalidCmdp(format!(
                            "terminal state {s} carries nonzero reward or penalty"
                        )));
                    }
                }
            }
        }
        if self.has_failure_states() {
            // For non-terminal sources the (s,a) table must be the
            // expectation of the failure-entry indicator.
            for (s, a) in self.state_action_pairs().filter(|&(s, _)| !self.terminal[s]) {
                let expected: f64 = (0..s_n)
                    .filter(|&t| self.failure[t])
                    .map(|t| self.transition_prob(s, a, t))
                    .sum();
                if (expected - self.penalty[s * a_n + a]).abs() > 1e-10 {
                    return Err(Error::InvalidCmdp(format!(
                        "c({s},{a}) = {} but failure-entry probability is {expected}",
                        self.penalty[s * a_n + a]
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn initial_dist(&self) -> &[f64] {
        &self.initial_dist
    }

    pub fn is_terminal(&self, s: usize) -> bool {
        self.terminal[s]
    }

    pub fn is_failure(&self, s: usize) -> bool {
        self.failure[s]
    }

    pub fn has_failure_states(&self) -> bool {
        self.failure.iter().any(|&f| f)
    }

    pub fn terminal_states(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_states).filter(|&s| self.terminal[s])
    }

    pub fn non_terminal_states(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_states).filter(|&s| !self.terminal[s])
    }

    pub fn state_action_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let a_n = self.n_actions;
        (0..self.n_states).flat_map(move |s| (0..a_n).map(move |a| (s, a)))
    }

    pub fn transition_prob(&self, s: usize, a: usize, next: usize) -> f64 {
        self.transition[(s * self.n_actions + a) * self.n_states + next]
    }

    pub fn transition_row(&self, s: usize, a: usize) -> &[f64] {
        let base = (s * self.n_actions + a) * self.n_states;
        &self.transition[base..base + self.n_states]
    }

    pub fn reward(&self, s: usize, a: usize, next: usize) -> f64 {
        self.reward[(s * self.n_actions + a) * self.n_states + next]
    }

    pub fn reward_row(&self, s: usize, a: usize) -> &[f64] {
        let base = (s * self.n_actions + a) * self.n_states;
        &self.reward[base..base + self.n_states]
    }

    pub fn penalty(&self, s: usize, a: usize) -> f64 {
        self.penalty[s * self.n_actions + a]
    }

    /// Expected one-step reward `E[r(s,a,s') | s,a]`.
    pub fn expected_reward(&self, s: usize, a: usize) -> f64 {
        self.transition_row(s, a)
            .iter()
            .zip(self.reward_row(s, a))
            .map(|(p, r)| p * r)
            .sum()
    }

    /// Penalty observed on a sampled transition. Failure-marked domains
    /// realize the entry indicator; everything else sees the `(s,a)` value.
    pub fn realized_penalty(&self, s: usize, a: usize, next: usize) -> f64 {
        if self.has_failure_states() {
            if self.failure[next] {
                1.0
            } else {
                0.0
            }
        } else {
            self.penalty(s, a)
        }
    }

    /// Serializes to the plain-text `cmdp v1` format.
    ///
    /// Header `cmdp v1 <n_states> <n_actions> <gamma>`, then blocks `P`, `R`,
    /// `C`, `MU`, `TERM` in row-major order. `TERM` entries are 0 for
    /// non-terminal, 1 for terminal and 2 for failure-terminal states.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "cmdp v1 {} {} {}\n",
            self.n_states, self.n_actions, self.discount
        ));
        out.push_str("P\n");
        for (s, a) in self.state_action_pairs() {
            push_row(&mut out, self.transition_row(s, a));
        }
        out.push_str("R\n");
        for (s, a) in self.state_action_pairs() {
            push_row(&mut out, self.reward_row(s, a));
        }
        out.push_str("C\n");
        for s in 0..self.n_states {
            push_row(&mut out, &self.penalty[s * self.n_actions..(s + 1) * self.n_actions]);
        }
        out.push_str("MU\n");
        push_row(&mut out, &self.initial_dist);
        out.push_str("TERM\n");
        let term: Vec<f64> = (0..self.n_states)
            .map(|s| {
                if self.failure[s] {
                    2.0
                } else if self.terminal[s] {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        push_row(&mut out, &term);
        out
    }

    /// Parses the `cmdp v1` text format produced by [`TabularCmdp::to_text`].
    pub fn from_text(text: &str) -> Result<Self> {
        let mut tokens = text.split_whitespace();
        let mut expect = |want: &str| -> Result<()> {
            match tokens.next() {
                Some(t) if t == want => Ok(()),
                other => Err(Error::Parse(format!(
                    "expected '{want}', found {:?}",
                    other.unwrap_or("<eof>")
                ))),
            }
        };
        expect("cmdp")?;
        expect("v1")?;
        let mut tokens = text.split_whitespace().skip(2);
        let mut next_num = |what: &str| -> Result<f64> {
            tokens
                .next()
                .ok_or_else(|| Error::Parse(format!("missing {what}")))?
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("bad {what}: {e}")))
        };
        let n_states = next_num("n_states")? as usize;
        let n_actions = next_num("n_actions")? as usize;
        let discount = next_num("gamma")?;
        if n_states == 0 || n_actions == 0 || n_states * n_actions > 100_000_000 {
            return Err(Error::Parse("unreasonable cmdp dimensions".into()));
        }

        let mut read_block = |tag: &str, len: usize| -> Result<Vec<f64>> {
            match tokens.next() {
                Some(t) if t == tag => {}
                other => {
                    return Err(Error::Parse(format!(
                        "expected block '{tag}', found {:?}",
                        other.unwrap_or("<eof>")
                    )))
                }
            }
            let mut v = Vec::with_capacity(len);
            for _ in 0..len {
                v.push(
                    tokens
                        .next()
                        .ok_or_else(|| Error::Parse(format!("block '{tag}' is short")))?
                        .parse::<f64>()
                        .map_err(|e| Error::Parse(format!("bad number in '{tag}': {e}")))?,
                );
            }
            Ok(v)
        };

        let transition = read_block("P", n_states * n_actions * n_states)?;
        let reward = read_block("R", n_states * n_actions * n_states)?;
        let penalty = read_block("C", n_states * n_actions)?;
        let initial_dist = read_block("MU", n_states)?;
        let term_raw = read_block("TERM", n_states)?;
        if tokens.next().is_some() {
            return Err(Error::Parse("trailing tokens after TERM block".into()));
        }
        let mut terminal = vec![false; n_states];
        let mut failure = vec![false; n_states];
        for (s, &v) in term_raw.iter().enumerate() {
            match v as i64 {
                0 => {}
                1 => terminal[s] = true,
                2 => {
                    terminal[s] = true;
                    failure[s] = true;
                }
                _ => {
                    return Err(Error::Parse(format!(
                        "TERM entry {v} for state {s} is not 0, 1 or 2"
                    )))
                }
            }
        }
        Self::new(
            n_states,
            n_actions,
            transition,
            reward,
            penalty,
            initial_dist,
            discount,
            terminal,
            failure,
        )
    }
}

fn push_row(out: &mut String, row: &[f64]) {
    for (i, v) in row.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(&format!("{v}"));
    }
    out.push('\n');
}
