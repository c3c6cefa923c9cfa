//! Policies: explicit probability tables for exact evaluation and the
//! softmax-parametrized actors the trainers optimize.
//!
//! [`SoftmaxPolicy`] comes in two shapes sharing one parameter-vector
//! interface: a tabular variant (one preference per state-action pair) and a
//! small dense approximator (one-hot state → tanh hidden layer → logits) with
//! hand-written backpropagation. Gradients are *accumulated* into caller
//! buffers scaled by an advantage, which is exactly what the training loops
//! need.

use rand::Rng;

use crate::error::{Error, Result};

const ROW_TOL: f64 = 1e-12;

/// Explicit stochastic policy: `π(a|s)` as a row-stochastic table.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyTable {
    n_states: usize,
    n_actions: usize,
    /// `π(a|s)` flattened as `[s * n_actions + a]`.
    probs: Vec<f64>,
}

impl PolicyTable {
    pub fn new(n_states: usize, n_actions: usize, probs: Vec<f64>) -> Result<Self> {
        if n_states == 0 || n_actions == 0 || probs.len() != n_states * n_actions {
            return Err(Error::InvalidPolicy(format!(
                "policy table of {} entries does not match {n_states} states x {n_actions} actions",
                probs.len()
            )));
        }
        for s in 0..n_states {
            let row = &probs[s * n_actions..(s + 1) * n_actions];
            if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                return Err(Error::InvalidPolicy(format!(
                    "π(.|{s}) contains probabilities outside [0,1]"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_TOL {
                return Err(Error::InvalidPolicy(format!("π(.|{s}) sums to {sum}, not 1")));
            }
        }
        Ok(Self {
            n_states,
            n_actions,
            probs,
        })
    }

    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        Self {
            n_states,
            n_actions,
            probs: vec![1.0 / n_actions as f64; n_states * n_actions],
        }
    }

    /// Deterministic policy taking `actions[s]` in state `s`.
    pub fn deterministic(n_states: usize, n_actions: usize, actions: &[usize]) -> Result<Self> {
        if actions.len() != n_states {
            return Err(Error::InvalidPolicy("one action per state required".into()));
        }
        let mut probs = vec![0.0; n_states * n_actions];
        for (s, &a) in actions.iter().enumerate() {
            if a >= n_actions {
                return Err(Error::InvalidPolicy(format!(
                    "action {a} out of range in state {s}"
                )));
            }
            probs[s * n_actions + a] = 1.0;
        }
        Ok(Self {
            n_states,
            n_actions,
            probs,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn prob(&self, s: usize, a: usize) -> f64 {
        self.probs[s * self.n_actions + a]
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.probs[s * self.n_actions..(s + 1) * self.n_actions]
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    Tabular,
    /// One-hot state → tanh hidden layer of width `hidden` → action logits.
    Dense { hidden: usize },
}

/// Differentiable softmax policy over a finite state space.
///
/// Parameters live in one flat vector (see [`SoftmaxPolicy::params`]); the
/// tabular layout is `θ[s * n_actions + a]`, the dense layout is
/// `[W1 (h×S) | b1 (h) | W2 (A×h) | b2 (A)]` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxPolicy {
    n_states: usize,
    n_actions: usize,
    repr: Repr,
    theta: Vec<f64>,
}

impl SoftmaxPolicy {
    /// Tabular policy initialized uniform (all preferences zero).
    pub fn tabular(n_states: usize, n_actions: usize) -> Self {
        Self {
            n_states,
            n_actions,
            repr: Repr::Tabular,
            theta: vec![0.0; n_states * n_actions],
        }
    }

    /// Dense policy with `hidden` tanh units and small random weights.
    pub fn dense(n_states: usize, n_actions: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        let n = Self::dense_param_count(n_states, n_actions, hidden);
        let mut theta = vec![0.0; n];
        let w1_scale = 1.0 / (n_states as f64).sqrt();
        let w2_scale = 1.0 / (hidden as f64).sqrt();
        for t in theta[..hidden * n_states].iter_mut() {
            *t = rng.random_range(-w1_scale..w1_scale);
        }
        let w2_base = hidden * n_states + hidden;
        for t in theta[w2_base..w2_base + n_actions * hidden].iter_mut() {
            *t = rng.random_range(-w2_scale..w2_scale);
        }
        Self {
            n_states,
            n_actions,
            repr: Repr::Dense { hidden },
            theta,
        }
    }

    fn dense_param_count(n_states: usize, n_actions: usize, hidden: usize) -> usize {
        hidden * n_states + hidden + n_actions * hidden + n_actions
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn n_params(&self) -> usize {
        self.theta.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.theta
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    /// Hidden activations for the dense variant; `None` for tabular.
    fn dense_forward(&self, s: usize) -> Option<(Vec<f64>, Vec<f64>)> {
        let Repr::Dense { hidden } = self.repr else {
            return None;
        };
        // One-hot input: W1·x selects column s of W1.
        let b1 = hidden * self.n_states;
        let h: Vec<f64> = (0..hidden)
            .map(|j| (self.theta[j * self.n_states + s] + self.theta[b1 + j]).tanh())
            .collect();
        let w2 = b1 + hidden;
        let b2 = w2 + self.n_actions * hidden;
        let logits: Vec<f64> = (0..self.n_actions)
            .map(|a| {
                let row = &self.theta[w2 + a * hidden..w2 + (a + 1) * hidden];
                row.iter().zip(&h).map(|(w, hj)| w * hj).sum::<f64>() + self.theta[b2 + a]
            })
            .collect();
        Some((h, logits))
    }

    fn logits(&self, s: usize) -> Vec<f64> {
        match self.repr {
            Repr::Tabular => {
                self.theta[s * self.n_actions..(s + 1) * self.n_actions].to_vec()
            }
            Repr::Dense { .. } => self.dense_forward(s).unwrap().1,
        }
    }

    /// `π(.|s)` as a fresh probability vector (strictly positive, sums to 1).
    pub fn action_probs(&self, s: usize) -> Vec<f64> {
        softmax(&self.logits(s))
    }

    pub fn log_prob(&self, s: usize, a: usize) -> f64 {
        let logits = self.logits(s);
        let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = logits.iter().map(|z| (z - m).exp()).sum::<f64>().ln() + m;
        logits[a] - lse
    }

    /// Adds `scale · ∇_θ log π(a|s)` into `grad` (length `n_params`).
    pub fn accumulate_grad_log_prob(&self, s: usize, a: usize, scale: f64, grad: &mut [f64]) {
        assert_eq!(grad.len(), self.theta.len(), "gradient buffer size mismatch");
        match self.repr {
            Repr::Tabular => {
                let probs = self.action_probs(s);
                let base = s * self.n_actions;
                for (b, &p) in probs.iter().enumerate() {
                    let indicator = if b == a { 1.0 } else { 0.0 };
                    grad[base + b] += scale * (indicator - p);
                }
            }
            Repr::Dense { hidden } => {
                let (h, logits) = self.dense_forward(s).unwrap();
                let probs = softmax(&logits);
                // dL/dz_b = δ_ab − π_b for L = log π(a|s).
                let dz: Vec<f64> = (0..self.n_actions)
                    .map(|b| (if b == a { 1.0 } else { 0.0 }) - probs[b])
                    .collect();
                let b1 = hidden * self.n_states;
                let w2 = b1 + hidden;
                let b2 = w2 + self.n_actions * hidden;
                for b in 0..self.n_actions {
                    for j in 0..hidden {
                        grad[w2 + b * hidden + j] += scale * dz[b] * h[j];
                    }
                    grad[b2 + b] += scale * dz[b];
                }
                for j in 0..hidden {
                    let dh: f64 = (0..self.n_actions)
                        .map(|b| dz[b] * self.theta[w2 + b * hidden + j])
                        .sum();
                    let dpre = dh * (1.0 - h[j] * h[j]);
                    // One-hot input: only column s of W1 receives gradient.
                    grad[j * self.n_states + s] += scale * dpre;
                    grad[b1 + j] += scale * dpre;
                }
            }
        }
    }

    /// Snapshot of the induced distribution as an explicit table.
    pub fn to_table(&self) -> PolicyTable {
        let mut probs = Vec::with_capacity(self.n_states * self.n_actions);
        for s in 0..self.n_states {
            probs.extend(self.action_probs(s));
        }
        PolicyTable::new(self.n_states, self.n_actions, probs)
            .expect("softmax rows are probability distributions")
    }

    /// Plain-text parameter dump: header `policy v1 <variant> <dims>`, then
    /// the flat parameter vector.
    pub fn to_text(&self) -> String {
        let mut out = match self.repr {
            Repr::Tabular => format!("policy v1 tabular {} {}\n", self.n_states, self.n_actions),
            Repr::Dense { hidden } => format!(
                "policy v1 dense {} {} {}\n",
                self.n_states, self.n_actions, hidden
            ),
        };
        for (i, t) in self.theta.iter().enumerate() {
            if i > 0 {
                out.push(if i % 8 == 0 { '\n' } else { ' ' });
            }
            out.push_str(&format!("{t}"));
        }
        out.push('\n');
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut tokens = text.split_whitespace();
        for want in ["policy", "v1"] {
            match tokens.next() {
                Some(t) if t == want => {}
                other => {
                    return Err(Error::Parse(format!(
                        "expected '{want}', found {:?}",
                        other.unwrap_or("<eof>")
                    )))
                }
            }
        }
        let variant = tokens
            .next()
            .ok_or_else(|| Error::Parse("missing policy variant".into()))?
            .to_string();
        let mut next_count = |what: &str| -> Result<usize> {
            tokens
                .next()
                .ok_or_else(|| Error::Parse(format!("missing {what}")))?
                .parse::<usize>()
                .map_err(|e| Error::Parse(format!("bad {what}: {e}")))
        };
        let (n_states, n_actions, repr) = match variant.as_str() {
            "tabular" => {
                let s = next_count("n_states")?;
                let a = next_count("n_actions")?;
                (s, a, Repr::Tabular)
            }
            "dense" => {
                let s = next_count("n_states")?;
                let a = next_count("n_actions")?;
                let h = next_count("hidden")?;
                if h == 0 {
                    return Err(Error::Parse("dense policy needs hidden > 0".into()));
                }
                (s, a, Repr::Dense { hidden: h })
            }
            other => return Err(Error::Parse(format!("unknown policy variant '{other}'"))),
        };
        if n_states == 0 || n_actions == 0 {
            return Err(Error::Parse("policy dimensions must be positive".into()));
        }
        let expected = match repr {
            Repr::Tabular => n_states * n_actions,
            Repr::Dense { hidden } => Self::dense_param_count(n_states, n_actions, hidden),
        };
        let mut theta = Vec::with_capacity(expected);
        for token in tokens {
            let v: f64 = token
                .parse()
                .map_err(|e| Error::Parse(format!("bad parameter: {e}")))?;
            if !v.is_finite() {
                return Err(Error::Parse("non-finite policy parameter".into()));
            }
            theta.push(v);
        }
        if theta.len() != expected {
            return Err(Error::Parse(format!(
                "policy has {} parameters, expected {expected}",
                theta.len()
            )));
        }
        Ok(Self {
            n_states,
            n_actions,
            repr,
            theta,
        })
    }
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|z| (z - m).exp()).collect();
    let sum: f64 = out.iter().sum();
    for p in &mut out {
        *p /= sum;
    }
    out
}
