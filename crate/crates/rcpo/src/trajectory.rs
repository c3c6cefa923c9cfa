//! Sampled episodes and the constraint functionals computed from them.
//!
//! A [`Trajectory`] is the unit the Monte-Carlo estimators consume: an
//! ordered, nonempty list of steps whose `terminal` flag may be set only on
//! the last step. [`evaluate_constraint`] maps a trajectory to its scalar
//! constraint value `C`; [`estimate_jc`] averages those values into an
//! unbiased estimate of `J_C` with a standard error.

use crate::error::{Error, Result};

/// One environment transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub state: usize,
    pub action: usize,
    pub reward: f64,
    pub penalty: f64,
    pub next_state: usize,
    /// True iff `next_state` is terminal (episode ended here).
    pub terminal: bool,
}

/// Nonempty ordered list of steps; `terminal` may be true only on the last.
///
/// A trajectory whose last step is non-terminal was truncated by a step cap.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    steps: Vec<Step>,
}

impl Trajectory {
    pub fn new(steps: Vec<Step>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::Empty("trajectory has no steps".into()));
        }
        let last = steps.len() - 1;
        if steps[..last].iter().any(|s| s.terminal) {
            return Err(Error::Inconsistent(
                "terminal flag set before the last step".into(),
            ));
        }
        Ok(Self { steps })
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// True iff the episode reached a terminal state (was not truncated).
    pub fn terminated(&self) -> bool {
        self.steps[self.steps.len() - 1].terminal
    }

    pub fn first_state(&self) -> usize {
        self.steps[0].state
    }

    pub fn last_next_state(&self) -> usize {
        self.steps[self.steps.len() - 1].next_state
    }
}

/// Which scalar channel of a transition to read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Signal {
    Reward,
    Penalty,
}

impl Step {
    pub fn signal(&self, signal: Signal) -> f64 {
        match signal {
            Signal::Reward => self.reward,
            Signal::Penalty => self.penalty,
        }
    }
}

/// `Σ_t γ^t x_t` over the chosen channel. Requires `γ ∈ [0, 1]`.
pub fn discounted_return(traj: &Trajectory, gamma: f64, signal: Signal) -> f64 {
    assert!((0.0..=1.0).contains(&gamma), "discount {gamma} outside [0,1]");
    // Horner evaluation from the tail keeps the sum well conditioned.
    traj.steps()
        .iter()
        .rev()
        .fold(0.0, |acc, step| step.signal(signal) + gamma * acc)
}

/// How per-step penalties aggregate into the episode constraint `C`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConstraintKind {
    /// `Σ_t γ_c^t c_t` with its own discount `γ_c`.
    DiscountedSum(f64),
    /// `(1/T) Σ_t c_t` over the realized episode length `T`.
    MeanValue,
    /// Failure indicator: 1 iff a terminal step carries positive penalty.
    Probabilistic,
}

impl ConstraintKind {
    /// Config token: `discounted:<gamma>`, `mean`, or `prob`.
    pub fn parse(token: &str) -> Result<Self> {
        if let Some(rest) = token.strip_prefix("discounted:") {
            let g: f64 = rest
                .parse()
                .map_err(|e| Error::Parse(format!("bad constraint discount: {e}")))?;
            if !(0.0..=1.0).contains(&g) {
                return Err(Error::Parse(format!("constraint discount {g} outside [0,1]")));
            }
            return Ok(Self::DiscountedSum(g));
        }
        match token {
            "mean" => Ok(Self::MeanValue),
            "prob" => Ok(Self::Probabilistic),
            other => Err(Error::Parse(format!(
                "unknown constraint kind '{other}' (want discounted:<gamma>, mean, prob)"
            ))),
        }
    }
}

impl std::fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::DiscountedSum(g) => write!(f, "discounted:{g}"),
            Self::MeanValue => write!(f, "mean"),
            Self::Probabilistic => write!(f, "prob"),
        }
    }
}

/// Constraint kind plus its threshold: the training target is `J_C ≤ α`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintSpec {
    pub kind: ConstraintKind,
    pub threshold: f64,
}

impl ConstraintSpec {
    pub fn new(kind: ConstraintKind, threshold: f64) -> Result<Self> {
        if !threshold.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "constraint threshold {threshold} is not finite"
            )));
        }
        if let ConstraintKind::DiscountedSum(g) = kind {
            if !(0.0..=1.0).contains(&g) {
                return Err(Error::InvalidConfig(format!(
                    "constraint discount {g} outside [0,1]"
                )));
            }
        }
        if matches!(kind, ConstraintKind::Probabilistic) && !(threshold > 0.0 && threshold < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "probabilistic threshold {threshold} outside (0,1)"
            )));
        }
        Ok(Self { kind, threshold })
    }
}

/// Scalar constraint value `C` of one trajectory under the given spec.
pub fn evaluate_constraint(traj: &Trajectory, spec: &ConstraintSpec) -> f64 {
    match spec.kind {
        ConstraintKind::DiscountedSum(gamma_c) => {
            discounted_return(traj, gamma_c, Signal::Penalty)
        }
        ConstraintKind::MeanValue => {
            let sum: f64 = traj.steps().iter().map(|s| s.penalty).sum();
            sum / traj.len() as f64
        }
        ConstraintKind::Probabilistic => {
            let failed = traj
                .steps()
                .iter()
                .any(|s| s.terminal && s.penalty > 0.0);
            if failed {
                1.0
            } else {
                0.0
            }
        }
    }
}

/// Sample mean of per-trajectory `C` values and its standard error.
///
/// The standard error uses the `n−1` sample variance; a single trajectory
/// reports 0 by convention.
pub fn estimate_jc(trajs: &[Trajectory], spec: &ConstraintSpec) -> Result<(f64, f64)> {
    mean_and_stderr(trajs.iter().map(|t| evaluate_constraint(t, spec)))
}

/// Mean and standard error of a nonempty value stream.
pub fn mean_and_stderr(values: impl Iterator<Item = f64>) -> Result<(f64, f64)> {
    let values: Vec<f64> = values.collect();
    let n = values.len();
    if n == 0 {
        return Err(Error::Empty("no samples to average".into()));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return Ok((mean, 0.0));
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    Ok((mean, (var / n as f64).sqrt()))
}
