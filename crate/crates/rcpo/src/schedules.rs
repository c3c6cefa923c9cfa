//! Step-size schedules and the projection operators used by every trainer.
//!
//! The three-timescale analysis needs square-summable, non-summable step
//! sizes with vanishing ratios between timescales; [`validate_timescales`]
//! checks exactly that for power-law pairs and labels constant or decaying
//! rates as a permitted heuristic (they match published experiment settings
//! but not the convergence conditions).

use crate::error::{Error, Result};

/// Step-size schedule `k ↦ η(k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSchedule {
    /// `a / (1 + k)^p`; square-summable and non-summable iff `p ∈ (0.5, 1]`.
    PowerLaw { a: f64, p: f64 },
    Constant { a: f64 },
    /// `a · κ^k` with `κ ∈ (0, 1]`.
    ConstantWithDecay { a: f64, kappa: f64 },
}

impl StepSchedule {
    pub fn power_law(a: f64, p: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) || !p.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "power-law schedule needs finite a > 0, got a={a}, p={p}"
            )));
        }
        Ok(Self::PowerLaw { a, p })
    }

    /// `a = 0` is allowed as the degenerate frozen schedule: it expresses
    /// "no updates on this timescale" (fixed-λ reward shaping).
    pub fn constant(a: f64) -> Result<Self> {
        if !(a >= 0.0 && a.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "constant schedule needs finite a >= 0, got {a}"
            )));
        }
        Ok(Self::Constant { a })
    }

    pub fn constant_with_decay(a: f64, kappa: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) || !(kappa > 0.0 && kappa <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "decaying schedule needs a > 0 and κ in (0,1], got a={a}, κ={kappa}"
            )));
        }
        Ok(Self::ConstantWithDecay { a, kappa })
    }

    /// True for the degenerate all-zero schedule (`const:0`), which
    /// freezes its timescale entirely.
    pub fn is_frozen(&self) -> bool {
        matches!(self, Self::Constant { a } if *a == 0.0)
    }

    /// Inverse of [`StepSchedule::parse`].
    pub fn token(&self) -> String {
        match self {
            Self::PowerLaw { a, p } => format!("powerlaw:{a},{p}"),
            Self::Constant { a } => format!("const:{a}"),
            Self::ConstantWithDecay { a, kappa } => format!("constdecay:{a},{kappa}"),
        }
    }

    /// Config token: `powerlaw:a,p`, `const:a`, or `constdecay:a,kappa`.
    pub fn parse(token: &str) -> Result<Self> {
        let (family, args) = token
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("schedule '{token}' has no ':'")))?;
        let nums: Vec<f64> = args
            .split(',')
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("bad schedule number '{t}': {e}")))
            })
            .collect::<Result<_>>()?;
        match (family, nums.as_slice()) {
            ("powerlaw", [a, p]) => Self::power_law(*a, *p),
            ("const", [a]) => Self::constant(*a),
            ("constdecay", [a, kappa]) => Self::constant_with_decay(*a, *kappa),
            _ => Err(Error::Parse(format!(
                "unknown schedule '{token}' (want powerlaw:a,p | const:a | constdecay:a,kappa)"
            ))),
        }
    }
}

impl std::fmt::Display for StepSchedule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::PowerLaw { a, p } => write!(f, "powerlaw:{a},{p}"),
            Self::Constant { a } => write!(f, "const:{a}"),
            Self::ConstantWithDecay { a, kappa } => write!(f, "constdecay:{a},{kappa}"),
        }
    }
}

/// `η(k)` for step index `k ≥ 0`. Always strictly positive.
pub fn schedule_value(s: &StepSchedule, k: u64) -> f64 {
    match *s {
        StepSchedule::PowerLaw { a, p } => a / (1.0 + k as f64).powf(p),
        StepSchedule::Constant { a } => a,
        StepSchedule::ConstantWithDecay { a, kappa } => a * kappa.powf(k as f64),
    }
}

/// Outcome of the timescale-separation check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Validity {
    /// Both power laws, exponents in (0.5, 1], slow strictly steeper.
    Valid,
    /// Involves constant or decaying rates: outside the convergence
    /// conditions but permitted as an experimental setting.
    Heuristic,
    Invalid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimescaleVerdict {
    pub validity: Validity,
    pub reason: String,
}

/// Checks that `slow` vanishes relative to `fast` in the sense the
/// convergence theory needs.
pub fn validate_timescales(slow: &StepSchedule, fast: &StepSchedule) -> TimescaleVerdict {
    use StepSchedule::PowerLaw;
    match (slow, fast) {
        (PowerLaw { p: ps, .. }, PowerLaw { p: pf, .. }) => {
            for (name, p) in [("slow", *ps), ("fast", *pf)] {
                if !(p > 0.5 && p <= 1.0) {
                    let which = if p <= 0.5 {
                        "Ση² = ∞ (not square-summable)"
                    } else {
                        "Ση < ∞ (summable, steps vanish too fast)"
                    };
                    return TimescaleVerdict {
                        validity: Validity::Invalid,
                        reason: format!("{name} exponent {p} outside (0.5, 1]: {which}"),
                    };
                }
            }
            if ps > pf {
                TimescaleVerdict {
                    validity: Validity::Valid,
                    reason: format!(
                        "exponents in (0.5, 1] and ratio (1+k)^{:.3} → 0",
                        pf - ps
                    ),
                }
            } else {
                TimescaleVerdict {
                    validity: Validity::Invalid,
                    reason: format!(
                        "slow exponent {ps} ≤ fast exponent {pf}: ratio does not vanish"
                    ),
                }
            }
        }
        _ => TimescaleVerdict {
            validity: Validity::Heuristic,
            reason: "constant or decaying rates: step-size conditions unmet, permitted \
                     heuristically"
                .into(),
        },
    }
}

/// Coordinate-wise box `[lower, upper]`; bounds may be ±∞.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl ProjectionBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::InvalidConfig("box bound lengths differ".into()));
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if lo.is_nan() || hi.is_nan() || lo > hi {
                return Err(Error::InvalidConfig(format!(
                    "box coordinate {i} has lower {lo} > upper {hi}"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// `[−half_width, half_width]` in every coordinate.
    pub fn symmetric(dim: usize, half_width: f64) -> Self {
        Self {
            lower: vec![-half_width; dim],
            upper: vec![half_width; dim],
        }
    }

    pub fn unbounded(dim: usize) -> Self {
        Self {
            lower: vec![f64::NEG_INFINITY; dim],
            upper: vec![f64::INFINITY; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        theta.len() == self.dim()
            && theta
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(t, (lo, hi))| lo <= t && t <= hi)
    }
}

/// `clamp(λ, 0, λ_max)`. `λ_max` may be ∞ and must be ≥ 0.
pub fn project_lambda(lambda: f64, lambda_max: f64) -> f64 {
    assert!(lambda_max >= 0.0, "negative λ_max {lambda_max}");
    lambda.clamp(0.0, lambda_max)
}

/// Coordinate-wise clamp into the box.
pub fn project_theta(theta: &[f64], bounds: &ProjectionBox) -> Result<Vec<f64>> {
    let mut out = theta.to_vec();
    project_theta_in_place(&mut out, bounds)?;
    Ok(out)
}

pub fn project_theta_in_place(theta: &mut [f64], bounds: &ProjectionBox) -> Result<()> {
    if theta.len() != bounds.dim() {
        return Err(Error::InvalidConfig(format!(
            "parameter vector has {} coordinates, box has {}",
            theta.len(),
            bounds.dim()
        )));
    }
    for (t, (lo, hi)) in theta.iter_mut().zip(bounds.lower.iter().zip(&bounds.upper)) {
        *t = t.clamp(*lo, *hi);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_values_match_definitions() {
        let pl = StepSchedule::power_law(1.0, 1.0).unwrap();
        assert_eq!(schedule_value(&pl, 0), 1.0);
        assert!((schedule_value(&pl, 9) - 0.1).abs() < 1e-15);
        let cd = StepSchedule::constant_with_decay(5e-7, 1.0 - 1e-9).unwrap();
        assert_eq!(schedule_value(&cd, 0), 5e-7);
        assert!(schedule_value(&cd, 1) < 5e-7);
        let c = StepSchedule::constant(2.5e-5).unwrap();
        assert_eq!(schedule_value(&c, 123_456), 2.5e-5);
    }

    #[test]
    fn schedule_tokens_round_trip() {
        for token in ["powerlaw:0.001,0.8", "const:0.0005", "constdecay:5e-7,0.999999999"] {
            let s = StepSchedule::parse(token).unwrap();
            assert_eq!(StepSchedule::parse(&s.to_string()).unwrap(), s);
        }
        assert!(StepSchedule::parse("powerlaw:1").is_err());
        assert!(StepSchedule::parse("exp:1,2").is_err());
        assert!(StepSchedule::parse("const:-1").is_err());
        assert!(StepSchedule::parse("constdecay:1,1.5").is_err());
    }

    #[test]
    fn timescale_verdicts() {
        let slow = StepSchedule::power_law(1.0, 1.0).unwrap();
        let fast = StepSchedule::power_law(1.0, 0.6).unwrap();
        assert_eq!(validate_timescales(&slow, &fast).validity, Validity::Valid);
        // Reversed order cannot be valid (antisymmetry).
        assert_eq!(validate_timescales(&fast, &slow).validity, Validity::Invalid);

        let bad = StepSchedule::power_law(1.0, 0.4).unwrap();
        assert_eq!(validate_timescales(&bad, &fast).validity, Validity::Invalid);
        let too_steep = StepSchedule::power_law(1.0, 1.2).unwrap();
        assert_eq!(validate_timescales(&too_steep, &fast).validity, Validity::Invalid);

        let c_slow = StepSchedule::constant(2.5e-5).unwrap();
        let c_fast = StepSchedule::constant(1e-3).unwrap();
        let verdict = validate_timescales(&c_slow, &c_fast);
        assert_eq!(verdict.validity, Validity::Heuristic);
        assert!(verdict.reason.contains("heuristic"));
    }

    #[test]
    fn power_law_sums_grow_and_square_sums_converge() {
        for &(a, p) in &[(1e-3, 0.6), (1e-3, 0.8), (2.5e-5, 1.0)] {
            let s = StepSchedule::power_law(a, p).unwrap();
            let mut partial = 0.0;
            let mut decade_increments = Vec::new();
            let mut last_mark = 0.0;
            let mut sq_tail = 0.0;
            for k in 0..1_000_000u64 {
                let v = schedule_value(&s, k);
                assert!(v > 0.0);
                partial += v;
                if k >= 100_000 {
                    sq_tail += v * v;
                }
                if (k + 1).is_power_of_two() && k + 1 >= 1024 {
                    decade_increments.push(partial - last_mark);
                    last_mark = partial;
                }
            }
            // No plateau: each doubling of the horizon keeps adding mass.
            // (First entry is the whole prefix, not a doubling increment.)
            for w in decade_increments[1..].windows(2) {
                assert!(w[1] > 0.3 * w[0], "partial sums plateaued for p={p}");
            }
            assert!(sq_tail < 1e-6, "η² tail {sq_tail} too heavy for p={p}");
        }
    }

    #[test]
    fn lambda_projection_examples() {
        assert_eq!(project_lambda(-0.05, f64::INFINITY), 0.0);
        assert_eq!(project_lambda(12.0, 10.0), 10.0);
        assert_eq!(project_lambda(0.6, f64::INFINITY), 0.6);
    }

    #[test]
    fn theta_projection_examples() {
        let unit = ProjectionBox::symmetric(2, 1.0);
        assert_eq!(project_theta(&[2.0, -3.0], &unit).unwrap(), vec![1.0, -1.0]);
        assert_eq!(project_theta(&[0.2, -0.9], &unit).unwrap(), vec![0.2, -0.9]);
        let free = ProjectionBox::unbounded(2);
        assert_eq!(project_theta(&[1e300, -1e300], &free).unwrap(), vec![1e300, -1e300]);
        assert!(project_theta(&[0.0; 3], &unit).is_err());
        assert!(ProjectionBox::new(vec![1.0], vec![0.0]).is_err());
    }
}
