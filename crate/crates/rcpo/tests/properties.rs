//! Cross-module invariants checked over randomized inputs: the penalized
//! value identity, projection geometry, constraint estimators against the
//! exact solver, determinism of training, and the shaping ≡ frozen-multiplier
//! reduction.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rcpo::envs::random::{random_cmdp, random_episodic_cmdp};
use rcpo::harness::parse_metrics_csv;
use rcpo::sim::sample_episode;
use rcpo::trajectory::{mean_and_stderr, Step, Trajectory};
use rcpo::{
    estimate_jc, evaluate_constraint, exact_jc, exact_jr, lagrange_mc_train, penalized_reward,
    penalized_value_exact, project_lambda, project_theta, rcpo_train, reward_shaping_train,
    solve_cmdp_enumeration, ConstraintKind, ConstraintSpec, Env, PolicyTable, ProjectionBox,
    RestartRule, StepSchedule, TabularCmdp, TrainConfig,
};

fn random_policy(cmdp: &TabularCmdp, seed: u64) -> PolicyTable {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let (n, a) = (cmdp.n_states(), cmdp.n_actions());
    let mut probs = vec![0.0; n * a];
    for s in 0..n {
        let row = &mut probs[s * a..(s + 1) * a];
        for p in row.iter_mut() {
            *p = rng.random_range(0.05..1.0);
        }
        let z: f64 = row.iter().sum();
        for p in row.iter_mut() {
            *p /= z;
        }
    }
    PolicyTable::new(n, a, probs).unwrap()
}

fn penalty_trajectory(penalties: &[f64]) -> Trajectory {
    let steps = penalties
        .iter()
        .enumerate()
        .map(|(i, &c)| Step {
            state: 0,
            action: 0,
            reward: 0.0,
            penalty: c,
            next_state: 0,
            terminal: i + 1 == penalties.len(),
        })
        .collect();
    Trajectory::new(steps).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 64,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    /// V̂(λ) = V_R − λ·V_{C,γ}, state by state, on arbitrary CMDPs.
    #[test]
    fn penalized_identity_holds_everywhere(seed in 0u64..5000, lambda in 0.0f64..25.0) {
        let cmdp = random_cmdp(seed, 5, 3, 0.4).unwrap();
        let policy = random_policy(&cmdp, seed ^ 0x9e37);
        let table = penalized_value_exact(&cmdp, &policy, lambda).unwrap();
        for s in 0..cmdp.n_states() {
            let direct = table.v_r[s] - lambda * table.v_c_gamma[s];
            prop_assert!((table.v_hat[s] - direct).abs() <= 1e-9);
        }
    }

    /// The multiplier projection maps into [0, λ_max], is idempotent, and
    /// never expands distances.
    #[test]
    fn lambda_projection_geometry(
        x in -1e6f64..1e6,
        y in -1e6f64..1e6,
        lambda_max in 0.0f64..1e5,
    ) {
        let px = project_lambda(x, lambda_max);
        let py = project_lambda(y, lambda_max);
        prop_assert!((0.0..=lambda_max).contains(&px));
        prop_assert_eq!(project_lambda(px, lambda_max), px);
        prop_assert!((px - py).abs() <= (x - y).abs() + 1e-12);
    }

    /// The preference projection clamps into the box and fixes interior
    /// points.
    #[test]
    fn theta_projection_geometry(
        theta in prop::collection::vec(-200.0f64..200.0, 1..12),
        half_width in 0.5f64..80.0,
    ) {
        let bounds = ProjectionBox::symmetric(theta.len(), half_width);
        let proj = project_theta(&theta, &bounds).unwrap();
        for (&raw, &p) in theta.iter().zip(&proj) {
            prop_assert!(p.abs() <= half_width + 1e-12);
            if raw.abs() <= half_width {
                prop_assert_eq!(p, raw);
            }
        }
        prop_assert_eq!(project_theta(&proj, &bounds).unwrap(), proj.clone());
    }

    /// A mean-value constraint is an average, so it lies inside the range of
    /// the per-step penalties.
    #[test]
    fn mean_constraint_within_penalty_range(
        penalties in prop::collection::vec(0.0f64..5.0, 1..40),
    ) {
        let spec = ConstraintSpec::new(ConstraintKind::MeanValue, 1.0).unwrap();
        let c = evaluate_constraint(&penalty_trajectory(&penalties), &spec);
        let lo = penalties.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = penalties.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(lo - 1e-12 <= c && c <= hi + 1e-12);
    }

    /// Repeating one trajectory collapses the standard error to zero while
    /// the mean stays put; `mean_and_stderr` matches the closed form.
    #[test]
    fn constraint_estimator_moments(
        penalties in prop::collection::vec(0.0f64..3.0, 1..12),
        copies in 2usize..30,
    ) {
        let spec = ConstraintSpec::new(ConstraintKind::MeanValue, 1.0).unwrap();
        let traj = penalty_trajectory(&penalties);
        let single = evaluate_constraint(&traj, &spec);
        let batch: Vec<Trajectory> = std::iter::repeat_with(|| traj.clone()).take(copies).collect();
        let (mean, stderr) = estimate_jc(&batch, &spec).unwrap();
        prop_assert!((mean - single).abs() <= 1e-12);
        prop_assert!(stderr.abs() <= 1e-12);

        let values = [single, single + 1.0];
        let (m, se) = mean_and_stderr(values.iter().cloned()).unwrap();
        prop_assert!((m - (single + 0.5)).abs() <= 1e-12);
        // Sample std of {v, v+1} is 1/√2; stderr divides by √2 again.
        prop_assert!((se - 0.5).abs() <= 1e-12);
    }

    /// Every schedule family is positive (unless frozen) and non-increasing
    /// in k.
    #[test]
    fn schedules_decay_monotonically(
        a in 1e-6f64..10.0,
        p in 0.51f64..1.0,
        kappa in 0.5f64..1.0,
    ) {
        let schedules = [
            StepSchedule::power_law(a, p).unwrap(),
            StepSchedule::constant(a).unwrap(),
            StepSchedule::constant_with_decay(a, kappa).unwrap(),
        ];
        for sched in &schedules {
            let mut prev = f64::INFINITY;
            for k in [0u64, 1, 2, 10, 100, 10_000] {
                let v = rcpo::schedule_value(sched, k);
                // κ^k can underflow to exactly 0 at large k; that is the
                // correctly rounded value, so only require non-negativity
                // there.
                let positive_enough = v > 0.0 || (k > 100 && v == 0.0);
                prop_assert!(positive_enough);
                prop_assert!(v <= prev + 1e-15);
                prev = v;
            }
        }
    }

    /// Restart rules always produce a proper distribution with no mass on
    /// terminal states.
    #[test]
    fn restart_distributions_are_proper(seed in 0u64..2000, episode in 1u64..60) {
        let cmdp = random_episodic_cmdp(seed, 3, 3, 2).unwrap();
        for restart in [RestartRule::InitialDist, RestartRule::LinearDecayUniform] {
            let env = Env { cmdp: cmdp.clone(), restart };
            let dist = env.restart_dist(episode);
            let total: f64 = dist.iter().sum();
            prop_assert!((total - 1.0).abs() <= 1e-9);
            for (s, &m) in dist.iter().enumerate() {
                prop_assert!(m >= 0.0);
                if env.cmdp.is_terminal(s) {
                    prop_assert!(m == 0.0);
                }
            }
        }
    }

    /// The penalized reward is exactly r − λc.
    #[test]
    fn penalized_reward_is_linear(r in -5.0f64..5.0, c in 0.0f64..3.0, lambda in 0.0f64..50.0) {
        prop_assert_eq!(penalized_reward(r, c, lambda), r - lambda * c);
    }
}

/// Monte-Carlo constraint estimates agree with the exact solver to within
/// three standard errors.
#[test]
fn monte_carlo_matches_exact_constraint() {
    for seed in [11u64, 57, 203] {
        let cmdp = random_episodic_cmdp(seed, 3, 3, 2).unwrap();
        let policy = random_policy(&cmdp, seed + 1);
        let spec = ConstraintSpec::new(ConstraintKind::DiscountedSum(cmdp.discount()), 1.0).unwrap();
        let exact = exact_jc(&cmdp, &policy, &spec).unwrap();

        let mut rng = ChaCha12Rng::seed_from_u64(seed + 2);
        let episodes: Vec<Trajectory> = (0..4000)
            .map(|_| sample_episode(&cmdp, &policy, cmdp.initial_dist(), 512, &mut rng).unwrap())
            .collect();
        let (mc, stderr) = estimate_jc(&episodes, &spec).unwrap();
        assert!(
            (mc - exact).abs() <= 3.0 * stderr + 1e-9,
            "seed {seed}: MC {mc} vs exact {exact} (stderr {stderr})"
        );
    }
}

/// The enumeration solver's reported optimum is never beaten by a feasible
/// entry of its own ledger, and the flags are mutually consistent.
#[test]
fn enumeration_dominates_its_ledger() {
    for seed in [3u64, 19, 88, 140] {
        let cmdp = random_episodic_cmdp(seed, 2, 2, 2).unwrap();
        let spec = ConstraintSpec::new(ConstraintKind::DiscountedSum(cmdp.discount()), 0.4).unwrap();
        let sol = solve_cmdp_enumeration(&cmdp, &spec).unwrap();
        let any_feasible = sol.ledger.iter().any(|e| e.feasible);
        assert_eq!(sol.feasible, any_feasible, "seed {seed}");
        for entry in sol.ledger.iter().filter(|e| e.feasible) {
            assert!(
                sol.best_feasible_value >= entry.j_r - 1e-9,
                "seed {seed}: ledger policy {} has J_R {} > reported optimum {}",
                entry.policy_id,
                entry.j_r,
                sol.best_feasible_value
            );
        }
        if let Some(policy) = &sol.best_feasible_policy {
            assert!(exact_jc(&cmdp, policy, &spec).unwrap() <= spec.threshold + 1e-9);
            assert!(exact_jr(&cmdp, policy).unwrap() <= sol.best_feasible_value + 1e-9);
        }
    }
}

fn small_train_config(seed: u64, steps: u64) -> TrainConfig {
    let spec = ConstraintSpec::new(ConstraintKind::MeanValue, 0.3).unwrap();
    let mut cfg = TrainConfig::new(spec, steps, seed);
    cfg.t_max = 8;
    cfg.eta1 = StepSchedule::constant(1e-3).unwrap();
    cfg.eta2 = StepSchedule::constant(5e-2).unwrap();
    cfg.eta3 = StepSchedule::constant(1e-1).unwrap();
    cfg.eval_every_episodes = 50;
    cfg.eval_episodes = 20;
    cfg
}

/// Reruns with the same seed reproduce the metrics byte for byte; a
/// different seed does not.
#[test]
fn training_is_deterministic_per_seed() {
    let cmdp = random_episodic_cmdp(7, 2, 2, 2).unwrap();
    let env = Env {
        cmdp,
        restart: RestartRule::InitialDist,
    };
    for trainer in [rcpo_train, lagrange_mc_train] {
        let a = trainer(&env, &small_train_config(5, 900)).unwrap();
        let b = trainer(&env, &small_train_config(5, 900)).unwrap();
        assert_eq!(a.metrics_csv(), b.metrics_csv());
        assert_eq!(a.lambda_trace, b.lambda_trace);
        assert_eq!(a.policy_text(), b.policy_text());

        let c = trainer(&env, &small_train_config(6, 900)).unwrap();
        assert_ne!(a.metrics_csv(), c.metrics_csv());
    }
}

/// Fixed-penalty shaping is the Lagrangian loop with the multiplier frozen:
/// same seeds, same updates, identical artifacts.
#[test]
fn shaping_is_frozen_multiplier_training() {
    let cmdp = random_episodic_cmdp(21, 2, 2, 2).unwrap();
    let env = Env {
        cmdp,
        restart: RestartRule::LinearDecayUniform,
    };
    for (seed, lambda) in [(1u64, 0.0f64), (2, 0.7), (3, 4.0)] {
        let mut frozen = small_train_config(seed, 700);
        frozen.eta1 = StepSchedule::constant(0.0).unwrap();
        frozen.lambda0 = lambda;
        let via_rcpo = rcpo_train(&env, &frozen).unwrap();
        let via_shaping = reward_shaping_train(&env, lambda, &small_train_config(seed, 700)).unwrap();
        assert_eq!(via_rcpo.metrics_csv(), via_shaping.metrics_csv());
        assert_eq!(via_rcpo.policy_text(), via_shaping.policy_text());
        assert_eq!(via_shaping.lambda_trace.iter().copied().fold(lambda, f64::max), lambda);
    }
}

/// The CSV serialization of a run parses back to the same rows.
#[test]
fn metrics_csv_round_trips() {
    let cmdp = random_episodic_cmdp(33, 2, 2, 2).unwrap();
    let env = Env {
        cmdp,
        restart: RestartRule::InitialDist,
    };
    let run = rcpo_train(&env, &small_train_config(9, 600)).unwrap();
    let parsed = parse_metrics_csv(&run.metrics_csv()).unwrap();
    assert_eq!(parsed, run.metrics);
    let steps: Vec<u64> = parsed.iter().map(|r| r.step).collect();
    assert!(steps.windows(2).all(|w| w[0] < w[1]), "steps not increasing: {steps:?}");
}
