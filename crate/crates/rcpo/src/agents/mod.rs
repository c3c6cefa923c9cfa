//! Shared actor-critic machinery: the tabular critic, the Lagrange
//! multiplier state, and the gradient/advantage primitives that the three
//! trainers in [`train`] are assembled from.
//!
//! Every operation here is a pure function from old state to new state;
//! the trainers own all mutation and sequencing.

mod train;

pub use train::{
    lagrange_mc_train, rcpo_train, reward_shaping_train, Algorithm, MetricsRow, TrainConfig,
    TrainRun,
};
pub(crate) use train::evaluate_actor;

use crate::error::{Error, Result};
use crate::eval::penalized_reward;
use crate::policy::SoftmaxPolicy;
use crate::schedules::{
    project_lambda, project_theta_in_place, schedule_value, ProjectionBox, StepSchedule,
};
use crate::trajectory::Trajectory;

/// Tabular state-value approximator `V̂(s; v)`, one parameter per state.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticTable {
    v: Vec<f64>,
}

impl CriticTable {
    pub fn zeros(n_states: usize) -> Self {
        Self {
            v: vec![0.0; n_states],
        }
    }

    pub fn from_values(v: Vec<f64>) -> Result<Self> {
        if v.is_empty() {
            return Err(Error::Empty("critic needs at least one state".into()));
        }
        if let Some(bad) = v.iter().find(|x| !x.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "critic value {bad} is not finite"
            )));
        }
        Ok(Self { v })
    }

    pub fn n_states(&self) -> usize {
        self.v.len()
    }

    pub fn value(&self, s: usize) -> f64 {
        self.v[s]
    }

    pub fn values(&self) -> &[f64] {
        &self.v
    }
}

/// Multiplier λ with its projection ceiling and step-size schedule η₁.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangeState {
    lambda: f64,
    lambda_max: f64,
    schedule: StepSchedule,
    update_count: u64,
}

impl LagrangeState {
    /// `lambda_max` may be `f64::INFINITY` for an unbounded multiplier.
    pub fn new(lambda0: f64, lambda_max: f64, schedule: StepSchedule) -> Result<Self> {
        if !(lambda_max >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "multiplier ceiling must be >= 0, got {lambda_max}"
            )));
        }
        if !lambda0.is_finite() || !(0.0..=lambda_max).contains(&lambda0) {
            return Err(Error::InvalidConfig(format!(
                "initial multiplier {lambda0} outside [0, {lambda_max}]"
            )));
        }
        Ok(Self {
            lambda: lambda0,
            lambda_max,
            schedule,
            update_count: 0,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    pub fn update_count(&self) -> u64 {
        self.update_count
    }
}

/// Projected dual ascent: `λ' = Π[0,λ_max](λ + η₁(k)·(ĴC − α))`.
pub fn lambda_update(ls: &LagrangeState, jc_estimate: f64, alpha: f64) -> LagrangeState {
    assert!(
        jc_estimate.is_finite() && alpha.is_finite(),
        "non-finite constraint estimate {jc_estimate} or threshold {alpha}"
    );
    let eta = schedule_value(&ls.schedule, ls.update_count);
    LagrangeState {
        lambda: project_lambda(ls.lambda + eta * (jc_estimate - alpha), ls.lambda_max),
        lambda_max: ls.lambda_max,
        schedule: ls.schedule,
        update_count: ls.update_count + 1,
    }
}

/// Ascent step on the surrogate `Σ_t log π(a_t|s_t)·A_t`, accumulated (not
/// averaged) over the batch, then projected onto `bounds`.
///
/// `advantages` is flattened across the batch in step order.
pub fn policy_gradient_step(
    batch: &[Trajectory],
    actor: &SoftmaxPolicy,
    advantages: &[f64],
    eta2: f64,
    bounds: &ProjectionBox,
) -> Result<SoftmaxPolicy> {
    assert!(eta2 > 0.0 && eta2.is_finite(), "actor step size {eta2}");
    let total: usize = batch.iter().map(Trajectory::len).sum();
    if total != advantages.len() {
        return Err(Error::Inconsistent(format!(
            "batch has {total} steps but {} advantages",
            advantages.len()
        )));
    }
    let mut grad = vec![0.0; actor.params().len()];
    let mut i = 0;
    for traj in batch {
        for step in traj.steps() {
            actor.accumulate_grad_log_prob(step.state, step.action, advantages[i], &mut grad);
            i += 1;
        }
    }
    let mut next = actor.clone();
    let theta = next.params_mut();
    for (t, g) in theta.iter_mut().zip(&grad) {
        *t += eta2 * g;
    }
    project_theta_in_place(theta, bounds)?;
    Ok(next)
}

/// One semi-gradient TD(0) sweep over the batch on the penalized reward:
/// `y_t = r̂_t + γV̂(s_{t+1})·(1 − terminal_t)`, `v' = v − η₃·∂Σ(y_t − V̂(s_t))²/∂v`.
pub fn critic_td_update(
    batch: &[Trajectory],
    critic: &CriticTable,
    lambda: f64,
    gamma: f64,
    eta3: f64,
) -> CriticTable {
    assert!(lambda >= 0.0, "negative multiplier {lambda}");
    assert!((0.0..1.0).contains(&gamma), "discount {gamma} outside [0,1)");
    assert!(eta3 > 0.0 && eta3.is_finite(), "critic step size {eta3}");
    let mut dv = vec![0.0; critic.n_states()];
    for traj in batch {
        for step in traj.steps() {
            let bootstrap = if step.terminal {
                0.0
            } else {
                critic.value(step.next_state)
            };
            let y = penalized_reward(step.reward, step.penalty, lambda) + gamma * bootstrap;
            dv[step.state] += 2.0 * (critic.value(step.state) - y);
        }
    }
    let v = critic
        .values()
        .iter()
        .zip(&dv)
        .map(|(v, d)| v - eta3 * d)
        .collect();
    CriticTable { v }
}

/// Generalized advantage estimates on the penalized reward.
///
/// `δ_t = r̂_t + γV̂(s_{t+1})·(1−terminal_t) − V̂(s_t)`, then
/// `A_t = δ_t + γτ·(1−terminal_t)·A_{t+1}`. τ=0 gives the one-step TD
/// residual; τ=1 gives the discounted return-to-go minus the baseline.
pub fn gae_advantages(
    traj: &Trajectory,
    critic: &CriticTable,
    lambda: f64,
    gamma: f64,
    tau: f64,
) -> Vec<f64> {
    assert!((0.0..=1.0).contains(&tau), "GAE coefficient {tau} outside [0,1]");
    assert!(lambda >= 0.0, "negative multiplier {lambda}");
    let steps = traj.steps();
    let mut adv = vec![0.0; steps.len()];
    let mut carry = 0.0;
    for (t, step) in steps.iter().enumerate().rev() {
        let cont = 1.0 - f64::from(step.terminal);
        let delta = penalized_reward(step.reward, step.penalty, lambda)
            + gamma * critic.value(step.next_state) * cont
            - critic.value(step.state);
        carry = delta + gamma * tau * cont * carry;
        adv[t] = carry;
    }
    adv
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::penalized_value_exact;
    use crate::policy::PolicyTable;
    use crate::testutil;
    use crate::trajectory::Step;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn step(state: usize, action: usize, reward: f64, penalty: f64, next: usize, terminal: bool) -> Step {
        Step {
            state,
            action,
            reward,
            penalty,
            next_state: next,
            terminal,
        }
    }

    #[test]
    fn critic_rejects_non_finite_values() {
        assert!(CriticTable::from_values(vec![0.0, f64::NAN]).is_err());
        assert!(CriticTable::from_values(vec![]).is_err());
        let c = CriticTable::from_values(vec![1.0, -2.0]).unwrap();
        assert_eq!(c.value(1), -2.0);
    }

    #[test]
    fn lagrange_state_checks_bounds() {
        let sched = StepSchedule::constant(1e-3).unwrap();
        assert!(LagrangeState::new(-0.1, 1.0, sched).is_err());
        assert!(LagrangeState::new(2.0, 1.0, sched).is_err());
        assert!(LagrangeState::new(0.5, f64::NAN, sched).is_err());
        let ls = LagrangeState::new(0.5, f64::INFINITY, sched).unwrap();
        assert_eq!(ls.lambda(), 0.5);
        assert_eq!(ls.update_count(), 0);
    }

    #[test]
    fn lambda_update_ascends_on_violation() {
        let sched = StepSchedule::constant(2.5e-5).unwrap();
        let ls = LagrangeState::new(0.6, f64::INFINITY, sched).unwrap();
        let next = lambda_update(&ls, 0.3, 0.01);
        assert!((next.lambda() - 0.600_007_25).abs() < 1e-9);
        assert_eq!(next.update_count(), 1);
    }

    #[test]
    fn lambda_update_floors_at_zero() {
        let sched = StepSchedule::constant(0.1).unwrap();
        let ls = LagrangeState::new(0.0, f64::INFINITY, sched).unwrap();
        let next = lambda_update(&ls, 0.0, 0.5);
        assert_eq!(next.lambda(), 0.0);
    }

    #[test]
    fn lambda_never_leaves_zero_under_satisfied_constraint() {
        let sched = StepSchedule::power_law(0.3, 0.6).unwrap();
        let mut ls = LagrangeState::new(0.0, f64::INFINITY, sched).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for _ in 0..500 {
            let jc = rng.random_range(0.0..0.5);
            ls = lambda_update(&ls, jc, 0.5);
            assert_eq!(ls.lambda(), 0.0);
        }
        assert_eq!(ls.update_count(), 500);
    }

    #[test]
    fn lambda_update_respects_ceiling() {
        let sched = StepSchedule::constant(10.0).unwrap();
        let mut ls = LagrangeState::new(0.9, 1.0, sched).unwrap();
        for _ in 0..3 {
            ls = lambda_update(&ls, 5.0, 0.0);
            assert!(ls.lambda() <= 1.0);
        }
        assert_eq!(ls.lambda(), 1.0);
    }

    #[test]
    fn zero_advantages_leave_actor_unchanged() {
        let cmdp = testutil::two_state();
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let actor = SoftmaxPolicy::tabular(cmdp.n_states(), cmdp.n_actions());
        let traj = crate::sim::sample_episode(
            &cmdp,
            &actor,
            cmdp.initial_dist(),
            16,
            &mut rng,
        )
        .unwrap();
        let bounds = ProjectionBox::unbounded(actor.params().len());
        let adv = vec![0.0; traj.len()];
        let next = policy_gradient_step(&[traj], &actor, &adv, 0.1, &bounds).unwrap();
        assert_eq!(next.params(), actor.params());
    }

    #[test]
    fn positive_advantage_raises_chosen_action_probability() {
        let actor = SoftmaxPolicy::tabular(1, 2);
        let traj = Trajectory::new(vec![step(0, 0, 1.0, 0.0, 0, false)]).unwrap();
        let bounds = ProjectionBox::unbounded(actor.params().len());
        let before = actor.action_probs(0)[0];
        let next = policy_gradient_step(&[traj], &actor, &[1.0], 0.5, &bounds).unwrap();
        assert!(next.action_probs(0)[0] > before);
    }

    #[test]
    fn policy_gradient_rejects_misaligned_advantages() {
        let actor = SoftmaxPolicy::tabular(1, 2);
        let traj = Trajectory::new(vec![step(0, 0, 1.0, 0.0, 0, false)]).unwrap();
        let bounds = ProjectionBox::unbounded(actor.params().len());
        assert!(policy_gradient_step(&[traj], &actor, &[1.0, 2.0], 0.5, &bounds).is_err());
    }

    /// Analytic surrogate gradient vs central finite differences of
    /// `Σ_t log π(a_t|s_t)·A_t`, h=1e-5.
    #[test]
    fn policy_gradient_matches_finite_differences() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for trial in 0..20 {
            let (n_states, n_actions) = (3, 4);
            let mut actor = SoftmaxPolicy::tabular(n_states, n_actions);
            for p in actor.params_mut() {
                *p = rng.random_range(-1.0..1.0);
            }
            let len = 2 + trial % 5;
            let mut steps = Vec::new();
            for _ in 0..len {
                steps.push(step(
                    rng.random_range(0..n_states),
                    rng.random_range(0..n_actions),
                    0.0,
                    0.0,
                    rng.random_range(0..n_states),
                    false,
                ));
            }
            let traj = Trajectory::new(steps).unwrap();
            let adv: Vec<f64> = (0..len).map(|_| rng.random_range(-2.0..2.0)).collect();

            let surrogate = |theta: &[f64]| {
                let mut probe = actor.clone();
                probe.params_mut().copy_from_slice(theta);
                traj.steps()
                    .iter()
                    .zip(&adv)
                    .map(|(st, a)| probe.log_prob(st.state, st.action) * a)
                    .sum::<f64>()
            };

            let mut analytic = vec![0.0; actor.params().len()];
            for (st, a) in traj.steps().iter().zip(&adv) {
                actor.accumulate_grad_log_prob(st.state, st.action, *a, &mut analytic);
            }

            let h = 1e-5;
            let mut theta = actor.params().to_vec();
            for i in 0..theta.len() {
                let orig = theta[i];
                theta[i] = orig + h;
                let up = surrogate(&theta);
                theta[i] = orig - h;
                let down = surrogate(&theta);
                theta[i] = orig;
                let fd = (up - down) / (2.0 * h);
                let scale = analytic[i].abs().max(fd.abs()).max(1.0);
                assert!(
                    (analytic[i] - fd).abs() / scale < 1e-4,
                    "coordinate {i}: analytic {} vs fd {fd}",
                    analytic[i]
                );
            }
        }
    }

    #[test]
    fn terminal_td_target_is_penalized_reward() {
        let critic = CriticTable::zeros(2);
        let traj = Trajectory::new(vec![step(0, 0, 0.0, 1.0, 1, true)]).unwrap();
        let next = critic_td_update(&[traj], &critic, 0.6, 0.99, 0.5);
        // y = 0 − 0.6·1 + γ·0 = −0.6; dv[0] = 2(0 − (−0.6)) = 1.2; v' = −0.6.
        assert!((next.value(0) - (-0.6)).abs() < 1e-12);
        assert_eq!(next.value(1), 0.0);
    }

    #[test]
    fn zero_lambda_td_ignores_penalties() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let cmdp = testutil::two_state_with_penalty();
        let actor = SoftmaxPolicy::tabular(cmdp.n_states(), cmdp.n_actions());
        let traj =
            crate::sim::sample_episode(&cmdp, &actor, cmdp.initial_dist(), 32, &mut rng).unwrap();
        let stripped = Trajectory::new(
            traj.steps()
                .iter()
                .map(|s| Step { penalty: 0.0, ..*s })
                .collect(),
        )
        .unwrap();
        let critic = CriticTable::from_values(vec![0.3, -0.2]).unwrap();
        let a = critic_td_update(&[traj], &critic, 0.0, 0.99, 0.05);
        let b = critic_td_update(&[stripped], &critic, 0.0, 0.99, 0.05);
        assert_eq!(a.values(), b.values());
    }

    /// Stochastic episodic CMDP with a live penalty channel: states 0, 1
    /// transient, 2 terminal, both actions can absorb.
    fn penalized_episodic() -> crate::cmdp::TabularCmdp {
        let (n, a) = (3, 2);
        let mut p = vec![0.0; n * a * n];
        let mut r = vec![0.0; n * a * n];
        let set = |v: &mut Vec<f64>, s: usize, act: usize, next: usize, x: f64| {
            v[(s * a + act) * n + next] = x;
        };
        set(&mut p, 0, 0, 1, 0.8);
        set(&mut p, 0, 0, 2, 0.2);
        set(&mut p, 0, 1, 0, 0.5);
        set(&mut p, 0, 1, 2, 0.5);
        set(&mut p, 1, 0, 2, 1.0);
        set(&mut p, 1, 1, 1, 0.3);
        set(&mut p, 1, 1, 2, 0.7);
        set(&mut p, 2, 0, 2, 1.0);
        set(&mut p, 2, 1, 2, 1.0);
        set(&mut r, 0, 0, 1, 1.0);
        set(&mut r, 0, 1, 0, -0.2);
        set(&mut r, 1, 0, 2, 0.5);
        set(&mut r, 1, 1, 1, 0.1);
        let penalty = vec![0.4, 0.0, 0.9, 0.2, 0.0, 0.0];
        crate::cmdp::TabularCmdp::new(
            n,
            a,
            p,
            r,
            penalty,
            vec![0.7, 0.3, 0.0],
            0.95,
            vec![false, false, true],
            vec![],
        )
        .unwrap()
    }

    /// Repeated TD sweeps under a frozen policy and λ converge to the exact
    /// penalized values.
    #[test]
    fn critic_fixed_point_matches_exact_solve() {
        let cmdp = penalized_episodic();
        let policy = PolicyTable::uniform(cmdp.n_states(), cmdp.n_actions());
        let actor = SoftmaxPolicy::tabular(cmdp.n_states(), cmdp.n_actions());
        let lambda = 0.7;
        let exact = penalized_value_exact(&cmdp, &policy, lambda).unwrap();
        let mut critic = CriticTable::zeros(cmdp.n_states());
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        for k in 0..80_000u64 {
            let traj =
                crate::sim::sample_episode(&cmdp, &actor, cmdp.initial_dist(), 64, &mut rng)
                    .unwrap();
            let eta = 0.5 / (1.0 + k as f64).powf(0.75);
            critic = critic_td_update(&[traj], &critic, lambda, cmdp.discount(), eta);
        }
        for s in cmdp.non_terminal_states() {
            assert!(
                (critic.value(s) - exact.v_hat[s]).abs() < 0.05,
                "state {s}: TD {} vs exact {}",
                critic.value(s),
                exact.v_hat[s]
            );
        }
    }

    #[test]
    fn single_step_gae_is_td_residual_for_any_tau() {
        let critic = CriticTable::from_values(vec![0.4, -0.1]).unwrap();
        for (tau, terminal) in [(0.0, false), (0.5, false), (1.0, true)] {
            let traj = Trajectory::new(vec![step(0, 1, 0.3, 0.2, 1, terminal)]).unwrap();
            let adv = gae_advantages(&traj, &critic, 0.5, 0.9, tau);
            let cont = 1.0 - f64::from(terminal);
            let expected = 0.3 - 0.5 * 0.2 + 0.9 * critic.value(1) * cont - critic.value(0);
            assert_eq!(adv.len(), 1);
            assert!((adv[0] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn tau_zero_gives_one_step_residuals() {
        let critic = CriticTable::from_values(vec![0.1, 0.2, 0.3, 0.0]).unwrap();
        let traj = Trajectory::new(vec![
            step(0, 0, 1.0, 0.5, 1, false),
            step(1, 1, -0.5, 0.0, 2, false),
            step(2, 0, 0.2, 1.0, 3, true),
        ])
        .unwrap();
        let (lambda, gamma) = (0.4, 0.95);
        let adv = gae_advantages(&traj, &critic, lambda, gamma, 0.0);
        for (a, st) in adv.iter().zip(traj.steps()) {
            let cont = 1.0 - f64::from(st.terminal);
            let delta = penalized_reward(st.reward, st.penalty, lambda)
                + gamma * critic.value(st.next_state) * cont
                - critic.value(st.state);
            assert!((a - delta).abs() < 1e-12);
        }
    }

    #[test]
    fn tau_one_gives_return_to_go_minus_baseline() {
        let critic = CriticTable::from_values(vec![0.7, -0.3, 0.15, 0.0]).unwrap();
        let traj = Trajectory::new(vec![
            step(0, 0, 1.0, 0.5, 1, false),
            step(1, 1, -0.5, 0.0, 2, false),
            step(2, 0, 0.2, 1.0, 3, true),
        ])
        .unwrap();
        let (lambda, gamma) = (0.4, 0.95);
        let adv = gae_advantages(&traj, &critic, lambda, gamma, 1.0);
        let rhat: Vec<f64> = traj
            .steps()
            .iter()
            .map(|s| penalized_reward(s.reward, s.penalty, lambda))
            .collect();
        for t in 0..3 {
            let mut ret = 0.0;
            for (j, r) in rhat.iter().enumerate().skip(t) {
                ret += gamma.powi((j - t) as i32) * r;
            }
            assert!(
                (adv[t] - (ret - critic.value(traj.steps()[t].state))).abs() < 1e-12,
                "t={t}"
            );
        }
    }
}
