//! The three trainers: the constrained advantage actor-critic, its fixed-λ
//! reward-shaping reduction, and the Monte-Carlo primal-dual baseline.
//!
//! A run is strictly sequential: critic on the fastest schedule η₃, actor
//! on η₂, multiplier on the slowest η₁, multiplier updates only at episode
//! termination from the episode's realized constraint. Everything is a
//! deterministic function of (config, seed).

use super::{gae_advantages, lambda_update, policy_gradient_step, CriticTable, LagrangeState};
use crate::cmdp::TabularCmdp;
use crate::envs::Env;
use crate::error::{Error, Result};
use crate::eval::penalized_reward;
use crate::policy::SoftmaxPolicy;
use crate::schedules::{schedule_value, validate_timescales, ProjectionBox, StepSchedule, Validity};
use crate::sim::{sample_episode, sample_index, sample_transition, ActionSampler};
use crate::trajectory::{
    discounted_return, evaluate_constraint, estimate_jc, ConstraintSpec, Signal, Step, Trajectory,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// Longest episode the Monte-Carlo trainer will roll out before giving up
/// on termination (whole-episode returns need complete episodes).
const MC_EPISODE_CAP: usize = 65_536;

/// Episodes per restart-decay round. Decaying restart rules weight the
/// exploratory mixture by 1/#round, ticked once per round rather than per
/// episode: a tabular actor has no generalization across states, so the
/// exploration budget Σ 1/k must keep paying out over the whole run. The
/// round length matches the canonical rover evaluation cadence.
const RESTART_ROUND_EPISODES: u64 = 5_120;

/// Restart-rule iteration for the episode about to start (1-based).
fn restart_round(episode_index: u64) -> u64 {
    1 + (episode_index - 1) / RESTART_ROUND_EPISODES
}

/// Schedule points where the strict ordering η₁ < η₂ < η₃ is checked.
const PROBE_KS: [u64; 8] = [0, 1, 10, 100, 1_000, 10_000, 100_000, 1_000_000];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Algorithm {
    Rcpo,
    LagrangeMc,
    Shaping { lambda_fixed: f64 },
}

impl Algorithm {
    /// Config token: `rcpo`, `lagrange_mc`, or `shaping:<lambda>`.
    pub fn token(&self) -> String {
        match self {
            Self::Rcpo => "rcpo".into(),
            Self::LagrangeMc => "lagrange_mc".into(),
            Self::Shaping { lambda_fixed } => format!("shaping:{lambda_fixed}"),
        }
    }

    pub fn parse(token: &str) -> Result<Self> {
        if let Some(rest) = token.strip_prefix("shaping:") {
            let lambda: f64 = rest
                .parse()
                .map_err(|e| Error::Parse(format!("bad shaping multiplier '{rest}': {e}")))?;
            if !(lambda >= 0.0 && lambda.is_finite()) {
                return Err(Error::Parse(format!(
                    "shaping multiplier must be finite and >= 0, got {lambda}"
                )));
            }
            return Ok(Self::Shaping {
                lambda_fixed: lambda,
            });
        }
        match token {
            "rcpo" => Ok(Self::Rcpo),
            "lagrange_mc" => Ok(Self::LagrangeMc),
            _ => Err(Error::Parse(format!("unknown algorithm '{token}'"))),
        }
    }
}

/// Everything a trainer needs besides the environment.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Rollout segment length between actor/critic updates.
    pub t_max: usize,
    pub total_steps: u64,
    pub gamma: f64,
    /// Generalized-advantage coefficient; `None` uses the segment's n-step
    /// returns directly.
    pub gae_tau: Option<f64>,
    /// Multiplier schedule (slowest).
    pub eta1: StepSchedule,
    /// Actor schedule.
    pub eta2: StepSchedule,
    /// Critic schedule (fastest).
    pub eta3: StepSchedule,
    pub constraint: ConstraintSpec,
    pub seed: u64,
    /// Evaluation cadence, in terminated episodes.
    pub eval_every_episodes: u64,
    pub eval_episodes: usize,
    pub lambda0: f64,
    /// Projection ceiling for λ; `f64::INFINITY` leaves it unbounded.
    pub lambda_max: f64,
    /// Moving-average window (in episodes) over the realized constraint
    /// fed to the multiplier update; 1 = the single-episode sample.
    pub lambda_window: usize,
    /// Half-width of the actor's preference projection box.
    pub actor_box: f64,
    /// Hidden width for the dense approximator; `None` is tabular softmax.
    pub hidden: Option<usize>,
    /// Subtract a state-value baseline (reward-only, trained by Monte-Carlo
    /// regression) in the MC trainer.
    pub mc_reward_baseline: bool,
}

impl TrainConfig {
    pub fn new(constraint: ConstraintSpec, total_steps: u64, seed: u64) -> Self {
        Self {
            t_max: 32,
            total_steps,
            gamma: 0.99,
            gae_tau: None,
            eta1: StepSchedule::Constant { a: 2.5e-5 },
            eta2: StepSchedule::Constant { a: 1e-3 },
            eta3: StepSchedule::Constant { a: 2e-3 },
            constraint,
            seed,
            eval_every_episodes: 1000,
            eval_episodes: 200,
            lambda0: 0.0,
            lambda_max: f64::INFINITY,
            lambda_window: 1,
            actor_box: 50.0,
            hidden: None,
            mc_reward_baseline: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.t_max == 0
            || self.total_steps == 0
            || self.eval_every_episodes == 0
            || self.eval_episodes == 0
            || self.lambda_window == 0
        {
            return Err(Error::InvalidConfig(
                "t_max, total_steps, eval cadence, eval episodes, and λ window must be >= 1"
                    .into(),
            ));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::InvalidConfig(format!(
                "discount {} outside [0,1)",
                self.gamma
            )));
        }
        if let Some(tau) = self.gae_tau {
            if !(0.0..=1.0).contains(&tau) {
                return Err(Error::InvalidConfig(format!(
                    "GAE coefficient {tau} outside [0,1]"
                )));
            }
        }
        if !(self.actor_box > 0.0 && self.actor_box.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "actor projection half-width must be finite and > 0, got {}",
                self.actor_box
            )));
        }
        // λ₀/λ_max coherence is LagrangeState::new's check; run it here so
        // bad configs fail before any stepping.
        LagrangeState::new(self.lambda0, self.lambda_max, self.eta1)?;
        // A frozen (`const:0`) schedule opts its timescale out of the
        // ordering; the remaining active schedules must still be strictly
        // ordered slow → fast and pass the separation check.
        let active: Vec<(&str, &StepSchedule)> = [
            ("η₁", &self.eta1),
            ("η₂", &self.eta2),
            ("η₃", &self.eta3),
        ]
        .into_iter()
        .filter(|(_, s)| !s.is_frozen())
        .collect();
        for pair in active.windows(2) {
            let ((slow_name, slow), (fast_name, fast)) = (pair[0], pair[1]);
            for k in PROBE_KS {
                let (es, ef) = (schedule_value(slow, k), schedule_value(fast, k));
                if es >= ef {
                    return Err(Error::InvalidConfig(format!(
                        "timescale ordering {slow_name} < {fast_name} fails at k={k}: {es} vs {ef}"
                    )));
                }
            }
            let verdict = validate_timescales(slow, fast);
            if verdict.validity == Validity::Invalid {
                return Err(Error::InvalidConfig(format!(
                    "timescale pair {slow_name}/{fast_name} invalid: {}",
                    verdict.reason
                )));
            }
        }
        Ok(())
    }
}

/// One evaluation snapshot; serialized as a CSV row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsRow {
    pub step: u64,
    pub episodes: u64,
    pub lambda: f64,
    pub eval_reward_mean: f64,
    pub eval_constraint_mean: f64,
    pub eval_constraint_stderr: f64,
}

/// Completed training run: final parameters plus the full λ and metric
/// traces.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainRun {
    pub config: TrainConfig,
    pub algorithm: Algorithm,
    pub actor: SoftmaxPolicy,
    pub critic: CriticTable,
    pub lambda: f64,
    /// λ after every multiplier update, starting with λ₀.
    pub lambda_trace: Vec<f64>,
    pub metrics: Vec<MetricsRow>,
    pub steps: u64,
    pub episodes: u64,
    /// Online performance: mean discounted return over the terminated
    /// training episodes (NaN if none terminated).
    pub online_reward_mean: f64,
    /// Online mean of the realized per-episode constraint. Under a constant
    /// η₁ with the multiplier never clipped, the λ update telescopes to
    /// `α + (λ_end − λ₀)/(η₁·episodes)`, so this is pinned near α whenever
    /// λ stays bounded — even where the last iterate orbits the saddle.
    pub online_constraint_mean: f64,
}

impl TrainRun {
    pub fn metrics_csv(&self) -> String {
        let mut out = String::from(
            "step,episodes,lambda,eval_reward_mean,eval_constraint_mean,eval_constraint_stderr\n",
        );
        for row in &self.metrics {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                row.step,
                row.episodes,
                row.lambda,
                row.eval_reward_mean,
                row.eval_constraint_mean,
                row.eval_constraint_stderr
            ));
        }
        out
    }

    /// Plain-text θ dump (`policy v1 …`).
    pub fn policy_text(&self) -> String {
        self.actor.to_text()
    }

    pub fn final_metrics(&self) -> &MetricsRow {
        self.metrics.last().expect("every run records metrics")
    }
}

/// Discounted-return horizon: long enough that the truncated tail is below
/// 1e-12 of the per-step scale.
pub(crate) fn eval_horizon(gamma: f64) -> usize {
    let tail = if gamma > 0.0 {
        (1e-12f64.ln() / gamma.ln()).ceil() as usize
    } else {
        0
    };
    tail.max(4096)
}

/// Rolls `episodes` evaluation episodes from the CMDP's canonical initial
/// distribution; returns (mean discounted reward, constraint mean,
/// constraint standard error).
pub(crate) fn evaluate_actor(
    cmdp: &TabularCmdp,
    actor: &impl ActionSampler,
    spec: &ConstraintSpec,
    gamma: f64,
    episodes: usize,
    rng: &mut impl Rng,
) -> Result<(f64, f64, f64)> {
    if episodes == 0 {
        return Err(Error::Empty("evaluation needs at least one episode".into()));
    }
    let horizon = eval_horizon(gamma);
    let mut trajs = Vec::with_capacity(episodes);
    let mut reward_sum = 0.0;
    for _ in 0..episodes {
        let traj = sample_episode(cmdp, actor, cmdp.initial_dist(), horizon, rng)?;
        reward_sum += discounted_return(&traj, gamma, Signal::Reward);
        trajs.push(traj);
    }
    let (jc, stderr) = estimate_jc(&trajs, spec)?;
    Ok((reward_sum / episodes as f64, jc, stderr))
}

fn make_actor(cfg: &TrainConfig, cmdp: &TabularCmdp, rng: &mut impl Rng) -> SoftmaxPolicy {
    match cfg.hidden {
        None => SoftmaxPolicy::tabular(cmdp.n_states(), cmdp.n_actions()),
        Some(h) => SoftmaxPolicy::dense(cmdp.n_states(), cmdp.n_actions(), h, rng),
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn draw_start(dist: &[f64], cmdp: &TabularCmdp, rng: &mut impl Rng) -> Result<usize> {
    let s = sample_index(dist, rng);
    if cmdp.is_terminal(s) {
        return Err(Error::Inconsistent(format!(
            "restart distribution placed mass on terminal state {s}"
        )));
    }
    Ok(s)
}

/// Rolling mean over the last `window` realized episode constraints.
struct ConstraintWindow {
    window: usize,
    values: Vec<f64>,
}

impl ConstraintWindow {
    fn new(window: usize) -> Self {
        Self {
            window,
            values: Vec::new(),
        }
    }

    fn push_and_mean(&mut self, c: f64) -> f64 {
        self.values.push(c);
        if self.values.len() > self.window {
            self.values.remove(0);
        }
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

struct RunRecorder {
    lambda_trace: Vec<f64>,
    metrics: Vec<MetricsRow>,
    eval_rng: ChaCha12Rng,
}

impl RunRecorder {
    fn new(lambda0: f64, seed: u64) -> Self {
        Self {
            lambda_trace: vec![lambda0],
            metrics: Vec::new(),
            eval_rng: stream_rng(seed, 1),
        }
    }

    fn snapshot(
        &mut self,
        cmdp: &TabularCmdp,
        actor: &SoftmaxPolicy,
        cfg: &TrainConfig,
        step: u64,
        episodes: u64,
        lambda: f64,
    ) -> Result<()> {
        let (jr, jc, se) = evaluate_actor(
            cmdp,
            actor,
            &cfg.constraint,
            cfg.gamma,
            cfg.eval_episodes,
            &mut self.eval_rng,
        )?;
        self.metrics.push(MetricsRow {
            step,
            episodes,
            lambda,
            eval_reward_mean: jr,
            eval_constraint_mean: jc,
            eval_constraint_stderr: se,
        });
        Ok(())
    }

    fn last_step(&self) -> Option<u64> {
        self.metrics.last().map(|r| r.step)
    }
}

/// Constrained advantage actor-critic: rollout segments of at most `t_max`
/// steps, n-step penalized returns inside each segment, critic and actor
/// updated per segment, λ updated per terminated episode from the realized
/// constraint.
pub fn rcpo_train(env: &Env, cfg: &TrainConfig) -> Result<TrainRun> {
    actor_critic_run(env, cfg.clone(), Algorithm::Rcpo)
}

/// [`rcpo_train`] with the multiplier frozen at `lambda_fixed` (η₁ ≡ 0):
/// plain reward shaping on `r − λ_fixed·c`.
pub fn reward_shaping_train(env: &Env, lambda_fixed: f64, cfg: &TrainConfig) -> Result<TrainRun> {
    if !(lambda_fixed >= 0.0 && lambda_fixed.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "shaping multiplier must be finite and >= 0, got {lambda_fixed}"
        )));
    }
    let mut cfg = cfg.clone();
    cfg.eta1 = StepSchedule::constant(0.0)?;
    cfg.lambda0 = lambda_fixed;
    if cfg.lambda_max < lambda_fixed {
        cfg.lambda_max = f64::INFINITY;
    }
    actor_critic_run(env, cfg, Algorithm::Shaping { lambda_fixed })
}

fn actor_critic_run(env: &Env, cfg: TrainConfig, algorithm: Algorithm) -> Result<TrainRun> {
    cfg.validate()?;
    let cmdp = &env.cmdp;
    let mut init_rng = stream_rng(cfg.seed, 2);
    let mut train_rng = stream_rng(cfg.seed, 0);
    let mut actor = make_actor(&cfg, cmdp, &mut init_rng);
    let mut critic = CriticTable::zeros(cmdp.n_states());
    let mut ls = LagrangeState::new(cfg.lambda0, cfg.lambda_max, cfg.eta1)?;
    let bounds = ProjectionBox::symmetric(actor.params().len(), cfg.actor_box);
    let mut recorder = RunRecorder::new(ls.lambda(), cfg.seed);
    let mut window = ConstraintWindow::new(cfg.lambda_window);

    let mut steps: u64 = 0;
    let mut episodes: u64 = 0;
    let mut episode_index: u64 = 1;
    let mut actor_updates: u64 = 0;
    let mut critic_updates: u64 = 0;
    let mut online_reward_sum = 0.0;
    let mut online_constraint_sum = 0.0;
    let mut s = draw_start(&env.restart_dist(restart_round(episode_index)), cmdp, &mut train_rng)?;
    let mut episode_steps: Vec<Step> = Vec::new();

    recorder.snapshot(cmdp, &actor, &cfg, 0, 0, ls.lambda())?;

    while steps < cfg.total_steps {
        // Roll one segment: at most t_max steps, stopping at terminal
        // states or step exhaustion.
        let seg_start = steps;
        let mut seg: Vec<Step> = Vec::new();
        let mut terminated = false;
        while steps < cfg.total_steps && steps - seg_start < cfg.t_max as u64 {
            let a = actor.sample_action(s, &mut train_rng);
            let (next, reward, penalty) = sample_transition(cmdp, s, a, &mut train_rng);
            let terminal = cmdp.is_terminal(next);
            seg.push(Step {
                state: s,
                action: a,
                reward,
                penalty,
                next_state: next,
                terminal,
            });
            steps += 1;
            s = next;
            if terminal {
                terminated = true;
                break;
            }
        }
        let traj = Trajectory::new(seg)?;
        let lambda = ls.lambda();

        // n-step penalized returns bootstrapped from the old critic:
        // R = 0 at terminal tails, V̂(s_end) otherwise, then
        // R ← r̂_τ + γR backward through the segment.
        let seg_steps = traj.steps();
        let last = seg_steps.last().expect("segment is non-empty");
        let mut ret = if last.terminal {
            0.0
        } else {
            critic.value(last.next_state)
        };
        let mut targets = vec![0.0; seg_steps.len()];
        for (t, st) in seg_steps.iter().enumerate().rev() {
            ret = penalized_reward(st.reward, st.penalty, lambda) + cfg.gamma * ret;
            targets[t] = ret;
        }

        let advantages = match cfg.gae_tau {
            None => seg_steps
                .iter()
                .zip(&targets)
                .map(|(st, r)| r - critic.value(st.state))
                .collect::<Vec<f64>>(),
            Some(tau) => gae_advantages(&traj, &critic, lambda, cfg.gamma, tau),
        };

        // Both gradients are taken at the pre-update parameters; apply
        // order is then irrelevant. A frozen schedule skips its update.
        let next_actor = if cfg.eta2.is_frozen() {
            None
        } else {
            let eta2 = schedule_value(&cfg.eta2, actor_updates);
            let next = policy_gradient_step(
                std::slice::from_ref(&traj),
                &actor,
                &advantages,
                eta2,
                &bounds,
            )?;
            actor_updates += 1;
            Some(next)
        };
        if !cfg.eta3.is_frozen() {
            let eta3 = schedule_value(&cfg.eta3, critic_updates);
            let mut dv = vec![0.0; critic.n_states()];
            for (st, target) in seg_steps.iter().zip(&targets) {
                dv[st.state] += 2.0 * (critic.value(st.state) - target);
            }
            let v = critic
                .values()
                .iter()
                .zip(&dv)
                .map(|(v, d)| v - eta3 * d)
                .collect::<Vec<f64>>();
            critic = CriticTable::from_values(v)?;
            critic_updates += 1;
        }
        if let Some(next) = next_actor {
            actor = next;
        }

        episode_steps.extend_from_slice(seg_steps);
        if terminated {
            episodes += 1;
            let episode = Trajectory::new(std::mem::take(&mut episode_steps))?;
            let c = evaluate_constraint(&episode, &cfg.constraint);
            online_reward_sum += discounted_return(&episode, cfg.gamma, Signal::Reward);
            online_constraint_sum += c;
            let jc = window.push_and_mean(c);
            ls = lambda_update(&ls, jc, cfg.constraint.threshold);
            recorder.lambda_trace.push(ls.lambda());
            if episodes % cfg.eval_every_episodes == 0 {
                recorder.snapshot(cmdp, &actor, &cfg, steps, episodes, ls.lambda())?;
            }
            episode_index += 1;
            s = draw_start(&env.restart_dist(restart_round(episode_index)), cmdp, &mut train_rng)?;
        }
    }

    if recorder.last_step() != Some(steps) {
        recorder.snapshot(cmdp, &actor, &cfg, steps, episodes, ls.lambda())?;
    }
    Ok(TrainRun {
        config: cfg,
        algorithm,
        actor,
        critic,
        lambda: ls.lambda(),
        lambda_trace: recorder.lambda_trace,
        metrics: recorder.metrics,
        steps,
        episodes,
        online_reward_mean: online_reward_sum / episodes as f64,
        online_constraint_mean: online_constraint_sum / episodes as f64,
    })
}

/// Monte-Carlo primal-dual: whole-episode rollouts, REINFORCE on
/// `G_t − b(s_t) − λ·C` where `G_t` is the discounted reward-only
/// return-to-go, `b` an optional reward-only baseline, and `C` the
/// episode's realized constraint (no critic bootstrap of the penalty).
pub fn lagrange_mc_train(env: &Env, cfg: &TrainConfig) -> Result<TrainRun> {
    cfg.validate()?;
    let cmdp = &env.cmdp;
    let mut init_rng = stream_rng(cfg.seed, 2);
    let mut train_rng = stream_rng(cfg.seed, 0);
    let mut actor = make_actor(&cfg, cmdp, &mut init_rng);
    let mut baseline = CriticTable::zeros(cmdp.n_states());
    let mut ls = LagrangeState::new(cfg.lambda0, cfg.lambda_max, cfg.eta1)?;
    let bounds = ProjectionBox::symmetric(actor.params().len(), cfg.actor_box);
    let mut recorder = RunRecorder::new(ls.lambda(), cfg.seed);
    let mut window = ConstraintWindow::new(cfg.lambda_window);

    let mut steps: u64 = 0;
    let mut episodes: u64 = 0;
    let mut episode_index: u64 = 1;
    let mut actor_updates: u64 = 0;
    let mut baseline_updates: u64 = 0;
    let mut online_reward_sum = 0.0;
    let mut online_constraint_sum = 0.0;

    recorder.snapshot(cmdp, &actor, &cfg, 0, 0, ls.lambda())?;

    while steps < cfg.total_steps {
        let start = env.restart_dist(restart_round(episode_index));
        let traj = sample_episode(cmdp, &actor, &start, MC_EPISODE_CAP, &mut train_rng)?;
        steps += traj.len() as u64;
        if !traj.terminated() {
            // Truncated episode: its constraint never resolved, so no
            // update of any kind is sound. Step budget still advances.
            continue;
        }
        episodes += 1;
        episode_index += 1;
        let lambda = ls.lambda();

        // Discounted reward-only returns-to-go.
        let t_steps = traj.steps();
        let mut returns = vec![0.0; t_steps.len()];
        let mut ret = 0.0;
        for (t, st) in t_steps.iter().enumerate().rev() {
            ret = st.reward + cfg.gamma * ret;
            returns[t] = ret;
        }
        let c = evaluate_constraint(&traj, &cfg.constraint);
        online_reward_sum += returns.first().copied().unwrap_or(0.0);
        online_constraint_sum += c;

        if !cfg.eta2.is_frozen() {
            let advantages = t_steps
                .iter()
                .zip(&returns)
                .map(|(st, g)| {
                    let b = if cfg.mc_reward_baseline {
                        baseline.value(st.state)
                    } else {
                        0.0
                    };
                    g - b - lambda * c
                })
                .collect::<Vec<f64>>();
            let eta2 = schedule_value(&cfg.eta2, actor_updates);
            actor = policy_gradient_step(
                std::slice::from_ref(&traj),
                &actor,
                &advantages,
                eta2,
                &bounds,
            )?;
            actor_updates += 1;
        }

        if cfg.mc_reward_baseline && !cfg.eta3.is_frozen() {
            let eta3 = schedule_value(&cfg.eta3, baseline_updates);
            let mut dv = vec![0.0; baseline.n_states()];
            for (st, g) in t_steps.iter().zip(&returns) {
                dv[st.state] += 2.0 * (baseline.value(st.state) - g);
            }
            let v = baseline
                .values()
                .iter()
                .zip(&dv)
                .map(|(v, d)| v - eta3 * d)
                .collect::<Vec<f64>>();
            baseline = CriticTable::from_values(v)?;
            baseline_updates += 1;
        }

        let jc = window.push_and_mean(c);
        ls = lambda_update(&ls, jc, cfg.constraint.threshold);
        recorder.lambda_trace.push(ls.lambda());
        if episodes % cfg.eval_every_episodes == 0 {
            recorder.snapshot(cmdp, &actor, &cfg, steps, episodes, ls.lambda())?;
        }
    }

    if recorder.last_step() != Some(steps) {
        recorder.snapshot(cmdp, &actor, &cfg, steps, episodes, ls.lambda())?;
    }
    Ok(TrainRun {
        config: cfg.clone(),
        algorithm: Algorithm::LagrangeMc,
        actor,
        critic: baseline,
        lambda: ls.lambda(),
        lambda_trace: recorder.lambda_trace,
        metrics: recorder.metrics,
        steps,
        episodes,
        online_reward_mean: online_reward_sum / episodes as f64,
        online_constraint_mean: online_constraint_sum / episodes as f64,
    })
}
