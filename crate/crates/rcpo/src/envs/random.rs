//! Seeded random CMDP generators: a continuing generator with Dirichlet-like
//! transition rows, and a layered episodic generator whose fixed horizon
//! makes exact mean-value constraint evaluation cheap.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::cmdp::TabularCmdp;
use crate::error::{Error, Result};

const MAX_TABLE: usize = 10_000;

/// Continuing random CMDP, fully determined by `seed`.
///
/// Transition rows are normalized exponentials (Dirichlet(1,…,1)), rewards
/// uniform in [0,1], penalties Bernoulli(`penalty_density`) unit values, the
/// discount drawn in [0.5, 0.99], and the initial distribution uniform.
pub fn random_cmdp(
    seed: u64,
    n_states: usize,
    n_actions: usize,
    penalty_density: f64,
) -> Result<TabularCmdp> {
    if n_states * n_actions > MAX_TABLE {
        return Err(Error::BoundExceeded(format!(
            "{n_states} states x {n_actions} actions exceeds the {MAX_TABLE} generation cap"
        )));
    }
    if !(0.0..=1.0).contains(&penalty_density) {
        return Err(Error::InvalidConfig(format!(
            "penalty density {penalty_density} outside [0,1]"
        )));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let discount = rng.random_range(0.5..0.99);
    let mut transition = Vec::with_capacity(n_states * n_actions * n_states);
    for _ in 0..n_states * n_actions {
        transition.extend(dirichlet_row(n_states, &mut rng));
    }
    let reward: Vec<f64> = (0..n_states * n_actions * n_states)
        .map(|_| rng.random::<f64>())
        .collect();
    let penalty: Vec<f64> = (0..n_states * n_actions)
        .map(|_| if rng.random::<f64>() < penalty_density { 1.0 } else { 0.0 })
        .collect();
    TabularCmdp::new(
        n_states,
        n_actions,
        transition,
        reward,
        penalty,
        vec![1.0 / n_states as f64; n_states],
        discount,
        vec![false; n_states],
        vec![],
    )
}

/// Episodic random CMDP: `n_layers` layers of `width` states feeding forward
/// into a single terminal state, so every episode lasts exactly `n_layers`
/// steps. Rewards are uniform in [0,1]; penalties uniform in [0,1] per
/// state-action pair, giving mean-value constraints a smooth landscape.
pub fn random_episodic_cmdp(
    seed: u64,
    n_layers: usize,
    width: usize,
    n_actions: usize,
) -> Result<TabularCmdp> {
    let n_states = n_layers * width + 1;
    if n_states * n_actions > MAX_TABLE {
        return Err(Error::BoundExceeded(format!(
            "{n_states} states x {n_actions} actions exceeds the {MAX_TABLE} generation cap"
        )));
    }
    if n_layers == 0 || width == 0 || n_actions == 0 {
        return Err(Error::InvalidConfig("layers, width, actions must be positive".into()));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let terminal_state = n_states - 1;
    let mut transition = vec![0.0; n_states * n_actions * n_states];
    let mut reward = vec![0.0; n_states * n_actions * n_states];
    let mut penalty = vec![0.0; n_states * n_actions];
    for layer in 0..n_layers {
        for pos in 0..width {
            let s = layer * width + pos;
            for a in 0..n_actions {
                let base = (s * n_actions + a) * n_states;
                if layer + 1 < n_layers {
                    let row = dirichlet_row(width, &mut rng);
                    for (q, &p) in row.iter().enumerate() {
                        let next = (layer + 1) * width + q;
                        transition[base + next] = p;
                        reward[base + next] = rng.random::<f64>();
                    }
                } else {
                    transition[base + terminal_state] = 1.0;
                    reward[base + terminal_state] = rng.random::<f64>();
                }
                penalty[s * n_actions + a] = rng.random::<f64>();
            }
        }
    }
    // Terminal self-loop with zero reward/penalty.
    for a in 0..n_actions {
        transition[(terminal_state * n_actions + a) * n_states + terminal_state] = 1.0;
    }
    let mut initial = vec![0.0; n_states];
    for p in initial.iter_mut().take(width) {
        *p = 1.0 / width as f64;
    }
    let mut terminal = vec![false; n_states];
    terminal[terminal_state] = true;
    TabularCmdp::new(
        n_states,
        n_actions,
        transition,
        reward,
        penalty,
        initial,
        0.99,
        terminal,
        vec![],
    )
}

fn dirichlet_row(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut row: Vec<f64> = (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            -(1.0 - u).ln() + 1e-12
        })
        .collect();
    let sum: f64 = row.iter().sum();
    for p in &mut row {
        *p /= sum;
    }
    // Normalization leaves the row within fp error of 1; pin it exactly.
    let err: f64 = row.iter().sum::<f64>() - 1.0;
    let imax = row
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();
    row[imax] -= err;
    row
}
