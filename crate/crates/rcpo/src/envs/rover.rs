//! Rover grid-world: navigate from start to goal under slip dynamics while
//! avoiding terminal rocks.
//!
//! The reward channel carries only `r_step`/`r_goal`; crashing costs nothing
//! in reward and appears exclusively as the failure indicator in the penalty
//! channel, so the constraint is `P(failure) ≤ α`. Shorter routes pass
//! closer to rocks: each adjacent rock adds `δ/4` crash probability per
//! step, which makes path length trade off against risk.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::cmdp::TabularCmdp;
use crate::error::{Error, Result};
use crate::policy::PolicyTable;
use crate::trajectory::{ConstraintKind, ConstraintSpec};

use super::linear_decay_restart;

/// Frozen 12×12 layout shipped with the crate (tuned once; see the gate
/// test at the bottom of this module for the properties it guarantees).
pub const DEFAULT_MAP: &str = include_str!("../../data/rover_default.map");

pub const ACTION_UP: usize = 0;
pub const ACTION_DOWN: usize = 1;
pub const ACTION_LEFT: usize = 2;
pub const ACTION_RIGHT: usize = 3;
const N_ACTIONS: usize = 4;

/// Grid layout: rock cells plus start and goal positions, serializable as
/// an ASCII map (`S` start, `G` goal, `#` rock, `.` free).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoverMap {
    width: usize,
    height: usize,
    rocks: Vec<bool>,
    start: (usize, usize),
    goal: (usize, usize),
}

impl RoverMap {
    pub fn new(
        width: usize,
        height: usize,
        rock_cells: &[(usize, usize)],
        start: (usize, usize),
        goal: (usize, usize),
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidConfig("grid must be non-empty".into()));
        }
        let mut rocks = vec![false; width * height];
        for &(r, c) in rock_cells {
            if r >= height || c >= width {
                return Err(Error::InvalidConfig(format!(
                    "rock ({r},{c}) outside the {height}x{width} grid"
                )));
            }
            rocks[r * width + c] = true;
        }
        let map = Self {
            width,
            height,
            rocks,
            start,
            goal,
        };
        map.validate()?;
        Ok(map)
    }

    fn validate(&self) -> Result<()> {
        for (name, (r, c)) in [("start", self.start), ("goal", self.goal)] {
            if r >= self.height || c >= self.width {
                return Err(Error::InvalidConfig(format!("{name} cell outside grid")));
            }
            if self.rocks[r * self.width + c] {
                return Err(Error::InvalidConfig(format!("{name} placed on a rock")));
            }
        }
        if self.start == self.goal {
            return Err(Error::InvalidConfig("start equals goal".into()));
        }
        Ok(())
    }

    /// Parses the ASCII form. Requires rectangular rows and exactly one `S`
    /// and one `G`; round-trips exactly with [`RoverMap::serialize`].
    pub fn parse(text: &str) -> Result<Self> {
        let lines: Vec<&str> = text.lines().collect();
        if lines.is_empty() {
            return Err(Error::Parse("empty map".into()));
        }
        let width = lines[0].chars().count();
        let height = lines.len();
        let mut rocks = vec![false; width * height];
        let mut start = None;
        let mut goal = None;
        for (r, line) in lines.iter().enumerate() {
            if line.chars().count() != width {
                return Err(Error::Parse(format!(
                    "row {r} has {} cells, expected {width}",
                    line.chars().count()
                )));
            }
            for (c, ch) in line.chars().enumerate() {
                match ch {
                    '#' => rocks[r * width + c] = true,
                    'S' => {
                        if start.replace((r, c)).is_some() {
                            return Err(Error::Parse("multiple start cells".into()));
                        }
                    }
                    'G' => {
                        if goal.replace((r, c)).is_some() {
                            return Err(Error::Parse("multiple goal cells".into()));
                        }
                    }
                    '.' => {}
                    other => {
                        return Err(Error::Parse(format!("unexpected map character {other:?}")))
                    }
                }
            }
        }
        let start = start.ok_or_else(|| Error::Parse("no start cell".into()))?;
        let goal = goal.ok_or_else(|| Error::Parse("no goal cell".into()))?;
        let map = Self {
            width,
            height,
            rocks,
            start,
            goal,
        };
        map.validate()?;
        Ok(map)
    }

    pub fn serialize(&self) -> String {
        let mut out = String::with_capacity((self.width + 1) * self.height);
        for r in 0..self.height {
            for c in 0..self.width {
                out.push(if (r, c) == self.start {
                    'S'
                } else if (r, c) == self.goal {
                    'G'
                } else if self.rocks[r * self.width + c] {
                    '#'
                } else {
                    '.'
                });
            }
            out.push('\n');
        }
        out
    }

    /// The frozen default layout.
    pub fn bundled() -> Self {
        Self::parse(DEFAULT_MAP).expect("bundled map is valid")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn start(&self) -> (usize, usize) {
        self.start
    }

    pub fn goal(&self) -> (usize, usize) {
        self.goal
    }

    pub fn is_rock(&self, row: usize, col: usize) -> bool {
        self.rocks[row * self.width + col]
    }

    pub fn rock_cells(&self) -> Vec<(usize, usize)> {
        (0..self.height)
            .flat_map(|r| (0..self.width).map(move |c| (r, c)))
            .filter(|&(r, c)| self.is_rock(r, c))
            .collect()
    }

    pub fn state_index(&self, row: usize, col: usize) -> usize {
        row * self.width + col
    }

    /// Number of rock cells orthogonally adjacent to `(row, col)`.
    fn rock_neighbors(&self, row: usize, col: usize) -> usize {
        neighbors(row, col, self.height, self.width)
            .into_iter()
            .flatten()
            .filter(|&(r, c)| self.is_rock(r, c))
            .count()
    }

    /// True iff a rock-free orthogonal path connects start and goal.
    fn has_free_path(&self) -> bool {
        let mut seen = vec![false; self.width * self.height];
        let mut stack = vec![self.start];
        seen[self.state_index(self.start.0, self.start.1)] = true;
        while let Some((r, c)) = stack.pop() {
            if (r, c) == self.goal {
                return true;
            }
            for (nr, nc) in neighbors(r, c, self.height, self.width).into_iter().flatten() {
                let i = self.state_index(nr, nc);
                if !seen[i] && !self.rocks[i] {
                    seen[i] = true;
                    stack.push((nr, nc));
                }
            }
        }
        false
    }
}

/// In-bounds orthogonal neighbors in action order (up, down, left, right).
fn neighbors(r: usize, c: usize, height: usize, width: usize) -> [Option<(usize, usize)>; 4] {
    [
        (r > 0).then(|| (r - 1, c)),
        (r + 1 < height).then(|| (r + 1, c)),
        (c > 0).then(|| (r, c - 1)),
        (c + 1 < width).then(|| (r, c + 1)),
    ]
}

/// Destination of a move, staying in place at walls.
fn step_cell(r: usize, c: usize, action: usize, height: usize, width: usize) -> (usize, usize) {
    match action {
        ACTION_UP => (r.saturating_sub(1), c),
        ACTION_DOWN => ((r + 1).min(height - 1), c),
        ACTION_LEFT => (r, c.saturating_sub(1)),
        ACTION_RIGHT => (r, (c + 1).min(width - 1)),
        _ => unreachable!("rover has 4 actions"),
    }
}

/// Rock placement: a generator seed or an explicit cell set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RockLayout {
    Seed(u64),
    Cells(Vec<(usize, usize)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoverConfig {
    pub width: usize,
    pub height: usize,
    pub rock_layout: RockLayout,
    /// Slip probability δ: the chosen direction is replaced by a uniformly
    /// random one with probability δ, so it still executes w.p. 1−δ+δ/4.
    pub slip: f64,
    pub r_step: f64,
    pub r_goal: f64,
    pub discount: f64,
    pub start: (usize, usize),
    pub goal: (usize, usize),
}

impl Default for RoverConfig {
    /// The frozen bundled layout with slip 0.05, r_step −0.01, r_goal 0,
    /// γ 0.99.
    fn default() -> Self {
        Self::from_map(&RoverMap::bundled(), 0.05, -0.01, 0.0, 0.99)
    }
}

impl RoverConfig {
    pub fn from_map(map: &RoverMap, slip: f64, r_step: f64, r_goal: f64, discount: f64) -> Self {
        Self {
            width: map.width(),
            height: map.height(),
            rock_layout: RockLayout::Cells(map.rock_cells()),
            slip,
            r_step,
            r_goal,
            discount,
            start: map.start(),
            goal: map.goal(),
        }
    }

    /// Resolves the layout field into a concrete map.
    pub fn map(&self) -> Result<RoverMap> {
        match &self.rock_layout {
            RockLayout::Seed(seed) => generate_layout(*seed, self.width, self.height),
            RockLayout::Cells(cells) => {
                RoverMap::new(self.width, self.height, cells, self.start, self.goal)
            }
        }
    }

    pub fn constraint_spec(&self, alpha: f64) -> Result<ConstraintSpec> {
        ConstraintSpec::new(ConstraintKind::Probabilistic, alpha)
    }
}

/// A built rover instance: the CMDP plus the layout it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct RoverDomain {
    pub cmdp: TabularCmdp,
    pub map: RoverMap,
    pub start_state: usize,
    pub goal_state: usize,
}

/// The three bundled routes, ordered from most direct to most cautious.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferencePolicies {
    pub shortest: PolicyTable,
    pub intermediate: PolicyTable,
    pub safest: PolicyTable,
}

impl RoverDomain {
    /// Canonical evaluation start distribution: the start cell only, never
    /// the training restart mixture.
    pub fn start_dist(&self) -> Vec<f64> {
        self.cmdp.initial_dist().to_vec()
    }

    /// Deterministic routes trading path length against rock adjacency
    /// (risk weight 0 / 2 / 1000 per adjacent rock).
    pub fn reference_policies(&self) -> ReferencePolicies {
        ReferencePolicies {
            shortest: self.risk_weighted_policy(0.0),
            intermediate: self.risk_weighted_policy(2.0),
            safest: self.risk_weighted_policy(1000.0),
        }
    }

    /// Greedy policy on goal distances where occupying a cell costs
    /// `1 + weight · (#adjacent rocks)`. Weight 0 is the plain shortest
    /// path; large weights buy detours around any rock adjacency.
    pub fn risk_weighted_policy(&self, weight: f64) -> PolicyTable {
        let (h, w) = (self.map.height(), self.map.width());
        let n = h * w;
        let mut dist = vec![f64::INFINITY; n];
        let mut done = vec![false; n];
        dist[self.goal_state] = 0.0;
        // O(V²) Dijkstra from the goal over non-rock cells.
        loop {
            let mut best = None;
            for s in 0..n {
                if !done[s] && dist[s].is_finite() {
                    if best.is_none_or(|(_, d)| dist[s] < d) {
                        best = Some((s, dist[s]));
                    }
                }
            }
            let Some((s, d)) = best else { break };
            done[s] = true;
            let (r, c) = (s / w, s % w);
            for (nr, nc) in neighbors(r, c, h, w).into_iter().flatten() {
                if self.map.is_rock(nr, nc) || (nr, nc) == (self.map.goal()) {
                    continue;
                }
                let t = nr * w + nc;
                let cost = 1.0 + weight * self.map.rock_neighbors(nr, nc) as f64;
                if d + cost < dist[t] {
                    dist[t] = d + cost;
                }
            }
        }
        let mut actions = vec![0usize; n];
        for s in 0..n {
            if self.cmdp.is_terminal(s) {
                continue;
            }
            let (r, c) = (s / w, s % w);
            let mut best_action = 0;
            let mut best_dist = f64::INFINITY;
            for a in 0..N_ACTIONS {
                let (nr, nc) = step_cell(r, c, a, h, w);
                if (nr, nc) == (r, c) || self.map.is_rock(nr, nc) {
                    continue;
                }
                let t = nr * w + nc;
                if dist[t] < best_dist {
                    best_dist = dist[t];
                    best_action = a;
                }
            }
            actions[s] = best_action;
        }
        PolicyTable::deterministic(n, N_ACTIONS, &actions).expect("valid deterministic policy")
    }
}

/// Builds the grid CMDP: 4 actions, slip dynamics, walls keep position,
/// rocks and the goal terminal, rocks marked as failure states. Rewards are
/// `r_goal` on transitions entering the goal and `r_step` elsewhere; the
/// penalty table holds each action's rock-entry probability.
pub fn rover_build(cfg: &RoverConfig) -> Result<RoverDomain> {
    if !(0.0..1.0).contains(&cfg.slip) {
        return Err(Error::InvalidConfig(format!(
            "slip {} outside [0, 1)",
            cfg.slip
        )));
    }
    if !cfg.r_step.is_finite() || !cfg.r_goal.is_finite() {
        return Err(Error::InvalidConfig("non-finite step/goal reward".into()));
    }
    let map = cfg.map()?;
    if !map.has_free_path() {
        return Err(Error::InvalidConfig(
            "no rock-free path from start to goal".into(),
        ));
    }
    let (h, w) = (map.height(), map.width());
    let n = h * w;
    let goal_state = map.state_index(map.goal().0, map.goal().1);
    let start_state = map.state_index(map.start().0, map.start().1);
    let terminal: Vec<bool> = (0..n)
        .map(|s| s == goal_state || map.is_rock(s / w, s % w))
        .collect();
    let failure: Vec<bool> = (0..n).map(|s| map.is_rock(s / w, s % w)).collect();

    let mut transition = vec![0.0; n * N_ACTIONS * n];
    let mut reward = vec![0.0; n * N_ACTIONS * n];
    let mut penalty = vec![0.0; n * N_ACTIONS];
    for s in 0..n {
        let (r, c) = (s / w, s % w);
        for a in 0..N_ACTIONS {
            let row = &mut transition[(s * N_ACTIONS + a) * n..(s * N_ACTIONS + a + 1) * n];
            if terminal[s] {
                row[s] = 1.0;
                continue;
            }
            for d in 0..N_ACTIONS {
                let p = cfg.slip / 4.0 + if d == a { 1.0 - cfg.slip } else { 0.0 };
                let (nr, nc) = step_cell(r, c, d, h, w);
                row[nr * w + nc] += p;
            }
            for next in 0..n {
                if row[next] > 0.0 && failure[next] {
                    penalty[s * N_ACTIONS + a] += row[next];
                }
            }
            let rrow = &mut reward[(s * N_ACTIONS + a) * n..(s * N_ACTIONS + a + 1) * n];
            for (next, slot) in rrow.iter_mut().enumerate() {
                *slot = if next == goal_state {
                    cfg.r_goal
                } else {
                    cfg.r_step
                };
            }
        }
    }
    let mut initial_dist = vec![0.0; n];
    initial_dist[start_state] = 1.0;
    let cmdp = TabularCmdp::new(
        n,
        N_ACTIONS,
        transition,
        reward,
        penalty,
        initial_dist,
        cfg.discount,
        terminal,
        failure,
    )?;
    Ok(RoverDomain {
        cmdp,
        map,
        start_state,
        goal_state,
    })
}

/// Training restart distribution for the 1-based episode index: uniform
/// over non-terminal states with probability `1/iteration`, the start state
/// otherwise.
pub fn rover_restart_dist(iteration: u64, cmdp: &TabularCmdp) -> Vec<f64> {
    assert!(iteration >= 1, "iteration is 1-based");
    linear_decay_restart(cmdp, iteration)
}

/// Procedural layout: start and goal in the top corners, a guaranteed-clear
/// detour along the left/bottom/right edges (two cells wide so it carries
/// no rock adjacency), and rock density that rises toward the direct
/// top-edge corridor. Deterministic in the seed.
pub fn generate_layout(seed: u64, width: usize, height: usize) -> Result<RoverMap> {
    if width < 8 || height < 8 {
        return Err(Error::InvalidConfig(
            "generated layouts need at least an 8x8 grid".into(),
        ));
    }
    let start = (0usize, 0usize);
    let goal = (0usize, width - 1);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut cells = Vec::new();
    for r in 0..height.saturating_sub(2) {
        // Normalized distance from the direct corridor sets the density.
        let f = r as f64 / (height - 3) as f64;
        let density = density_profile(f);
        for c in 2..width - 2 {
            if rng.random::<f64>() < density {
                cells.push((r, c));
            }
        }
    }
    RoverMap::new(width, height, &cells, start, goal)
}

/// Piecewise-linear rock density over the normalized row position: dense
/// near the direct corridor at the top, empty near the detour at the
/// bottom.
fn density_profile(f: f64) -> f64 {
    const KNOTS: [(f64, f64); 5] = [
        (0.0, 0.30),
        (0.15, 0.45),
        (0.35, 0.28),
        (0.65, 0.12),
        (1.0, 0.0),
    ];
    for pair in KNOTS.windows(2) {
        let ((x0, y0), (x1, y1)) = (pair[0], pair[1]);
        if f <= x1 {
            return y0 + (y1 - y0) * (f - x0) / (x1 - x0);
        }
    }
    0.0
}
