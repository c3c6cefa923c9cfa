//! Small hand-set CMDP fixtures shared by unit tests.

use crate::cmdp::TabularCmdp;

/// 2-state continuing CMDP, no penalties: action 0 stays, action 1 swaps.
pub(crate) fn two_state() -> TabularCmdp {
    let (n, a) = (2, 2);
    let mut p = vec![0.0; n * a * n];
    let mut r = vec![0.0; n * a * n];
    for s in 0..n {
        p[(s * a) * n + s] = 1.0;
        p[(s * a + 1) * n + (1 - s)] = 1.0;
        r[(s * a) * n + s] = 1.0;
        r[(s * a + 1) * n + (1 - s)] = 0.5;
    }
    TabularCmdp::new(
        n,
        a,
        p,
        r,
        vec![0.0; n * a],
        vec![0.6, 0.4],
        0.9,
        vec![false, false],
        vec![],
    )
    .unwrap()
}

/// [`two_state`] with a nonzero penalty channel.
pub(crate) fn two_state_with_penalty() -> TabularCmdp {
    let base = two_state();
    let mut p = Vec::new();
    let mut r = Vec::new();
    for (s, a) in base.state_action_pairs() {
        p.extend_from_slice(base.transition_row(s, a));
        r.extend_from_slice(base.reward_row(s, a));
    }
    TabularCmdp::new(
        2,
        2,
        p,
        r,
        vec![0.3, 0.1, 0.0, 0.7],
        vec![0.6, 0.4],
        0.9,
        vec![false, false],
        vec![],
    )
    .unwrap()
}

/// 3-state continuing chain: action 0 advances cyclically, action 1 stays.
/// Mixed rewards and penalties on both actions.
pub(crate) fn chain3() -> TabularCmdp {
    let (n, a) = (3, 2);
    let mut p = vec![0.0; n * a * n];
    let mut r = vec![0.0; n * a * n];
    for s in 0..n {
        let next = (s + 1) % n;
        p[(s * a) * n + next] = 1.0;
        p[(s * a + 1) * n + s] = 1.0;
        r[(s * a) * n + next] = 1.0 - s as f64 * 0.4;
        r[(s * a + 1) * n + s] = 0.1 * (s as f64 + 1.0);
    }
    TabularCmdp::new(
        n,
        a,
        p,
        r,
        vec![0.0, 0.2, 0.5, 0.0, 1.0, 0.3],
        vec![1.0, 0.0, 0.0],
        0.9,
        vec![false; n],
        vec![],
    )
    .unwrap()
}

/// Episodic 3-state chain 0 → 1 → 2 with reward 1 per move; state 2 terminal.
pub(crate) fn terminal_chain() -> TabularCmdp {
    let n = 3;
    let mut p = vec![0.0; n * n];
    let mut r = vec![0.0; n * n];
    p[1] = 1.0; // 0 → 1
    r[1] = 1.0;
    p[n + 2] = 1.0; // 1 → 2
    r[n + 2] = 1.0;
    p[2 * n + 2] = 1.0; // terminal self-loop
    TabularCmdp::new(
        n,
        1,
        p,
        r,
        vec![0.0; n],
        vec![1.0, 0.0, 0.0],
        0.9,
        vec![false, false, true],
        vec![],
    )
    .unwrap()
}
