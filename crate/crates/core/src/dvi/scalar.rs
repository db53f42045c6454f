use super::allowed_actions;
use crate::model::{ActionRewards, Mdp, TargetSet};
use crate::{Error, Result};

/// Classical value iteration for the minimal expected reward to reach
/// `target`, over policies that reach it almost surely.
///
/// Starts from zero, so it converges to the least fixpoint from below. States
/// that cannot reach the target almost surely get `∞`.
pub fn min_expected_reward(
    mdp: &Mdp,
    rewards: &ActionRewards,
    target: &TargetSet,
    tol: f64,
    max_iters: usize,
) -> Result<Vec<f64>> {
    let (u, allowed) = allowed_actions(mdp, target);
    let n = mdp.num_states();
    let mut v: Vec<f64> = (0..n)
        .map(|s| if u.contains(s.into()) { 0.0 } else { f64::INFINITY })
        .collect();
    for _ in 0..max_iters {
        let mut delta: f64 = 0.0;
        let mut next = v.clone();
        for s in mdp.states() {
            if target.contains(s) || !u.contains(s) {
                continue;
            }
            let best = allowed[s.index()]
                .iter()
                .map(|&a| {
                    let c = &mdp.choices(s)[a];
                    rewards.get(s, a) as f64
                        + c.transitions.iter().map(|&(t, p)| p * v[t.index()]).sum::<f64>()
                })
                .fold(f64::INFINITY, f64::min);
            delta = delta.max((best - v[s.index()]).abs());
            next[s.index()] = best;
        }
        v = next;
        if delta <= tol * v.iter().filter(|x| x.is_finite()).fold(1.0f64, |m, &x| m.max(x)) {
            return Ok(v);
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iters,
        residual: f64::NAN,
    })
}
