//! Distributional value iteration on MDPs with an almost-sure reachability
//! objective.
//!
//! Both variants share one synchronous loop: every non-target state is backed
//! up from the previous table, the action is picked by a per-variant score of
//! the projected backup, and iteration stops when the largest per-state
//! distance between consecutive tables falls to the convergence threshold.
//!
//! End components with zero reward are not supported: the loop may then
//! stall, in which case the policy is frozen (see [`DviOptions::stall_window`]).

mod evaluate;
mod neutral;
mod scalar;
mod sensitive;
mod slack;

pub(crate) use evaluate::relative_pct;
pub use evaluate::{evaluate_policy, PolicyEvaluation, StatValue};
pub use neutral::{risk_neutral_dvi, DviResult};
pub use scalar::min_expected_reward;
pub use sensitive::{risk_sensitive_dvi, SensitiveResult};
pub use slack::{build_slack_product, round_budget, SlackGrid, SlackProduct};

use log::{debug, warn};

use crate::dist::{bellman_backup_into, Dist, ReprParams};
use crate::model::{almost_sure_reach_exists, ActionRewards, Mdp, Policy, StateId, TargetSet};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DviOptions {
    /// Convergence threshold on the supremum distance between tables.
    pub conv: f64,
    /// Hard cap on iterations across both phases.
    pub max_iters: usize,
    /// Iterations without a new smallest residual before the policy is frozen.
    pub stall_window: usize,
}

impl Default for DviOptions {
    fn default() -> Self {
        DviOptions {
            conv: 0.01,
            max_iters: 100_000,
            stall_window: 1_000,
        }
    }
}

/// Mass clamped at the top atom above which a warning is logged.
pub const CLAMP_WARNING: f64 = 1e-6;

const TIE_TOLERANCE: f64 = 1e-12;

pub(crate) struct CoreResult {
    pub values: Vec<Dist>,
    pub policy: Policy,
    pub iterations: usize,
    pub residual: f64,
    pub fallback: bool,
    pub clamped: f64,
}

/// States from which the target is reachable almost surely, and for each of
/// them the actions that keep the play inside that set.
pub(crate) fn allowed_actions(mdp: &Mdp, target: &TargetSet) -> (TargetSet, Vec<Vec<usize>>) {
    let u = almost_sure_reach_exists(mdp, target);
    let allowed = mdp
        .states()
        .map(|s| {
            if !u.contains(s) {
                return Vec::new();
            }
            mdp.choices(s)
                .iter()
                .enumerate()
                .filter(|(_, c)| c.transitions.iter().all(|&(t, _)| u.contains(t)))
                .map(|(a, _)| a)
                .collect()
        })
        .collect();
    (u, allowed)
}

/// Fails unless every listed entry state can reach the target almost surely.
/// The error lists all states reachable from the entries that cannot.
pub(crate) fn require_almost_sure(mdp: &Mdp, u: &TargetSet, entries: &[StateId]) -> Result<()> {
    if entries.iter().all(|&s| u.contains(s)) {
        return Ok(());
    }
    let mut seen = vec![false; mdp.num_states()];
    let mut stack: Vec<StateId> = entries.to_vec();
    for s in entries {
        seen[s.index()] = true;
    }
    let mut bad = Vec::new();
    while let Some(s) = stack.pop() {
        if !u.contains(s) {
            bad.push(s.index());
        }
        for c in mdp.choices(s) {
            for &(t, _) in &c.transitions {
                if !seen[t.index()] {
                    seen[t.index()] = true;
                    stack.push(t);
                }
            }
        }
    }
    bad.sort_unstable();
    Err(Error::NotAlmostSureReachable(bad))
}

fn backup(
    out: &mut Dist,
    mdp: &Mdp,
    rewards: &ActionRewards,
    values: &[Dist],
    s: StateId,
    a: usize,
    params: &ReprParams,
) -> f64 {
    let c = &mdp.choices(s)[a];
    bellman_backup_into(
        out,
        rewards.get(s, a) as f64,
        c.transitions.iter().map(|&(t, p)| (p, &values[t.index()])),
        params,
    )
}

/// The shared synchronous loop. `score(s, η)` ranks candidate backups; the
/// smallest score wins and ties go to the smallest action index.
pub(crate) fn dvi_core(
    mdp: &Mdp,
    rewards: &ActionRewards,
    target: &TargetSet,
    params: &ReprParams,
    opts: &DviOptions,
    score: impl Fn(StateId, &Dist) -> f64,
) -> Result<CoreResult> {
    let params = params.checked()?;
    if !(opts.conv > 0.0) {
        return Err(Error::InvalidParameter("convergence threshold must be positive".into()));
    }
    let n = mdp.num_states();
    let (u, allowed) = allowed_actions(mdp, target);
    let active: Vec<StateId> = mdp
        .states()
        .filter(|&s| u.contains(s) && !target.contains(s))
        .collect();
    let zero = params.dirac_zero();
    let mut values: Vec<Dist> = vec![zero.clone(); n];
    // Only active cells are ever written, so both buffers keep δ0 elsewhere.
    let mut next = values.clone();
    let mut choice: Vec<usize> = vec![0; n];
    for &s in &active {
        choice[s.index()] = allowed[s.index()][0];
    }

    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    let mut best_residual = f64::INFINITY;
    let mut since_best = 0;
    let mut frozen = false;
    let mut clamped = 0.0;
    let (mut best, mut cand) = (zero.clone(), zero.clone());
    while residual > opts.conv {
        if iterations >= opts.max_iters {
            return Err(Error::NonConvergence {
                iterations,
                residual,
            });
        }
        iterations += 1;
        let mut e: f64 = 0.0;
        clamped = 0.0;
        for &s in &active {
            let i = s.index();
            let c = if frozen {
                backup(&mut best, mdp, rewards, &values, s, choice[i], &params)
            } else {
                let mut best_score = f64::INFINITY;
                let mut best_clamped = 0.0;
                for (k, &a) in allowed[i].iter().enumerate() {
                    let c = backup(&mut cand, mdp, rewards, &values, s, a, &params);
                    let sc = score(s, &cand);
                    let better = k == 0
                        || sc < best_score - TIE_TOLERANCE * best_score.abs().max(1.0);
                    if better {
                        best_score = sc;
                        best_clamped = c;
                        choice[i] = a;
                        std::mem::swap(&mut best, &mut cand);
                    }
                }
                best_clamped
            };
            clamped += c;
            e = e.max(best.distance(&values[i])?);
            // the displaced buffer becomes scratch for the next state
            std::mem::swap(&mut next[i], &mut best);
        }
        std::mem::swap(&mut values, &mut next);
        residual = e;
        if residual < best_residual {
            best_residual = residual;
            since_best = 0;
        } else {
            since_best += 1;
            if !frozen && since_best >= opts.stall_window {
                debug!("residual stalled at {residual:e}; freezing the policy");
                frozen = true;
                since_best = 0;
            }
        }
    }
    // summed over states in the final sweep
    if clamped > CLAMP_WARNING {
        warn!("mass clamped at vmax = {} (summed over states: {clamped:.3e}); consider a larger vmax", params.vmax);
    }
    Ok(CoreResult {
        values,
        policy: Policy::from_choices(choice.into_iter().map(Some).collect()),
        iterations,
        residual,
        fallback: frozen,
        clamped,
    })
}
