//! Forward generation of the reward-to-target distribution of a DTMC.
//!
//! The frontier maps `(state, accumulated reward)` to the probability of being
//! there after `k` steps without having reached the target. Mass entering the
//! target is absorbed at its accumulated reward; mass entering a non-target
//! BSCC is booked at ∞. The loop stops once the live frontier mass is at most
//! `eps`. The remaining frontier mass is reported in the output at its current
//! accumulated reward, so the result sums to one and every entry exceeds the
//! exact probability of that value by at most `eps`.

use std::collections::BTreeMap;

use rustc_hash::FxHashMap;

use crate::dist::SparseDist;
use crate::model::{infinite_reward_states, Dtmc, StateId, StateRewards, TargetSet};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ForwardOptions {
    /// Iteration cap before [`Error::NonConvergence`].
    pub max_iters: usize,
    /// Frontier cells below this probability are dropped.
    pub prune: f64,
}

impl Default for ForwardOptions {
    fn default() -> Self {
        ForwardOptions {
            max_iters: 10_000_000,
            prune: 1e-15,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ForwardResult {
    pub dist: SparseDist,
    /// Live frontier mass at termination; at most `eps`.
    pub residual: f64,
    /// Total probability discarded by frontier pruning.
    pub pruned: f64,
    pub iterations: usize,
}

impl ForwardResult {
    /// Bound on `μ̂(i) − μ(i)` for every `i`, including pruned mass.
    pub fn certified_error(&self) -> f64 {
        self.residual + self.pruned
    }
}

pub fn forward_distribution(
    d: &Dtmc,
    r: &StateRewards,
    target: &TargetSet,
    eps: f64,
) -> Result<ForwardResult> {
    forward_distribution_with(d, r, target, eps, &ForwardOptions::default())
}

pub fn forward_distribution_with(
    d: &Dtmc,
    r: &StateRewards,
    target: &TargetSet,
    eps: f64,
    opts: &ForwardOptions,
) -> Result<ForwardResult> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    let s0 = d.initial();
    if target.contains(s0) {
        return Ok(ForwardResult {
            dist: SparseDist::dirac(0),
            residual: 0.0,
            pruned: 0.0,
            iterations: 0,
        });
    }
    let inf = infinite_reward_states(d, target);
    if inf.contains(s0) {
        return Ok(ForwardResult {
            dist: SparseDist::from_map(BTreeMap::new(), 1.0),
            residual: 0.0,
            pruned: 0.0,
            iterations: 0,
        });
    }

    let mut out: BTreeMap<u64, f64> = BTreeMap::new();
    let mut p_inf = 0.0;
    let mut pruned = 0.0;
    let mut frontier: FxHashMap<(StateId, u64), f64> = FxHashMap::default();
    frontier.insert((s0, 0), 1.0);
    let mut live = 1.0;
    let mut iterations = 0;
    while live > eps {
        if iterations >= opts.max_iters {
            return Err(Error::NonConvergence {
                iterations,
                residual: live,
            });
        }
        iterations += 1;
        let mut next: FxHashMap<(StateId, u64), f64> =
            FxHashMap::with_capacity_and_hasher(frontier.len(), Default::default());
        for (&(s, i), &p) in &frontier {
            let ri = i + r.get(s);
            for &(t, q) in d.row(s) {
                let m = p * q;
                if target.contains(t) {
                    *out.entry(ri).or_default() += m;
                } else if inf.contains(t) {
                    p_inf += m;
                } else {
                    *next.entry((t, ri)).or_default() += m;
                }
            }
        }
        next.retain(|_, p| {
            if *p < opts.prune {
                pruned += *p;
                false
            } else {
                true
            }
        });
        live = next.values().sum();
        frontier = next;
    }
    for (&(_, i), &p) in &frontier {
        *out.entry(i).or_default() += p;
    }
    Ok(ForwardResult {
        dist: SparseDist::from_map(out, p_inf),
        residual: live,
        pruned,
        iterations,
    })
}
