use super::{allowed_actions, build_slack_product, dvi_core, require_almost_sure, DviOptions};
use super::{SlackGrid, SlackProduct};
use crate::dist::{cvar, Dist, ReprParams, RiskLevel};
use crate::model::{ActionRewards, Mdp, Policy, StateId, TargetSet};
use crate::Result;

#[derive(Clone, Debug)]
pub struct SensitiveResult {
    /// The slack product the policy lives on.
    pub product: SlackProduct,
    /// Target set lifted to the slack product.
    pub target: TargetSet,
    /// Memoryless on the slack product, so finite-memory on the original MDP.
    pub policy: Policy,
    /// Chosen initial budget index `j*` and its value `b̄*`.
    pub budget_index: usize,
    pub budget: f64,
    /// Entry state `⟨s0, b̄*⟩` of the slack product.
    pub entry: StateId,
    pub initial: Dist,
    /// `μ⟨s0, b_j⟩` for every budget index.
    pub per_budget: Vec<Dist>,
    /// CVaR of each entry distribution.
    pub cvars: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub fallback: bool,
    pub clamped: f64,
}

/// Minimises CVaR at level `alpha` through the dual form: on the slack
/// product each state picks the action minimising `E[(X - b)^+]` for its
/// budget `b`, then the initial budget with the smallest CVaR is selected.
pub fn risk_sensitive_dvi(
    mdp: &Mdp,
    rewards: &ActionRewards,
    target: &TargetSet,
    alpha: RiskLevel,
    grid: &SlackGrid,
    params: &ReprParams,
    opts: &DviOptions,
) -> Result<SensitiveResult> {
    let sp = build_slack_product(mdp, rewards, grid);
    let lifted = sp.lift(target);
    let (u, _) = allowed_actions(&sp.mdp, &lifted);
    require_almost_sure(&sp.mdp, &u, &sp.entries).map_err(|e| match e {
        // report offending states of the original model
        crate::Error::NotAlmostSureReachable(v) => {
            let mut base: Vec<usize> = v.iter().map(|&p| p / grid.atoms).collect();
            base.dedup();
            crate::Error::NotAlmostSureReachable(base)
        }
        e => e,
    })?;
    let core = dvi_core(&sp.mdp, &sp.rewards, &lifted, params, opts, |p, eta| {
        eta.expected_excess(sp.budget(p))
    })?;
    let per_budget: Vec<Dist> = sp
        .entries
        .iter()
        .map(|e| core.values[e.index()].clone())
        .collect();
    let cvars: Vec<f64> = per_budget.iter().map(|d| cvar(d, alpha)).collect();
    let best = cvars.iter().copied().fold(f64::INFINITY, f64::min);
    let j = cvars
        .iter()
        .position(|&c| c <= best + 1e-12 * best.abs().max(1.0))
        .unwrap_or(0);
    Ok(SensitiveResult {
        entry: sp.entries[j],
        budget_index: j,
        budget: grid.atom(j),
        initial: per_budget[j].clone(),
        per_budget,
        cvars,
        policy: core.policy,
        iterations: core.iterations,
        residual: core.residual,
        fallback: core.fallback,
        clamped: core.clamped,
        target: lifted,
        product: sp,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::Distribution;
    use crate::dvi::risk_neutral_dvi;
    use crate::model::{Choice, Labelling};
    use approx::assert_abs_diff_eq;

    fn sid(i: usize) -> StateId {
        StateId::new(i)
    }

    // 0 -safe-> 1 (cost 6), 0 -risky-> 1 (cost 0 w.p. 0.8 via 2, cost 20 w.p. 0.2 via 3)
    fn gamble() -> (Mdp, ActionRewards, TargetSet) {
        let m = Mdp::new(
            sid(0),
            vec![
                vec![
                    Choice { action: 0, transitions: vec![(sid(1), 1.0)] },
                    Choice { action: 1, transitions: vec![(sid(2), 0.8), (sid(3), 0.2)] },
                ],
                vec![Choice { action: 0, transitions: vec![(sid(1), 1.0)] }],
                vec![Choice { action: 0, transitions: vec![(sid(1), 1.0)] }],
                vec![Choice { action: 0, transitions: vec![(sid(1), 1.0)] }],
            ],
            vec!["safe".into(), "risky".into()],
            Labelling::new(4),
        )
        .unwrap();
        let r = ActionRewards(vec![vec![6, 0], vec![0], vec![0], vec![20]]);
        (m, r, TargetSet::from_states(4, [sid(1)]))
    }

    #[test]
    fn risk_averse_choice_differs_from_mean_optimal() {
        let (m, r, t) = gamble();
        let params = ReprParams::categorical(21, 0.0, 20.0).unwrap();
        let opts = DviOptions::default();
        let neutral = risk_neutral_dvi(&m, &r, &t, &params, &opts).unwrap();
        assert_eq!(neutral.policy.get(sid(0)), Some(1));
        assert_abs_diff_eq!(neutral.initial.mean(), 4.0, epsilon = 1e-9);

        let alpha = RiskLevel::new(0.9).unwrap();
        let grid = SlackGrid::new(0.0, 20.0, 21).unwrap();
        let res = risk_sensitive_dvi(&m, &r, &t, alpha, &grid, &params, &opts).unwrap();
        // CVaR_0.9 of risky is 20, of safe is 6
        assert_abs_diff_eq!(cvar(&res.initial, alpha), 6.0, epsilon = 1e-9);
        assert_eq!(res.policy.get(res.entry), Some(0));
        // budgets below 3 still prefer the gamble, so b = 3 is the first safe one
        assert_eq!(res.budget, 3.0);
        assert_eq!(res.per_budget.len(), 21);
        assert!(res.initial.atoms() == vec![(6.0, 1.0)]);
    }

    #[test]
    fn deterministic_costs_agree_with_neutral() {
        let (m, _, t) = gamble();
        let r = ActionRewards(vec![vec![3, 0], vec![0], vec![5], vec![5]]);
        let params = ReprParams::categorical(21, 0.0, 20.0).unwrap();
        let opts = DviOptions::default();
        let alpha = RiskLevel::new(0.7).unwrap();
        let grid = SlackGrid::new(0.0, 20.0, 21).unwrap();
        let res = risk_sensitive_dvi(&m, &r, &t, alpha, &grid, &params, &opts).unwrap();
        let neutral = risk_neutral_dvi(&m, &r, &t, &params, &opts).unwrap();
        assert_eq!(res.policy.get(res.entry), neutral.policy.get(sid(0)));
        assert_abs_diff_eq!(cvar(&res.initial, alpha), res.initial.mean(), epsilon = 1e-9);
        assert_abs_diff_eq!(res.initial.mean(), 3.0, epsilon = 1e-9);
    }
}
