use serde::Serialize;

use crate::dist::{Dist, Statistic};
use crate::forward::{forward_distribution_with, ForwardOptions, ForwardResult};
use crate::model::{induce_dtmc, ActionRewards, Mdp, Policy, TargetSet};
use crate::Result;

#[derive(Clone, Debug)]
pub struct PolicyEvaluation {
    pub forward: ForwardResult,
    pub values: Vec<StatValue>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StatValue {
    pub statistic: Statistic,
    /// Value on the forward distribution of the induced DTMC.
    pub exact: f64,
    /// Value on the approximate distribution, when one was supplied.
    pub approx: Option<f64>,
    /// `100 · |approx − exact| / |exact|`.
    pub deviation_pct: Option<f64>,
}

/// Fixes `policy`, runs the forward engine on the induced DTMC from the MDP's
/// initial state and evaluates each statistic on the result.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_policy(
    mdp: &Mdp,
    policy: &Policy,
    rewards: &ActionRewards,
    target: &TargetSet,
    eps: f64,
    stats: &[Statistic],
    approx: Option<&Dist>,
    opts: &ForwardOptions,
) -> Result<PolicyEvaluation> {
    let (dtmc, sr) = induce_dtmc(mdp, policy, rewards)?;
    let forward = forward_distribution_with(&dtmc, &sr, target, eps, opts)?;
    let values = stats
        .iter()
        .map(|st| {
            let exact = st.evaluate(&forward.dist);
            let approx = approx.map(|d| st.evaluate(d));
            StatValue {
                statistic: *st,
                exact,
                approx,
                deviation_pct: approx.map(|a| relative_pct(a, exact)),
            }
        })
        .collect();
    Ok(PolicyEvaluation { forward, values })
}

pub(crate) fn relative_pct(approx: f64, exact: f64) -> f64 {
    if approx == exact {
        0.0
    } else if exact == 0.0 {
        f64::INFINITY
    } else {
        100.0 * (approx - exact).abs() / exact.abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::RiskLevel;
    use crate::forward::forward_distribution;
    use crate::model::{Dtmc, Labelling, StateId, StateRewards};

    #[test]
    fn single_action_matches_direct_check() {
        let sid = StateId::new;
        let rows = vec![
            vec![(sid(0), 0.3), (sid(1), 0.7)],
            vec![(sid(2), 1.0)],
            vec![(sid(2), 1.0)],
        ];
        let d = Dtmc::new(sid(0), rows, Labelling::new(3)).unwrap();
        let m = Mdp::from_dtmc(&d);
        let t = TargetSet::from_states(3, [sid(2)]);
        let sr = StateRewards(vec![2, 1, 0]);
        let ar = ActionRewards(sr.0.iter().map(|&r| vec![r]).collect());
        let stats = [Statistic::Mean, Statistic::CVaR(RiskLevel::new(0.9).unwrap())];
        let approx = crate::dist::ReprParams::categorical(11, 0.0, 10.0)
            .unwrap()
            .dirac(3.0);
        let ev = evaluate_policy(
            &m,
            &Policy::first_action(3),
            &ar,
            &t,
            1e-9,
            &stats,
            Some(&approx),
            &ForwardOptions::default(),
        )
        .unwrap();
        let direct = forward_distribution(&d, &sr, &t, 1e-9).unwrap();
        assert_eq!(ev.forward.dist, direct.dist);
        assert_eq!(ev.values[0].exact, crate::dist::mean(&direct.dist));
        assert!(ev.values[0].deviation_pct.unwrap() < 100.0);
    }
}
