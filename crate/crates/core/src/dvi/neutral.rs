use super::{allowed_actions, dvi_core, require_almost_sure, DviOptions};
use crate::dist::{Dist, ReprParams};
use crate::model::{ActionRewards, Mdp, Policy, TargetSet};
use crate::Result;

#[derive(Clone, Debug)]
pub struct DviResult {
    /// Memoryless policy; action 0 on target states and on states that
    /// cannot reach the target almost surely.
    pub policy: Policy,
    /// Approximate distribution at the initial state.
    pub initial: Dist,
    /// Final table, one distribution per state.
    pub values: Vec<Dist>,
    pub iterations: usize,
    pub residual: f64,
    /// Set when the action choice never settled and the policy was frozen.
    pub fallback: bool,
    /// Mass clamped at `vmax`, summed over states in the final sweep.
    pub clamped: f64,
}

/// Minimises the expected accumulated reward to reach `target`.
pub fn risk_neutral_dvi(
    mdp: &Mdp,
    rewards: &ActionRewards,
    target: &TargetSet,
    params: &ReprParams,
    opts: &DviOptions,
) -> Result<DviResult> {
    let (u, _) = allowed_actions(mdp, target);
    require_almost_sure(mdp, &u, &[mdp.initial()])?;
    let core = dvi_core(mdp, rewards, target, params, opts, |_, eta| eta.mean())?;
    Ok(DviResult {
        policy: core.policy,
        initial: core.values[mdp.initial().index()].clone(),
        values: core.values,
        iterations: core.iterations,
        residual: core.residual,
        fallback: core.fallback,
        clamped: core.clamped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{project_categorical, Distribution};
    use crate::dvi::min_expected_reward;
    use crate::forward::forward_distribution;
    use crate::model::{induce_dtmc, Choice, Labelling, StateId};
    use crate::Error;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sid(i: usize) -> StateId {
        StateId::new(i)
    }

    fn random_mdp(rng: &mut ChaCha8Rng, n: usize) -> (Mdp, ActionRewards, TargetSet) {
        // state n-1 is the absorbing target; every action has some chance to
        // move towards it, so the target is reached almost surely
        let mut choices = Vec::new();
        let mut rewards = Vec::new();
        for s in 0..n {
            if s == n - 1 {
                choices.push(vec![Choice { action: 0, transitions: vec![(sid(s), 1.0)] }]);
                rewards.push(vec![0]);
                continue;
            }
            let mut cs = Vec::new();
            let mut rs = Vec::new();
            for a in 0..2 {
                let fwd = rng.gen_range(s + 1..n);
                let back = rng.gen_range(0..n);
                let p: f64 = rng.gen_range(0.2..0.9);
                let mut tr = vec![(sid(fwd), p), (sid(back), 1.0 - p)];
                if fwd == back {
                    tr = vec![(sid(fwd), 1.0)];
                }
                tr.sort_by_key(|e| e.0);
                cs.push(Choice { action: a, transitions: tr });
                rs.push(rng.gen_range(1..4));
            }
            choices.push(cs);
            rewards.push(rs);
        }
        let m = Mdp::new(sid(0), choices, vec!["a".into(), "b".into()], Labelling::new(n)).unwrap();
        (m, ActionRewards(rewards), TargetSet::from_states(n, [sid(n - 1)]))
    }

    #[test]
    fn matches_scalar_value_iteration() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..30 {
            let (m, r, t) = random_mdp(&mut rng, 6);
            let exact = min_expected_reward(&m, &r, &t, 1e-12, 1_000_000).unwrap();
            let params = ReprParams::categorical(201, 0.0, 200.0).unwrap();
            let opts = DviOptions { conv: 1e-4, ..Default::default() };
            let res = risk_neutral_dvi(&m, &r, &t, &params, &opts).unwrap();
            let e = res.initial.mean();
            let v = exact[0];
            assert!((e - v).abs() <= 0.01 * v, "dvi {e} vs scalar {v}");
        }
    }

    #[test]
    fn single_action_matches_projected_forward() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (m, r, t) = random_mdp(&mut rng, 5);
        // keep only the first action everywhere
        let choices = m.all_choices().iter().map(|c| vec![c[0].clone()]).collect();
        let single = Mdp::new(sid(0), choices, vec!["a".into()], Labelling::new(5)).unwrap();
        let r1 = ActionRewards(r.0.iter().map(|v| vec![v[0]]).collect());
        let params = ReprParams::categorical(101, 0.0, 100.0).unwrap();
        let opts = DviOptions { conv: 1e-6, ..Default::default() };
        let res = risk_neutral_dvi(&single, &r1, &t, &params, &opts).unwrap();
        let (d, sr) = induce_dtmc(&single, &res.policy, &r1).unwrap();
        let fwd = forward_distribution(&d, &sr, &t, 1e-10).unwrap();
        let (proj, _) = project_categorical(fwd.dist.atoms(), &params);
        assert_abs_diff_eq!(
            crate::dist::cramer_l2(
                match &res.initial {
                    Dist::Categorical(c) => c,
                    _ => unreachable!(),
                },
                &proj
            )
            .unwrap(),
            0.0,
            epsilon = 1e-3
        );
    }

    #[test]
    fn picks_cheaper_action_and_breaks_ties_low() {
        let mut l = Labelling::new(2);
        l.add(sid(1), "goal");
        let to_goal = |a| Choice { action: a, transitions: vec![(sid(1), 1.0)] };
        let m = Mdp::new(
            sid(0),
            vec![vec![to_goal(0), to_goal(1), to_goal(2)], vec![to_goal(0)]],
            vec!["x".into(), "y".into(), "z".into()],
            l,
        )
        .unwrap();
        let t = TargetSet::from_states(2, [sid(1)]);
        let params = ReprParams::categorical(11, 0.0, 10.0).unwrap();
        let r = ActionRewards(vec![vec![5, 2, 2], vec![0]]);
        let res = risk_neutral_dvi(&m, &r, &t, &params, &DviOptions::default()).unwrap();
        assert_eq!(res.policy.get(sid(0)), Some(1));
        assert_abs_diff_eq!(res.initial.mean(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_unreachable_target() {
        let sink = |a| Choice { action: a, transitions: vec![(sid(1), 1.0)] };
        let m = Mdp::new(
            sid(0),
            vec![vec![sink(0)], vec![sink(0)], vec![Choice { action: 0, transitions: vec![(sid(2), 1.0)] }]],
            vec!["a".into()],
            Labelling::new(3),
        )
        .unwrap();
        let t = TargetSet::from_states(3, [sid(2)]);
        let params = ReprParams::categorical(11, 0.0, 10.0).unwrap();
        let r = ActionRewards(vec![vec![1], vec![1], vec![0]]);
        match risk_neutral_dvi(&m, &r, &t, &params, &DviOptions::default()) {
            Err(Error::NotAlmostSureReachable(v)) => assert_eq!(v, vec![0, 1]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn quantile_representation() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (m, r, t) = random_mdp(&mut rng, 6);
        let exact = min_expected_reward(&m, &r, &t, 1e-12, 1_000_000).unwrap();
        let params = ReprParams::quantile(100, 0.0, 200.0).unwrap();
        let opts = DviOptions { conv: 1e-3, ..Default::default() };
        let res = risk_neutral_dvi(&m, &r, &t, &params, &opts).unwrap();
        assert!((res.initial.mean() - exact[0]).abs() <= 0.05 * exact[0]);
    }
}
