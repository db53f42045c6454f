use std::collections::VecDeque;

use super::{Dtmc, Labelling, Mdp, Policy, StateId, StateRewards, TargetSet, ActionRewards};
use crate::{Error, Result};

const UNVISITED: usize = usize::MAX;

/// Strongly connected components of the graph with `n` nodes whose successors
/// are listed by `succ`. Iterative Tarjan; components come out in reverse
/// topological order (sinks first).
pub fn strongly_connected_components<F, I>(n: usize, succ: F) -> Vec<Vec<usize>>
where
    F: Fn(usize) -> I,
    I: IntoIterator<Item = usize>,
{
    let mut index = vec![UNVISITED; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut components = Vec::new();
    let mut next_index = 0usize;

    // Call stack of (node, its successors, position in that list).
    let mut calls: Vec<(usize, Vec<usize>, usize)> = Vec::new();

    for root in 0..n {
        if index[root] != UNVISITED {
            continue;
        }
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;
        calls.push((root, succ(root).into_iter().collect(), 0));

        while let Some((v, edges, pos)) = calls.last_mut() {
            let v = *v;
            if *pos < edges.len() {
                let w = edges[*pos];
                *pos += 1;
                if index[w] == UNVISITED {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    calls.push((w, succ(w).into_iter().collect(), 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            calls.pop();
            if let Some((parent, _, _)) = calls.last() {
                let parent = *parent;
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                let mut comp = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack underflow");
                    on_stack[w] = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                comp.sort_unstable();
                components.push(comp);
            }
        }
    }
    components
}

/// Bottom strongly connected components: SCCs without an edge leaving them.
pub fn bsccs(dtmc: &Dtmc) -> Vec<Vec<StateId>> {
    let n = dtmc.num_states();
    let sccs = strongly_connected_components(n, |s| {
        dtmc.row(StateId::new(s)).iter().map(|e| e.0.index())
    });
    let mut comp_of = vec![0usize; n];
    for (c, members) in sccs.iter().enumerate() {
        for &s in members {
            comp_of[s] = c;
        }
    }
    sccs.iter()
        .enumerate()
        .filter(|(c, members)| {
            members.iter().all(|&s| {
                dtmc.row(StateId::new(s))
                    .iter()
                    .all(|e| comp_of[e.0.index()] == *c)
            })
        })
        .map(|(_, members)| members.iter().map(|&s| StateId::new(s)).collect())
        .collect()
}

/// States in BSCCs that contain no target state; from these the accumulated
/// reward is infinite with probability one.
pub fn infinite_reward_states(dtmc: &Dtmc, target: &TargetSet) -> TargetSet {
    let mut out = TargetSet::empty(dtmc.num_states());
    for c in bsccs(dtmc) {
        if c.iter().all(|&s| !target.contains(s)) {
            for s in c {
                out.insert(s);
            }
        }
    }
    out
}

/// States reachable from the initial state.
pub fn reachable_states(dtmc: &Dtmc) -> TargetSet {
    let mut seen = TargetSet::empty(dtmc.num_states());
    let mut queue = VecDeque::from([dtmc.initial()]);
    seen.insert(dtmc.initial());
    while let Some(s) = queue.pop_front() {
        for &(t, _) in dtmc.row(s) {
            if !seen.contains(t) {
                seen.insert(t);
                queue.push_back(t);
            }
        }
    }
    seen
}

/// States from which some policy reaches `target` with probability one.
///
/// Nested fixpoint: shrink a candidate set `u` until every member can reach
/// the target using only actions that never leave `u`.
pub fn almost_sure_reach_exists(mdp: &Mdp, target: &TargetSet) -> TargetSet {
    let n = mdp.num_states();
    let mut preds: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for s in 0..n {
        for (a, c) in mdp.choices(StateId::new(s)).iter().enumerate() {
            for &(t, _) in &c.transitions {
                preds[t.index()].push((s, a));
            }
        }
    }

    let mut u = vec![true; n];
    loop {
        let mut r = vec![false; n];
        let mut queue = VecDeque::new();
        for s in target.iter() {
            r[s.index()] = true;
            queue.push_back(s.index());
        }
        while let Some(t) = queue.pop_front() {
            for &(s, a) in &preds[t] {
                if r[s] || !u[s] {
                    continue;
                }
                let stays = mdp.choices(StateId::new(s))[a]
                    .transitions
                    .iter()
                    .all(|e| u[e.0.index()]);
                if stays {
                    r[s] = true;
                    queue.push_back(s);
                }
            }
        }
        if r == u {
            break;
        }
        u = r;
    }
    TargetSet::from_fn(n, |s| u[s.index()])
}

/// DTMC obtained by fixing a memoryless policy; states, labels and indices are
/// kept. States not reachable under the policy and lacking a choice become
/// absorbing with reward zero.
pub fn induce_dtmc(
    mdp: &Mdp,
    policy: &Policy,
    rewards: &ActionRewards,
) -> Result<(Dtmc, StateRewards)> {
    let n = mdp.num_states();
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([mdp.initial().index()]);
    seen[mdp.initial().index()] = true;
    while let Some(s) = queue.pop_front() {
        let a = policy
            .as_slice()
            .get(s)
            .copied()
            .flatten()
            .filter(|&a| a < mdp.choices(StateId::new(s)).len())
            .ok_or(Error::UndefinedChoice(s))?;
        for &(t, _) in &mdp.choices(StateId::new(s))[a].transitions {
            if !seen[t.index()] {
                seen[t.index()] = true;
                queue.push_back(t.index());
            }
        }
    }

    let mut rows = Vec::with_capacity(n);
    let mut r = Vec::with_capacity(n);
    for s in 0..n {
        let sid = StateId::new(s);
        match policy.as_slice().get(s).copied().flatten() {
            Some(a) if a < mdp.choices(sid).len() => {
                rows.push(mdp.choices(sid)[a].transitions.clone());
                r.push(rewards.get(sid, a));
            }
            _ => {
                rows.push(vec![(sid, 1.0)]);
                r.push(0);
            }
        }
    }
    let labels: Labelling = mdp.labels().clone();
    Ok((
        Dtmc::from_rows(mdp.initial(), rows, labels),
        StateRewards(r),
    ))
}

#[cfg(test)]
// adjacency-matrix oracles read best with index loops
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use crate::model::Choice;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sid(i: usize) -> StateId {
        StateId::new(i)
    }

    fn chain(rows: Vec<Vec<(usize, f64)>>) -> Dtmc {
        let n = rows.len();
        Dtmc::from_rows(
            sid(0),
            rows.into_iter()
                .map(|r| r.into_iter().map(|(t, p)| (sid(t), p)).collect())
                .collect(),
            Labelling::new(n),
        )
    }

    fn random_chain(rng: &mut ChaCha8Rng, n: usize) -> Dtmc {
        let rows = (0..n)
            .map(|_| {
                let k = rng.gen_range(1..=3);
                let mut targets: Vec<usize> = (0..k).map(|_| rng.gen_range(0..n)).collect();
                targets.sort_unstable();
                targets.dedup();
                let p = 1.0 / targets.len() as f64;
                targets.into_iter().map(|t| (t, p)).collect()
            })
            .collect();
        chain(rows)
    }

    // Transitive closure by repeated relaxation; reach[s][t] iff t reachable from s.
    fn closure(d: &Dtmc) -> Vec<Vec<bool>> {
        let n = d.num_states();
        let mut reach = vec![vec![false; n]; n];
        for s in 0..n {
            reach[s][s] = true;
            for &(t, _) in d.row(sid(s)) {
                reach[s][t.index()] = true;
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if reach[i][k] && reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
        reach
    }

    fn oracle_bsccs(d: &Dtmc) -> Vec<Vec<StateId>> {
        let n = d.num_states();
        let reach = closure(d);
        let mut out: Vec<Vec<StateId>> = Vec::new();
        for s in 0..n {
            // s is in a BSCC iff everything reachable from s reaches back.
            if (0..n).all(|t| !reach[s][t] || reach[t][s]) {
                let comp: Vec<StateId> = (0..n).filter(|&t| reach[s][t]).map(sid).collect();
                if !out.contains(&comp) {
                    out.push(comp);
                }
            }
        }
        out.sort();
        out
    }

    #[test]
    fn absorbing_successor_is_the_bscc() {
        let d = chain(vec![vec![(1, 1.0)], vec![(1, 1.0)]]);
        assert_eq!(bsccs(&d), vec![vec![sid(1)]]);
    }

    #[test]
    fn two_cycle_is_one_bscc() {
        let d = chain(vec![vec![(1, 1.0)], vec![(0, 1.0)]]);
        assert_eq!(bsccs(&d), vec![vec![sid(0), sid(1)]]);
    }

    #[test]
    fn bsccs_match_closure_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let d = random_chain(&mut rng, 10);
            let mut got = bsccs(&d);
            got.sort();
            assert_eq!(got, oracle_bsccs(&d));
            // pairwise disjoint
            let mut all: Vec<StateId> = got.concat();
            let len = all.len();
            all.sort();
            all.dedup();
            assert_eq!(all.len(), len);
        }
    }

    #[test]
    fn long_chain_does_not_overflow() {
        let n = 200_000;
        let rows = (0..n)
            .map(|i| vec![((i + 1).min(n - 1), 1.0)])
            .collect();
        let d = chain(rows);
        assert_eq!(bsccs(&d), vec![vec![sid(n - 1)]]);
    }

    #[test]
    fn infinite_states_exclude_target_bsccs() {
        let d = chain(vec![vec![(1, 0.5), (2, 0.5)], vec![(1, 1.0)], vec![(2, 1.0)]]);
        let t = TargetSet::from_states(3, [sid(1)]);
        let inf = infinite_reward_states(&d, &t);
        assert_eq!(inf.iter().collect::<Vec<_>>(), vec![sid(2)]);
        let t_all = TargetSet::from_states(3, [sid(1), sid(2)]);
        assert!(infinite_reward_states(&d, &t_all).is_empty());
    }

    #[test]
    fn infinite_states_match_oracle_and_avoid_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let d = random_chain(&mut rng, 10);
            let t = TargetSet::from_fn(10, |_| rng.gen_bool(0.2));
            let got = infinite_reward_states(&d, &t);
            let mut expect = TargetSet::empty(10);
            for c in oracle_bsccs(&d) {
                if c.iter().all(|s| !t.contains(*s)) {
                    c.into_iter().for_each(|s| expect.insert(s));
                }
            }
            assert_eq!(got, expect);
            assert!(got.is_disjoint(&t));
        }
    }

    fn random_mdp(rng: &mut ChaCha8Rng, n: usize) -> Mdp {
        let choices = (0..n)
            .map(|_| {
                (0..2)
                    .map(|a| {
                        let k = rng.gen_range(1..=2);
                        let mut ts: Vec<usize> = (0..k).map(|_| rng.gen_range(0..n)).collect();
                        ts.sort_unstable();
                        ts.dedup();
                        let p = 1.0 / ts.len() as f64;
                        Choice {
                            action: a,
                            transitions: ts.into_iter().map(|t| (sid(t), p)).collect(),
                        }
                    })
                    .collect()
            })
            .collect();
        Mdp::from_choices(sid(0), choices, vec!["a".into(), "b".into()], Labelling::new(n))
    }

    // Reaching `target` with probability one under a fixed memoryless policy
    // holds iff every state reachable from `s` can still reach the target.
    fn policy_reaches_surely(m: &Mdp, pick: &[usize], target: &TargetSet, s: usize) -> bool {
        let n = m.num_states();
        let succ = |v: usize| -> Vec<usize> {
            if target.contains(sid(v)) {
                return vec![];
            }
            m.choices(sid(v))[pick[v]]
                .transitions
                .iter()
                .map(|e| e.0.index())
                .collect()
        };
        let mut reach = vec![vec![false; n]; n];
        for v in 0..n {
            reach[v][v] = true;
            for w in succ(v) {
                reach[v][w] = true;
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if reach[i][k] && reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
        (0..n).all(|v| !reach[s][v] || target.iter().any(|t| reach[v][t.index()]))
    }

    #[test]
    fn almost_sure_matches_policy_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..60 {
            let n = 8;
            let m = random_mdp(&mut rng, n);
            let t = TargetSet::from_fn(n, |_| rng.gen_bool(0.25));
            let got = almost_sure_reach_exists(&m, &t);
            let mut expect = TargetSet::empty(n);
            for bits in 0..(1usize << n) {
                let pick: Vec<usize> = (0..n).map(|i| (bits >> i) & 1).collect();
                for s in 0..n {
                    if policy_reaches_surely(&m, &pick, &t, s) {
                        expect.insert(sid(s));
                    }
                }
            }
            assert_eq!(got, expect);
        }
    }

    #[test]
    fn almost_sure_trivial_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = random_mdp(&mut rng, 6);
        assert_eq!(almost_sure_reach_exists(&m, &TargetSet::full(6)), TargetSet::full(6));

        // state 0 loops into the non-target sink 1 under both actions
        let sink = Choice { action: 0, transitions: vec![(sid(1), 1.0)] };
        let m = Mdp::from_choices(
            sid(0),
            vec![
                vec![sink.clone(), Choice { action: 1, transitions: vec![(sid(1), 1.0)] }],
                vec![sink],
                vec![Choice { action: 0, transitions: vec![(sid(2), 1.0)] }],
            ],
            vec!["a".into(), "b".into()],
            Labelling::new(3),
        );
        let got = almost_sure_reach_exists(&m, &TargetSet::from_states(3, [sid(2)]));
        assert_eq!(got.iter().collect::<Vec<_>>(), vec![sid(2)]);
    }

    #[test]
    fn induced_rows_come_from_chosen_actions() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = random_mdp(&mut rng, 6);
        let rewards = ActionRewards((0..6).map(|s| vec![s as u64, 10 + s as u64]).collect());
        let policy = Policy::first_action(6);
        let (d, r) = induce_dtmc(&m, &policy, &rewards).unwrap();
        for s in m.states() {
            assert_eq!(d.row(s), &m.choices(s)[0].transitions[..]);
            assert_eq!(r.get(s), s.index() as u64);
        }
        let mut p2 = Policy::undefined(6);
        for s in 0..6 {
            p2.set(sid(s), 1);
        }
        let (d2, r2) = induce_dtmc(&m, &p2, &rewards).unwrap();
        for s in m.states() {
            // every induced transition exists in the MDP with the same probability
            for e in d2.row(s) {
                assert!(m.choices(s)[1].transitions.contains(e));
            }
            assert_eq!(r2.get(s), 10 + s.index() as u64);
        }
    }

    #[test]
    fn induce_rejects_missing_reachable_choice() {
        let m = Mdp::from_choices(
            sid(0),
            vec![
                vec![Choice { action: 0, transitions: vec![(sid(1), 1.0)] }],
                vec![Choice { action: 0, transitions: vec![(sid(1), 1.0)] }],
            ],
            vec!["a".into()],
            Labelling::new(2),
        );
        let mut p = Policy::undefined(2);
        p.set(sid(0), 0);
        let err = induce_dtmc(&m, &p, &ActionRewards::zero(&m)).unwrap_err();
        assert!(matches!(err, Error::UndefinedChoice(1)));
    }
}
