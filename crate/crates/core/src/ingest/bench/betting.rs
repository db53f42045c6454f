//! Betting Game. Starting with 5 units, the gambler places 9 bets of
//! `λ ≤ min(money, 5)`; a bet is won (+λ) w.p. 0.7, lost (−λ) w.p. 0.25 and
//! hits the jackpot (+10λ) w.p. 0.05. Money is capped at 100. The tenth
//! stage is the final one, where the cost `100 − money` is paid.

use super::{explore, Act, Benchmark};

pub const INITIAL_MONEY: u64 = 5;
pub const MAX_BET: u64 = 5;
pub const CAP: u64 = 100;
pub const BETS: u32 = 9;

#[derive(Clone, PartialEq, Eq, Hash)]
enum K {
    Stage(u32, u64),
    Done,
}

pub(super) fn generate() -> Benchmark {
    let (mdp, rewards) = explore(K::Stage(0, INITIAL_MONEY), |k| match *k {
        K::Done => (vec!["done"], vec![Act::new("stop", 0, vec![(K::Done, 1.0)])]),
        K::Stage(BETS, m) => (
            vec![],
            vec![Act::new("stop", CAP - m, vec![(K::Done, 1.0)])],
        ),
        K::Stage(k, m) => {
            let acts = (0..=m.min(MAX_BET))
                .map(|l| {
                    let next = |v: u64| K::Stage(k + 1, v.min(CAP));
                    Act::new(
                        format!("bet{l}"),
                        0,
                        vec![(next(m + l), 0.7), (next(m - l), 0.25), (next(m + 10 * l), 0.05)],
                    )
                })
                .collect();
            (vec![], acts)
        }
    });
    Benchmark {
        mdp,
        rewards,
        formula: "F done".into(),
        vmax: CAP as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape() {
        let b = generate();
        // reachable (stage, money) pairs plus the sink
        assert_eq!(b.mdp.num_states(), 791);
        let s0 = b.mdp.initial();
        assert_eq!(b.mdp.choices(s0).len(), 6);
        // bet0 collapses to a self-advance with probability 1
        assert_eq!(b.mdp.choices(s0)[0].transitions.len(), 1);
        assert_eq!(b.mdp.action_name(s0, 3), "bet3");
        assert!(b.mdp.labels().states_with("done").count() == 1);
        assert_eq!(b.rewards.max(), CAP);
    }
}
