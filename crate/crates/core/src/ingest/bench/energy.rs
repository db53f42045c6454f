//! Energy grid: a robot on an N × N grid must visit three waypoints. A move
//! goes the intended way w.p. 0.7 and each other way w.p. 0.1, costs 1 and
//! drains one unit of battery. The battery is refilled at the charging
//! station in the centre of the grid, which is also the start. Every corner
//! is within N moves of the station, so the default battery of 20 reaches
//! any single waypoint at N = 10. A robot that runs empty elsewhere is
//! transported to the station, which costs the depletion delay.

use super::{explore, Act, Benchmark, BenchmarkSpec, MOVES};

#[derive(Clone, PartialEq, Eq, Hash)]
struct K {
    r: i64,
    c: i64,
    energy: u32,
}

pub(super) fn generate(spec: &BenchmarkSpec) -> Benchmark {
    let n = spec.size as i64;
    let full = spec.initial_energy.max(1);
    let station = (n / 2, n / 2);
    let waypoints = [("w1", (n - 1, 0)), ("w2", (n - 1, n - 1)), ("w3", (0, n - 1))];
    let start = K { r: station.0, c: station.1, energy: full };
    let (mdp, rewards) = explore(start, |k| {
        let mut labels: Vec<&'static str> = waypoints
            .iter()
            .filter(|w| w.1 == (k.r, k.c))
            .map(|w| w.0)
            .collect();
        if (k.r, k.c) == station {
            labels.push("station");
        }
        if k.energy == 0 {
            let to = K { r: station.0, c: station.1, energy: full };
            labels.push("empty");
            return (labels, vec![Act::new("transport", spec.depletion_delay, vec![(to, 1.0)])]);
        }
        let go = |dr: i64, dc: i64| {
            let (mut r, mut c) = (k.r + dr, k.c + dc);
            if !(0..n).contains(&r) || !(0..n).contains(&c) {
                (r, c) = (k.r, k.c);
            }
            let energy = if (r, c) == station { full } else { k.energy - 1 };
            K { r, c, energy }
        };
        let acts = MOVES
            .iter()
            .map(|&(name, dr, dc)| {
                let succ = MOVES
                    .iter()
                    .map(|&(_, er, ec)| (go(er, ec), if (er, ec) == (dr, dc) { 0.7 } else { 0.1 }))
                    .collect();
                Act::new(name, 1, succ)
            })
            .collect();
        (labels, acts)
    });
    Benchmark {
        mdp,
        rewards,
        formula: "(F w1) & (F w2) & (F w3)".into(),
        vmax: (20.0 * n as f64).max(100.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::bench::BenchName;

    #[test]
    fn battery_bounds_state_space() {
        let spec = BenchmarkSpec::new(BenchName::Energy).with_size(3);
        let b = generate(&spec);
        assert!(b.mdp.num_states() <= 9 * 21);
        for w in ["w1", "w2", "w3"] {
            assert!(!b.mdp.labels().states_with(w).is_empty());
        }
        let empty = b.mdp.labels().states_with("empty");
        for s in empty.iter() {
            assert_eq!(b.mdp.choices(s).len(), 1);
            assert_eq!(b.rewards.get(s, 0), 10);
        }
    }
}
