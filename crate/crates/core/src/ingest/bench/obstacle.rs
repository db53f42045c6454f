//! Obstacle grid: navigate from the top-left to the bottom-right corner of an
//! N × N grid. A move goes the intended way w.p. 0.9 and each other way w.p.
//! 0.1/3, staying put at the border. Each move costs 1; leaving an obstacle
//! cell costs the configured delay on top. Obstacles are placed by a seeded
//! shuffle, never on the start or goal cell.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{explore, Act, Benchmark, BenchmarkSpec, MOVES};

pub(crate) fn obstacle_cells(n: usize, percent: u32, seed: u64) -> Vec<(i64, i64)> {
    let n = n as i64;
    let mut cells: Vec<(i64, i64)> = (0..n)
        .flat_map(|r| (0..n).map(move |c| (r, c)))
        .filter(|&p| p != (0, 0) && p != (n - 1, n - 1))
        .collect();
    let count = (n * n) as usize * percent as usize / 100;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    cells.shuffle(&mut rng);
    cells.truncate(count.min(cells.len()));
    cells.sort_unstable();
    cells
}

pub(super) fn generate(spec: &BenchmarkSpec) -> Benchmark {
    let n = spec.size as i64;
    let obstacles = obstacle_cells(spec.size, spec.obstacle_percent, spec.seed);
    let goal = (n - 1, n - 1);
    let (mdp, rewards) = explore((0i64, 0i64), |&(r, c)| {
        if (r, c) == goal {
            return (vec!["goal"], vec![Act::new("stay", 0, vec![((r, c), 1.0)])]);
        }
        let blocked = obstacles.binary_search(&(r, c)).is_ok();
        let cost = 1 + if blocked { spec.obstacle_delay } else { 0 };
        let go = |dr: i64, dc: i64| {
            let (r2, c2) = (r + dr, c + dc);
            if (0..n).contains(&r2) && (0..n).contains(&c2) {
                (r2, c2)
            } else {
                (r, c)
            }
        };
        let acts = MOVES
            .iter()
            .map(|&(name, dr, dc)| {
                let succ = MOVES
                    .iter()
                    .map(|&(_, er, ec)| {
                        let p = if (er, ec) == (dr, dc) { 0.9 } else { 0.1 / 3.0 };
                        (go(er, ec), p)
                    })
                    .collect();
                Act::new(name, cost, succ)
            })
            .collect();
        (if blocked { vec!["obstacle"] } else { vec![] }, acts)
    });
    Benchmark {
        mdp,
        rewards,
        formula: "F goal".into(),
        vmax: (4.0 * n as f64).max(100.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::bench::BenchName;

    #[test]
    fn placement_is_seeded() {
        let a = obstacle_cells(10, 10, 7);
        assert_eq!(a.len(), 10);
        assert_eq!(a, obstacle_cells(10, 10, 7));
        assert_ne!(a, obstacle_cells(10, 10, 8));
        assert!(!a.contains(&(0, 0)) && !a.contains(&(9, 9)));
    }

    #[test]
    fn two_by_two_has_no_obstacles() {
        let b = generate(&BenchmarkSpec::new(BenchName::Obstacle).with_size(2));
        assert_eq!(b.mdp.num_states(), 4);
        assert!(b.mdp.labels().states_with("obstacle").is_empty());
    }
}
