//! Deep Sea Treasure on the classic 11 × 10 map. A submarine starts in the
//! top-left corner; a move goes the intended way w.p. 0.6 and to either
//! perpendicular side w.p. 0.2 each, staying put when blocked. Every move
//! costs 5. The episode stops on a treasure or after 15 moves, charging the
//! best treasure value minus the one collected.

use super::{explore, Act, Benchmark, MOVES};

/// `(row, column, value)`; the treasure of a column sits at its sea floor.
pub const TREASURES: [(i64, i64, u64); 10] = [
    (1, 0, 1),
    (2, 1, 2),
    (3, 2, 3),
    (4, 3, 5),
    (4, 4, 8),
    (4, 5, 16),
    (7, 6, 24),
    (7, 7, 50),
    (9, 8, 74),
    (10, 9, 124),
];
pub const HORIZON: u32 = 15;
pub const STEP_COST: u64 = 5;
const ROWS: i64 = 11;
const COLS: i64 = 10;
const BEST: u64 = 124;

fn depth(c: i64) -> i64 {
    TREASURES[c as usize].0
}

fn free(r: i64, c: i64) -> bool {
    (0..ROWS).contains(&r) && (0..COLS).contains(&c) && r <= depth(c)
}

fn treasure(r: i64, c: i64) -> Option<u64> {
    TREASURES.iter().find(|t| t.0 == r && t.1 == c).map(|t| t.2)
}

#[derive(Clone, PartialEq, Eq, Hash)]
enum K {
    At(i64, i64, u32),
    Done,
}

pub(super) fn generate() -> Benchmark {
    let (mdp, rewards) = explore(K::At(0, 0, 0), |k| match *k {
        K::Done => (vec!["done"], vec![Act::new("stop", 0, vec![(K::Done, 1.0)])]),
        K::At(r, c, t) => {
            if let Some(v) = treasure(r, c) {
                return (
                    vec!["treasure"],
                    vec![Act::new("collect", BEST - v, vec![(K::Done, 1.0)])],
                );
            }
            if t == HORIZON {
                return (vec![], vec![Act::new("stop", BEST, vec![(K::Done, 1.0)])]);
            }
            let go = |dr: i64, dc: i64| {
                if free(r + dr, c + dc) {
                    K::At(r + dr, c + dc, t + 1)
                } else {
                    K::At(r, c, t + 1)
                }
            };
            let acts = MOVES
                .iter()
                .map(|&(name, dr, dc)| {
                    // perpendicular directions swap the roles of the deltas
                    let succ = vec![(go(dr, dc), 0.6), (go(dc, dr), 0.2), (go(-dc, -dr), 0.2)];
                    Act::new(name, STEP_COST, succ)
                })
                .collect();
            (vec![], acts)
        }
    });
    Benchmark {
        mdp,
        rewards,
        formula: "F done".into(),
        vmax: 800.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map() {
        assert!(free(0, 9) && free(10, 9) && !free(2, 0) && !free(5, 4));
        assert_eq!(treasure(7, 7), Some(50));
        let b = generate();
        assert_eq!(b.mdp.labels().states_with("done").count(), 1);
        assert!(b.mdp.labels().states_with("treasure").count() >= 10);
    }
}
