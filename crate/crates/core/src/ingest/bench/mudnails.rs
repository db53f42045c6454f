//! The mud-and-nails grid. From `S` the robot visits `g1` and then `g2`,
//! either along the top through mud (cost 3 per cell) or along the bottom
//! over nails (cost 5 w.p. 0.2, else 1). Other free cells cost 1 and
//! obstacles 35. Moves are deterministic and costs are paid on leaving a
//! cell.

use super::{explore, Act, Benchmark, MOVES};

const MAP: [&str; 3] = [".MMMM..##", "S#####a.b", ".NNNNNN##"];

fn cell(r: i64, c: i64) -> Option<u8> {
    let row = MAP.get(usize::try_from(r).ok()?)?;
    row.as_bytes().get(usize::try_from(c).ok()?).copied()
}

#[derive(Clone, PartialEq, Eq, Hash)]
struct K {
    r: i64,
    c: i64,
    /// Stepped on a nail in this cell.
    hurt: bool,
}

pub(super) fn generate() -> Benchmark {
    let (mdp, rewards) = explore(K { r: 1, c: 0, hurt: false }, |k| {
        let here = cell(k.r, k.c).unwrap();
        let cost = match here {
            b'M' => 3,
            b'#' => 35,
            b'N' if k.hurt => 5,
            _ => 1,
        };
        let labels = match here {
            b'a' => vec!["g1"],
            b'b' => vec!["g2"],
            b'M' => vec!["mud"],
            b'N' => vec!["nails"],
            b'#' => vec!["obstacle"],
            _ => vec![],
        };
        let acts = MOVES
            .iter()
            .map(|&(name, dr, dc)| {
                let (r, c) = (k.r + dr, k.c + dc);
                let succ = match cell(r, c) {
                    None => vec![(k.clone(), 1.0)],
                    Some(b'N') => vec![
                        (K { r, c, hurt: false }, 0.8),
                        (K { r, c, hurt: true }, 0.2),
                    ],
                    Some(_) => vec![(K { r, c, hurt: false }, 1.0)],
                };
                Act::new(name, cost, succ)
            })
            .collect();
        (labels, acts)
    });
    Benchmark {
        mdp,
        rewards,
        formula: "F (g1 & F g2)".into(),
        vmax: 60.0,
    }
}
