use serde::{Deserialize, Serialize};

use crate::model::{ActionRewards, Choice, Mdp, StateId, TargetSet};
use crate::{Error, Result};

/// Evenly spaced risk budgets `b_1 = vmin < ... < b_n = vmax`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlackGrid {
    pub vmin: f64,
    pub vmax: f64,
    pub atoms: usize,
}

impl SlackGrid {
    pub fn new(vmin: f64, vmax: f64, atoms: usize) -> Result<Self> {
        if atoms < 2 || !(vmin < vmax) || !vmin.is_finite() || !vmax.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "budget grid needs n >= 2 and vmin < vmax, got n={atoms} on [{vmin}, {vmax}]"
            )));
        }
        Ok(SlackGrid { vmin, vmax, atoms })
    }

    pub fn stride(&self) -> f64 {
        (self.vmax - self.vmin) / (self.atoms - 1) as f64
    }

    pub fn atom(&self, j: usize) -> f64 {
        self.vmin + j as f64 * self.stride()
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.atoms).map(|j| self.atom(j)).collect()
    }

    /// Index of the atom at or below `max(vmin, b - r)`.
    pub fn round_index(&self, b: f64, r: f64) -> usize {
        let x = (b - r).max(self.vmin);
        let k = ((x - self.vmin) / self.stride() + 1e-9).floor();
        (k.max(0.0) as usize).min(self.atoms - 1)
    }
}

/// `b' = vmin + ς ⌊(max(vmin, b − r) − vmin) / ς⌋`.
pub fn round_budget(b: f64, r: f64, grid: &SlackGrid) -> f64 {
    grid.atom(grid.round_index(b, r))
}

/// The MDP over `S × B`. State `⟨s, b_j⟩` has index `s · n + j`.
#[derive(Clone, Debug)]
pub struct SlackProduct {
    pub mdp: Mdp,
    pub rewards: ActionRewards,
    pub grid: SlackGrid,
    /// Entry state `⟨s0, b_j⟩` for every budget index `j`.
    pub entries: Vec<StateId>,
}

impl SlackProduct {
    pub fn state(&self, s: StateId, j: usize) -> StateId {
        StateId::new(s.index() * self.grid.atoms + j)
    }

    /// Base state and budget index of a product state.
    pub fn split(&self, p: StateId) -> (StateId, usize) {
        let n = self.grid.atoms;
        (StateId::new(p.index() / n), p.index() % n)
    }

    pub fn budget(&self, p: StateId) -> f64 {
        self.grid.atom(self.split(p).1)
    }

    /// `⟨s, b⟩` is a target iff `s` is.
    pub fn lift(&self, target: &TargetSet) -> TargetSet {
        TargetSet::from_fn(self.mdp.num_states(), |p| target.contains(self.split(p).0))
    }
}

pub fn build_slack_product(mdp: &Mdp, rewards: &ActionRewards, grid: &SlackGrid) -> SlackProduct {
    let n = grid.atoms;
    let mut choices = Vec::with_capacity(mdp.num_states() * n);
    let mut rew = Vec::with_capacity(mdp.num_states() * n);
    let mut origin = Vec::with_capacity(mdp.num_states() * n);
    for s in mdp.states() {
        for j in 0..n {
            let b = grid.atom(j);
            let mut cs = Vec::with_capacity(mdp.choices(s).len());
            let mut rs = Vec::with_capacity(mdp.choices(s).len());
            for (a, c) in mdp.choices(s).iter().enumerate() {
                let r = rewards.get(s, a);
                let j2 = grid.round_index(b, r as f64);
                cs.push(Choice {
                    action: c.action,
                    transitions: c
                        .transitions
                        .iter()
                        .map(|&(t, p)| (StateId::new(t.index() * n + j2), p))
                        .collect(),
                });
                rs.push(r);
            }
            choices.push(cs);
            rew.push(rs);
            origin.push(s);
        }
    }
    let s0 = mdp.initial().index();
    let entries: Vec<StateId> = (0..n).map(|j| StateId::new(s0 * n + j)).collect();
    let labels = mdp.labels().pulled_back(origin);
    SlackProduct {
        mdp: Mdp::from_choices(entries[n - 1], choices, mdp.action_names().to_vec(), labels),
        rewards: ActionRewards(rew),
        grid: *grid,
        entries,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Labelling;

    #[test]
    fn rounding_examples() {
        let fine = SlackGrid::new(0.0, 10.0, 11).unwrap();
        assert_eq!(round_budget(5.0, 0.0, &fine), 5.0);
        assert_eq!(round_budget(5.0, 2.0, &fine), 3.0);
        assert_eq!(round_budget(1.0, 4.0, &fine), 0.0);
        let coarse = SlackGrid::new(0.0, 8.0, 3).unwrap();
        assert_eq!(round_budget(5.0, 2.0, &coarse), 0.0);
        assert_eq!(round_budget(8.0, 3.0, &coarse), 4.0);
        // floating stride: 0.1 steps must not round an exact atom down
        let g = SlackGrid::new(0.0, 1.0, 11).unwrap();
        for j in 0..11 {
            assert_eq!(g.round_index(g.atom(j), 0.0), j);
        }
    }

    #[test]
    fn product_preserves_rows() {
        let sid = StateId::new;
        let m = Mdp::new(
            sid(0),
            vec![
                vec![
                    Choice { action: 0, transitions: vec![(sid(0), 0.5), (sid(1), 0.5)] },
                    Choice { action: 1, transitions: vec![(sid(1), 1.0)] },
                ],
                vec![Choice { action: 0, transitions: vec![(sid(1), 1.0)] }],
            ],
            vec!["a".into(), "b".into()],
            Labelling::new(2),
        )
        .unwrap();
        let r = ActionRewards(vec![vec![1, 3], vec![0]]);
        let grid = SlackGrid::new(0.0, 4.0, 5).unwrap();
        let sp = build_slack_product(&m, &r, &grid);
        assert!(sp.mdp.validate().is_empty());
        assert_eq!(sp.mdp.num_states(), 10);
        assert_eq!(sp.entries.len(), 5);
        for p in sp.mdp.states() {
            let (s, j) = sp.split(p);
            assert_eq!(sp.state(s, j), p);
            for (a, c) in sp.mdp.choices(p).iter().enumerate() {
                let projected: Vec<(StateId, f64)> =
                    c.transitions.iter().map(|&(t, pr)| (sp.split(t).0, pr)).collect();
                assert_eq!(projected, m.choices(s)[a].transitions);
                for &(t, _) in &c.transitions {
                    let expect = round_budget(grid.atom(j), r.get(s, a) as f64, &grid);
                    assert_eq!(sp.budget(t), expect);
                }
            }
        }
    }
}
