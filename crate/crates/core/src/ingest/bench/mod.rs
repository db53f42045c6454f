//! Generators for the case studies: Betting Game, Deep Sea Treasure,
//! Obstacle, Energy and the mud-and-nails grid.

mod betting;
mod deepsea;
mod energy;
mod mudnails;
mod obstacle;

use std::collections::VecDeque;
use std::hash::Hash;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::model::{ActionRewards, Choice, Labelling, Mdp, StateId};
use crate::{Error, Result};

pub use deepsea::TREASURES;

/// Name of the reward structure every generator produces.
pub const REWARD_NAME: &str = "cost";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BenchName {
    Betting,
    Deepsea,
    Obstacle,
    Energy,
    Mudnails,
}

impl BenchName {
    pub const ALL: [BenchName; 5] = [
        BenchName::Betting,
        BenchName::Deepsea,
        BenchName::Obstacle,
        BenchName::Energy,
        BenchName::Mudnails,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BenchName::Betting => "betting",
            BenchName::Deepsea => "deepsea",
            BenchName::Obstacle => "obstacle",
            BenchName::Energy => "energy",
            BenchName::Mudnails => "mudnails",
        }
    }
}

impl std::fmt::Display for BenchName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for BenchName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BenchName::ALL
            .into_iter()
            .find(|b| b.as_str() == s)
            .ok_or_else(|| Error::UnsupportedSpec(s.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSpec {
    pub name: BenchName,
    /// Grid side for obstacle and energy.
    pub size: usize,
    /// Obstacle placement seed.
    pub seed: u64,
    /// Extra steps charged for leaving an obstacle cell.
    pub obstacle_delay: u64,
    /// Fraction of obstacle cells, in percent of the grid.
    pub obstacle_percent: u32,
    pub initial_energy: u32,
    /// Steps charged for the transport to the charger on depletion.
    pub depletion_delay: u64,
}

impl BenchmarkSpec {
    pub fn new(name: BenchName) -> Self {
        BenchmarkSpec {
            name,
            size: 10,
            seed: 0,
            obstacle_delay: 10,
            obstacle_percent: 10,
            initial_energy: 20,
            depletion_delay: 10,
        }
    }

    pub fn with_size(mut self, n: usize) -> Self {
        self.size = n;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Clone, Debug)]
pub struct Benchmark {
    pub mdp: Mdp,
    pub rewards: ActionRewards,
    pub formula: String,
    /// A `vmax` large enough for the categorical grid.
    pub vmax: f64,
}

pub fn generate(spec: &BenchmarkSpec) -> Result<Benchmark> {
    if matches!(spec.name, BenchName::Obstacle | BenchName::Energy) && spec.size < 2 {
        return Err(Error::InvalidParameter(format!(
            "grid size must be at least 2, got {}",
            spec.size
        )));
    }
    let b = match spec.name {
        BenchName::Betting => betting::generate(),
        BenchName::Deepsea => deepsea::generate(),
        BenchName::Obstacle => obstacle::generate(spec),
        BenchName::Energy => energy::generate(spec),
        BenchName::Mudnails => mudnails::generate(),
    };
    debug_assert!(b.mdp.validate().is_empty());
    Ok(b)
}

/// Generates by name; unknown names give `UnsupportedSpec`.
pub fn generate_named(name: &str, size: Option<usize>, seed: u64) -> Result<Benchmark> {
    let mut spec = BenchmarkSpec::new(name.parse()?).with_seed(seed);
    if let Some(n) = size {
        spec.size = n;
    }
    generate(&spec)
}

/// One enabled action while exploring: name, reward, successor keys.
pub(crate) struct Act<K> {
    pub name: String,
    pub reward: u64,
    pub succ: Vec<(K, f64)>,
}

impl<K> Act<K> {
    pub fn new(name: impl Into<String>, reward: u64, succ: Vec<(K, f64)>) -> Self {
        Act {
            name: name.into(),
            reward,
            succ,
        }
    }
}

/// Breadth-first exploration from `init`. `expand` returns the labels and the
/// actions of a state. Successors with equal keys are merged and states are
/// numbered in discovery order, so the initial state is 0.
pub(crate) fn explore<K, F>(init: K, mut expand: F) -> (Mdp, ActionRewards)
where
    K: Clone + Eq + Hash,
    F: FnMut(&K) -> (Vec<&'static str>, Vec<Act<K>>),
{
    let mut index: FxHashMap<K, usize> = FxHashMap::default();
    let mut queue = VecDeque::new();
    index.insert(init.clone(), 0);
    queue.push_back(init);
    let mut choices: Vec<Vec<Choice>> = Vec::new();
    let mut rewards = Vec::new();
    let mut label_sets = Vec::new();
    let mut actions: Vec<String> = Vec::new();
    while let Some(k) = queue.pop_front() {
        let (labels, acts) = expand(&k);
        let mut cs = Vec::with_capacity(acts.len());
        let mut rs = Vec::with_capacity(acts.len());
        for a in acts {
            let id = match actions.iter().position(|x| *x == a.name) {
                Some(i) => i,
                None => {
                    actions.push(a.name);
                    actions.len() - 1
                }
            };
            let mut row: Vec<(StateId, f64)> = Vec::with_capacity(a.succ.len());
            for (t, p) in a.succ {
                if p <= 0.0 {
                    continue;
                }
                let next = index.len();
                let ti = *index.entry(t.clone()).or_insert_with(|| {
                    queue.push_back(t);
                    next
                });
                match row.iter_mut().find(|e| e.0.index() == ti) {
                    Some(e) => e.1 += p,
                    None => row.push((StateId::new(ti), p)),
                }
            }
            cs.push(Choice {
                action: id as u32,
                transitions: row,
            });
            rs.push(a.reward);
        }
        choices.push(cs);
        rewards.push(rs);
        label_sets.push(labels);
    }
    let mut labelling = Labelling::new(choices.len());
    for (s, ls) in label_sets.iter().enumerate() {
        for l in ls {
            labelling.add(StateId::new(s), l);
        }
    }
    (
        Mdp::from_choices(StateId::new(0), choices, actions, labelling),
        ActionRewards(rewards),
    )
}

/// Grid moves as (name, row delta, column delta).
pub(crate) const MOVES: [(&str, i64, i64); 4] =
    [("up", -1, 0), ("down", 1, 0), ("left", 0, -1), ("right", 0, 1)];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::parse::{parse_mdp_str, ParseOptions};
    use crate::ingest::write::{action_rewards_file, labels_file, mdp_transitions};

    fn small(name: BenchName) -> Benchmark {
        generate(&BenchmarkSpec::new(name).with_size(4).with_seed(3)).unwrap()
    }

    #[test]
    fn all_generators_validate_and_round_trip() {
        for name in BenchName::ALL {
            let b = small(name);
            assert!(b.mdp.validate().is_empty(), "{name}");
            crate::ltl::parse_cosafe(&b.formula).unwrap();
            let rew = action_rewards_file(&b.mdp, &b.rewards);
            let (m2, r2) = parse_mdp_str(
                &mdp_transitions(&b.mdp),
                Some(&labels_file(b.mdp.labels(), b.mdp.initial())),
                &[(REWARD_NAME, &rew)],
                ParseOptions::default(),
            )
            .unwrap();
            assert_eq!(m2, b.mdp, "{name}");
            assert_eq!(r2[REWARD_NAME], b.rewards, "{name}");
        }
    }

    #[test]
    fn unknown_name() {
        assert!(matches!(
            generate_named("uav", None, 0),
            Err(Error::UnsupportedSpec(_))
        ));
    }

    #[test]
    fn generation_is_deterministic() {
        for name in BenchName::ALL {
            let a = small(name);
            let b = small(name);
            assert_eq!(a.mdp, b.mdp);
            assert_eq!(a.rewards, b.rewards);
        }
    }
}
