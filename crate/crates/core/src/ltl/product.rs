//! Model ⊗ DFA products.
//!
//! The DFA is pre-advanced on the label of the initial model state and then
//! steps on the label of each successor, so a product state `(s, q)` records
//! the automaton state after reading the labels of the path up to and
//! including `s`. Only the part reachable from the initial product state is
//! built.

use std::collections::VecDeque;

use rustc_hash::FxHashMap;

use super::Dfa;
use crate::model::{
    ActionRewards, Choice, Dtmc, Labelling, Mdp, Row, StateId, StateRewards, TargetSet,
};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct ProductDtmc {
    pub dtmc: Dtmc,
    pub rewards: StateRewards,
    pub target: TargetSet,
    /// Model state and DFA state of each product state.
    pub origin: Vec<(StateId, u32)>,
}

#[derive(Clone, Debug)]
pub struct ProductMdp {
    pub mdp: Mdp,
    pub rewards: ActionRewards,
    pub target: TargetSet,
    pub origin: Vec<(StateId, u32)>,
}

/// DFA letter of every model state.
pub fn state_letters(labels: &Labelling, dfa: &Dfa) -> Result<Vec<u32>> {
    let mut ids = Vec::with_capacity(dfa.atoms().len());
    let mut missing = Vec::new();
    for a in dfa.atoms() {
        match labels.id_of(a) {
            Some(id) => ids.push(id),
            None => missing.push(a.clone()),
        }
    }
    if !missing.is_empty() {
        return Err(Error::AtomMismatch(missing));
    }
    Ok((0..labels.num_states())
        .map(|s| {
            let s = StateId::new(s);
            ids.iter()
                .enumerate()
                .filter(|(_, &id)| labels.has(s, id))
                .fold(0u32, |l, (i, _)| l | (1 << i))
        })
        .collect())
}

struct Built {
    origin: Vec<(StateId, u32)>,
    // per product state, per model action index: the product row
    rows: Vec<Vec<Row>>,
}

fn build<'a>(
    initial: StateId,
    letters: &[u32],
    dfa: &Dfa,
    rows_of: impl Fn(StateId) -> Vec<&'a [(StateId, f64)]>,
) -> Built {
    let mut index: FxHashMap<(StateId, u32), StateId> = FxHashMap::default();
    let mut origin = Vec::new();
    let mut rows: Vec<Vec<Row>> = Vec::new();
    let q0 = dfa.step(dfa.initial(), letters[initial.index()]);
    index.insert((initial, q0), StateId::new(0));
    origin.push((initial, q0));
    let mut queue = VecDeque::from([StateId::new(0)]);
    while let Some(p) = queue.pop_front() {
        let (s, q) = origin[p.index()];
        let mut out = Vec::new();
        for row in rows_of(s) {
            let mut prow: Row = Vec::with_capacity(row.len());
            for &(t, prob) in row {
                let qt = dfa.step(q, letters[t.index()]);
                let id = *index.entry((t, qt)).or_insert_with(|| {
                    let id = StateId::new(origin.len());
                    origin.push((t, qt));
                    queue.push_back(id);
                    id
                });
                prow.push((id, prob));
            }
            out.push(prow);
        }
        rows.push(out);
    }
    Built { origin, rows }
}

fn target_of(origin: &[(StateId, u32)], dfa: &Dfa) -> TargetSet {
    TargetSet::from_fn(origin.len(), |p| dfa.is_accepting(origin[p.index()].1))
}

pub fn product_dtmc(d: &Dtmc, r: &StateRewards, dfa: &Dfa) -> Result<ProductDtmc> {
    let letters = state_letters(d.labels(), dfa)?;
    let built = build(d.initial(), &letters, dfa, |s| vec![d.row(s)]);
    let rows = built.rows.into_iter().map(|mut v| v.pop().unwrap()).collect();
    let labels = d.labels().pulled_back(built.origin.iter().map(|o| o.0));
    Ok(ProductDtmc {
        dtmc: Dtmc::from_rows(StateId::new(0), rows, labels),
        rewards: StateRewards(built.origin.iter().map(|o| r.get(o.0)).collect()),
        target: target_of(&built.origin, dfa),
        origin: built.origin,
    })
}

pub fn product_mdp(m: &Mdp, r: &ActionRewards, dfa: &Dfa) -> Result<ProductMdp> {
    let letters = state_letters(m.labels(), dfa)?;
    let built = build(m.initial(), &letters, dfa, |s| {
        m.choices(s).iter().map(|c| c.transitions.as_slice()).collect()
    });
    let choices = built
        .rows
        .into_iter()
        .zip(&built.origin)
        .map(|(rows, &(s, _))| {
            rows.into_iter()
                .zip(m.choices(s))
                .map(|(transitions, c)| Choice {
                    action: c.action,
                    transitions,
                })
                .collect()
        })
        .collect();
    let rewards = ActionRewards(
        built
            .origin
            .iter()
            .map(|&(s, _)| (0..m.choices(s).len()).map(|a| r.get(s, a)).collect())
            .collect(),
    );
    let labels = m.labels().pulled_back(built.origin.iter().map(|o| o.0));
    Ok(ProductMdp {
        mdp: Mdp::from_choices(StateId::new(0), choices, m.action_names().to_vec(), labels),
        rewards,
        target: target_of(&built.origin, dfa),
        origin: built.origin,
    })
}
