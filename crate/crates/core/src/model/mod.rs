//! Sparse explicit-state DTMCs and MDPs with integer reward structures.

mod graph;

pub use graph::{
    almost_sure_reach_exists, bsccs, induce_dtmc, infinite_reward_states, reachable_states,
    strongly_connected_components,
};

use std::collections::BTreeSet;
use std::fmt;

/// Row-sum tolerance applied on ingest and validation.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct StateId(u32);

impl StateId {
    pub fn new(index: usize) -> Self {
        debug_assert!(index <= u32::MAX as usize);
        StateId(index as u32)
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<usize> for StateId {
    fn from(i: usize) -> Self {
        StateId::new(i)
    }
}

/// Atomic-proposition labelling. Proposition names are interned; each state
/// stores a sorted list of proposition ids.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Labelling {
    names: Vec<String>,
    sets: Vec<Vec<u32>>,
}

impl Labelling {
    pub fn new(num_states: usize) -> Self {
        Labelling {
            names: Vec::new(),
            sets: vec![Vec::new(); num_states],
        }
    }

    pub fn num_states(&self) -> usize {
        self.sets.len()
    }

    pub fn intern(&mut self, name: &str) -> u32 {
        match self.names.iter().position(|n| n == name) {
            Some(i) => i as u32,
            None => {
                self.names.push(name.to_string());
                (self.names.len() - 1) as u32
            }
        }
    }

    pub fn add(&mut self, state: StateId, name: &str) {
        let id = self.intern(name);
        let set = &mut self.sets[state.index()];
        if let Err(pos) = set.binary_search(&id) {
            set.insert(pos, id);
        }
    }

    pub fn id_of(&self, name: &str) -> Option<u32> {
        self.names.iter().position(|n| n == name).map(|i| i as u32)
    }

    pub fn name(&self, id: u32) -> &str {
        &self.names[id as usize]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn ids(&self, state: StateId) -> &[u32] {
        &self.sets[state.index()]
    }

    pub fn has(&self, state: StateId, id: u32) -> bool {
        self.sets[state.index()].binary_search(&id).is_ok()
    }

    pub fn labels_of(&self, state: StateId) -> impl Iterator<Item = &str> + '_ {
        self.sets[state.index()].iter().map(move |&i| self.name(i))
    }

    /// States carrying `name`.
    pub fn states_with(&self, name: &str) -> TargetSet {
        let mut t = TargetSet::empty(self.num_states());
        if let Some(id) = self.id_of(name) {
            for (s, set) in self.sets.iter().enumerate() {
                if set.binary_search(&id).is_ok() {
                    t.insert(StateId::new(s));
                }
            }
        }
        t
    }

    /// Labelling over a new state space where state `i` copies the labels of `origin[i]`.
    pub fn pulled_back(&self, origin: impl IntoIterator<Item = StateId>) -> Labelling {
        Labelling {
            names: self.names.clone(),
            sets: origin
                .into_iter()
                .map(|s| self.sets[s.index()].clone())
                .collect(),
        }
    }

    /// Label sets compared by name, independent of interning order.
    pub fn same_labels(&self, other: &Labelling) -> bool {
        self.num_states() == other.num_states()
            && (0..self.num_states()).all(|s| {
                let s = StateId::new(s);
                let a: BTreeSet<&str> = self.labels_of(s).collect();
                let b: BTreeSet<&str> = other.labels_of(s).collect();
                a == b
            })
    }
}

/// Membership bitset over the states of a model.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TargetSet {
    bits: Vec<bool>,
}

impl TargetSet {
    pub fn empty(num_states: usize) -> Self {
        TargetSet {
            bits: vec![false; num_states],
        }
    }

    pub fn full(num_states: usize) -> Self {
        TargetSet {
            bits: vec![true; num_states],
        }
    }

    pub fn from_states(num_states: usize, states: impl IntoIterator<Item = StateId>) -> Self {
        let mut t = Self::empty(num_states);
        for s in states {
            t.insert(s);
        }
        t
    }

    pub fn from_fn(num_states: usize, mut f: impl FnMut(StateId) -> bool) -> Self {
        TargetSet {
            bits: (0..num_states).map(|i| f(StateId::new(i))).collect(),
        }
    }

    #[inline]
    pub fn contains(&self, s: StateId) -> bool {
        self.bits[s.index()]
    }

    pub fn insert(&mut self, s: StateId) {
        self.bits[s.index()] = true;
    }

    pub fn remove(&mut self, s: StateId) {
        self.bits[s.index()] = false;
    }

    /// Size of the universe, not the number of members.
    pub fn universe(&self) -> usize {
        self.bits.len()
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn iter(&self) -> impl Iterator<Item = StateId> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| StateId::new(i))
    }

    pub fn is_disjoint(&self, other: &TargetSet) -> bool {
        self.bits.iter().zip(&other.bits).all(|(a, b)| !(*a && *b))
    }
}

/// A single violated model invariant.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    InitialOutOfRange { initial: usize, num_states: usize },
    RowSum { state: usize, action: Option<String>, sum: f64 },
    NonPositiveProbability { state: usize, action: Option<String>, target: usize, prob: f64 },
    TargetOutOfRange { state: usize, action: Option<String>, target: usize },
    NoActions { state: usize },
    DuplicateAction { state: usize, action: String },
    LabelCount { expected: usize, found: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let act = |a: &Option<String>| match a {
            Some(a) => format!(" action {a}"),
            None => String::new(),
        };
        match self {
            Violation::InitialOutOfRange { initial, num_states } => {
                write!(f, "initial state {initial} not in [0, {num_states})")
            }
            Violation::RowSum { state, action, sum } => {
                write!(f, "row-sum: state {state}{} sums to {sum}", act(action))
            }
            Violation::NonPositiveProbability { state, action, target, prob } => write!(
                f,
                "probability: state {state}{} -> {target} has probability {prob}",
                act(action)
            ),
            Violation::TargetOutOfRange { state, action, target } => {
                write!(f, "range: state {state}{} -> {target} is out of range", act(action))
            }
            Violation::NoActions { state } => write!(f, "actions: state {state} has no actions"),
            Violation::DuplicateAction { state, action } => {
                write!(f, "actions: state {state} repeats action {action}")
            }
            Violation::LabelCount { expected, found } => {
                write!(f, "labels: expected {expected} states, found {found}")
            }
        }
    }
}

pub type Row = Vec<(StateId, f64)>;

fn check_row(
    state: usize,
    action: Option<&str>,
    row: &[(StateId, f64)],
    n: usize,
    out: &mut Vec<Violation>,
) {
    let mut sum = 0.0;
    for &(t, p) in row {
        if t.index() >= n {
            out.push(Violation::TargetOutOfRange {
                state,
                action: action.map(str::to_string),
                target: t.index(),
            });
        }
        if !(p > 0.0 && p <= 1.0 + ROW_SUM_TOLERANCE) {
            out.push(Violation::NonPositiveProbability {
                state,
                action: action.map(str::to_string),
                target: t.index(),
                prob: p,
            });
        }
        sum += p;
    }
    if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
        out.push(Violation::RowSum {
            state,
            action: action.map(str::to_string),
            sum,
        });
    }
}

/// Discrete-time Markov chain with a sparse row per state.
#[derive(Clone, Debug, PartialEq)]
pub struct Dtmc {
    initial: StateId,
    rows: Vec<Row>,
    labels: Labelling,
}

impl Dtmc {
    /// Builds a chain without checking invariants; see [`Dtmc::validate`].
    pub fn from_rows(initial: StateId, rows: Vec<Row>, labels: Labelling) -> Self {
        Dtmc {
            initial,
            rows,
            labels,
        }
    }

    /// Builds a chain and rejects it if any invariant fails.
    pub fn new(initial: StateId, rows: Vec<Row>, labels: Labelling) -> crate::Result<Self> {
        let d = Self::from_rows(initial, rows, labels);
        let v = d.validate();
        if v.is_empty() {
            Ok(d)
        } else {
            Err(crate::Error::Validation(v))
        }
    }

    pub fn num_states(&self) -> usize {
        self.rows.len()
    }

    pub fn num_transitions(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn row(&self, s: StateId) -> &[(StateId, f64)] {
        &self.rows[s.index()]
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn labels(&self) -> &Labelling {
        &self.labels
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> {
        (0..self.num_states()).map(StateId::new)
    }

    pub fn validate(&self) -> Vec<Violation> {
        let n = self.num_states();
        let mut out = Vec::new();
        if self.initial.index() >= n {
            out.push(Violation::InitialOutOfRange {
                initial: self.initial.index(),
                num_states: n,
            });
        }
        if self.labels.num_states() != n {
            out.push(Violation::LabelCount {
                expected: n,
                found: self.labels.num_states(),
            });
        }
        for (s, row) in self.rows.iter().enumerate() {
            check_row(s, None, row, n, &mut out);
        }
        out
    }

    /// Rescales every row to sum to one. Only applied on explicit request.
    pub fn renormalize(&mut self) {
        for row in &mut self.rows {
            normalize_row(row);
        }
    }
}

fn normalize_row(row: &mut Row) {
    let sum: f64 = row.iter().map(|e| e.1).sum();
    if sum > 0.0 {
        for e in row.iter_mut() {
            e.1 /= sum;
        }
    }
}

/// One nondeterministic choice of an MDP state.
#[derive(Clone, Debug, PartialEq)]
pub struct Choice {
    pub action: u32,
    pub transitions: Row,
}

/// Markov decision process. Actions are interned by name; within a state the
/// position of a choice is its canonical action index.
#[derive(Clone, Debug, PartialEq)]
pub struct Mdp {
    initial: StateId,
    choices: Vec<Vec<Choice>>,
    action_names: Vec<String>,
    labels: Labelling,
}

impl Mdp {
    pub fn from_choices(
        initial: StateId,
        choices: Vec<Vec<Choice>>,
        action_names: Vec<String>,
        labels: Labelling,
    ) -> Self {
        Mdp {
            initial,
            choices,
            action_names,
            labels,
        }
    }

    pub fn new(
        initial: StateId,
        choices: Vec<Vec<Choice>>,
        action_names: Vec<String>,
        labels: Labelling,
    ) -> crate::Result<Self> {
        let m = Self::from_choices(initial, choices, action_names, labels);
        let v = m.validate();
        if v.is_empty() {
            Ok(m)
        } else {
            Err(crate::Error::Validation(v))
        }
    }

    /// MDP with a single action named `step` per state, mirroring a chain.
    pub fn from_dtmc(d: &Dtmc) -> Self {
        Mdp {
            initial: d.initial,
            choices: d
                .rows
                .iter()
                .map(|r| {
                    vec![Choice {
                        action: 0,
                        transitions: r.clone(),
                    }]
                })
                .collect(),
            action_names: vec!["step".into()],
            labels: d.labels.clone(),
        }
    }

    pub fn num_states(&self) -> usize {
        self.choices.len()
    }

    pub fn num_choices(&self) -> usize {
        self.choices.iter().map(Vec::len).sum()
    }

    pub fn num_transitions(&self) -> usize {
        self.choices
            .iter()
            .flat_map(|c| c.iter().map(|c| c.transitions.len()))
            .sum()
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    /// Same model with a different initial state.
    pub fn with_initial(&self, initial: StateId) -> Mdp {
        let mut m = self.clone();
        m.initial = initial;
        m
    }

    pub fn choices(&self, s: StateId) -> &[Choice] {
        &self.choices[s.index()]
    }

    pub fn all_choices(&self) -> &[Vec<Choice>] {
        &self.choices
    }

    pub fn action_names(&self) -> &[String] {
        &self.action_names
    }

    pub fn action_name(&self, s: StateId, index: usize) -> &str {
        &self.action_names[self.choices[s.index()][index].action as usize]
    }

    /// Position of the action called `name` within state `s`.
    pub fn action_index(&self, s: StateId, name: &str) -> Option<usize> {
        self.choices[s.index()]
            .iter()
            .position(|c| self.action_names[c.action as usize] == name)
    }

    pub fn labels(&self) -> &Labelling {
        &self.labels
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> {
        (0..self.num_states()).map(StateId::new)
    }

    pub fn validate(&self) -> Vec<Violation> {
        let n = self.num_states();
        let mut out = Vec::new();
        if self.initial.index() >= n {
            out.push(Violation::InitialOutOfRange {
                initial: self.initial.index(),
                num_states: n,
            });
        }
        if self.labels.num_states() != n {
            out.push(Violation::LabelCount {
                expected: n,
                found: self.labels.num_states(),
            });
        }
        for (s, cs) in self.choices.iter().enumerate() {
            if cs.is_empty() {
                out.push(Violation::NoActions { state: s });
            }
            let mut seen = BTreeSet::new();
            for c in cs {
                let name = &self.action_names[c.action as usize];
                if !seen.insert(c.action) {
                    out.push(Violation::DuplicateAction {
                        state: s,
                        action: name.clone(),
                    });
                }
                check_row(s, Some(name), &c.transitions, n, &mut out);
            }
        }
        out
    }

    pub fn renormalize(&mut self) {
        for cs in &mut self.choices {
            for c in cs {
                normalize_row(&mut c.transitions);
            }
        }
    }
}

/// Nonnegative integer reward per DTMC state.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct StateRewards(pub Vec<u64>);

impl StateRewards {
    pub fn zero(n: usize) -> Self {
        StateRewards(vec![0; n])
    }

    #[inline]
    pub fn get(&self, s: StateId) -> u64 {
        self.0[s.index()]
    }
}

/// Nonnegative integer reward per MDP state and action index.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ActionRewards(pub Vec<Vec<u64>>);

impl ActionRewards {
    pub fn zero(mdp: &Mdp) -> Self {
        ActionRewards(
            mdp.all_choices()
                .iter()
                .map(|cs| vec![0; cs.len()])
                .collect(),
        )
    }

    #[inline]
    pub fn get(&self, s: StateId, action: usize) -> u64 {
        self.0[s.index()][action]
    }

    pub fn max(&self) -> u64 {
        self.0.iter().flatten().copied().max().unwrap_or(0)
    }
}

/// Memoryless policy: an action index per state, `None` where undefined.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Policy {
    choice: Vec<Option<usize>>,
}

impl Policy {
    pub fn undefined(num_states: usize) -> Self {
        Policy {
            choice: vec![None; num_states],
        }
    }

    pub fn from_choices(choice: Vec<Option<usize>>) -> Self {
        Policy { choice }
    }

    /// Picks action 0 everywhere.
    pub fn first_action(num_states: usize) -> Self {
        Policy {
            choice: vec![Some(0); num_states],
        }
    }

    pub fn get(&self, s: StateId) -> Option<usize> {
        self.choice[s.index()]
    }

    pub fn set(&mut self, s: StateId, a: usize) {
        self.choice[s.index()] = Some(a);
    }

    pub fn len(&self) -> usize {
        self.choice.len()
    }

    pub fn is_empty(&self) -> bool {
        self.choice.is_empty()
    }

    pub fn as_slice(&self) -> &[Option<usize>] {
        &self.choice
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(n: usize) -> Labelling {
        Labelling::new(n)
    }

    #[test]
    fn single_self_loop_is_valid() {
        let d = Dtmc::from_rows(StateId::new(0), vec![vec![(StateId::new(0), 1.0)]], labels(1));
        assert!(d.validate().is_empty());
    }

    #[test]
    fn short_row_is_one_violation() {
        let d = Dtmc::from_rows(
            StateId::new(0),
            vec![vec![(StateId::new(1), 0.9)], vec![(StateId::new(1), 1.0)]],
            labels(2),
        );
        let v = d.validate();
        assert_eq!(v.len(), 1);
        assert!(matches!(v[0], Violation::RowSum { state: 0, .. }));
        assert!(v[0].to_string().starts_with("row-sum"));
    }

    #[test]
    fn zero_probability_entries_are_rejected() {
        let d = Dtmc::from_rows(
            StateId::new(0),
            vec![vec![(StateId::new(0), 1.0), (StateId::new(0), 0.0)]],
            labels(1),
        );
        assert!(d
            .validate()
            .iter()
            .any(|v| matches!(v, Violation::NonPositiveProbability { .. })));
    }

    #[test]
    fn mdp_without_actions_is_rejected() {
        let m = Mdp::from_choices(StateId::new(0), vec![vec![]], vec![], labels(1));
        assert_eq!(m.validate(), vec![Violation::NoActions { state: 0 }]);
    }

    #[test]
    fn renormalize_fixes_rows() {
        let mut d = Dtmc::from_rows(
            StateId::new(0),
            vec![vec![(StateId::new(0), 0.45), (StateId::new(0), 0.45)]],
            labels(1),
        );
        assert_eq!(d.validate().len(), 1);
        d.renormalize();
        assert!(d.validate().is_empty());
    }

    #[test]
    fn labelling_lookup() {
        let mut l = labels(3);
        l.add(StateId::new(2), "goal");
        l.add(StateId::new(2), "goal");
        l.add(StateId::new(1), "mud");
        assert_eq!(l.ids(StateId::new(2)).len(), 1);
        assert_eq!(l.states_with("goal").iter().collect::<Vec<_>>(), vec![StateId::new(2)]);
        assert!(l.states_with("nothing").is_empty());
    }
}
