//! Good-prefix DFAs for co-safe formulas, built by formula progression.
//!
//! A DFA state is a residual obligation in disjunctive normal form over the
//! formula's subformulas. Reading a letter progresses every literal; the
//! residual `true` (a clause with no literals) means the prefix read so far is
//! good. States from which every continuation reaches `true` are merged into a
//! single absorbing accepting state, and the result is minimised.

use std::collections::{BTreeSet, VecDeque};

use rustc_hash::FxHashMap;

use super::Formula;
use crate::{Error, Result};

/// Default limit on the number of automaton states.
pub const MAX_DFA_STATES: usize = 1_000_000;

type Clause = BTreeSet<u32>;
type Dnf = BTreeSet<Clause>;

/// Deterministic automaton over valuations of the formula's atoms.
///
/// Letter `l` assigns true to atom `atoms[i]` iff bit `i` of `l` is set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dfa {
    atoms: Vec<String>,
    initial: u32,
    delta: Vec<u32>,
    accepting: Vec<bool>,
}

impl Dfa {
    pub fn atoms(&self) -> &[String] {
        &self.atoms
    }

    pub fn num_letters(&self) -> usize {
        1 << self.atoms.len()
    }

    pub fn num_states(&self) -> usize {
        self.accepting.len()
    }

    pub fn initial(&self) -> u32 {
        self.initial
    }

    #[inline]
    pub fn step(&self, q: u32, letter: u32) -> u32 {
        self.delta[q as usize * self.num_letters() + letter as usize]
    }

    #[inline]
    pub fn is_accepting(&self, q: u32) -> bool {
        self.accepting[q as usize]
    }

    /// Letter for a set of true propositions; names not in the alphabet are
    /// ignored.
    pub fn letter<'a>(&self, true_props: impl IntoIterator<Item = &'a str>) -> u32 {
        let mut l = 0;
        for p in true_props {
            if let Some(i) = self.atoms.iter().position(|a| a == p) {
                l |= 1 << i;
            }
        }
        l
    }

    /// Runs the word from the initial state.
    pub fn run(&self, word: &[u32]) -> u32 {
        word.iter().fold(self.initial, |q, &l| self.step(q, l))
    }

    /// Whether the word is a good prefix.
    pub fn accepts(&self, word: &[u32]) -> bool {
        self.is_accepting(self.run(word))
    }
}

/// Interned subformulas, so DNF literals are small integers.
struct Table {
    nodes: Vec<Formula>,
    ids: FxHashMap<Formula, u32>,
    atoms: Vec<String>,
    memo: FxHashMap<(u32, u32), Dnf>,
}

impl Table {
    fn intern(&mut self, f: &Formula) -> u32 {
        if let Some(&id) = self.ids.get(f) {
            return id;
        }
        let id = self.nodes.len() as u32;
        self.nodes.push(f.clone());
        self.ids.insert(f.clone(), id);
        id
    }

    fn atom_bit(&self, a: &str) -> u32 {
        1 << self.atoms.iter().position(|x| x == a).expect("atom in alphabet")
    }

    /// DNF of `f` with temporal subformulas and atoms as literals.
    fn dnf(&mut self, f: &Formula) -> Dnf {
        match f {
            Formula::True => Dnf::from([Clause::new()]),
            Formula::False => Dnf::new(),
            Formula::And(a, b) => {
                let (a, b) = (self.dnf(a), self.dnf(b));
                conj(&a, &b)
            }
            Formula::Or(a, b) => {
                let (a, b) = (self.dnf(a), self.dnf(b));
                disj(a, b)
            }
            lit => Dnf::from([Clause::from([self.intern(lit)])]),
        }
    }

    /// Progression of a single literal through one letter.
    fn progress_lit(&mut self, id: u32, letter: u32) -> Dnf {
        if let Some(d) = self.memo.get(&(id, letter)) {
            return d.clone();
        }
        let f = self.nodes[id as usize].clone();
        let out = match &f {
            Formula::Atom(a) => truth(letter & self.atom_bit(a) != 0),
            Formula::NotAtom(a) => truth(letter & self.atom_bit(a) == 0),
            Formula::Next(a) => self.dnf(a),
            Formula::Until(a, b) => {
                let (da, db) = (self.dnf(a), self.dnf(b));
                let pb = self.progress(&db, letter);
                let pa = self.progress(&da, letter);
                let stay = conj(&pa, &Dnf::from([Clause::from([id])]));
                disj(pb, stay)
            }
            Formula::Eventually(a) => {
                let da = self.dnf(a);
                let pa = self.progress(&da, letter);
                disj(pa, Dnf::from([Clause::from([id])]))
            }
            _ => unreachable!("non-literal interned"),
        };
        self.memo.insert((id, letter), out.clone());
        out
    }

    fn progress(&mut self, state: &Dnf, letter: u32) -> Dnf {
        let mut out = Dnf::new();
        for clause in state {
            let mut acc = Dnf::from([Clause::new()]);
            for &lit in clause {
                let p = self.progress_lit(lit, letter);
                acc = conj(&acc, &p);
                if acc.is_empty() {
                    break;
                }
            }
            out = disj(out, acc);
        }
        self.simplify(out)
    }

    /// Drops clauses containing both `a` and `!a`.
    fn simplify(&self, d: Dnf) -> Dnf {
        d.into_iter()
            .filter(|c| {
                !c.iter().any(|&l| match &self.nodes[l as usize] {
                    Formula::Atom(a) => self
                        .ids
                        .get(&Formula::NotAtom(a.clone()))
                        .is_some_and(|neg| c.contains(neg)),
                    _ => false,
                })
            })
            .collect()
    }
}

fn truth(b: bool) -> Dnf {
    if b {
        Dnf::from([Clause::new()])
    } else {
        Dnf::new()
    }
}

fn conj(a: &Dnf, b: &Dnf) -> Dnf {
    let mut out = Dnf::new();
    for x in a {
        for y in b {
            out.insert(x.union(y).copied().collect());
        }
    }
    absorb(out)
}

fn disj(mut a: Dnf, b: Dnf) -> Dnf {
    a.extend(b);
    absorb(a)
}

/// Removes clauses that are supersets of another clause.
fn absorb(d: Dnf) -> Dnf {
    let clauses: Vec<Clause> = d.into_iter().collect();
    let mut out = Dnf::new();
    for (i, c) in clauses.iter().enumerate() {
        let subsumed = clauses
            .iter()
            .enumerate()
            .any(|(j, o)| j != i && o.len() <= c.len() && o != c && o.is_subset(c));
        if !subsumed {
            out.insert(c.clone());
        }
    }
    out
}

fn is_true(d: &Dnf) -> bool {
    d.len() == 1 && d.iter().next().unwrap().is_empty()
}

/// Builds the good-prefix DFA of `f` with the default state limit.
pub fn to_dfa(f: &Formula) -> Result<Dfa> {
    to_dfa_with_limit(f, MAX_DFA_STATES)
}

pub fn to_dfa_with_limit(f: &Formula, limit: usize) -> Result<Dfa> {
    let atoms: Vec<String> = f.atoms().into_iter().collect();
    if atoms.len() > 20 {
        return Err(Error::StateBlowup { limit });
    }
    let letters = 1u32 << atoms.len();
    let mut table = Table {
        nodes: Vec::new(),
        ids: FxHashMap::default(),
        atoms: atoms.clone(),
        memo: FxHashMap::default(),
    };
    let init = table.dnf(f);
    let mut index: FxHashMap<Dnf, u32> = FxHashMap::default();
    let mut states: Vec<Dnf> = vec![init.clone()];
    index.insert(init, 0);
    let mut delta: Vec<u32> = Vec::new();
    let mut queue = VecDeque::from([0u32]);
    while let Some(q) = queue.pop_front() {
        let state = states[q as usize].clone();
        let row_start = q as usize * letters as usize;
        if delta.len() < row_start + letters as usize {
            delta.resize(row_start + letters as usize, u32::MAX);
        }
        for l in 0..letters {
            let next = if is_true(&state) {
                state.clone()
            } else {
                table.progress(&state, l)
            };
            let id = match index.get(&next) {
                Some(&id) => id,
                None => {
                    if states.len() >= limit {
                        return Err(Error::StateBlowup { limit });
                    }
                    let id = states.len() as u32;
                    states.push(next.clone());
                    index.insert(next, id);
                    queue.push_back(id);
                    id
                }
            };
            delta[row_start + l as usize] = id;
        }
    }
    let n = states.len();
    delta.resize(n * letters as usize, u32::MAX);

    // Least fixpoint: accepting iff `true`, or every letter leads to an
    // accepting state.
    let mut accepting: Vec<bool> = states.iter().map(is_true).collect();
    loop {
        let mut changed = false;
        for q in 0..n {
            if !accepting[q]
                && (0..letters as usize).all(|l| accepting[delta[q * letters as usize + l] as usize])
            {
                accepting[q] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    Ok(minimize(atoms, 0, delta, accepting))
}

/// Moore partition refinement, then renumbering in BFS order from the
/// initial state so the result is canonical.
fn minimize(atoms: Vec<String>, initial: u32, delta: Vec<u32>, accepting: Vec<bool>) -> Dfa {
    let n = accepting.len();
    let k = 1usize << atoms.len();
    let mut block: Vec<u32> = accepting.iter().map(|&a| a as u32).collect();
    let mut num_blocks = 0;
    loop {
        let mut sig_ids: FxHashMap<Vec<u32>, u32> = FxHashMap::default();
        let mut next = vec![0u32; n];
        for q in 0..n {
            let mut sig = Vec::with_capacity(k + 1);
            sig.push(block[q]);
            sig.extend((0..k).map(|l| block[delta[q * k + l] as usize]));
            let len = sig_ids.len() as u32;
            next[q] = *sig_ids.entry(sig).or_insert(len);
        }
        let count = sig_ids.len();
        block = next;
        if count == num_blocks {
            break;
        }
        num_blocks = count;
    }

    let mut order: Vec<Option<u32>> = vec![None; num_blocks];
    let mut reps: Vec<usize> = Vec::new();
    let mut queue = VecDeque::from([initial as usize]);
    order[block[initial as usize] as usize] = Some(0);
    reps.push(initial as usize);
    while let Some(q) = queue.pop_front() {
        for l in 0..k {
            let t = delta[q * k + l] as usize;
            let b = block[t] as usize;
            if order[b].is_none() {
                order[b] = Some(reps.len() as u32);
                reps.push(t);
                queue.push_back(t);
            }
        }
    }
    let mut new_delta = Vec::with_capacity(reps.len() * k);
    for &q in &reps {
        for l in 0..k {
            new_delta.push(order[block[delta[q * k + l] as usize] as usize].unwrap());
        }
    }
    Dfa {
        atoms,
        initial: 0,
        delta: new_delta,
        accepting: reps.iter().map(|&q| accepting[q]).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltl::parse_cosafe;

    fn dfa(s: &str) -> Dfa {
        to_dfa(&parse_cosafe(s).unwrap()).unwrap()
    }

    #[test]
    fn eventually_has_two_states() {
        let d = dfa("F a");
        assert_eq!(d.num_states(), 2);
        let a = d.letter(["a"]);
        assert!(!d.is_accepting(d.initial()));
        assert!(d.is_accepting(d.step(d.initial(), a)));
        assert_eq!(d.step(d.initial(), 0), d.initial());
    }

    #[test]
    fn sequenced_reach_has_three_states() {
        let d = dfa("F (a & F b)");
        assert_eq!(d.num_states(), 3);
        let (a, b) = (d.letter(["a"]), d.letter(["b"]));
        assert!(d.accepts(&[a, 0, b]));
        assert!(d.accepts(&[d.letter(["a", "b"])]));
        assert!(!d.accepts(&[b, a]));
    }

    #[test]
    fn conjunction_tracks_subsets() {
        assert_eq!(dfa("(F a) & (F b)").num_states(), 4);
        assert_eq!(dfa("(F w1) & (F w2) & (F w3)").num_states(), 8);
    }

    #[test]
    fn accepting_states_absorb() {
        let d = dfa("a U (b & X c)");
        for q in 0..d.num_states() as u32 {
            if d.is_accepting(q) {
                for l in 0..d.num_letters() as u32 {
                    assert!(d.is_accepting(d.step(q, l)));
                }
            }
        }
    }

    #[test]
    fn tautologies_accept_immediately() {
        assert!(dfa("true").accepts(&[]));
        assert!(dfa("a | !a").accepts(&[]));
        // valid formulas are accepted on the empty word, even when no clause
        // is syntactically true yet
        let d = dfa("X (a | !a)");
        assert!(d.accepts(&[]));
        assert_eq!(d.num_states(), 1);
        assert_eq!(dfa("false").num_states(), 1);
        assert!(!dfa("false").accepts(&[0, 0]));
    }

    #[test]
    fn blowup_limit() {
        let f = parse_cosafe("(F a) & (F b) & (F c)").unwrap();
        assert!(matches!(
            to_dfa_with_limit(&f, 3),
            Err(Error::StateBlowup { limit: 3 })
        ));
    }
}
