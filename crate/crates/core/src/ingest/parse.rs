//! Explicit-state model files.
//!
//! * `.tra`: header `STATES n`, then `src dst prob` (DTMC) or
//!   `src act dst prob` (MDP).
//! * `.lab`: `state: label1 label2 ...`. The state carrying `init` is the
//!   initial state (state 0 when no state does); `init` itself is not kept
//!   as a proposition.
//! * `.rew`: `src reward` (DTMC), `src act reward` or `src reward` (MDP; the
//!   latter applies to every action of `src`). Missing entries are zero.
//!
//! Lines starting with `#` and blank lines are ignored.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::model::{ActionRewards, Choice, Dtmc, Labelling, Mdp, StateId, StateRewards};
use crate::{Error, Result};

pub const INIT_LABEL: &str = "init";

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ModelFiles {
    pub transitions: PathBuf,
    pub labels: Option<PathBuf>,
    /// Named reward files.
    pub rewards: Vec<(String, PathBuf)>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ParseOptions {
    /// Rescale every row to sum to one before validation.
    pub renormalize: bool,
}

fn perr(file: &str, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        file: file.to_string(),
        line,
        msg: msg.into(),
    }
}

/// Non-comment lines with their 1-based line numbers, split on whitespace.
fn lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.trim();
        if l.is_empty() || l.starts_with('#') {
            None
        } else {
            Some((i + 1, l.split_whitespace().collect()))
        }
    })
}

fn num<T: std::str::FromStr>(file: &str, line: usize, tok: &str, what: &str) -> Result<T> {
    tok.parse()
        .map_err(|_| perr(file, line, format!("invalid {what} {tok:?}")))
}

fn state(file: &str, line: usize, tok: &str, n: usize) -> Result<StateId> {
    let s: usize = num(file, line, tok, "state")?;
    if s >= n {
        return Err(perr(file, line, format!("state {s} out of range (STATES {n})")));
    }
    Ok(StateId::new(s))
}

fn prob(file: &str, line: usize, tok: &str) -> Result<f64> {
    let p: f64 = num(file, line, tok, "probability")?;
    if !(p > 0.0 && p <= 1.0 + 1e-9) {
        return Err(perr(file, line, format!("probability {p} not in (0, 1]")));
    }
    Ok(p)
}

fn reward(file: &str, line: usize, tok: &str) -> Result<u64> {
    tok.parse().map_err(|_| {
        perr(
            file,
            line,
            format!("reward {tok:?} is not a nonnegative integer; scale rational rewards to integers"),
        )
    })
}

struct Header<'a> {
    n: usize,
    body: Vec<(usize, Vec<&'a str>)>,
}

fn header<'a>(file: &str, text: &'a str) -> Result<Header<'a>> {
    let mut it = lines(text);
    let (line, toks) = it.next().ok_or_else(|| perr(file, 1, "missing STATES header"))?;
    if toks.len() != 2 || toks[0] != "STATES" {
        return Err(perr(file, line, "expected header `STATES n`"));
    }
    let n: usize = num(file, line, toks[1], "state count")?;
    if n == 0 {
        return Err(perr(file, line, "model needs at least one state"));
    }
    Ok(Header { n, body: it.collect() })
}

/// Parses a labelling; returns it with the initial state.
pub fn parse_labels(file: &str, text: &str, n: usize) -> Result<(Labelling, StateId)> {
    let mut labels = Labelling::new(n);
    let mut initial = None;
    for (line, toks) in lines(text) {
        let head = toks[0];
        let Some(s) = head.strip_suffix(':') else {
            return Err(perr(file, line, "expected `state: label ...`"));
        };
        let s = state(file, line, s, n)?;
        for &l in &toks[1..] {
            if !l.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
                || !l.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
            {
                return Err(perr(file, line, format!("invalid label {l:?}")));
            }
            if l == INIT_LABEL {
                if initial.is_some_and(|i| i != s) {
                    return Err(perr(file, line, "more than one initial state"));
                }
                initial = Some(s);
            } else {
                labels.add(s, l);
            }
        }
    }
    Ok((labels, initial.unwrap_or_default()))
}

pub fn parse_dtmc_str(
    tra: &str,
    lab: Option<&str>,
    rewards: &[(&str, &str)],
    opts: ParseOptions,
) -> Result<(Dtmc, BTreeMap<String, StateRewards>)> {
    let h = header("transitions", tra)?;
    let mut rows: Vec<Vec<(StateId, f64)>> = vec![Vec::new(); h.n];
    for (line, toks) in &h.body {
        if toks.len() != 3 {
            return Err(perr("transitions", *line, "expected `src dst prob`"));
        }
        let s = state("transitions", *line, toks[0], h.n)?;
        let t = state("transitions", *line, toks[1], h.n)?;
        let p = prob("transitions", *line, toks[2])?;
        let row = &mut rows[s.index()];
        if row.iter().any(|e| e.0 == t) {
            return Err(perr("transitions", *line, format!("duplicate transition {s} -> {t}")));
        }
        row.push((t, p));
    }
    let (labels, initial) = match lab {
        Some(text) => parse_labels("labels", text, h.n)?,
        None => (Labelling::new(h.n), StateId::default()),
    };
    let mut d = Dtmc::from_rows(initial, rows, labels);
    if opts.renormalize {
        d.renormalize();
    }
    let v = d.validate();
    if !v.is_empty() {
        return Err(Error::Validation(v));
    }
    let mut out = BTreeMap::new();
    for &(name, text) in rewards {
        let mut r = vec![0u64; h.n];
        for (line, toks) in lines(text) {
            if toks.len() != 2 {
                return Err(perr(name, line, "expected `src reward`"));
            }
            let s = state(name, line, toks[0], h.n)?;
            r[s.index()] = reward(name, line, toks[1])?;
        }
        out.insert(name.to_string(), StateRewards(r));
    }
    Ok((d, out))
}

pub fn parse_mdp_str(
    tra: &str,
    lab: Option<&str>,
    rewards: &[(&str, &str)],
    opts: ParseOptions,
) -> Result<(Mdp, BTreeMap<String, ActionRewards>)> {
    let h = header("transitions", tra)?;
    let mut action_names: Vec<String> = Vec::new();
    let mut choices: Vec<Vec<Choice>> = vec![Vec::new(); h.n];
    for (line, toks) in &h.body {
        if toks.len() != 4 {
            return Err(perr("transitions", *line, "expected `src act dst prob`"));
        }
        let s = state("transitions", *line, toks[0], h.n)?;
        let t = state("transitions", *line, toks[2], h.n)?;
        let p = prob("transitions", *line, toks[3])?;
        let act = match action_names.iter().position(|a| a == toks[1]) {
            Some(i) => i as u32,
            None => {
                action_names.push(toks[1].to_string());
                (action_names.len() - 1) as u32
            }
        };
        let cs = &mut choices[s.index()];
        let c = match cs.iter().position(|c| c.action == act) {
            Some(i) => &mut cs[i],
            None => {
                cs.push(Choice {
                    action: act,
                    transitions: Vec::new(),
                });
                cs.last_mut().unwrap()
            }
        };
        if c.transitions.iter().any(|e| e.0 == t) {
            return Err(perr(
                "transitions",
                *line,
                format!("duplicate transition {s} {} -> {t}", toks[1]),
            ));
        }
        c.transitions.push((t, p));
    }
    let (labels, initial) = match lab {
        Some(text) => parse_labels("labels", text, h.n)?,
        None => (Labelling::new(h.n), StateId::default()),
    };
    let mut m = Mdp::from_choices(initial, choices, action_names, labels);
    if opts.renormalize {
        m.renormalize();
    }
    let v = m.validate();
    if !v.is_empty() {
        return Err(Error::Validation(v));
    }
    let mut out = BTreeMap::new();
    for &(name, text) in rewards {
        let mut r = ActionRewards::zero(&m);
        for (line, toks) in lines(text) {
            let s = state(name, line, toks[0], h.n)?;
            match toks.len() {
                2 => {
                    let v = reward(name, line, toks[1])?;
                    r.0[s.index()].iter_mut().for_each(|x| *x = v);
                }
                3 => {
                    let a = m.action_index(s, toks[1]).ok_or_else(|| {
                        perr(name, line, format!("state {s} has no action {:?}", toks[1]))
                    })?;
                    r.0[s.index()][a] = reward(name, line, toks[2])?;
                }
                _ => return Err(perr(name, line, "expected `src act reward` or `src reward`")),
            }
        }
        out.insert(name.to_string(), r);
    }
    Ok((m, out))
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

struct Texts {
    tra: String,
    lab: Option<String>,
    rew: Vec<(String, String)>,
}

fn read_all(files: &ModelFiles) -> Result<Texts> {
    Ok(Texts {
        tra: read(&files.transitions)?,
        lab: files.labels.as_deref().map(read).transpose()?,
        rew: files
            .rewards
            .iter()
            .map(|(n, p)| Ok((n.clone(), read(p)?)))
            .collect::<Result<_>>()?,
    })
}

/// Renames the generic file names in parse errors to the real paths.
fn with_paths(e: Error, files: &ModelFiles) -> Error {
    match e {
        Error::Parse { file, line, msg } => {
            let path = match file.as_str() {
                "transitions" => files.transitions.display().to_string(),
                "labels" => files
                    .labels
                    .as_ref()
                    .map_or(file.clone(), |p| p.display().to_string()),
                name => files
                    .rewards
                    .iter()
                    .find(|(n, _)| n == name)
                    .map_or(file.clone(), |(_, p)| p.display().to_string()),
            };
            Error::Parse { file: path, line, msg }
        }
        e => e,
    }
}

pub fn parse_dtmc(
    files: &ModelFiles,
    opts: ParseOptions,
) -> Result<(Dtmc, BTreeMap<String, StateRewards>)> {
    let t = read_all(files)?;
    let rew: Vec<(&str, &str)> = t.rew.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
    parse_dtmc_str(&t.tra, t.lab.as_deref(), &rew, opts).map_err(|e| with_paths(e, files))
}

pub fn parse_mdp(
    files: &ModelFiles,
    opts: ParseOptions,
) -> Result<(Mdp, BTreeMap<String, ActionRewards>)> {
    let t = read_all(files)?;
    let rew: Vec<(&str, &str)> = t.rew.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
    parse_mdp_str(&t.tra, t.lab.as_deref(), &rew, opts).map_err(|e| with_paths(e, files))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_dtmc() {
        let (d, r) = parse_dtmc_str(
            "STATES 2\n0 1 1.0\n1 1 1.0\n",
            Some("1: goal\n"),
            &[("steps", "0 1\n")],
            ParseOptions::default(),
        )
        .unwrap();
        assert_eq!(d.num_states(), 2);
        assert_eq!(d.labels().states_with("goal").iter().collect::<Vec<_>>(), vec![StateId::new(1)]);
        assert_eq!(r["steps"].0, vec![1, 0]);
    }

    #[test]
    fn init_label_selects_initial_state() {
        let (d, _) = parse_dtmc_str(
            "# comment\nSTATES 2\n0 0 1\n1 0 1\n",
            Some("1: init start\n"),
            &[],
            ParseOptions::default(),
        )
        .unwrap();
        assert_eq!(d.initial(), StateId::new(1));
        assert_eq!(d.labels().labels_of(StateId::new(1)).collect::<Vec<_>>(), vec!["start"]);
    }

    #[test]
    fn incomplete_mdp_row_is_a_validation_error() {
        let err = parse_mdp_str(
            "STATES 2\n0 a 1 0.5\n1 a 1 1.0\n",
            None,
            &[],
            ParseOptions::default(),
        )
        .unwrap_err();
        match err {
            Error::Validation(v) => assert!(v[0].to_string().starts_with("row-sum")),
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn renormalize_only_on_request() {
        let tra = "STATES 1\n0 0 0.9999\n";
        assert!(parse_dtmc_str(tra, None, &[], ParseOptions::default()).is_err());
        let opts = ParseOptions { renormalize: true };
        assert!(parse_dtmc_str(tra, None, &[], opts).is_ok());
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse_dtmc_str("STATES 2\n\n0 1 x\n", None, &[], ParseOptions::default()).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }), "{e:?}");
        let e = parse_dtmc_str("STATES 2\n0 5 1\n", None, &[], ParseOptions::default()).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
        let e = parse_dtmc_str("0 1 1\n", None, &[], ParseOptions::default()).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }));
        let e = parse_dtmc_str("STATES 1\n0 0 1\n", None, &[("r", "0 1.5\n")], ParseOptions::default())
            .unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, ref file, .. } if file == "r"));
    }

    #[test]
    fn mdp_rewards_per_action_and_per_state() {
        let (m, r) = parse_mdp_str(
            "STATES 2\n0 go 1 1\n0 stay 0 1\n1 stay 1 1\n",
            None,
            &[("c", "0 go 4\n1 2\n")],
            ParseOptions::default(),
        )
        .unwrap();
        assert_eq!(m.action_name(StateId::new(0), 1), "stay");
        assert_eq!(r["c"].0, vec![vec![4, 0], vec![2]]);
        let e = parse_mdp_str("STATES 1\n0 a 0 1\n", None, &[("c", "0 b 1\n")], ParseOptions::default());
        assert!(e.is_err());
    }
}
