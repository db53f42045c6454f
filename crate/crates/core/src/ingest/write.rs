use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::parse::{ModelFiles, INIT_LABEL};
use crate::dist::Distribution;
use crate::model::{ActionRewards, Dtmc, Labelling, Mdp, StateId, StateRewards};
use crate::{Error, Result};

// `{}` on f64 prints the shortest string that parses back to the same bits.

pub fn dtmc_transitions(d: &Dtmc) -> String {
    let mut s = format!("STATES {}\n", d.num_states());
    for src in d.states() {
        for &(t, p) in d.row(src) {
            let _ = writeln!(s, "{src} {t} {p}");
        }
    }
    s
}

pub fn mdp_transitions(m: &Mdp) -> String {
    let mut s = format!("STATES {}\n", m.num_states());
    for src in m.states() {
        for c in m.choices(src) {
            let a = &m.action_names()[c.action as usize];
            for &(t, p) in &c.transitions {
                let _ = writeln!(s, "{src} {a} {t} {p}");
            }
        }
    }
    s
}

pub fn labels_file(labels: &Labelling, initial: StateId) -> String {
    let mut s = String::new();
    for st in (0..labels.num_states()).map(StateId::new) {
        let mut names: Vec<&str> = labels.labels_of(st).collect();
        if st == initial {
            names.insert(0, INIT_LABEL);
        }
        if !names.is_empty() {
            let _ = writeln!(s, "{st}: {}", names.join(" "));
        }
    }
    s
}

pub fn state_rewards_file(r: &StateRewards) -> String {
    let mut s = String::new();
    for (i, &v) in r.0.iter().enumerate() {
        if v != 0 {
            let _ = writeln!(s, "{i} {v}");
        }
    }
    s
}

pub fn action_rewards_file(m: &Mdp, r: &ActionRewards) -> String {
    let mut s = String::new();
    for st in m.states() {
        for (a, &v) in r.0[st.index()].iter().enumerate() {
            if v != 0 {
                let _ = writeln!(s, "{st} {} {v}", m.action_name(st, a));
            }
        }
    }
    s
}

fn files_for(stem: &Path, names: impl Iterator<Item = String>) -> ModelFiles {
    let with = |ext: &str| {
        let mut p = stem.as_os_str().to_owned();
        p.push(ext);
        PathBuf::from(p)
    };
    ModelFiles {
        transitions: with(".tra"),
        labels: Some(with(".lab")),
        rewards: names.map(|n| (n.clone(), with(&format!(".{n}.rew")))).collect(),
    }
}

/// Writes `stem.tra`, `stem.lab` and one `stem.NAME.rew` per reward structure.
pub fn write_dtmc(d: &Dtmc, rewards: &[(&str, &StateRewards)], stem: &Path) -> Result<ModelFiles> {
    let files = files_for(stem, rewards.iter().map(|(n, _)| n.to_string()));
    std::fs::write(&files.transitions, dtmc_transitions(d))?;
    std::fs::write(files.labels.as_ref().unwrap(), labels_file(d.labels(), d.initial()))?;
    for ((_, r), (_, path)) in rewards.iter().zip(&files.rewards) {
        std::fs::write(path, state_rewards_file(r))?;
    }
    Ok(files)
}

pub fn write_mdp(m: &Mdp, rewards: &[(&str, &ActionRewards)], stem: &Path) -> Result<ModelFiles> {
    let files = files_for(stem, rewards.iter().map(|(n, _)| n.to_string()));
    std::fs::write(&files.transitions, mdp_transitions(m))?;
    std::fs::write(files.labels.as_ref().unwrap(), labels_file(m.labels(), m.initial()))?;
    for ((_, r), (_, path)) in rewards.iter().zip(&files.rewards) {
        std::fs::write(path, action_rewards_file(m, r))?;
    }
    Ok(files)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DistFormat {
    Csv,
    Json,
}

impl DistFormat {
    /// `.json` selects JSON, anything else CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => DistFormat::Json,
            _ => DistFormat::Csv,
        }
    }
}

/// A distribution as read back from disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistTable {
    pub support: Vec<f64>,
    pub probs: Vec<f64>,
    pub p_inf: f64,
}

impl DistTable {
    pub fn of(d: &(impl Distribution + ?Sized)) -> Self {
        let (support, probs) = d.atoms().into_iter().unzip();
        DistTable {
            support,
            probs,
            p_inf: d.p_inf(),
        }
    }
}

impl Distribution for DistTable {
    fn atoms(&self) -> Vec<(f64, f64)> {
        self.support.iter().copied().zip(self.probs.iter().copied()).collect()
    }

    fn p_inf(&self) -> f64 {
        self.p_inf
    }
}

fn value_str(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:?}")
    }
}

pub fn distribution_csv(d: &(impl Distribution + ?Sized)) -> String {
    let mut s = String::from("value,probability\n");
    for (v, p) in d.atoms() {
        let _ = writeln!(s, "{},{p:?}", value_str(v));
    }
    if d.p_inf() > 0.0 {
        let _ = writeln!(s, "inf,{:?}", d.p_inf());
    }
    s
}

pub fn distribution_json(d: &(impl Distribution + ?Sized)) -> String {
    serde_json::to_string_pretty(&DistTable::of(d)).expect("finite floats serialize")
}

pub fn write_distribution(
    d: &(impl Distribution + ?Sized),
    path: &Path,
    format: DistFormat,
) -> Result<()> {
    let text = match format {
        DistFormat::Csv => distribution_csv(d),
        DistFormat::Json => distribution_json(d) + "\n",
    };
    std::fs::write(path, text)?;
    Ok(())
}

pub fn parse_distribution_csv(text: &str) -> Result<DistTable> {
    let bad = |line: usize, msg: &str| Error::Parse {
        file: "distribution".into(),
        line,
        msg: msg.into(),
    };
    let mut it = text.lines().enumerate();
    match it.next() {
        Some((_, h)) if h.trim() == "value,probability" => {}
        _ => return Err(bad(1, "expected header `value,probability`")),
    }
    let mut t = DistTable {
        support: Vec::new(),
        probs: Vec::new(),
        p_inf: 0.0,
    };
    for (i, line) in it {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (v, p) = line.split_once(',').ok_or_else(|| bad(i + 1, "expected `value,probability`"))?;
        let p: f64 = p.trim().parse().map_err(|_| bad(i + 1, "invalid probability"))?;
        if v.trim() == "inf" {
            t.p_inf += p;
        } else {
            t.support.push(v.trim().parse().map_err(|_| bad(i + 1, "invalid value"))?);
            t.probs.push(p);
        }
    }
    Ok(t)
}

pub fn read_distribution(path: &Path) -> Result<DistTable> {
    let text = std::fs::read_to_string(path)?;
    match DistFormat::from_path(path) {
        DistFormat::Csv => parse_distribution_csv(&text),
        DistFormat::Json => Ok(serde_json::from_str(&text)?),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::SparseDist;

    #[test]
    fn dirac_zero_csv() {
        assert_eq!(distribution_csv(&SparseDist::dirac(0)), "value,probability\n0,1.0\n");
    }

    #[test]
    fn infinite_mass_row() {
        let d = SparseDist::new(vec![(1, 0.5)], 0.5).unwrap();
        let csv = distribution_csv(&d);
        assert!(csv.ends_with("1,0.5\ninf,0.5\n"));
        let back = parse_distribution_csv(&csv).unwrap();
        assert_eq!(back, DistTable::of(&d));
        let json: DistTable = serde_json::from_str(&distribution_json(&d)).unwrap();
        assert_eq!(json.p_inf, 0.5);
        assert_eq!(json.support, vec![1.0]);
    }
}
