//! End-to-end pipeline: load a model, build the automaton product, then run
//! the forward engine (DTMC) or value iteration plus policy evaluation (MDP).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use crate::dist::{Dist, Distribution, ReprKind, ReprParams, RiskLevel, Statistic};
use crate::dvi::{
    build_slack_product, evaluate_policy, risk_neutral_dvi, risk_sensitive_dvi, DviOptions,
    SlackGrid, StatValue,
};
use crate::error::ResultExt;
use crate::forward::{forward_distribution_with, ForwardOptions, ForwardResult};
use crate::ingest::{
    generate, parse_dtmc, parse_mdp, write_distribution, BenchmarkSpec, DistFormat, ModelFiles,
    ParseOptions, REWARD_NAME,
};
use crate::ltl::{product_dtmc, product_mdp, to_dfa};
use crate::model::{ActionRewards, Dtmc, Mdp, Policy, StateId, StateRewards};
use crate::query::{Direction, Query};
use crate::{Error, Result, Stage};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Dtmc,
    Mdp,
}

#[derive(Clone, Debug)]
pub enum ModelSource {
    Files { files: ModelFiles, kind: ModelKind },
    Bench(BenchmarkSpec),
}

#[derive(Clone, Debug)]
pub enum Model {
    Dtmc(Dtmc, StateRewards),
    Mdp(Mdp, ActionRewards),
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Dtmc(..) => ModelKind::Dtmc,
            Model::Mdp(..) => ModelKind::Mdp,
        }
    }

    pub fn num_states(&self) -> usize {
        match self {
            Model::Dtmc(d, _) => d.num_states(),
            Model::Mdp(m, _) => m.num_states(),
        }
    }

    pub fn num_transitions(&self) -> usize {
        match self {
            Model::Dtmc(d, _) => d.num_transitions(),
            Model::Mdp(m, _) => m.num_transitions(),
        }
    }
}

/// A loaded model with the reward structure a query asked for.
#[derive(Clone, Debug)]
pub struct Loaded {
    pub model: Model,
    /// Suggested `vmax` for generated benchmarks.
    pub vmax_hint: Option<f64>,
    /// Formula the benchmark was designed for.
    pub formula_hint: Option<String>,
}

pub fn load_model(src: &ModelSource, reward: &str, opts: ParseOptions) -> Result<Loaded> {
    match src {
        ModelSource::Files { files, kind } => {
            let model = match kind {
                ModelKind::Dtmc => {
                    let (d, mut rs) = parse_dtmc(files, opts)?;
                    let r = rs.remove(reward).ok_or_else(|| Error::UnknownReward(reward.into()))?;
                    Model::Dtmc(d, r)
                }
                ModelKind::Mdp => {
                    let (m, mut rs) = parse_mdp(files, opts)?;
                    let r = rs.remove(reward).ok_or_else(|| Error::UnknownReward(reward.into()))?;
                    Model::Mdp(m, r)
                }
            };
            Ok(Loaded {
                model,
                vmax_hint: None,
                formula_hint: None,
            })
        }
        ModelSource::Bench(spec) => {
            let b = generate(spec)?;
            if reward != REWARD_NAME {
                return Err(Error::UnknownReward(reward.into()));
            }
            Ok(Loaded {
                model: Model::Mdp(b.mdp, b.rewards),
                vmax_hint: Some(b.vmax),
                formula_hint: Some(b.formula),
            })
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub repr: ReprKind,
    pub atoms: usize,
    pub vmin: f64,
    /// Required for optimisation unless the model is a generated benchmark.
    pub vmax: Option<f64>,
    /// Accuracy of the forward engine.
    pub eps: f64,
    /// Convergence threshold of value iteration.
    pub conv: f64,
    pub budget_atoms: usize,
    /// Level of the VaR/CVaR values reported next to every result.
    pub alpha: RiskLevel,
    pub dvi_max_iters: usize,
    pub forward_max_iters: usize,
    pub stall_window: usize,
    pub renormalize: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            repr: ReprKind::Categorical,
            atoms: 201,
            vmin: 0.0,
            vmax: None,
            eps: 1e-3,
            conv: 0.01,
            budget_atoms: 101,
            alpha: RiskLevel::new(0.7).unwrap(),
            dvi_max_iters: DviOptions::default().max_iters,
            forward_max_iters: ForwardOptions::default().max_iters,
            stall_window: DviOptions::default().stall_window,
            renormalize: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let open = |x: f64| x > 0.0 && x < 1.0;
        if !open(self.eps) || !open(self.conv) {
            return Err(Error::InvalidParameter(format!(
                "eps and conv must lie in (0, 1), got {} and {}",
                self.eps, self.conv
            )));
        }
        if self.budget_atoms < 2 || self.dvi_max_iters == 0 || self.forward_max_iters == 0 {
            return Err(Error::InvalidParameter(
                "budget atoms must be at least 2 and iteration caps positive".into(),
            ));
        }
        Ok(())
    }

    pub fn params(&self, vmax: f64) -> Result<ReprParams> {
        ReprParams {
            kind: self.repr,
            atoms: self.atoms,
            vmin: self.vmin,
            vmax,
        }
        .checked()
    }

    pub fn dvi_options(&self) -> DviOptions {
        DviOptions {
            conv: self.conv,
            max_iters: self.dvi_max_iters,
            stall_window: self.stall_window,
        }
    }

    pub fn forward_options(&self) -> ForwardOptions {
        ForwardOptions {
            max_iters: self.forward_max_iters,
            ..ForwardOptions::default()
        }
    }

    fn vmax(&self, loaded: &Loaded) -> Result<f64> {
        self.vmax.or(loaded.vmax_hint).ok_or_else(|| {
            Error::InvalidParameter("vmax is required to optimise a model read from files".into())
        })
    }
}

/// One row of an exported policy.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyLine {
    pub state: usize,
    pub automaton: u32,
    /// Budget index on the slack grid, for CVaR policies.
    pub budget: Option<usize>,
    pub action: String,
}

/// A policy on the model ⊗ automaton product (and, for CVaR, the slack
/// product on top), listed for the states reachable under it.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyTable {
    pub formula: String,
    pub grid: Option<SlackGrid>,
    pub entry_budget: Option<usize>,
    pub lines: Vec<PolicyLine>,
}

impl PolicyTable {
    pub fn to_text(&self) -> String {
        let mut s = String::from("# dpmc policy\n");
        let _ = writeln!(s, "# formula: {}", self.formula);
        if let (Some(g), Some(e)) = (&self.grid, self.entry_budget) {
            let _ = writeln!(s, "# budget-grid: {} {} {}", g.vmin, g.vmax, g.atoms);
            let _ = writeln!(s, "# entry-budget: {}", g.atom(e));
            s.push_str("# columns: state automaton-state budget action\n");
        } else {
            s.push_str("# columns: state automaton-state action\n");
        }
        for l in &self.lines {
            match (l.budget, &self.grid) {
                (Some(j), Some(g)) => {
                    let _ = writeln!(s, "{} {} {} {}", l.state, l.automaton, g.atom(j), l.action);
                }
                _ => {
                    let _ = writeln!(s, "{} {} {}", l.state, l.automaton, l.action);
                }
            }
        }
        s
    }

    pub fn parse(text: &str) -> Result<PolicyTable> {
        let bad = |line: usize, msg: String| Error::Parse {
            file: "policy".into(),
            line,
            msg,
        };
        let mut t = PolicyTable {
            formula: String::new(),
            grid: None,
            entry_budget: None,
            lines: Vec::new(),
        };
        let mut entry = None;
        for (i, raw) in text.lines().enumerate() {
            let ln = i + 1;
            let line = raw.trim();
            if let Some(rest) = line.strip_prefix('#') {
                let rest = rest.trim();
                if let Some(f) = rest.strip_prefix("formula:") {
                    t.formula = f.trim().to_string();
                } else if let Some(g) = rest.strip_prefix("budget-grid:") {
                    let v: Vec<f64> = g
                        .split_whitespace()
                        .map(|x| x.parse().map_err(|_| bad(ln, format!("invalid number {x:?}"))))
                        .collect::<Result<_>>()?;
                    if v.len() != 3 {
                        return Err(bad(ln, "expected `budget-grid: vmin vmax atoms`".into()));
                    }
                    t.grid = Some(SlackGrid::new(v[0], v[1], v[2] as usize)?);
                } else if let Some(e) = rest.strip_prefix("entry-budget:") {
                    entry = Some(
                        e.trim()
                            .parse::<f64>()
                            .map_err(|_| bad(ln, "invalid entry budget".into()))?,
                    );
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            let want = if t.grid.is_some() { 4 } else { 3 };
            if toks.len() != want {
                return Err(bad(ln, format!("expected {want} columns")));
            }
            let state = toks[0].parse().map_err(|_| bad(ln, "invalid state".into()))?;
            let automaton = toks[1].parse().map_err(|_| bad(ln, "invalid automaton state".into()))?;
            let budget = match &t.grid {
                Some(g) => {
                    let b: f64 = toks[2].parse().map_err(|_| bad(ln, "invalid budget".into()))?;
                    Some(g.round_index(b, 0.0))
                }
                None => None,
            };
            t.lines.push(PolicyLine {
                state,
                automaton,
                budget,
                action: toks[want - 1].to_string(),
            });
        }
        if t.formula.is_empty() {
            return Err(bad(1, "missing `# formula:` header".into()));
        }
        match (&t.grid, entry) {
            (Some(g), Some(b)) => t.entry_budget = Some(g.round_index(b, 0.0)),
            (Some(_), None) => return Err(bad(1, "missing `# entry-budget:` header".into())),
            _ => {}
        }
        Ok(t)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<PolicyTable> {
        PolicyTable::parse(&std::fs::read_to_string(path)?)
    }
}

#[derive(Clone, Debug)]
pub struct Optimization {
    pub params: ReprParams,
    /// Distribution at the initial state according to value iteration.
    pub approx: Dist,
    pub iterations: usize,
    pub residual: f64,
    pub fallback: bool,
    pub clamped: f64,
    /// Slack grid and the chosen initial budget, for CVaR.
    pub budget: Option<(SlackGrid, usize)>,
    /// CVaR of each initial budget's distribution, for CVaR.
    pub budget_cvars: Vec<f64>,
    pub policy: PolicyTable,
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub query: Query,
    pub kind: ModelKind,
    pub model_states: usize,
    pub model_transitions: usize,
    pub automaton_states: usize,
    pub product_states: usize,
    /// The queried statistic on the forward distribution.
    pub value: f64,
    pub forward: ForwardResult,
    /// The queried statistic first, then E, sd, VaR and CVaR at the
    /// configured level.
    pub statistics: Vec<StatValue>,
    pub optimization: Option<Optimization>,
    pub timings: Vec<(Stage, f64)>,
}

impl RunResult {
    pub fn approx_value(&self) -> Option<f64> {
        self.statistics.first().and_then(|s| s.approx)
    }
}

struct Clock {
    at: Instant,
    laps: Vec<(Stage, f64)>,
}

impl Clock {
    fn new() -> Self {
        Clock {
            at: Instant::now(),
            laps: Vec::new(),
        }
    }

    fn lap(&mut self, stage: Stage) {
        let now = Instant::now();
        self.laps.push((stage, (now - self.at).as_secs_f64()));
        self.at = now;
    }
}

fn report_stats(q: &Query, alpha: RiskLevel) -> Vec<Statistic> {
    let mut v = vec![q.statistic];
    for s in [
        Statistic::Mean,
        Statistic::StdDev,
        Statistic::VaR(alpha),
        Statistic::CVaR(alpha),
    ] {
        if !v.contains(&s) {
            v.push(s);
        }
    }
    v
}

fn stat_values(
    stats: &[Statistic],
    exact: &impl Distribution,
    approx: Option<&Dist>,
) -> Vec<StatValue> {
    stats
        .iter()
        .map(|st| {
            let e = st.evaluate(exact);
            let a = approx.map(|d| st.evaluate(d));
            StatValue {
                statistic: *st,
                exact: e,
                approx: a,
                deviation_pct: a.map(|a| crate::dvi::relative_pct(a, e)),
            }
        })
        .collect()
}

/// Runs a query against a model source.
pub fn run(src: &ModelSource, query: &Query, cfg: &RunConfig) -> Result<RunResult> {
    let mut clock = Clock::new();
    cfg.validate().at(Stage::Query)?;
    let loaded = load_model(src, &query.reward, ParseOptions { renormalize: cfg.renormalize })
        .at(Stage::Parse)?;
    clock.lap(Stage::Parse);
    run_loaded(&loaded, query, cfg, clock)
}

pub fn run_model(loaded: &Loaded, query: &Query, cfg: &RunConfig) -> Result<RunResult> {
    cfg.validate().at(Stage::Query)?;
    run_loaded(loaded, query, cfg, Clock::new())
}

fn run_loaded(loaded: &Loaded, query: &Query, cfg: &RunConfig, mut clock: Clock) -> Result<RunResult> {
    let model = &loaded.model;
    match (model.kind(), query.direction) {
        (ModelKind::Dtmc, Direction::Min) => {
            return Err(Error::InvalidParameter(
                "min=? queries need an MDP; a DTMC has nothing to optimise".into(),
            ))
            .at(Stage::Query)
        }
        (ModelKind::Mdp, Direction::Eval) => {
            return Err(Error::InvalidParameter(
                "=? queries on an MDP need a policy; use evaluate".into(),
            ))
            .at(Stage::Query)
        }
        _ => {}
    }
    clock.lap(Stage::Query);
    let dfa = to_dfa(&query.formula).at(Stage::Automaton)?;
    clock.lap(Stage::Automaton);
    let stats = report_stats(query, cfg.alpha);
    match model {
        Model::Dtmc(d, r) => {
            let p = product_dtmc(d, r, &dfa).at(Stage::Product)?;
            clock.lap(Stage::Product);
            let fw = forward_distribution_with(&p.dtmc, &p.rewards, &p.target, cfg.eps, &cfg.forward_options())
                .at(Stage::Forward)?;
            clock.lap(Stage::Forward);
            let statistics = stat_values(&stats, &fw.dist, None);
            Ok(RunResult {
                query: query.clone(),
                kind: ModelKind::Dtmc,
                model_states: model.num_states(),
                model_transitions: model.num_transitions(),
                automaton_states: dfa.num_states(),
                product_states: p.dtmc.num_states(),
                value: statistics[0].exact,
                forward: fw,
                statistics,
                optimization: None,
                timings: clock.laps,
            })
        }
        Model::Mdp(m, r) => {
            let vmax = cfg.vmax(loaded).at(Stage::Query)?;
            let params = cfg.params(vmax).at(Stage::Query)?;
            let p = product_mdp(m, r, &dfa).at(Stage::Product)?;
            clock.lap(Stage::Product);
            let opts = cfg.dvi_options();
            let formula = query.formula.to_string();
            let (eval_mdp, eval_rewards, eval_target, policy, opt) = match query.statistic {
                Statistic::CVaR(alpha) => {
                    let grid = SlackGrid::new(cfg.vmin, vmax, cfg.budget_atoms).at(Stage::Query)?;
                    let res = risk_sensitive_dvi(&p.mdp, &p.rewards, &p.target, alpha, &grid, &params, &opts)
                        .at(Stage::Dvi)?;
                    clock.lap(Stage::Dvi);
                    let sp = &res.product;
                    let mdp = sp.mdp.with_initial(res.entry);
                    let table = policy_table(&mdp, &res.policy, &formula, |s| {
                        let (ps, j) = sp.split(s);
                        (p.origin[ps.index()], Some(j))
                    }, Some((grid, res.budget_index)))
                    .at(Stage::Dvi)?;
                    let opt = Optimization {
                        params,
                        approx: res.initial.clone(),
                        iterations: res.iterations,
                        residual: res.residual,
                        fallback: res.fallback,
                        clamped: res.clamped,
                        budget: Some((grid, res.budget_index)),
                        budget_cvars: res.cvars.clone(),
                        policy: table,
                    };
                    (mdp, sp.rewards.clone(), res.target.clone(), res.policy, opt)
                }
                _ => {
                    let res = risk_neutral_dvi(&p.mdp, &p.rewards, &p.target, &params, &opts)
                        .at(Stage::Dvi)?;
                    clock.lap(Stage::Dvi);
                    let table = policy_table(&p.mdp, &res.policy, &formula, |s| {
                        (p.origin[s.index()], None)
                    }, None)
                    .at(Stage::Dvi)?;
                    let opt = Optimization {
                        params,
                        approx: res.initial.clone(),
                        iterations: res.iterations,
                        residual: res.residual,
                        fallback: res.fallback,
                        clamped: res.clamped,
                        budget: None,
                        budget_cvars: Vec::new(),
                        policy: table,
                    };
                    (p.mdp.clone(), p.rewards.clone(), p.target.clone(), res.policy, opt)
                }
            };
            let ev = evaluate_policy(
                &eval_mdp,
                &policy,
                &eval_rewards,
                &eval_target,
                cfg.eps,
                &stats,
                Some(&opt.approx),
                &cfg.forward_options(),
            )
            .at(Stage::Evaluate)?;
            clock.lap(Stage::Evaluate);
            Ok(RunResult {
                query: query.clone(),
                kind: ModelKind::Mdp,
                model_states: model.num_states(),
                model_transitions: model.num_transitions(),
                automaton_states: dfa.num_states(),
                product_states: eval_mdp.num_states(),
                value: ev.values[0].exact,
                forward: ev.forward,
                statistics: ev.values,
                optimization: Some(opt),
                timings: clock.laps,
            })
        }
    }
}

/// Lists the policy on the states reachable from the initial state under it.
fn policy_table(
    mdp: &Mdp,
    policy: &Policy,
    formula: &str,
    origin: impl Fn(StateId) -> ((StateId, u32), Option<usize>),
    budget: Option<(SlackGrid, usize)>,
) -> Result<PolicyTable> {
    let (dtmc, _) = crate::model::induce_dtmc(mdp, policy, &ActionRewards::zero(mdp))?;
    let reach = crate::model::reachable_states(&dtmc);
    let mut lines: Vec<PolicyLine> = reach
        .iter()
        .map(|s| {
            let ((ms, q), j) = origin(s);
            PolicyLine {
                state: ms.index(),
                automaton: q,
                budget: j,
                action: mdp.action_name(s, policy.get(s).unwrap_or(0)).to_string(),
            }
        })
        .collect();
    lines.sort_by_key(|l| (l.state, l.automaton, l.budget));
    Ok(PolicyTable {
        formula: formula.to_string(),
        grid: budget.map(|b| b.0),
        entry_budget: budget.map(|b| b.1),
        lines,
    })
}

/// Result of evaluating a stored policy against several queries.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub forward: ForwardResult,
    pub values: Vec<StatValue>,
    pub product_states: usize,
}

/// Fixes an exported policy on an MDP and evaluates `queries` on the induced
/// chain. All queries must share the reward structure and the formula of the
/// policy.
pub fn evaluate_stored_policy(
    loaded: &Loaded,
    table: &PolicyTable,
    queries: &[Query],
    cfg: &RunConfig,
) -> Result<Evaluation> {
    let Model::Mdp(m, r) = &loaded.model else {
        return Err(Error::InvalidParameter("evaluate needs an MDP".into())).at(Stage::Query);
    };
    let formula = crate::ltl::parse_cosafe(&table.formula).at(Stage::Query)?;
    for q in queries {
        if q.formula != formula {
            return Err(Error::InvalidParameter(format!(
                "query formula {} differs from the policy's formula {}",
                q.formula, table.formula
            )))
            .at(Stage::Query);
        }
    }
    let dfa = to_dfa(&formula).at(Stage::Automaton)?;
    let p = product_mdp(m, r, &dfa).at(Stage::Product)?;
    let index: rustc_hash::FxHashMap<(StateId, u32), usize> =
        p.origin.iter().enumerate().map(|(i, &o)| (o, i)).collect();
    let lookup = |l: &PolicyLine| {
        index
            .get(&(StateId::new(l.state), l.automaton))
            .copied()
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "policy names ({}, {}) which is not a product state",
                    l.state, l.automaton
                ))
            })
    };
    let (mdp, rewards, target) = match (&table.grid, table.entry_budget) {
        (Some(grid), Some(entry)) => {
            let sp = build_slack_product(&p.mdp, &p.rewards, grid);
            let target = sp.lift(&p.target);
            let mdp = sp.mdp.with_initial(sp.entries[entry]);
            (mdp, sp.rewards.clone(), target)
        }
        _ => (p.mdp.clone(), p.rewards.clone(), p.target.clone()),
    };
    let mut policy = Policy::undefined(mdp.num_states());
    let atoms = table.grid.map_or(1, |g| g.atoms);
    for l in &table.lines {
        let ps = lookup(l).at(Stage::Evaluate)?;
        let s = StateId::new(ps * atoms + l.budget.unwrap_or(0));
        let a = mdp.action_index(s, &l.action).ok_or_else(|| {
            Error::InvalidParameter(format!("state {} has no action {:?}", l.state, l.action))
        });
        policy.set(s, a.at(Stage::Evaluate)?);
    }
    let stats: Vec<Statistic> = queries.iter().map(|q| q.statistic).collect();
    let ev = evaluate_policy(&mdp, &policy, &rewards, &target, cfg.eps, &stats, None, &cfg.forward_options())
        .at(Stage::Evaluate)?;
    Ok(Evaluation {
        forward: ev.forward,
        values: ev.values,
        product_states: mdp.num_states(),
    })
}

/// Output locations for [`report`].
#[derive(Clone, Debug, Default)]
pub struct ReportPaths {
    pub json: Option<PathBuf>,
    pub dist: Option<PathBuf>,
    pub policy: Option<PathBuf>,
}

/// `inf` for infinities, `null` for NaN, the number otherwise.
pub fn num(x: f64) -> Value {
    if x.is_nan() {
        Value::Null
    } else if x == f64::INFINITY {
        Value::String("inf".into())
    } else if x == f64::NEG_INFINITY {
        Value::String("-inf".into())
    } else {
        // normalise -0.0
        json!(x + 0.0)
    }
}

fn stat_json(s: &StatValue) -> Value {
    let mut o = json!({
        "statistic": s.statistic.to_string(),
        "value": num(s.exact),
    });
    if let Some(a) = s.approx {
        o["approx"] = num(a);
        o["deviation_pct"] = num(s.deviation_pct.unwrap_or(f64::NAN));
    }
    o
}

/// The result document. Timings are left out when `timings` is false, which
/// makes the output a pure function of the inputs.
pub fn result_json(res: &RunResult, paths: &ReportPaths, timings: bool) -> Value {
    let fw = &res.forward;
    let path_str = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
    let mut doc = json!({
        "schema": SCHEMA_VERSION,
        "query": res.query.to_string(),
        "statistic": res.query.statistic.to_string(),
        "direction": res.query.direction,
        "value": num(res.value),
        "model": {
            "kind": res.kind,
            "states": res.model_states,
            "transitions": res.model_transitions,
        },
        "product": {
            "automaton_states": res.automaton_states,
            "states": res.product_states,
        },
        "statistics": res.statistics.iter().map(stat_json).collect::<Vec<_>>(),
        "distribution": {
            "path": path_str(&paths.dist),
            "support_size": fw.dist.support().len(),
            "min": fw.dist.min_finite(),
            "max": fw.dist.max_finite(),
            "p_inf": num(fw.dist.p_inf()),
            "residual": num(fw.residual),
            "certified_error": num(fw.certified_error()),
            "iterations": fw.iterations,
        },
    });
    if let Some(o) = &res.optimization {
        let mut dvi = json!({
            "representation": o.params.kind,
            "atoms": o.params.atoms,
            "vmin": num(o.params.vmin),
            "vmax": num(o.params.vmax),
            "approx_value": num(res.approx_value().unwrap_or(f64::NAN)),
            "iterations": o.iterations,
            "residual": num(o.residual),
            "fallback": o.fallback,
            "clamped_mass": num(o.clamped),
            "policy_path": path_str(&paths.policy),
            "policy_states": o.policy.lines.len(),
        });
        if let Some((grid, j)) = &o.budget {
            dvi["budget"] = json!({
                "atoms": grid.atoms,
                "vmin": num(grid.vmin),
                "vmax": num(grid.vmax),
                "index": j,
                "value": num(grid.atom(*j)),
                "cvars": o.budget_cvars.iter().map(|&c| num(c)).collect::<Vec<_>>(),
            });
        }
        doc["dvi"] = dvi;
    }
    if timings {
        let t: serde_json::Map<String, Value> = res
            .timings
            .iter()
            .map(|(s, t)| (s.to_string(), json!(t)))
            .collect();
        doc["timings"] = Value::Object(t);
    }
    doc
}

/// Writes the requested artefacts. Asking for a policy file on an
/// evaluation query is an error.
pub fn report(res: &RunResult, paths: &ReportPaths) -> Result<Value> {
    let go = || -> Result<Value> {
        if paths.policy.is_some() && res.optimization.is_none() {
            return Err(Error::NotAnOptimization);
        }
        if let Some(p) = &paths.dist {
            write_distribution(&res.forward.dist, p, DistFormat::from_path(p))?;
        }
        if let (Some(p), Some(o)) = (&paths.policy, &res.optimization) {
            o.policy.write(p)?;
        }
        let doc = result_json(res, paths, true);
        if let Some(p) = &paths.json {
            std::fs::write(p, serde_json::to_string_pretty(&doc)? + "\n")?;
        }
        Ok(doc)
    };
    go().at(Stage::Report)
}

/// One point of an atom-count sweep.
#[derive(Clone, Debug, Serialize)]
pub struct SweepPoint {
    pub atoms: usize,
    /// Value-iteration statistic and the exact one under its policy.
    pub approx: f64,
    pub exact: f64,
    /// Cramér ℓ2 between the value-iteration distribution and the exact one.
    pub l2: f64,
    /// Wasserstein w1 between the same pair.
    pub w1: f64,
    pub seconds: f64,
}

/// Repeats an optimisation query for each atom count. With `budget` set the
/// sweep varies the slack grid size instead of the representation.
pub fn sweep(
    loaded: &Loaded,
    query: &Query,
    cfg: &RunConfig,
    counts: &[usize],
    budget: bool,
) -> Result<Vec<SweepPoint>> {
    counts
        .iter()
        .map(|&n| {
            let mut c = cfg.clone();
            if budget {
                c.budget_atoms = n;
            } else {
                c.atoms = n;
            }
            let t = Instant::now();
            let res = run_model(loaded, query, &c)?;
            let approx = &res.optimization.as_ref().expect("min query").approx;
            Ok(SweepPoint {
                atoms: n,
                approx: res.approx_value().unwrap_or(f64::NAN),
                exact: res.value,
                l2: crate::dist::cramer_l2_between(approx, &res.forward.dist),
                w1: crate::dist::wasserstein_w1_between(approx, &res.forward.dist),
                seconds: t.elapsed().as_secs_f64(),
            })
        })
        .collect()
}

pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut s = String::from("atoms,approx,exact,l2,w1,seconds\n");
    for p in points {
        let _ = writeln!(s, "{},{:?},{:?},{:?},{:?},{:.3}", p.atoms, p.approx, p.exact, p.l2, p.w1, p.seconds);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{parse_dtmc_str, BenchName};
    use crate::query::parse_query;

    fn dtmc(tra: &str, lab: &str, rew: &str) -> Loaded {
        let (d, mut r) = parse_dtmc_str(tra, Some(lab), &[("r", rew)], ParseOptions::default()).unwrap();
        Loaded {
            model: Model::Dtmc(d, r.remove("r").unwrap()),
            vmax_hint: None,
            formula_hint: None,
        }
    }

    #[test]
    fn immediate_satisfaction_costs_nothing() {
        let l = dtmc("STATES 1\n0 0 1\n", "0: goal\n", "0 7\n");
        let q = parse_query("R{E,r}=? [F goal]").unwrap();
        let res = run_model(&l, &q, &RunConfig::default()).unwrap();
        assert_eq!(res.value, 0.0);
    }

    #[test]
    fn mode_query_on_a_chain() {
        let l = dtmc("STATES 3\n0 1 0.3\n0 2 0.7\n1 2 1\n2 2 1\n", "2: goal\n", "0 1\n1 1\n");
        let q = parse_query("R{mode,r}=? [F goal]").unwrap();
        let res = run_model(&l, &q, &RunConfig::default()).unwrap();
        assert_eq!(res.value, 1.0);
        approx::assert_abs_diff_eq!(res.statistics[1].exact, 1.3, epsilon = 1e-12);
    }

    #[test]
    fn infinite_mass_serializes_as_string() {
        let l = dtmc("STATES 3\n0 1 0.5\n0 2 0.5\n1 1 1\n2 2 1\n", "2: goal\n", "0 1\n");
        let q = parse_query("R{E,r}=? [F goal]").unwrap();
        let res = run_model(&l, &q, &RunConfig::default()).unwrap();
        let doc = result_json(&res, &ReportPaths::default(), false);
        assert_eq!(doc["value"], "inf");
        assert_eq!(doc["schema"], 1);
        assert!(doc.get("timings").is_none());
    }

    #[test]
    fn direction_must_match_model() {
        let l = dtmc("STATES 1\n0 0 1\n", "0: goal\n", "");
        let q = parse_query("R{E,r}min=? [F goal]").unwrap();
        let e = run_model(&l, &q, &RunConfig::default()).unwrap_err();
        assert_eq!(e.stage(), Some(Stage::Query));
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn policy_file_round_trip_reproduces_value() {
        let spec = BenchmarkSpec::new(BenchName::Mudnails);
        let loaded = load_model(&ModelSource::Bench(spec), "cost", ParseOptions::default()).unwrap();
        let cfg = RunConfig {
            atoms: 61,
            budget_atoms: 61,
            ..RunConfig::default()
        };
        for text in [
            "R{E,cost}min=? [F (g1 & F g2)]",
            "R{CVaR@0.7,cost}min=? [F (g1 & F g2)]",
        ] {
            let q = parse_query(text).unwrap();
            let res = run_model(&loaded, &q, &cfg).unwrap();
            let table = &res.optimization.as_ref().unwrap().policy;
            let back = PolicyTable::parse(&table.to_text()).unwrap();
            assert_eq!(&back, table);
            let ev = evaluate_stored_policy(&loaded, &back, std::slice::from_ref(&q), &cfg).unwrap();
            assert_eq!(ev.forward.dist, res.forward.dist);
        }
    }

    #[test]
    fn policy_on_evaluation_query_is_refused() {
        let l = dtmc("STATES 1\n0 0 1\n", "0: goal\n", "");
        let q = parse_query("R{E,r}=? [F goal]").unwrap();
        let res = run_model(&l, &q, &RunConfig::default()).unwrap();
        let paths = ReportPaths {
            policy: Some("unused.txt".into()),
            ..ReportPaths::default()
        };
        let e = report(&res, &paths).unwrap_err();
        assert!(matches!(e.root(), Error::NotAnOptimization));
        assert_eq!(e.stage(), Some(Stage::Report));
    }
}
