//! `dpmc`: distributional model checking from the command line.
//!
//! Exit codes: 0 success, 2 parse or validation error, 3 failed
//! precondition, 4 no convergence, 1 I/O.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use dpmc::dist::{ReprKind, RiskLevel};
use dpmc::ingest::{
    generate, write_distribution, write_mdp, BenchmarkSpec, DistFormat, ModelFiles, ParseOptions,
    REWARD_NAME,
};
use dpmc::query::{parse_query, Query};
use dpmc::run::{
    evaluate_stored_policy, load_model, num, report, run, sweep, sweep_csv, Loaded, ModelKind,
    ModelSource, PolicyTable, ReportPaths, RunConfig,
};
use dpmc::{Error, Result, Stage};

#[derive(Parser)]
#[command(name = "dpmc", version, about = "Distributional probabilistic model checker")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reward distribution of a DTMC for an `=?` query.
    Check {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, short)]
        query: String,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Optimal policy of an MDP for a `min=?` query.
    Optimize {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, short)]
        query: String,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        out: OutArgs,
        /// Write the policy to this file.
        #[arg(long)]
        emit_policy: Option<PathBuf>,
    },
    /// Evaluate a stored policy on an MDP for one or more `=?` queries.
    Evaluate {
        #[command(flatten)]
        model: ModelArgs,
        /// Policy file written by `optimize --emit-policy`.
        #[arg(long)]
        policy: PathBuf,
        #[arg(long, short, required = true)]
        query: Vec<String>,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Write a benchmark model as .tra/.lab/.rew files.
    Generate {
        #[command(flatten)]
        bench: BenchArgs,
        /// Output path stem; files are STEM.tra, STEM.lab and STEM.cost.rew.
        #[arg(long, short = 'o')]
        out: PathBuf,
    },
    /// Repeat an optimisation over several atom counts (or budget grid sizes).
    Sweep {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, short)]
        query: String,
        #[command(flatten)]
        solver: SolverArgs,
        /// Comma-separated atom counts.
        #[arg(long, value_delimiter = ',', required = true)]
        counts: Vec<usize>,
        /// Vary the budget grid size instead of the representation.
        #[arg(long)]
        budget: bool,
        /// CSV output; stdout when absent.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args, Clone)]
struct BenchArgs {
    /// Benchmark name: betting, deepsea, obstacle, energy, mudnails.
    #[arg(long)]
    bench: Option<String>,
    /// Grid size for obstacle and energy.
    #[arg(long)]
    size: Option<usize>,
    /// Obstacle placement seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    obstacle_delay: Option<u64>,
    #[arg(long)]
    obstacle_percent: Option<u32>,
    #[arg(long)]
    initial_energy: Option<u32>,
    #[arg(long)]
    depletion_delay: Option<u64>,
}

impl BenchArgs {
    fn spec(&self) -> Result<Option<BenchmarkSpec>> {
        let Some(name) = &self.bench else {
            return Ok(None);
        };
        let mut s = BenchmarkSpec::new(name.parse()?).with_seed(self.seed);
        if let Some(n) = self.size {
            s.size = n;
        }
        if let Some(v) = self.obstacle_delay {
            s.obstacle_delay = v;
        }
        if let Some(v) = self.obstacle_percent {
            s.obstacle_percent = v;
        }
        if let Some(v) = self.initial_energy {
            s.initial_energy = v;
        }
        if let Some(v) = self.depletion_delay {
            s.depletion_delay = v;
        }
        Ok(Some(s))
    }
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// Transition file.
    #[arg(long, conflicts_with = "bench")]
    tra: Option<PathBuf>,
    /// Label file.
    #[arg(long, requires = "tra")]
    lab: Option<PathBuf>,
    /// Reward file as NAME=PATH; repeatable.
    #[arg(long, requires = "tra")]
    rew: Vec<String>,
    /// Rescale rows that do not sum to one.
    #[arg(long)]
    renormalize: bool,
    #[command(flatten)]
    bench: BenchArgs,
}

impl ModelArgs {
    fn source(&self, kind: ModelKind) -> Result<ModelSource> {
        if let Some(spec) = self.bench.spec()? {
            return Ok(ModelSource::Bench(spec));
        }
        let Some(tra) = &self.tra else {
            return Err(Error::InvalidParameter("give --tra FILE or --bench NAME".into()));
        };
        let rewards = self
            .rew
            .iter()
            .map(|r| match r.split_once('=') {
                Some((n, p)) => (n.to_string(), PathBuf::from(p)),
                None => (reward_name_of(Path::new(r)), PathBuf::from(r)),
            })
            .collect();
        Ok(ModelSource::Files {
            files: ModelFiles {
                transitions: tra.clone(),
                labels: self.lab.clone(),
                rewards,
            },
            kind,
        })
    }

    fn load(&self, kind: ModelKind, reward: &str) -> Result<Loaded> {
        let src = self.source(kind).map_err(|e| e.at(Stage::Parse))?;
        load_model(&src, reward, ParseOptions { renormalize: self.renormalize })
            .map_err(|e| e.at(Stage::Parse))
    }
}

/// `model.cost.rew` is the reward structure `cost`.
fn reward_name_of(p: &Path) -> String {
    let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or("r");
    stem.rsplit('.').next().unwrap_or(stem).to_string()
}

#[derive(Args, Clone)]
struct SolverArgs {
    /// Distribution representation used by value iteration.
    #[arg(long, default_value = "categorical")]
    repr: ReprKind,
    /// Number of atoms m.
    #[arg(long, default_value_t = 201)]
    atoms: usize,
    #[arg(long, default_value_t = 0.0)]
    vmin: f64,
    /// Upper end of the support; defaults to the benchmark's suggestion.
    #[arg(long)]
    vmax: Option<f64>,
    /// Forward-engine accuracy ε.
    #[arg(long, default_value_t = 1e-3)]
    eps: f64,
    /// Value-iteration convergence threshold.
    #[arg(long, default_value_t = 0.01)]
    conv: f64,
    /// Size of the risk-budget grid for CVaR.
    #[arg(long, default_value_t = 101)]
    budget_atoms: usize,
    /// Level of the VaR/CVaR reported alongside every result.
    #[arg(long, default_value_t = 0.7)]
    alpha: f64,
    /// Iteration cap for value iteration and the forward engine.
    #[arg(long)]
    max_iters: Option<usize>,
}

impl SolverArgs {
    fn config(&self, renormalize: bool) -> Result<RunConfig> {
        let mut c = RunConfig {
            repr: self.repr,
            atoms: self.atoms,
            vmin: self.vmin,
            vmax: self.vmax,
            eps: self.eps,
            conv: self.conv,
            budget_atoms: self.budget_atoms,
            alpha: RiskLevel::new(self.alpha)?,
            renormalize,
            ..RunConfig::default()
        };
        if let Some(n) = self.max_iters {
            c.dvi_max_iters = n;
            c.forward_max_iters = n;
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Args, Clone)]
struct OutArgs {
    /// Also write the result JSON here.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Write the exact distribution (CSV, or JSON for a .json path).
    #[arg(long)]
    emit_dist: Option<PathBuf>,
}

fn query(text: &str) -> Result<Query> {
    parse_query(text).map_err(|e| e.at(Stage::Query))
}

fn print_json(v: &serde_json::Value) {
    // a closed pipe is not worth a panic
    let text = serde_json::to_string_pretty(v).expect("serializable");
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn single_run(
    model: &ModelArgs,
    q: &str,
    solver: &SolverArgs,
    out: &OutArgs,
    kind: ModelKind,
    policy: Option<PathBuf>,
) -> Result<()> {
    let q = query(q)?;
    let cfg = solver.config(model.renormalize).map_err(|e| e.at(Stage::Query))?;
    let src = model.source(kind).map_err(|e| e.at(Stage::Parse))?;
    let paths = ReportPaths {
        json: out.output.clone(),
        dist: out.emit_dist.clone(),
        policy,
    };
    if paths.policy.is_some() && !q.is_optimization() {
        return Err(Error::NotAnOptimization.at(Stage::Query));
    }
    let res = run(&src, &q, &cfg)?;
    print_json(&report(&res, &paths)?);
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Check {
            model,
            query,
            solver,
            out,
        } => single_run(&model, &query, &solver, &out, ModelKind::Dtmc, None),
        Command::Optimize {
            model,
            query,
            solver,
            out,
            emit_policy,
        } => single_run(&model, &query, &solver, &out, ModelKind::Mdp, emit_policy),
        Command::Evaluate {
            model,
            policy,
            query: texts,
            solver,
            out,
        } => {
            let qs: Vec<Query> = texts.iter().map(|t| query(t)).collect::<Result<_>>()?;
            let reward = &qs[0].reward;
            if let Some(q) = qs.iter().find(|q| &q.reward != reward || q.is_optimization()) {
                return Err(Error::InvalidParameter(format!(
                    "evaluate takes =? queries over one reward structure, got {q}"
                ))
                .at(Stage::Query));
            }
            let cfg = solver.config(model.renormalize).map_err(|e| e.at(Stage::Query))?;
            let loaded = model.load(ModelKind::Mdp, reward)?;
            let table = PolicyTable::read(&policy).map_err(|e| e.at(Stage::Parse))?;
            let ev = evaluate_stored_policy(&loaded, &table, &qs, &cfg)?;
            let write = || -> Result<serde_json::Value> {
                if let Some(p) = &out.emit_dist {
                    write_distribution(&ev.forward.dist, p, DistFormat::from_path(p))?;
                }
                let doc = json!({
                    "schema": dpmc::run::SCHEMA_VERSION,
                    "policy": policy.display().to_string(),
                    "product": { "states": ev.product_states },
                    "results": qs.iter().zip(&ev.values).map(|(q, v)| json!({
                        "query": q.to_string(),
                        "value": num(v.exact),
                    })).collect::<Vec<_>>(),
                    "distribution": {
                        "path": out.emit_dist.as_ref().map(|p| p.display().to_string()),
                        "support_size": ev.forward.dist.support().len(),
                        "p_inf": num(ev.forward.dist.p_inf()),
                        "residual": num(ev.forward.residual),
                        "iterations": ev.forward.iterations,
                    },
                });
                if let Some(p) = &out.output {
                    std::fs::write(p, serde_json::to_string_pretty(&doc)? + "\n")?;
                }
                Ok(doc)
            };
            print_json(&write().map_err(|e| e.at(Stage::Report))?);
            Ok(())
        }
        Command::Generate { bench, out } => {
            let spec = bench
                .spec()?
                .ok_or_else(|| Error::InvalidParameter("--bench is required".into()))?;
            let b = generate(&spec)?;
            let files = write_mdp(&b.mdp, &[(REWARD_NAME, &b.rewards)], &out)?;
            print_json(&json!({
                "states": b.mdp.num_states(),
                "transitions": b.mdp.num_transitions(),
                "formula": b.formula,
                "vmax": b.vmax,
                "transitions_file": files.transitions.display().to_string(),
                "labels_file": files.labels.map(|p| p.display().to_string()),
                "rewards_file": files.rewards[0].1.display().to_string(),
            }));
            Ok(())
        }
        Command::Sweep {
            model,
            query: text,
            solver,
            counts,
            budget,
            output,
        } => {
            let q = query(&text)?;
            if !q.is_optimization() {
                return Err(Error::InvalidParameter("sweep needs a min=? query".into()).at(Stage::Query));
            }
            let cfg = solver.config(model.renormalize).map_err(|e| e.at(Stage::Query))?;
            let loaded = model.load(ModelKind::Mdp, &q.reward)?;
            let points = sweep(&loaded, &q, &cfg, &counts, budget)?;
            let csv = sweep_csv(&points);
            match output {
                Some(p) => std::fs::write(p, csv).map_err(|e| Error::from(e).at(Stage::Report))?,
                None => {
                    let _ = write!(std::io::stdout().lock(), "{csv}");
                }
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
