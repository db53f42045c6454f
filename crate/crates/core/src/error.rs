use std::fmt;

use crate::model::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Pipeline stage an error originated in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Parse,
    Query,
    Automaton,
    Product,
    Forward,
    Dvi,
    Evaluate,
    Report,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Parse => "parse",
            Stage::Query => "query",
            Stage::Automaton => "automaton",
            Stage::Product => "product",
            Stage::Forward => "forward",
            Stage::Dvi => "dvi",
            Stage::Evaluate => "evaluate",
            Stage::Report => "report",
        };
        f.write_str(s)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{file}:{line}: {msg}")]
    Parse {
        file: String,
        line: usize,
        msg: String,
    },
    #[error("model validation failed: {}", join_violations(.0))]
    Validation(Vec<Violation>),
    #[error("syntax error at offset {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("formula is not syntactically co-safe: {0}")]
    NotCosafe(String),
    #[error("automaton exceeds {limit} states")]
    StateBlowup { limit: usize },
    #[error("formula atoms missing from the model's labels: {}", .0.join(", "))]
    AtomMismatch(Vec<String>),
    #[error("state {0} is reachable under the policy but has no choice")]
    UndefinedChoice(usize),
    #[error("target is not reachable with probability 1 under any policy from states {0:?}")]
    NotAlmostSureReachable(Vec<usize>),
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("infinite mass {p_inf} cannot be represented by {atoms} quantile atoms")]
    InfiniteMass { p_inf: f64, atoms: usize },
    #[error("distribution parameters differ: {0}")]
    ParamMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unsupported benchmark {0:?}")]
    UnsupportedSpec(String),
    #[error("unsupported objective: {0}")]
    UnsupportedObjective(String),
    #[error("query does not request an optimization, there is no policy to emit")]
    NotAnOptimization,
    #[error("unknown reward structure {0:?}")]
    UnknownReward(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("{stage}: {source}")]
    Staged {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },
}

fn join_violations(v: &[Violation]) -> String {
    let shown: Vec<String> = v.iter().take(8).map(|x| x.to_string()).collect();
    let mut s = shown.join("; ");
    if v.len() > 8 {
        s.push_str(&format!("; ... ({} total)", v.len()));
    }
    s
}

impl Error {
    pub fn at(self, stage: Stage) -> Self {
        match self {
            e @ Error::Staged { .. } => e,
            e => Error::Staged {
                stage,
                source: Box::new(e),
            },
        }
    }

    pub fn stage(&self) -> Option<Stage> {
        match self {
            Error::Staged { stage, .. } => Some(*stage),
            _ => None,
        }
    }

    /// Innermost error with stage wrappers removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::Staged { source, .. } => source.root(),
            e => e,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::Parse { .. }
            | Error::Validation(_)
            | Error::Syntax { .. }
            | Error::NotCosafe(_)
            | Error::AtomMismatch(_)
            | Error::UnsupportedSpec(_)
            | Error::UnsupportedObjective(_)
            | Error::UnknownReward(_)
            | Error::InvalidParameter(_)
            | Error::ParamMismatch(_)
            | Error::Json(_) => 2,
            Error::NotAlmostSureReachable(_)
            | Error::UndefinedChoice(_)
            | Error::InfiniteMass { .. }
            | Error::NotAnOptimization
            | Error::StateBlowup { .. } => 3,
            Error::NonConvergence { .. } => 4,
            Error::Io(_) => 1,
            Error::Staged { .. } => unreachable!(),
        }
    }
}

pub(crate) trait ResultExt<T> {
    fn at(self, stage: Stage) -> Result<T>;
}

impl<T> ResultExt<T> for Result<T> {
    fn at(self, stage: Stage) -> Result<T> {
        self.map_err(|e| e.at(stage))
    }
}
