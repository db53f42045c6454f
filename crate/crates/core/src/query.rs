//! Distributional queries.
//!
//! ```text
//! query     := "R{" statistic "," reward "}" ("=?" | "min=?") "[" formula "]"
//! statistic := "E" | "Var" | "sd" | "mode" | ("VaR" | "CVaR") "@" alpha
//! ```
//!
//! Whitespace is allowed between tokens. Only `E` and `CVaR` can be
//! minimised.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::dist::{RiskLevel, Statistic};
use crate::ltl::{parse_cosafe, Formula};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// `=?`: the value on a DTMC or under a fixed policy.
    Eval,
    /// `min=?`: the value of an optimal policy.
    Min,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Query {
    pub statistic: Statistic,
    pub reward: String,
    pub direction: Direction,
    pub formula: Formula,
}

impl Query {
    pub fn new(
        statistic: Statistic,
        reward: impl Into<String>,
        direction: Direction,
        formula: Formula,
    ) -> Result<Self> {
        if direction == Direction::Min
            && !matches!(statistic, Statistic::Mean | Statistic::CVaR(_))
        {
            return Err(Error::UnsupportedObjective(format!(
                "cannot minimise {statistic}, only E and CVaR"
            )));
        }
        Ok(Query {
            statistic,
            reward: reward.into(),
            direction,
            formula,
        })
    }

    pub fn is_optimization(&self) -> bool {
        self.direction == Direction::Min
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dir = match self.direction {
            Direction::Eval => "",
            Direction::Min => "min",
        };
        write!(f, "R{{{},{}}}{dir}=? [ {} ]", self.statistic, self.reward, self.formula)
    }
}

impl FromStr for Query {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_query(s)
    }
}

struct Cursor<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_ws(&mut self) {
        let rest = &self.text[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            pos: self.pos,
            msg: msg.into(),
        })
    }

    fn eat(&mut self, tok: &str) -> bool {
        self.skip_ws();
        if self.text[self.pos..].starts_with(tok) {
            self.pos += tok.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &str) -> Result<()> {
        if self.eat(tok) {
            Ok(())
        } else {
            self.err(format!("expected {tok:?}"))
        }
    }

    /// Characters up to (not including) the first of `stops`.
    fn until(&mut self, stops: &[char]) -> &'a str {
        self.skip_ws();
        let rest = &self.text[self.pos..];
        let end = rest.find(stops).unwrap_or(rest.len());
        self.pos += end;
        rest[..end].trim_end()
    }
}

fn statistic(c: &mut Cursor) -> Result<Statistic> {
    let start = c.pos;
    let name = c.until(&[',', '@', '}']);
    let with_alpha = |c: &mut Cursor, f: fn(RiskLevel) -> Statistic| -> Result<Statistic> {
        c.expect("@")?;
        let at = c.pos;
        let tok = c.until(&[',', '}']);
        let a: f64 = tok.parse().map_err(|_| Error::Syntax {
            pos: at,
            msg: format!("invalid risk level {tok:?}"),
        })?;
        let a = RiskLevel::new(a).map_err(|_| Error::Syntax {
            pos: at,
            msg: format!("risk level {a} not in (0, 1)"),
        })?;
        Ok(f(a))
    };
    match name {
        "E" => Ok(Statistic::Mean),
        "Var" => Ok(Statistic::Variance),
        "sd" => Ok(Statistic::StdDev),
        "mode" => Ok(Statistic::Mode),
        "VaR" => with_alpha(c, Statistic::VaR),
        "CVaR" => with_alpha(c, Statistic::CVaR),
        other => Err(Error::Syntax {
            pos: start,
            msg: format!("unknown statistic {other:?}; expected E, Var, sd, mode, VaR@a or CVaR@a"),
        }),
    }
}

pub fn parse_query(text: &str) -> Result<Query> {
    let mut c = Cursor { text, pos: 0 };
    c.expect("R")?;
    c.expect("{")?;
    let stat = statistic(&mut c)?;
    if stat.alpha().is_none() && c.eat("@") {
        return c.err(format!("{stat} takes no risk level"));
    }
    c.expect(",")?;
    let at = c.pos;
    let reward = c.until(&['}']);
    if reward.is_empty() || !reward.chars().all(|ch| ch.is_ascii_alphanumeric() || ch == '_') {
        return Err(Error::Syntax {
            pos: at,
            msg: format!("invalid reward name {reward:?}"),
        });
    }
    c.expect("}")?;
    let direction = if c.eat("min") {
        Direction::Min
    } else if c.eat("max") {
        return Err(Error::UnsupportedObjective(
            "maximisation is not supported".into(),
        ));
    } else {
        Direction::Eval
    };
    c.expect("=?")?;
    c.expect("[")?;
    let open = c.pos;
    let close = match text.rfind(']') {
        Some(i) if i >= open => i,
        _ => return c.err("expected \"]\""),
    };
    if !text[close + 1..].trim().is_empty() {
        return Err(Error::Syntax {
            pos: close + 1,
            msg: "trailing input after \"]\"".into(),
        });
    }
    let formula = parse_cosafe(&text[open..close]).map_err(|e| match e {
        Error::Syntax { pos, msg } => Error::Syntax { pos: pos + open, msg },
        e => e,
    })?;
    Query::new(stat, reward, direction, formula)
}
