//! Syntactically co-safe LTL: atoms, negated atoms, `&`, `|`, `X`, `U`, `F`.
//!
//! Negation is pushed onto atoms during parsing, so every [`Formula`] value is
//! in the fragment by construction.

use std::collections::BTreeSet;
use std::fmt;

use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    True,
    False,
    Atom(String),
    NotAtom(String),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Next(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
    Eventually(Box<Formula>),
}

impl Formula {
    pub fn atom(name: &str) -> Formula {
        Formula::Atom(name.to_string())
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn next(a: Formula) -> Formula {
        Formula::Next(Box::new(a))
    }

    pub fn until(a: Formula, b: Formula) -> Formula {
        Formula::Until(Box::new(a), Box::new(b))
    }

    pub fn eventually(a: Formula) -> Formula {
        Formula::Eventually(Box::new(a))
    }

    /// Atomic propositions occurring in the formula, sorted.
    pub fn atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom(a) | Formula::NotAtom(a) => {
                out.insert(a.clone());
            }
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Until(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
            Formula::Next(a) | Formula::Eventually(a) => a.collect_atoms(out),
        }
    }

    /// Nesting depth of operators; atoms and constants have depth 0.
    pub fn depth(&self) -> usize {
        match self {
            Formula::True | Formula::False | Formula::Atom(_) | Formula::NotAtom(_) => 0,
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Until(a, b) => {
                1 + a.depth().max(b.depth())
            }
            Formula::Next(a) | Formula::Eventually(a) => 1 + a.depth(),
        }
    }

    /// Negation, defined only where the result stays in the fragment.
    fn negate(self) -> std::result::Result<Formula, Formula> {
        Ok(match self {
            Formula::True => Formula::False,
            Formula::False => Formula::True,
            Formula::Atom(a) => Formula::NotAtom(a),
            Formula::NotAtom(a) => Formula::Atom(a),
            Formula::And(a, b) => Formula::or(a.negate()?, b.negate()?),
            Formula::Or(a, b) => Formula::and(a.negate()?, b.negate()?),
            f => return Err(f),
        })
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => f.write_str("true"),
            Formula::False => f.write_str("false"),
            Formula::Atom(a) => f.write_str(a),
            Formula::NotAtom(a) => write!(f, "!{a}"),
            Formula::And(a, b) => write!(f, "({a} & {b})"),
            Formula::Or(a, b) => write!(f, "({a} | {b})"),
            Formula::Next(a) => write!(f, "(X {a})"),
            Formula::Until(a, b) => write!(f, "({a} U {b})"),
            Formula::Eventually(a) => write!(f, "(F {a})"),
        }
    }
}

impl std::str::FromStr for Formula {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_cosafe(s)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Not,
    And,
    Or,
    LParen,
    RParen,
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let tok = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'!' => Tok::Not,
            b'&' => Tok::And,
            b'|' => Tok::Or,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((start, Tok::Ident(text[start..i].to_string())));
                continue;
            }
            _ => {
                return Err(Error::Syntax {
                    pos: i,
                    msg: format!("unexpected character {:?}", text[i..].chars().next().unwrap()),
                })
            }
        };
        out.push((i, tok));
        i += 1;
        // `&&` and `||` are accepted as synonyms
        if (c == b'&' || c == b'|') && bytes.get(i) == Some(&c) {
            i += 1;
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.1)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |t| t.0)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            pos: self.offset(),
            msg: msg.into(),
        })
    }

    fn is_ident(&self, name: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == name)
    }

    fn or(&mut self) -> Result<Formula> {
        let mut lhs = self.and()?;
        while self.peek() == Some(&Tok::Or) {
            self.pos += 1;
            lhs = Formula::or(lhs, self.and()?);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Formula> {
        let mut lhs = self.until()?;
        while self.peek() == Some(&Tok::And) {
            self.pos += 1;
            lhs = Formula::and(lhs, self.until()?);
        }
        Ok(lhs)
    }

    fn until(&mut self) -> Result<Formula> {
        let lhs = self.unary()?;
        if self.is_ident("U") {
            self.pos += 1;
            return Ok(Formula::until(lhs, self.until()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula> {
        let start = self.offset();
        match self.peek().cloned() {
            Some(Tok::Not) => {
                self.pos += 1;
                let inner = self.unary()?;
                inner
                    .negate()
                    .map_err(|f| Error::NotCosafe(format!("negation over temporal operator in !{f}")))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let f = self.or()?;
                if self.peek() != Some(&Tok::RParen) {
                    return self.err("expected ')'");
                }
                self.pos += 1;
                Ok(f)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                match name.as_str() {
                    "X" => Ok(Formula::next(self.unary()?)),
                    "F" => Ok(Formula::eventually(self.unary()?)),
                    "G" => {
                        let inner = self.unary()?;
                        Err(Error::NotCosafe(format!("G {inner}")))
                    }
                    "U" => Err(Error::Syntax {
                        pos: start,
                        msg: "'U' needs a left operand".into(),
                    }),
                    "true" => Ok(Formula::True),
                    "false" => Ok(Formula::False),
                    _ => Ok(Formula::Atom(name)),
                }
            }
            Some(t) => self.err(format!("unexpected token {t:?}")),
            None => self.err("unexpected end of formula"),
        }
    }
}

/// Parses the co-safe fragment. Precedence from tightest: `! X F`, then `U`
/// (right associative), then `&`, then `|`.
pub fn parse_cosafe(text: &str) -> Result<Formula> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
        end: text.len(),
    };
    let f = p.or()?;
    if p.pos != p.toks.len() {
        return p.err("trailing input");
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_examples() {
        assert_eq!(parse_cosafe("F g").unwrap(), Formula::eventually(Formula::atom("g")));
        let f = parse_cosafe("(F w1) & (F w2) & (F w3)").unwrap();
        assert_eq!(f.atoms().len(), 3);
        assert_eq!(f.to_string(), "(((F w1) & (F w2)) & (F w3))");
        let f = parse_cosafe("F (g1 & F g2)").unwrap();
        assert_eq!(f.to_string(), "(F (g1 & (F g2)))");
    }

    #[test]
    fn precedence() {
        // F binds tighter than U, U tighter than &, & tighter than |
        let f = parse_cosafe("a | b & F c U d").unwrap();
        let expect = Formula::or(
            Formula::atom("a"),
            Formula::and(
                Formula::atom("b"),
                Formula::until(Formula::eventually(Formula::atom("c")), Formula::atom("d")),
            ),
        );
        assert_eq!(f, expect);
        let f = parse_cosafe("a U b U c").unwrap();
        assert_eq!(f.to_string(), "(a U (b U c))");
    }

    #[test]
    fn negation_is_pushed_to_atoms() {
        let f = parse_cosafe("!(a & !b)").unwrap();
        assert_eq!(f, Formula::or(Formula::NotAtom("a".into()), Formula::atom("b")));
    }

    #[test]
    fn rejects_non_cosafe() {
        assert!(matches!(parse_cosafe("G g"), Err(Error::NotCosafe(_))));
        assert!(matches!(parse_cosafe("!F a"), Err(Error::NotCosafe(_))));
        assert!(matches!(parse_cosafe("!(a U b)"), Err(Error::NotCosafe(_))));
    }

    #[test]
    fn syntax_errors_carry_positions() {
        match parse_cosafe("F (a & b") {
            Err(Error::Syntax { pos, .. }) => assert_eq!(pos, 8),
            other => panic!("{other:?}"),
        }
        match parse_cosafe("a $ b") {
            Err(Error::Syntax { pos, .. }) => assert_eq!(pos, 2),
            other => panic!("{other:?}"),
        }
        assert!(parse_cosafe("").is_err());
        assert!(parse_cosafe("a b").is_err());
        assert!(parse_cosafe("U a").is_err());
    }

    pub(crate) fn arb_formula(depth: u32) -> impl Strategy<Value = Formula> {
        let leaf = prop_oneof![
            Just(Formula::True),
            prop::sample::select(vec!["a", "b", "c"]).prop_map(Formula::atom),
            prop::sample::select(vec!["a", "b", "c"]).prop_map(|a| Formula::NotAtom(a.into())),
        ];
        leaf.prop_recursive(depth, 24, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::or(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::until(a, b)),
                inner.clone().prop_map(Formula::next),
                inner.prop_map(Formula::eventually),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_parse_round_trip(f in arb_formula(4)) {
            prop_assert_eq!(parse_cosafe(&f.to_string()).unwrap(), f);
        }
    }
}
