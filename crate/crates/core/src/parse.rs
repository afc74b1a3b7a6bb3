//! Text format for MLNs and observations.
//!
//! ```text
//! # comment lines start with '#'
//! population x 5
//! population m 2
//! wf 1.2 : R(x,m) & S(x,m)
//! wf 0.2 : S(x,m) & T(x)
//! observe T(X1) = true
//! observe count T(x) = 2
//! ```

use crate::error::{Error, Result};
use crate::mln::{Formula, Literal, Mln, Population, Prv, Term, WeightedFormula};
use crate::shatter::Observation;

/// A parsed model file: the MLN and the evidence to shatter it on.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub mln: Mln,
    pub observations: Vec<Observation>,
}

struct Cursor<'a> {
    line: usize,
    text: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            line: self.line,
            column: self.text[..self.pos].chars().count() + 1,
            message: msg.into(),
        })
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek(&self) -> Option<char> {
        self.text[self.pos..].chars().next()
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos >= self.text.len()
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            self.err(format!("expected '{c}'"))
        }
    }

    fn ident(&mut self) -> Result<String> {
        self.skip_ws();
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_alphanumeric() || c == '_' {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
        if start == self.pos {
            return self.err("expected an identifier");
        }
        Ok(self.text[start..self.pos].to_string())
    }

    /// A whitespace-delimited token.
    fn word(&mut self) -> Result<String> {
        self.skip_ws();
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_whitespace() || c == ':' || c == '=' {
                break;
            }
            self.pos += c.len_utf8();
        }
        if start == self.pos {
            return self.err("unexpected end of line");
        }
        Ok(self.text[start..self.pos].to_string())
    }

    fn integer(&mut self) -> Result<u64> {
        self.skip_ws();
        let save = self.pos;
        let w = self.word()?;
        w.parse().or_else(|_| {
            self.pos = save;
            self.err(format!("expected a nonnegative integer, found '{w}'"))
        })
    }

    fn real(&mut self) -> Result<f64> {
        self.skip_ws();
        let save = self.pos;
        let w = self.word()?;
        match w.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => {
                self.pos = save;
                self.err(format!("expected a real number, found '{w}'"))
            }
        }
    }

    fn boolean(&mut self) -> Result<bool> {
        self.skip_ws();
        let save = self.pos;
        match self.ident()?.as_str() {
            "true" => Ok(true),
            "false" => Ok(false),
            other => {
                self.pos = save;
                self.err(format!("expected true or false, found '{other}'"))
            }
        }
    }

    fn prv(&mut self) -> Result<Prv> {
        self.skip_ws();
        let save = self.pos;
        let name = self.ident()?;
        if !name.starts_with(|c: char| c.is_uppercase()) {
            self.pos = save;
            return self.err(format!("predicate names start with an uppercase letter: '{name}'"));
        }
        let mut args = Vec::new();
        if self.eat('(') {
            loop {
                let t = self.ident()?;
                if t.starts_with(|c: char| c.is_uppercase()) {
                    args.push(Term::Const(t));
                } else {
                    args.push(Term::Var(t));
                }
                if self.eat(')') {
                    break;
                }
                self.expect(',')?;
            }
        }
        Ok(Prv::new(name, args))
    }

    fn literal(&mut self) -> Result<Literal> {
        let positive = !self.eat('!');
        Ok(Literal::new(self.prv()?, positive))
    }
}

pub fn parse_model(text: &str) -> Result<Model> {
    let mut mln = Mln::new();
    let mut observations = Vec::new();
    let mut declared: Vec<(String, usize)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let mut c = Cursor {
            line: i + 1,
            text: raw,
            pos: 0,
        };
        if c.at_end() || c.peek() == Some('#') {
            continue;
        }
        let keyword = c.ident()?;
        match keyword.as_str() {
            "population" => {
                let save = c.pos;
                let name = c.ident()?;
                if !name.starts_with(|ch: char| ch.is_lowercase()) {
                    c.pos = save;
                    return c.err(format!("logical variable names start with a lowercase letter: '{name}'"));
                }
                let size = c.integer()?;
                if mln.populations.contains_key(&name) {
                    c.pos = save;
                    return c.err(format!("population {name} declared twice"));
                }
                mln.populations.insert(name.clone(), Population::new(&name, size));
                declared.push((name, i + 1));
            }
            "wf" => {
                let weight = c.real()?;
                c.expect(':')?;
                let mut lits = Vec::new();
                loop {
                    let start = c.pos;
                    let l = c.literal()?;
                    for t in &l.prv.args {
                        match t {
                            Term::Const(k) => {
                                c.pos = start;
                                return c.err(format!(
                                    "constant {k} in a weighted formula; use an observe line for evidence on individuals"
                                ));
                            }
                            Term::Var(v) if !mln.populations.contains_key(v) => {
                                c.pos = start;
                                return c.err(format!("logical variable {v} has no population"));
                            }
                            _ => {}
                        }
                    }
                    lits.push(l);
                    if c.at_end() {
                        break;
                    }
                    c.expect('&')?;
                }
                mln.wfs.push(WeightedFormula::new(Formula::conj(lits), weight));
            }
            "observe" => {
                c.skip_ws();
                let save = c.pos;
                let word = c.ident()?;
                if word == "count" {
                    let prv = c.prv()?;
                    let var = match prv.args.as_slice() {
                        [Term::Var(v)] => v.clone(),
                        _ => {
                            c.pos = save;
                            return c.err("count observations take a unary predicate over a logical variable");
                        }
                    };
                    c.expect('=')?;
                    let count = c.integer()?;
                    observations.push(Observation::Count {
                        predicate: prv.predicate,
                        lvar: var,
                        count,
                    });
                } else {
                    c.pos = save;
                    let prv = c.prv()?;
                    if !prv.is_ground() {
                        c.pos = save;
                        return c.err("observed atoms must be ground");
                    }
                    c.expect('=')?;
                    let value = c.boolean()?;
                    observations.push(Observation::Ground { prv, value });
                }
            }
            other => {
                c.pos = 0;
                return c.err(format!("unknown directive '{other}'"));
            }
        }
        if !c.at_end() {
            return c.err("trailing input");
        }
    }
    if let Err(Error::Invalid(msg)) = mln.validate() {
        return Err(Error::Parse {
            line: 0,
            column: 0,
            message: msg,
        });
    }
    Ok(Model { mln, observations })
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = "# example\npopulation x 5\npopulation m 2\nwf 1.2 : R(x,m) & S(x,m)\nwf 0.2 : S(x,m) & T(x)\nobserve T(X1) = true\nobserve count T(x) = 2\n";

    #[test]
    fn parses_the_reference_file() {
        let model = parse_model(EXAMPLE).unwrap();
        assert_eq!(model.mln.wfs.len(), 2);
        assert_eq!(model.mln.populations["x"].concrete_size(), Some(5));
        assert_eq!(model.observations.len(), 2);
        assert!(matches!(&model.observations[1], Observation::Count { count: 2, .. }));
    }

    #[test]
    fn reports_line_and_column() {
        let err = parse_model("population x 5\nwf 1.0 : R(x) & \n").unwrap_err();
        match err {
            Error::Parse { line, column, .. } => {
                assert_eq!(line, 2);
                assert!(column >= 16, "column {column}");
            }
            e => panic!("{e}"),
        }
        let err = parse_model("population x 5\nwf abc : R(x)\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, column: 4, .. }), "{err}");
        assert!(parse_model("wf 1 : R(y)\n").is_err());
        assert!(parse_model("population x 2\nwf 1 : R(x) & R(x,x)\n").is_err());
    }

    #[test]
    fn negation_and_arity_zero() {
        let m = parse_model("wf -0.5 : !A & B\nobserve A = false\n").unwrap();
        assert_eq!(m.mln.wfs[0].formula.literals().len(), 2);
        assert!(!m.mln.wfs[0].formula.literals()[0].positive);
        assert!(m.mln.wfs[0].lvars.is_empty());
    }
}
