//! Direct evaluation of the program tree: statements are walked as data,
//! variables and size symbols live in name-keyed environments, and
//! subroutine results are tabulated by argument values.

use std::collections::HashMap;

use rustc_hash::FxHashMap;

use super::ir::{Expr, Program, Stmt, Subroutine};
use crate::circuit::with_big_stack;
use crate::engine::NumericMode;
use crate::error::{Error, Result};
use crate::numeric::{choose, log_add, log_choose, PartitionValue};
use crate::size::SizeExpr;

#[derive(Default)]
struct Frame<'a> {
    ints: FxHashMap<&'a str, i64>,
    vals: FxHashMap<&'a str, f64>,
}

impl<'a> Frame<'a> {
    fn size(&self, e: &SizeExpr) -> Result<i64> {
        e.eval_with(|s| self.ints.get(s).copied())
            .ok_or_else(|| Error::Contract(format!("unbound size symbol in {e}")))
    }

    fn get(&self, v: &str) -> Result<f64> {
        self.vals
            .get(v)
            .copied()
            .ok_or_else(|| Error::Contract(format!("variable {v} read before it is written")))
    }
}

struct Machine<'a> {
    subs: HashMap<&'a str, &'a Subroutine>,
    memo: FxHashMap<&'a str, FxHashMap<Vec<i64>, f64>>,
    log: bool,
}

impl<'a> Machine<'a> {
    fn call(&mut self, name: &str, args: Vec<i64>) -> Result<f64> {
        let sub = *self
            .subs
            .get(name)
            .ok_or_else(|| Error::Contract(format!("call to undefined subroutine {name}")))?;
        if let Some(v) = self.memo.get(sub.name.as_str()).and_then(|t| t.get(&args)) {
            return Ok(*v);
        }
        if args.len() != sub.params.len() {
            return Err(Error::Contract(format!("{name} takes {} arguments", sub.params.len())));
        }
        let mut frame = Frame::default();
        for (p, a) in sub.params.iter().zip(&args) {
            frame.ints.insert(p, *a);
        }
        self.exec(&sub.body, &mut frame)?;
        let v = frame.get(&sub.result)?;
        self.memo.entry(sub.name.as_str()).or_default().insert(args, v);
        Ok(v)
    }

    fn exec(&mut self, stmts: &'a [Stmt], frame: &mut Frame<'a>) -> Result<()> {
        for s in stmts {
            match s {
                Stmt::Assign(v, e) => {
                    let x = self.eval(e, frame)?;
                    frame.vals.insert(v, x);
                }
                Stmt::AccumInit(v) => {
                    frame.vals.insert(v, if self.log { f64::NEG_INFINITY } else { 0.0 });
                }
                Stmt::AccumAdd(v, e) => {
                    let x = self.eval(e, frame)?;
                    let acc = frame.get(v)?;
                    frame.vals.insert(v, if self.log { log_add(acc, x) } else { acc + x });
                }
                Stmt::Loop { index, lower, upper, body } => {
                    let (lo, hi) = (frame.size(lower)?, frame.size(upper)?);
                    for i in lo..=hi {
                        frame.ints.insert(index, i);
                        self.exec(body, frame)?;
                    }
                    frame.ints.remove(index.as_str());
                }
            }
        }
        Ok(())
    }

    fn eval(&mut self, e: &Expr, frame: &Frame<'a>) -> Result<f64> {
        let log = self.log;
        Ok(match e {
            Expr::Const(c) => {
                if log {
                    c.ln()
                } else {
                    *c
                }
            }
            Expr::Var(v) => frame.get(v)?,
            Expr::Pow(b, k) => {
                let b = self.eval(b, frame)?;
                let k = frame.size(k)? as f64;
                if log {
                    k * b
                } else {
                    b.powf(k)
                }
            }
            Expr::Exp(w, k) => {
                let x = w * frame.size(k)? as f64;
                if log {
                    x
                } else {
                    x.exp()
                }
            }
            Expr::Choose(n, k) => {
                let (n, k) = (frame.size(n)?, frame.size(k)?);
                if n < 0 || k < 0 || k > n {
                    if log {
                        f64::NEG_INFINITY
                    } else {
                        0.0
                    }
                } else if log {
                    log_choose(n as u64, k as u64)?
                } else {
                    choose(n as u64, k as u64)
                }
            }
            Expr::Mul(a, b) => {
                let (a, b) = (self.eval(a, frame)?, self.eval(b, frame)?);
                if log {
                    a + b
                } else {
                    a * b
                }
            }
            Expr::Add(a, b) => {
                let (a, b) = (self.eval(a, frame)?, self.eval(b, frame)?);
                if log {
                    log_add(a, b)
                } else {
                    a + b
                }
            }
            Expr::Call(f, args) => {
                let args = args.iter().map(|a| frame.size(a)).collect::<Result<Vec<_>>>()?;
                self.call(f, args)?
            }
        })
    }
}

/// Runs the program and returns `Z` (linear) or `ln Z` (log space).
pub fn interpret(p: &Program, mode: NumericMode) -> Result<PartitionValue> {
    let raw = with_big_stack(|| {
        let mut m = Machine {
            subs: p.subroutines.iter().map(|s| (s.name.as_str(), s)).collect(),
            memo: FxHashMap::default(),
            log: mode == NumericMode::LogSpace,
        };
        let mut frame = Frame::default();
        m.exec(&p.body, &mut frame)?;
        frame.get(&p.result)
    })?;
    match mode {
        NumericMode::Linear if raw.is_finite() => Ok(PartitionValue::Linear(raw)),
        NumericMode::Linear => Err(Error::Overflow(format!("program value is {raw} in double precision"))),
        NumericMode::LogSpace if raw.is_nan() => Err(Error::Overflow("log value is NaN".into())),
        NumericMode::LogSpace => Ok(PartitionValue::LogSpace(raw)),
    }
}
