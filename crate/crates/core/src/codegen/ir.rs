//! Straight-line program representation with loops and memoized subroutines.
//!
//! Values are written in linear arithmetic; a log-space reading of the same
//! program is chosen at interpretation or emission time.

use std::collections::BTreeSet;
use std::fmt;

use crate::size::SizeExpr;

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(String),
    Pow(Box<Expr>, SizeExpr),
    /// `exp(weight * count)`.
    Exp(f64, SizeExpr),
    Choose(SizeExpr, SizeExpr),
    Mul(Box<Expr>, Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    /// Call to a subroutine with size arguments.
    Call(String, Vec<SizeExpr>),
}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn mul(a: Expr, b: Expr) -> Expr {
        Expr::Mul(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(a: Expr, b: Expr) -> Expr {
        Expr::Add(Box::new(a), Box::new(b))
    }

    pub fn pow(base: Expr, k: SizeExpr) -> Expr {
        Expr::Pow(Box::new(base), k)
    }

    /// Names of variables read.
    pub fn reads(&self, out: &mut Vec<String>) {
        match self {
            Expr::Var(v) => out.push(v.clone()),
            Expr::Pow(e, _) => e.reads(out),
            Expr::Mul(a, b) | Expr::Add(a, b) => {
                a.reads(out);
                b.reads(out);
            }
            Expr::Const(_) | Expr::Exp(..) | Expr::Choose(..) | Expr::Call(..) => {}
        }
    }

    pub fn calls(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Call(f, _) => {
                out.insert(f.clone());
            }
            Expr::Pow(e, _) => e.calls(out),
            Expr::Mul(a, b) | Expr::Add(a, b) => {
                a.calls(out);
                b.calls(out);
            }
            _ => {}
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Stmt {
    Assign(String, Expr),
    AccumInit(String),
    AccumAdd(String, Expr),
    /// `for index in lower..=upper`.
    Loop {
        index: String,
        lower: SizeExpr,
        upper: SizeExpr,
        body: Vec<Stmt>,
    },
}

/// A memoized function of size parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Subroutine {
    pub name: String,
    pub params: Vec<String>,
    pub body: Vec<Stmt>,
    pub result: String,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Program {
    /// Callees precede callers.
    pub subroutines: Vec<Subroutine>,
    pub body: Vec<Stmt>,
    pub result: String,
}

pub(crate) fn walk<'a>(stmts: &'a [Stmt], f: &mut impl FnMut(&'a Stmt)) {
    for s in stmts {
        f(s);
        if let Stmt::Loop { body, .. } = s {
            walk(body, f);
        }
    }
}

impl Program {
    pub fn subroutine(&self, name: &str) -> Option<&Subroutine> {
        self.subroutines.iter().find(|s| s.name == name)
    }

    /// Number of statements, counting loop headers, across all bodies.
    pub fn statement_count(&self) -> usize {
        let mut n = 0;
        for body in self.subroutines.iter().map(|s| &s.body).chain([&self.body]) {
            walk(body, &mut |_| n += 1);
        }
        n
    }

    /// Deepest loop nesting reached at run time, counting loops inside called subroutines.
    pub fn loop_depth(&self) -> usize {
        let mut depth_of: Vec<(String, usize)> = Vec::new();
        for s in &self.subroutines {
            let d = block_depth(&s.body, &depth_of);
            depth_of.push((s.name.clone(), d));
        }
        block_depth(&self.body, &depth_of)
    }
}

fn expr_depth(e: &Expr, callees: &[(String, usize)]) -> usize {
    let mut names = BTreeSet::new();
    e.calls(&mut names);
    names
        .iter()
        .filter_map(|n| callees.iter().find(|(c, _)| c == n).map(|(_, d)| *d))
        .max()
        .unwrap_or(0)
}

fn block_depth(stmts: &[Stmt], callees: &[(String, usize)]) -> usize {
    stmts
        .iter()
        .map(|s| match s {
            Stmt::Assign(_, e) | Stmt::AccumAdd(_, e) => expr_depth(e, callees),
            Stmt::AccumInit(_) => 0,
            Stmt::Loop { body, .. } => 1 + block_depth(body, callees),
        })
        .max()
        .unwrap_or(0)
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Pow(b, k) => write!(f, "pow({b}, {k})"),
            Expr::Exp(w, k) => write!(f, "exp({w} * {k})"),
            Expr::Choose(n, k) => write!(f, "Choose({n}, {k})"),
            Expr::Mul(a, b) => write!(f, "{a} * {b}"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Call(name, args) => {
                let a: Vec<String> = args.iter().map(|s| s.to_string()).collect();
                write!(f, "{name}({})", a.join(", "))
            }
        }
    }
}

fn fmt_block(f: &mut fmt::Formatter<'_>, stmts: &[Stmt], indent: usize) -> fmt::Result {
    let pad = "    ".repeat(indent);
    for s in stmts {
        match s {
            Stmt::Assign(v, e) => writeln!(f, "{pad}{v} = {e};")?,
            Stmt::AccumInit(v) => writeln!(f, "{pad}{v} = 0;")?,
            Stmt::AccumAdd(v, e) => writeln!(f, "{pad}{v} += {e};")?,
            Stmt::Loop { index, lower, upper, body } => {
                writeln!(f, "{pad}for ({index} = {lower}; {index} <= {upper}; {index}++) {{")?;
                fmt_block(f, body, indent + 1)?;
                writeln!(f, "{pad}}}")?;
            }
        }
    }
    Ok(())
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.subroutines {
            writeln!(f, "{}({}) {{", s.name, s.params.join(", "))?;
            fmt_block(f, &s.body, 1)?;
            writeln!(f, "    return {};", s.result)?;
            writeln!(f, "}}")?;
        }
        fmt_block(f, &self.body, 0)?;
        writeln!(f, "Z = {};", self.result)
    }
}
