//! Copy propagation and constant folding. Floating-point operations keep
//! their order, so pruned programs compute bit-identical linear results.

use std::collections::{HashMap, HashSet};

use super::ir::{walk, Expr, Program, Stmt};
use crate::numeric::choose;

pub fn prune(p: &Program) -> Program {
    let mut out = p.clone();
    let mut constants: HashMap<String, f64> = HashMap::new();
    for s in &mut out.subroutines {
        inline_constant_calls(&mut s.body, &constants);
        prune_body(&mut s.body, &s.result);
        if let [Stmt::Assign(v, Expr::Const(c))] = s.body.as_slice() {
            if s.params.is_empty() && *v == s.result {
                constants.insert(s.name.clone(), *c);
            }
        }
    }
    inline_constant_calls(&mut out.body, &constants);
    prune_body(&mut out.body, &out.result);
    let mut called = std::collections::BTreeSet::new();
    for body in out.subroutines.iter().map(|s| &s.body).chain([&out.body]) {
        walk(body, &mut |s| {
            if let Stmt::Assign(_, e) | Stmt::AccumAdd(_, e) = s {
                e.calls(&mut called);
            }
        });
    }
    out.subroutines.retain(|s| called.contains(&s.name));
    out
}

/// Replaces calls to parameterless subroutines that return a constant.
fn inline_constant_calls(stmts: &mut [Stmt], constants: &HashMap<String, f64>) {
    fn go(e: &mut Expr, constants: &HashMap<String, f64>) {
        match e {
            Expr::Call(f, args) if args.is_empty() => {
                if let Some(c) = constants.get(f) {
                    *e = Expr::Const(*c);
                }
            }
            Expr::Pow(b, _) => go(b, constants),
            Expr::Mul(a, b) | Expr::Add(a, b) => {
                go(a, constants);
                go(b, constants);
            }
            _ => {}
        }
    }
    for s in stmts {
        match s {
            Stmt::Assign(_, e) | Stmt::AccumAdd(_, e) => go(e, constants),
            Stmt::Loop { body, .. } => inline_constant_calls(body, constants),
            Stmt::AccumInit(_) => {}
        }
    }
}

fn prune_body(body: &mut Vec<Stmt>, result: &str) {
    loop {
        fold_block(body);
        if !propagate(body, result) {
            break;
        }
    }
}

fn usable(c: f64) -> bool {
    c.is_normal() || c == 0.0
}

fn fold(e: Expr) -> Expr {
    match e {
        Expr::Pow(b, k) => {
            let b = fold(*b);
            match (b, k.as_constant()) {
                (Expr::Const(c), Some(k)) if usable(c.powf(k as f64)) => Expr::Const(c.powf(k as f64)),
                (b, Some(1)) => b,
                (b, _) => Expr::Pow(Box::new(b), k),
            }
        }
        Expr::Exp(w, k) => match k.as_constant() {
            Some(n) if (w * n as f64).exp().is_normal() => Expr::Const((w * n as f64).exp()),
            _ => Expr::Exp(w, k),
        },
        Expr::Choose(n, k) => match (n.as_constant(), k.as_constant()) {
            (Some(n), Some(k)) if n >= 0 && k >= 0 && choose(n as u64, k as u64).is_normal() => {
                Expr::Const(choose(n as u64, k as u64))
            }
            _ => Expr::Choose(n, k),
        },
        Expr::Mul(a, b) => match (fold(*a), fold(*b)) {
            (Expr::Const(1.0), b) => b,
            (a, Expr::Const(1.0)) => a,
            (Expr::Const(x), Expr::Const(y)) if (x * y).is_normal() => Expr::Const(x * y),
            (a, b) => Expr::mul(a, b),
        },
        Expr::Add(a, b) => match (fold(*a), fold(*b)) {
            (Expr::Const(0.0), b) => b,
            (a, Expr::Const(0.0)) => a,
            (Expr::Const(x), Expr::Const(y)) if (x + y).is_finite() => Expr::Const(x + y),
            (a, b) => Expr::add(a, b),
        },
        e => e,
    }
}

fn fold_block(stmts: &mut [Stmt]) {
    for s in stmts {
        match s {
            Stmt::Assign(_, e) | Stmt::AccumAdd(_, e) => *e = fold(std::mem::replace(e, Expr::Const(0.0))),
            Stmt::Loop { body, .. } => fold_block(body),
            Stmt::AccumInit(_) => {}
        }
    }
}

fn substitute(e: &mut Expr, var: &str, by: &Expr) {
    match e {
        Expr::Var(v) if v == var => *e = by.clone(),
        Expr::Pow(b, _) => substitute(b, var, by),
        Expr::Mul(a, b) | Expr::Add(a, b) => {
            substitute(a, var, by);
            substitute(b, var, by);
        }
        _ => {}
    }
}

fn reads_of(s: &Stmt) -> Vec<String> {
    let mut out = Vec::new();
    if let Stmt::Assign(_, e) | Stmt::AccumAdd(_, e) = s {
        e.reads(&mut out);
    }
    out
}

fn writes_accumulator(s: &Stmt, acc: &HashSet<String>) -> bool {
    let mut hit = false;
    walk(std::slice::from_ref(s), &mut |t| {
        if let Stmt::AccumInit(v) | Stmt::AccumAdd(v, _) = t {
            hit |= acc.contains(v);
        }
    });
    hit
}

/// Inlines one single-use scalar into its reader in the same block. Returns
/// whether anything changed.
fn propagate(body: &mut Vec<Stmt>, result: &str) -> bool {
    let mut reads: HashMap<String, usize> = HashMap::new();
    let mut defs: HashMap<String, usize> = HashMap::new();
    let mut accumulators: HashSet<String> = HashSet::new();
    walk(body, &mut |s| {
        for r in reads_of(s) {
            *reads.entry(r).or_insert(0) += 1;
        }
        match s {
            Stmt::Assign(v, _) => *defs.entry(v.clone()).or_insert(0) += 1,
            Stmt::AccumInit(v) | Stmt::AccumAdd(v, _) => {
                accumulators.insert(v.clone());
            }
            Stmt::Loop { .. } => {}
        }
    });
    *reads.entry(result.to_string()).or_insert(0) += 1;
    let candidate = |v: &str| defs.get(v) == Some(&1) && reads.get(v) == Some(&1) && !accumulators.contains(v);
    propagate_block(body, &candidate, &accumulators)
}

fn propagate_block(block: &mut Vec<Stmt>, candidate: &impl Fn(&str) -> bool, acc: &HashSet<String>) -> bool {
    for j in 0..block.len() {
        let Stmt::Assign(v, e) = &block[j] else { continue };
        if !candidate(v) {
            continue;
        }
        let Some(k) = (j + 1..block.len()).find(|&k| reads_of(&block[k]).contains(v)) else { continue };
        let mut read = Vec::new();
        e.reads(&mut read);
        let touched: HashSet<String> = read.into_iter().filter(|r| acc.contains(r)).collect();
        if block[j + 1..k].iter().any(|s| writes_accumulator(s, &touched)) {
            continue;
        }
        let (v, e) = (v.clone(), e.clone());
        if let Stmt::Assign(_, target) | Stmt::AccumAdd(_, target) = &mut block[k] {
            substitute(target, &v, &e);
        }
        block.remove(j);
        return true;
    }
    for s in block.iter_mut() {
        if let Stmt::Loop { body, .. } = s {
            if propagate_block(body, candidate, acc) {
                return true;
            }
        }
    }
    false
}
