//! Turns a lifted plan into a program: straight-line code for nodes used
//! once, memoized subroutines for shared or loop-invariant nodes.

pub mod emit;
pub mod interp;
pub mod ir;
pub mod prune;
pub mod toolchain;

use std::collections::{BTreeMap, HashMap};

use crate::canon::canonical_symbol;
use crate::circuit::{Circuit, Edge, Step};
use crate::error::Result;
use crate::heuristics::CaseAnalysisOrder;
use crate::mln::Mln;
use crate::size::SizeExpr;

pub use emit::{emit, EmitterConfig};
pub use interp::interpret;
pub use ir::{Expr, Program, Stmt, Subroutine};
pub use prune::prune;
pub use toolchain::{build_and_run, RunOutput, ToolchainConfig};

/// Compiles the lifted computation of `Z(m)` under `order` into a program.
pub fn compile(m: &Mln, order: &CaseAnalysisOrder) -> Result<Program> {
    Ok(compile_circuit(&Circuit::build(m, order)?))
}

pub fn compile_circuit(c: &Circuit) -> Program {
    let mut l = Lowerer {
        c,
        vars: 0,
        indices: 0,
        names: BTreeMap::new(),
        subroutines: Vec::new(),
    };
    let result = l.fresh_var();
    let mut body = Vec::new();
    l.lower_edge(&c.root, &HashMap::new(), &result, &mut body);
    Program {
        subroutines: l.subroutines,
        body,
        result,
    }
}

struct Lowerer<'a> {
    c: &'a Circuit,
    vars: usize,
    indices: usize,
    names: BTreeMap<usize, String>,
    subroutines: Vec<Subroutine>,
}

type Scope = HashMap<String, SizeExpr>;

impl Lowerer<'_> {
    fn fresh_var(&mut self) -> String {
        self.vars += 1;
        format!("v{}", self.vars)
    }

    fn fresh_index(&mut self) -> String {
        self.indices += 1;
        format!("i{}", self.indices)
    }

    fn is_subroutine(&self, id: usize) -> bool {
        let n = &self.c.nodes[id];
        n.memo || n.in_degree > 1
    }

    fn lower_edge(&mut self, e: &Edge, scope: &Scope, target: &str, out: &mut Vec<Stmt>) {
        let args: Vec<SizeExpr> = e.args.iter().map(|a| a.substitute(scope)).collect();
        if self.is_subroutine(e.node) {
            let name = self.subroutine(e.node);
            out.push(Stmt::Assign(target.to_string(), Expr::Call(name, args)));
        } else {
            self.lower_node(e.node, &args, target, out);
        }
    }

    fn subroutine(&mut self, id: usize) -> String {
        if let Some(n) = self.names.get(&id) {
            return n.clone();
        }
        let name = format!("f{}", self.names.len() + 1);
        self.names.insert(id, name.clone());
        let params: Vec<String> = (0..self.c.nodes[id].nsyms).map(canonical_symbol).collect();
        let args: Vec<SizeExpr> = params.iter().map(|p| SizeExpr::symbol(p.clone())).collect();
        let result = self.fresh_var();
        let mut body = Vec::new();
        self.lower_node(id, &args, &result, &mut body);
        self.subroutines.push(Subroutine {
            name: name.clone(),
            params,
            body,
            result,
        });
        name
    }

    fn lower_node(&mut self, id: usize, args: &[SizeExpr], target: &str, out: &mut Vec<Stmt>) {
        let node = &self.c.nodes[id];
        let mut scope: Scope = args
            .iter()
            .enumerate()
            .map(|(k, a)| (canonical_symbol(k), a.clone()))
            .collect();
        let assign = |out: &mut Vec<Stmt>, e: Expr| out.push(Stmt::Assign(target.to_string(), e));
        match &node.step {
            Step::TrueEval(factors) => {
                let e = factors
                    .iter()
                    .map(|(w, s)| Expr::Exp(*w, s.substitute(&scope)))
                    .reduce(Expr::mul)
                    .unwrap_or(Expr::Const(1.0));
                assign(out, e);
            }
            Step::Simplify { eliminated, child } => {
                let v = self.fresh_var();
                self.lower_edge(child, &scope, &v, out);
                let factor = Expr::pow(Expr::Const(2.0), eliminated.substitute(&scope));
                assign(out, Expr::mul(factor, Expr::Var(v)));
            }
            Step::Components(parts) => {
                let vars: Vec<String> = parts.iter().map(|_| self.fresh_var()).collect();
                for (p, v) in parts.iter().zip(&vars) {
                    self.lower_edge(p, &scope, v, out);
                }
                let e = vars.into_iter().map(Expr::Var).reduce(Expr::mul).unwrap_or(Expr::Const(1.0));
                assign(out, e);
            }
            Step::Decompose { exponent, child } => {
                let v = self.fresh_var();
                self.lower_edge(child, &scope, &v, out);
                assign(out, Expr::pow(Expr::Var(v), exponent.substitute(&scope)));
            }
            Step::LiftedCase { bound, child } => {
                let upper = bound.substitute(&scope);
                let index = self.fresh_index();
                scope.insert(node.loop_symbol(), SizeExpr::symbol(index.clone()));
                out.push(Stmt::AccumInit(target.to_string()));
                let mut body = Vec::new();
                let v = self.fresh_var();
                self.lower_edge(child, &scope, &v, &mut body);
                body.push(Stmt::AccumAdd(
                    target.to_string(),
                    Expr::mul(Expr::Choose(upper.clone(), SizeExpr::symbol(index.clone())), Expr::Var(v)),
                ));
                out.push(Stmt::Loop {
                    index,
                    lower: SizeExpr::zero(),
                    upper,
                    body,
                });
            }
            Step::Unrolled { bound, children } => {
                out.push(Stmt::AccumInit(target.to_string()));
                for (i, ch) in children.iter().enumerate() {
                    let v = self.fresh_var();
                    self.lower_edge(ch, &scope, &v, out);
                    let c = Expr::Choose(SizeExpr::constant(*bound as i64), SizeExpr::constant(i as i64));
                    out.push(Stmt::AccumAdd(target.to_string(), Expr::mul(c, Expr::Var(v))));
                }
            }
            Step::GroundCase { on_true, on_false } => {
                let a = self.fresh_var();
                let b = self.fresh_var();
                self.lower_edge(on_true, &scope, &a, out);
                self.lower_edge(on_false, &scope, &b, out);
                assign(out, Expr::add(Expr::Var(a), Expr::Var(b)));
            }
            Step::GroundLVar(child) => {
                let v = self.fresh_var();
                self.lower_edge(child, &scope, &v, out);
                assign(out, Expr::Var(v));
            }
        }
    }
}
