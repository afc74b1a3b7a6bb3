//! The lifted computation as a DAG. Each node is a canonical sub-MLN whose
//! population sizes are polynomials in its own size symbols `s0, s1, ..`;
//! edges say how a child's symbols are expressed in the parent's.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use crate::canon::{canonical_form, CanonicalKey};
use crate::error::{Error, Result};
use crate::heuristics::CaseAnalysisOrder;
use crate::mln::Mln;
use crate::rules::{self, RuleApplication, RuleKind};
use crate::size::SizeExpr;

/// Recursion limit on rule applications along one path.
pub const MAX_DEPTH: usize = 20_000;
const STACK_BYTES: usize = 1 << 30;

/// Runs `f` on a thread with a large stack; plans over grounded
/// populations can recurse deeply.
pub(crate) fn with_big_stack<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    std::thread::scope(|s| {
        std::thread::Builder::new()
            .stack_size(STACK_BYTES)
            .spawn_scoped(s, f)
            .expect("spawn worker thread")
            .join()
            .unwrap_or_else(|e| std::panic::resume_unwind(e))
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub node: usize,
    /// `args[k]` is the value of the child's `s{k}` in terms of the parent's symbols.
    pub args: Vec<SizeExpr>,
}

#[derive(Clone, Debug)]
pub enum Step {
    TrueEval(Vec<(f64, SizeExpr)>),
    Simplify { eliminated: SizeExpr, child: Edge },
    Components(Vec<Edge>),
    Decompose { exponent: SizeExpr, child: Edge },
    /// Sum over `s{nsyms}` from 0 to `bound` of `C(bound, s{nsyms}) * child`.
    LiftedCase { bound: SizeExpr, child: Edge },
    /// A lifted case whose bound is a constant and whose instances are planned separately.
    Unrolled { bound: u64, children: Vec<Edge> },
    GroundCase { on_true: Edge, on_false: Edge },
    GroundLVar(Edge),
}

impl Step {
    pub fn edges(&self) -> Vec<&Edge> {
        match self {
            Step::TrueEval(_) => vec![],
            Step::Simplify { child, .. } | Step::Decompose { child, .. } | Step::LiftedCase { child, .. } => {
                vec![child]
            }
            Step::GroundLVar(child) => vec![child],
            Step::Components(cs) | Step::Unrolled { children: cs, .. } => cs.iter().collect(),
            Step::GroundCase { on_true, on_false } => vec![on_true, on_false],
        }
    }

    pub fn kind(&self) -> RuleKind {
        match self {
            Step::TrueEval(_) => RuleKind::TrueEval,
            Step::Simplify { .. } => RuleKind::Simplify,
            Step::Components(_) => RuleKind::Components,
            Step::Decompose { .. } => RuleKind::Decomposer,
            Step::LiftedCase { .. } | Step::Unrolled { .. } => RuleKind::LiftedCase,
            Step::GroundCase { .. } => RuleKind::GroundCase,
            Step::GroundLVar(_) => RuleKind::GroundLVar,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Node {
    pub key: CanonicalKey,
    /// Number of size symbols `s0..` the node is parameterized by.
    pub nsyms: usize,
    pub step: Step,
    /// Results are worth tabulating by symbol values: the node sits under
    /// more loops than it has parameters and itself contains a loop.
    pub memo: bool,
    pub in_degree: usize,
}

impl Node {
    /// Name of the loop index a lifted case at this node binds.
    pub fn loop_symbol(&self) -> String {
        crate::canon::canonical_symbol(self.nsyms)
    }
}

#[derive(Clone, Debug)]
pub struct Circuit {
    /// Children precede parents.
    pub nodes: Vec<Node>,
    pub root: Edge,
    pub build_time: Duration,
}

struct Builder<'a> {
    order: &'a CaseAnalysisOrder,
    nodes: Vec<Node>,
    index: HashMap<CanonicalKey, usize>,
}

impl Builder<'_> {
    fn edge(&mut self, m: &Mln, depth: usize) -> Result<Edge> {
        let form = canonical_form(m);
        let args: Vec<SizeExpr> = form.symbols.iter().map(|s| SizeExpr::symbol(s.clone())).collect();
        if let Some(&node) = self.index.get(&form.key) {
            return Ok(Edge { node, args });
        }
        if depth > MAX_DEPTH {
            return Err(Error::Contract(format!("rule recursion exceeded {MAX_DEPTH} levels")));
        }
        let c = &form.mln;
        let step = match rules::select(c, self.order)? {
            RuleApplication::TrueEval(f) => Step::TrueEval(f),
            RuleApplication::Simplify { child, eliminated } => Step::Simplify {
                eliminated,
                child: self.edge(&child, depth + 1)?,
            },
            RuleApplication::Components(parts) => Step::Components(
                parts.iter().map(|p| self.edge(p, depth + 1)).collect::<Result<_>>()?,
            ),
            RuleApplication::Decompose { child, exponent } => Step::Decompose {
                exponent,
                child: self.edge(&child, depth + 1)?,
            },
            app @ RuleApplication::LiftedCase { .. } => {
                let RuleApplication::LiftedCase { child, bound, .. } = &app else { unreachable!() };
                match self.edge(child, depth + 1) {
                    Ok(e) => Step::LiftedCase {
                        bound: bound.clone(),
                        child: e,
                    },
                    Err(Error::NeedsConcrete(_)) if bound.is_constant() => {
                        let instances = app.lifted_instances().expect("constant bound");
                        Step::Unrolled {
                            bound: bound.as_constant().unwrap() as u64,
                            children: instances
                                .iter()
                                .map(|(_, m)| self.edge(m, depth + 1))
                                .collect::<Result<_>>()?,
                        }
                    }
                    Err(e) => return Err(e),
                }
            }
            RuleApplication::GroundCase { on_true, on_false } => Step::GroundCase {
                on_true: self.edge(&on_true, depth + 1)?,
                on_false: self.edge(&on_false, depth + 1)?,
            },
            RuleApplication::GroundLVar(child) => Step::GroundLVar(self.edge(&child, depth + 1)?),
        };
        let id = self.nodes.len();
        self.nodes.push(Node {
            key: form.key.clone(),
            nsyms: form.symbols.len(),
            step,
            memo: false,
            in_degree: 0,
        });
        self.index.insert(form.key, id);
        Ok(Edge { node: id, args })
    }
}

impl Circuit {
    /// Plans the lifted computation of `Z(m)`, branching in `order`.
    pub fn build(m: &Mln, order: &CaseAnalysisOrder) -> Result<Circuit> {
        let start = Instant::now();
        let m = m.clone().prune_populations();
        let (nodes, root) = with_big_stack(|| {
            let mut b = Builder {
                order,
                nodes: Vec::new(),
                index: HashMap::new(),
            };
            let root = b.edge(&m, 0)?;
            Ok::<_, Error>((b.nodes, root))
        })?;
        let mut c = Circuit {
            nodes,
            root,
            build_time: Duration::ZERO,
        };
        c.analyse();
        c.build_time = start.elapsed();
        Ok(c)
    }

    fn analyse(&mut self) {
        let n = self.nodes.len();
        let mut in_degree = vec![0usize; n];
        for node in &self.nodes {
            for e in node.step.edges() {
                in_degree[e.node] += 1;
            }
        }
        in_degree[self.root.node] += 1;
        let mut has_loop = vec![false; n];
        for i in 0..n {
            has_loop[i] = matches!(self.nodes[i].step, Step::LiftedCase { .. })
                || self.nodes[i].step.edges().iter().any(|e| has_loop[e.node]);
        }
        // Loop indices in scope on entry, maximized over paths; a memoized
        // node starts a fresh scope holding only its parameters.
        let mut scope = vec![0usize; n];
        for i in (0..n).rev() {
            let node = &self.nodes[i];
            let memo = has_loop[i] && node.nsyms < scope[i];
            let inner = if memo { node.nsyms } else { scope[i] }
                + usize::from(matches!(node.step, Step::LiftedCase { .. }));
            for e in node.step.edges() {
                scope[e.node] = scope[e.node].max(inner);
            }
            self.nodes[i].memo = memo;
            self.nodes[i].in_degree = in_degree[i];
        }
    }

    /// Deepest nesting of lifted-case loops.
    pub fn nesting_depth(&self) -> usize {
        let mut depth = vec![0usize; self.nodes.len()];
        for (i, node) in self.nodes.iter().enumerate() {
            let inner = node.step.edges().iter().map(|e| depth[e.node]).max().unwrap_or(0);
            depth[i] = inner + usize::from(matches!(node.step, Step::LiftedCase { .. }));
        }
        depth[self.root.node]
    }

    /// Number of nodes applying each rule.
    pub fn rule_counts(&self) -> HashMap<RuleKind, usize> {
        let mut out = HashMap::new();
        for node in &self.nodes {
            *out.entry(node.step.kind()).or_insert(0) += 1;
        }
        out
    }
}

/// Loop-nesting depth of the program compiled for `m` under `order`.
pub fn nesting_depth(m: &Mln, order: &CaseAnalysisOrder) -> Result<usize> {
    Ok(Circuit::build(m, order)?.nesting_depth())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mln::tests::example1;

    #[test]
    fn example1_plan_shape() {
        let m = example1(5, 2);
        let c = Circuit::build(&m, &CaseAnalysisOrder::new(["S", "T", "R"])).unwrap();
        assert!(matches!(c.nodes[c.root.node].step, Step::Decompose { .. }));
        assert_eq!(c.nesting_depth(), 2);
        let c = Circuit::build(&m, &CaseAnalysisOrder::new(["T", "R", "S"])).unwrap();
        assert!(c.nesting_depth() >= 1);
    }

    #[test]
    fn missing_predicate_is_reported() {
        let m = example1(2, 2);
        assert!(matches!(
            Circuit::build(&m, &CaseAnalysisOrder::new(["S", "T"])),
            Err(Error::MissingPredicate(p)) if p == "R"
        ));
    }
}
