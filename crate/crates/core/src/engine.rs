//! Direct numeric evaluation of a lifted plan.

use rustc_hash::FxHashMap;
use std::time::{Duration, Instant};

use crate::canon::symbol_slot;
use crate::circuit::{with_big_stack, Circuit, Edge, Step};
use crate::error::{Error, Result};
use crate::heuristics::CaseAnalysisOrder;
use crate::mln::Mln;
use crate::numeric::{choose, log_add, log_choose, PartitionValue};
use crate::size::SizeExpr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum NumericMode {
    #[default]
    Linear,
    LogSpace,
}

pub const CACHE_CAPACITY: usize = 1 << 22;
/// Nodes with more size parameters than this are not cached.
const MAX_KEY: usize = 6;

type Key = (u32, [i64; MAX_KEY]);

fn key(id: usize, vals: &[i64]) -> Option<Key> {
    if vals.len() > MAX_KEY {
        return None;
    }
    let mut k = [0i64; MAX_KEY];
    k[..vals.len()].copy_from_slice(vals);
    Some((id as u32, k))
}

/// A size polynomial over symbol slots.
#[derive(Clone, Debug)]
struct Poly(Vec<(i64, Vec<usize>)>);

impl Poly {
    fn new(e: &SizeExpr) -> Poly {
        Poly(
            e.terms()
                .map(|(syms, c)| (c, syms.iter().map(|s| symbol_slot(s).expect("canonical symbol")).collect()))
                .collect(),
        )
    }

    fn eval(&self, vals: &[i64]) -> i64 {
        self.0
            .iter()
            .map(|(c, syms)| syms.iter().fold(*c, |acc, &k| acc * vals[k]))
            .sum()
    }
}

struct PEdge {
    node: usize,
    args: Vec<Poly>,
}

impl PEdge {
    fn new(e: &Edge) -> PEdge {
        PEdge {
            node: e.node,
            args: e.args.iter().map(Poly::new).collect(),
        }
    }
}

enum PStep {
    TrueEval(Vec<(f64, Poly)>),
    Simplify(Poly, PEdge),
    Components(Vec<PEdge>),
    Decompose(Poly, PEdge),
    LiftedCase(Poly, PEdge),
    Unrolled(u64, Vec<PEdge>),
    GroundCase(PEdge, PEdge),
    GroundLVar(PEdge),
}

fn prepare(step: &Step) -> PStep {
    match step {
        Step::TrueEval(f) => PStep::TrueEval(f.iter().map(|(w, s)| (*w, Poly::new(s))).collect()),
        Step::Simplify { eliminated, child } => PStep::Simplify(Poly::new(eliminated), PEdge::new(child)),
        Step::Components(cs) => PStep::Components(cs.iter().map(PEdge::new).collect()),
        Step::Decompose { exponent, child } => PStep::Decompose(Poly::new(exponent), PEdge::new(child)),
        Step::LiftedCase { bound, child } => PStep::LiftedCase(Poly::new(bound), PEdge::new(child)),
        Step::Unrolled { bound, children } => PStep::Unrolled(*bound, children.iter().map(PEdge::new).collect()),
        Step::GroundCase { on_true, on_false } => PStep::GroundCase(PEdge::new(on_true), PEdge::new(on_false)),
        Step::GroundLVar(c) => PStep::GroundLVar(PEdge::new(c)),
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CacheStats {
    pub hits: u64,
    pub misses: u64,
}

#[derive(Clone, Copy, Debug)]
pub struct EngineOptions {
    pub mode: NumericMode,
    pub cache: bool,
}

impl Default for EngineOptions {
    fn default() -> Self {
        Self {
            mode: NumericMode::Linear,
            cache: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Evaluation {
    pub value: PartitionValue,
    pub plan_time: Duration,
    pub eval_time: Duration,
    pub cache: CacheStats,
    pub nodes: usize,
}

struct Evaluator<'a> {
    steps: Vec<PStep>,
    cached: Vec<bool>,
    nsyms: &'a [usize],
    log: bool,
    table: FxHashMap<Key, f64>,
    stats: CacheStats,
}

impl Evaluator<'_> {
    fn call(&mut self, e: &PEdge, vals: &[i64]) -> f64 {
        let args: Vec<i64> = e.args.iter().map(|p| p.eval(vals)).collect();
        self.node(e.node, args)
    }

    fn node(&mut self, id: usize, mut vals: Vec<i64>) -> f64 {
        let k = if self.cached[id] { key(id, &vals) } else { None };
        if let Some(k) = &k {
            if let Some(&v) = self.table.get(k) {
                self.stats.hits += 1;
                return v;
            }
            self.stats.misses += 1;
        }
        // Steps are immutable while evaluating; detach to satisfy the borrow checker.
        let step = std::mem::replace(&mut self.steps[id], PStep::Components(Vec::new()));
        let log = self.log;
        let v = match &step {
            PStep::TrueEval(f) => {
                if log {
                    f.iter().map(|(w, s)| w * s.eval(&vals) as f64).sum()
                } else {
                    f.iter().fold(1.0, |acc, (w, s)| acc * (w * s.eval(&vals) as f64).exp())
                }
            }
            PStep::Simplify(e, c) => {
                let k = e.eval(&vals);
                let child = self.call(c, &vals);
                if log {
                    k as f64 * std::f64::consts::LN_2 + child
                } else {
                    2f64.powf(k as f64) * child
                }
            }
            PStep::Components(cs) => {
                let mut acc = if log { 0.0 } else { 1.0 };
                for c in cs {
                    let v = self.call(c, &vals);
                    acc = if log { acc + v } else { acc * v };
                }
                acc
            }
            PStep::Decompose(e, c) => {
                let k = e.eval(&vals);
                let child = self.call(c, &vals);
                if log {
                    k as f64 * child
                } else {
                    child.powf(k as f64)
                }
            }
            PStep::LiftedCase(b, c) => {
                let n = b.eval(&vals);
                let slot = self.nsyms[id];
                vals.push(0);
                let mut acc = if log { f64::NEG_INFINITY } else { 0.0 };
                for i in 0..=n {
                    vals[slot] = i;
                    let child = self.call(c, &vals);
                    if log {
                        let lc = log_choose(n as u64, i as u64).expect("i <= n");
                        acc = log_add(acc, lc + child);
                    } else {
                        acc += choose(n as u64, i as u64) * child;
                    }
                }
                vals.pop();
                acc
            }
            PStep::Unrolled(n, cs) => {
                let mut acc = if log { f64::NEG_INFINITY } else { 0.0 };
                for (i, c) in cs.iter().enumerate() {
                    let child = self.call(c, &vals);
                    if log {
                        acc = log_add(acc, log_choose(*n, i as u64).expect("i <= n") + child);
                    } else {
                        acc += choose(*n, i as u64) * child;
                    }
                }
                acc
            }
            PStep::GroundCase(t, f) => {
                let a = self.call(t, &vals);
                let b = self.call(f, &vals);
                if log {
                    log_add(a, b)
                } else {
                    a + b
                }
            }
            PStep::GroundLVar(c) => self.call(c, &vals),
        };
        self.steps[id] = step;
        if let Some(k) = k {
            if self.table.len() < CACHE_CAPACITY {
                self.table.insert(k, v);
            }
        }
        v
    }
}

/// Evaluates a plan numerically.
pub fn evaluate(c: &Circuit, opts: EngineOptions) -> Result<Evaluation> {
    let start = Instant::now();
    let nsyms: Vec<usize> = c.nodes.iter().map(|n| n.nsyms).collect();
    let (raw, stats) = with_big_stack(|| {
        let mut ev = Evaluator {
            steps: c.nodes.iter().map(|n| prepare(&n.step)).collect(),
            cached: c.nodes.iter().map(|n| opts.cache && (n.memo || n.in_degree > 1)).collect(),
            nsyms: &nsyms,
            log: opts.mode == NumericMode::LogSpace,
            table: FxHashMap::default(),
            stats: CacheStats::default(),
        };
        let root = PEdge::new(&c.root);
        let v = ev.call(&root, &[]);
        (v, ev.stats)
    });
    let value = match opts.mode {
        NumericMode::Linear if !raw.is_finite() => {
            return Err(Error::Overflow(format!(
                "partition function is {raw} in double precision; use log-space evaluation"
            )))
        }
        NumericMode::Linear => PartitionValue::Linear(raw),
        NumericMode::LogSpace if raw.is_nan() => return Err(Error::Overflow("log partition function is NaN".into())),
        NumericMode::LogSpace => PartitionValue::LogSpace(raw),
    };
    Ok(Evaluation {
        value,
        plan_time: c.build_time,
        eval_time: start.elapsed(),
        cache: stats,
        nodes: c.nodes.len(),
    })
}

/// Plans and evaluates `Z(m)` in one go, with caching on.
pub fn lifted_z(m: &Mln, order: &CaseAnalysisOrder, mode: NumericMode) -> Result<PartitionValue> {
    let c = Circuit::build(m, order)?;
    Ok(evaluate(&c, EngineOptions { mode, cache: true })?.value)
}
