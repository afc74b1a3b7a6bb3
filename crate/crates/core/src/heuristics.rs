//! Case-analysis orders: a greedy initial ranking and a seeded local search
//! that minimizes the loop-nesting depth of the generated program.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::mln::Mln;
pub use crate::circuit::nesting_depth;

/// Predicates ranked for case analysis; earlier means branched on first.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CaseAnalysisOrder(Vec<String>);

impl CaseAnalysisOrder {
    pub fn new(preds: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Self(preds.into_iter().map(Into::into).collect())
    }

    pub fn contains(&self, pred: &str) -> bool {
        self.0.iter().any(|p| p == pred)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn as_slice(&self) -> &[String] {
        &self.0
    }

    /// Whether every predicate of `m` is ranked exactly once.
    pub fn covers(&self, m: &Mln) -> bool {
        let mut seen = std::collections::BTreeSet::new();
        self.0.iter().all(|p| seen.insert(p)) && m.predicates().iter().all(|p| self.contains(p))
    }

    fn swap(&mut self, a: usize, b: usize) {
        self.0.swap(a, b);
    }
}

/// Fewest logical variables per occurrence first, then fewest occurrences, then by name.
pub fn greedy_order(m: &Mln) -> CaseAnalysisOrder {
    let mut stats: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for wf in &m.wfs {
        for atom in wf.formula.atoms() {
            let e = stats.entry(atom.predicate.clone()).or_insert((0, 0));
            e.0 = e.0.max(atom.lvars().len());
            e.1 += 1;
        }
    }
    let mut preds: Vec<(usize, usize, String)> = stats.into_iter().map(|(p, (v, n))| (v, n, p)).collect();
    preds.sort();
    CaseAnalysisOrder(preds.into_iter().map(|(_, _, p)| p).collect())
}

pub const DEFAULT_SEARCH_BUDGET: usize = 200;

/// Stochastic local search over orders: each step swaps either an adjacent
/// pair or a random pair (equal odds) and keeps the move unless it deepens
/// the loop nesting.
pub fn min_nested_loops(m: &Mln, init: &CaseAnalysisOrder, budget: usize, seed: u64) -> CaseAnalysisOrder {
    let depth = |o: &CaseAnalysisOrder| crate::circuit::nesting_depth(m, o).unwrap_or(usize::MAX);
    let mut current = init.clone();
    let n = current.0.len();
    if n < 2 || budget == 0 {
        return current;
    }
    let mut current_depth = depth(&current);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..budget {
        let (a, b) = if rng.gen_bool(0.5) {
            let a = rng.gen_range(0..n - 1);
            (a, a + 1)
        } else {
            let a = rng.gen_range(0..n);
            let mut b = rng.gen_range(0..n - 1);
            if b >= a {
                b += 1;
            }
            (a, b)
        };
        let mut candidate = current.clone();
        candidate.swap(a, b);
        let d = depth(&candidate);
        if d <= current_depth {
            current = candidate;
            current_depth = d;
        }
    }
    current
}

/// How a command picks its case-analysis order.
#[derive(Clone, Debug, PartialEq)]
pub enum OrderStrategy {
    Greedy,
    MinLoops { budget: usize, seed: u64 },
    Explicit(CaseAnalysisOrder),
}

impl OrderStrategy {
    /// `greedy`, `minloops`, or a comma-separated predicate list.
    pub fn parse(s: &str, budget: usize, seed: u64) -> Self {
        match s.trim() {
            "greedy" => OrderStrategy::Greedy,
            "minloops" => OrderStrategy::MinLoops { budget, seed },
            list => OrderStrategy::Explicit(CaseAnalysisOrder::new(
                list.split(',').map(str::trim).filter(|p| !p.is_empty()),
            )),
        }
    }

    pub fn resolve(&self, m: &Mln) -> CaseAnalysisOrder {
        match self {
            OrderStrategy::Greedy => greedy_order(m),
            OrderStrategy::MinLoops { budget, seed } => min_nested_loops(m, &greedy_order(m), *budget, *seed),
            OrderStrategy::Explicit(o) => o.clone(),
        }
    }
}
