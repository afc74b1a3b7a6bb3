//! Search-based lifted inference rules. Each rule maps an MLN to sub-MLNs
//! plus the recipe that combines their partition functions.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::error::{invalid, Error, Result};
use crate::heuristics::CaseAnalysisOrder;
use crate::mln::{capitalize, Formula, Mln, Prv, Term};
use crate::numeric::choose;
use crate::shatter::condition_count;
use crate::size::SizeExpr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RuleKind {
    TrueEval,
    Simplify,
    Components,
    Decomposer,
    LiftedCase,
    GroundCase,
    GroundLVar,
}

/// One rule application: children and how their partition functions combine.
#[derive(Clone, Debug)]
pub enum RuleApplication {
    /// `Z = prod_k exp(weight_k * count_k)`.
    TrueEval(Vec<(f64, SizeExpr)>),
    /// `Z = 2^eliminated * Z(child)`.
    Simplify { child: Mln, eliminated: SizeExpr },
    /// `Z = prod Z(component)`.
    Components(Vec<Mln>),
    /// `Z = Z(child)^exponent`.
    Decompose { child: Mln, exponent: SizeExpr },
    /// `Z = sum_{index=0}^{bound} C(bound, index) * Z(child)`, with `child`
    /// mentioning the symbol `index`.
    LiftedCase { child: Mln, index: String, bound: SizeExpr },
    /// `Z = Z(on_true) + Z(on_false)`.
    GroundCase { on_true: Mln, on_false: Mln },
    /// `Z = Z(child)`.
    GroundLVar(Mln),
}

impl RuleApplication {
    pub fn kind(&self) -> RuleKind {
        match self {
            RuleApplication::TrueEval(_) => RuleKind::TrueEval,
            RuleApplication::Simplify { .. } => RuleKind::Simplify,
            RuleApplication::Components(_) => RuleKind::Components,
            RuleApplication::Decompose { .. } => RuleKind::Decomposer,
            RuleApplication::LiftedCase { .. } => RuleKind::LiftedCase,
            RuleApplication::GroundCase { .. } => RuleKind::GroundCase,
            RuleApplication::GroundLVar(_) => RuleKind::GroundLVar,
        }
    }

    /// For a lifted case with a constant bound: the `bound + 1` children and their binomial multipliers.
    pub fn lifted_instances(&self) -> Option<Vec<(f64, Mln)>> {
        let RuleApplication::LiftedCase { child, index, bound } = self else {
            return None;
        };
        let n = bound.as_constant()? as u64;
        Some(
            (0..=n)
                .map(|i| {
                    let mut sub = HashMap::new();
                    sub.insert(index.clone(), SizeExpr::constant(i as i64));
                    (choose(n, i), child.substitute_sizes(&sub))
                })
                .collect(),
        )
    }
}

fn fresh_symbol(m: &Mln) -> String {
    let used: BTreeSet<String> = m.populations.values().flat_map(|p| p.size.symbols()).collect();
    (0..)
        .map(crate::canon::canonical_symbol)
        .find(|s| !used.contains(s))
        .expect("unbounded")
}

/// Product over all WFs of `exp(w * prod_{x in L} |x|)`, when every formula is True.
pub fn true_eval(m: &Mln) -> Option<Vec<(f64, SizeExpr)>> {
    if !m.wfs.iter().all(|wf| wf.formula.is_true()) {
        return None;
    }
    Some(
        m.wfs
            .iter()
            .map(|wf| {
                let count = wf
                    .lvars
                    .iter()
                    .fold(SizeExpr::constant(1), |acc, v| acc.mul(&m.size_of(v)));
                (wf.weight, count)
            })
            .collect(),
    )
}

/// Number of ground atoms of `prv`, as a size expression.
fn grounding_count(m: &Mln, prv: &Prv) -> SizeExpr {
    prv.lvars()
        .into_iter()
        .fold(SizeExpr::constant(1), |acc, v| acc.mul(&m.size_of(v)))
}

/// Removes False formulae. `eliminated` counts the ground atoms that no
/// longer occur in any remaining formula.
pub fn simplify(m: &Mln) -> (Mln, SizeExpr) {
    let survivors: Vec<_> = m.wfs.iter().filter(|wf| !wf.formula.is_false()).cloned().collect();
    let kept: BTreeSet<&Prv> = survivors.iter().flat_map(|wf| wf.formula.atoms()).collect();
    let removed: BTreeSet<&Prv> = m
        .wfs
        .iter()
        .filter(|wf| wf.formula.is_false())
        .flat_map(|wf| wf.formula.atoms())
        .filter(|p| !kept.contains(p))
        .collect();
    let eliminated = removed
        .into_iter()
        .fold(SizeExpr::zero(), |acc, p| acc.add(&grounding_count(m, p)));
    let child = Mln {
        populations: m.populations.clone(),
        wfs: survivors,
    }
    .prune_populations();
    (child, eliminated)
}

/// A set of logical variables, one per weighted formula, along which the MLN
/// splits into independent, interchangeable parts.
///
/// Every WF must contain exactly one variable of the set, that variable must
/// occur in each of its literals, each predicate must carry a set variable at
/// one fixed argument position across all its occurrences, and all variables
/// in the set must have equal population sizes.
pub fn find_decomposer(m: &Mln) -> Option<BTreeSet<String>> {
    if m.wfs.is_empty() || m.wfs.iter().any(|wf| !matches!(wf.formula, Formula::Conj(_))) {
        return None;
    }
    let candidates = |i: usize| -> Vec<String> {
        let wf = &m.wfs[i];
        wf.lvars
            .iter()
            .filter(|v| wf.formula.literals().iter().all(|l| l.prv.args.contains(&Term::Var((*v).clone()))))
            .cloned()
            .collect()
    };
    for start in candidates(0) {
        if let Some(d) = propagate_decomposer(m, &start, &candidates) {
            return Some(d);
        }
    }
    None
}

fn propagate_decomposer(m: &Mln, start: &str, candidates: &impl Fn(usize) -> Vec<String>) -> Option<BTreeSet<String>> {
    let mut chosen: Vec<Option<String>> = vec![None; m.wfs.len()];
    let mut position: BTreeMap<String, usize> = BTreeMap::new();
    let mut set: BTreeSet<String> = BTreeSet::new();
    let mut queue = vec![(0usize, start.to_string())];
    while let Some((i, v)) = queue.pop() {
        match &chosen[i] {
            Some(c) if *c == v => continue,
            Some(_) => return None,
            None => {}
        }
        if !candidates(i).contains(&v) {
            return None;
        }
        chosen[i] = Some(v.clone());
        set.insert(v.clone());
        // every WF over v must choose v
        for (j, wf) in m.wfs.iter().enumerate() {
            if wf.mentions(&v) {
                queue.push((j, v.clone()));
            }
        }
        for lit in m.wfs[i].formula.literals() {
            let positions: Vec<usize> = lit
                .prv
                .args
                .iter()
                .enumerate()
                .filter(|(_, t)| **t == Term::Var(v.clone()))
                .map(|(p, _)| p)
                .collect();
            let pos = match position.get(&lit.prv.predicate) {
                Some(p) if positions.contains(p) => *p,
                Some(_) => return None,
                None => {
                    let p = positions[0];
                    position.insert(lit.prv.predicate.clone(), p);
                    p
                }
            };
            // other occurrences of the predicate must use their variable at `pos`
            for (j, wf) in m.wfs.iter().enumerate() {
                for other in wf.formula.literals() {
                    if other.prv.predicate == lit.prv.predicate {
                        match &other.prv.args[pos] {
                            Term::Var(w) => queue.push((j, w.clone())),
                            Term::Const(_) => return None,
                        }
                    }
                }
            }
        }
    }
    if chosen.iter().any(Option::is_none) {
        return None;
    }
    let mut sizes = set.iter().map(|v| m.size_of(v));
    let first = sizes.next()?;
    if sizes.all(|s| s == first) {
        Some(set)
    } else {
        None
    }
}

/// Replaces each decomposer variable by a representative individual.
pub fn decompose(m: &Mln, d: &BTreeSet<String>) -> RuleApplication {
    let exponent = d.iter().next().map(|v| m.size_of(v)).unwrap_or_else(|| SizeExpr::constant(1));
    let mut child = m.clone();
    for v in d {
        let rep = match m.population(v).and_then(|p| p.members.as_ref()).and_then(|ms| ms.first()) {
            Some(first) if !child.constants().contains(first) => first.clone(),
            _ => child.fresh_constant(v),
        };
        child = child.substitute_lvar(v, &rep);
    }
    RuleApplication::Decompose { child, exponent }
}

/// Branches on the number of true groundings of `v`, which has exactly one logical variable.
pub fn lifted_case_analysis(m: &Mln, v: &Prv) -> Result<RuleApplication> {
    let vars = v.lvars();
    let [x] = vars.as_slice() else {
        return invalid(format!("lifted case analysis needs exactly one logical variable, {v} has {}", vars.len()));
    };
    if !m.atoms().contains(v) {
        return invalid(format!("{v} does not occur in the MLN"));
    }
    let bound = m.size_of(x);
    let index = fresh_symbol(m);
    let (child, _, _) = condition_count(m, v, SizeExpr::symbol(index.clone()))?;
    Ok(RuleApplication::LiftedCase { child, index, bound })
}

/// Branches on the value of the ground atom `v`.
pub fn ground_case_analysis(m: &Mln, v: &Prv) -> Result<RuleApplication> {
    if !m.atoms().contains(v) {
        return invalid(format!("{v} does not occur in the MLN"));
    }
    Ok(RuleApplication::GroundCase {
        on_true: m.condition_literal(v, true)?,
        on_false: m.condition_literal(v, false)?,
    })
}

/// Replaces every WF over `x` by one copy per individual.
pub fn ground_lvar(m: &Mln, x: &str) -> Result<Mln> {
    let pop = match m.population(x) {
        Some(p) => p,
        None => return invalid(format!("no population for {x}")),
    };
    let n = pop.concrete_size().ok_or_else(|| Error::NeedsConcrete(pop.size.to_string()))?;
    let mut names: Vec<String> = Vec::new();
    let stem = capitalize(x);
    let taken = m.constants();
    let mut k = 1;
    while names.len() < n as usize {
        let c = format!("{stem}_{k}");
        if !taken.contains(&c) {
            names.push(c);
        }
        k += 1;
    }
    let mut wfs = Vec::new();
    for wf in &m.wfs {
        if wf.mentions(x) {
            for c in &names {
                let single = Mln {
                    populations: m.populations.clone(),
                    wfs: vec![wf.clone()],
                };
                wfs.extend(single.substitute_lvar(x, c).wfs);
            }
        } else {
            wfs.push(wf.clone());
        }
    }
    let mut populations = m.populations.clone();
    populations.remove(x);
    Ok(Mln { populations, wfs })
}

/// Candidate atoms of `pred` for case analysis: lifted ones (one variable) first, then ground.
fn case_candidates<'a>(atoms: &'a BTreeSet<Prv>, pred: &str) -> Option<&'a Prv> {
    let of_pred = || atoms.iter().filter(move |p| p.predicate == pred);
    of_pred()
        .find(|p| p.lvars().len() == 1)
        .or_else(|| of_pred().find(|p| p.is_ground()))
}

fn case_on(m: &Mln, v: &Prv) -> Result<RuleApplication> {
    if v.is_ground() {
        ground_case_analysis(m, v)
    } else {
        lifted_case_analysis(m, v)
    }
}

/// Picks the next rule. In priority: true-formula evaluation, false-formula
/// removal, component split, case analysis on the top-ranked predicate if its
/// atom mentions an individual (or has no arguments), decomposition, case
/// analysis on any predicate in rank order, grounding the smallest population.
pub fn select(m: &Mln, order: &CaseAnalysisOrder) -> Result<RuleApplication> {
    if let Some(factors) = true_eval(m) {
        return Ok(RuleApplication::TrueEval(factors));
    }
    if m.wfs.iter().any(|wf| wf.formula.is_false()) {
        let (child, eliminated) = simplify(m);
        return Ok(RuleApplication::Simplify { child, eliminated });
    }
    let components = m.connected_components();
    if components.len() > 1 {
        return Ok(RuleApplication::Components(components));
    }
    let atoms = m.atoms();
    let present = m.predicates();
    if let Some(missing) = present.iter().find(|p| !order.contains(p)) {
        return Err(Error::MissingPredicate(missing.clone()));
    }
    let ranked: Vec<&str> = order.iter().filter(|p| present.contains(*p)).collect();
    let anchored = |p: &Prv| p.arity() == 0 || p.args.iter().any(|t| matches!(t, Term::Const(_)));
    if let Some(v) = ranked.first().and_then(|lead| case_candidates(&atoms, lead)).filter(|v| anchored(v)) {
        return case_on(m, v);
    }
    if let Some(d) = find_decomposer(m) {
        return Ok(decompose(m, &d));
    }
    if let Some(v) = ranked.iter().find_map(|p| case_candidates(&atoms, p)) {
        return case_on(m, v);
    }
    let smallest = m
        .used_lvars()
        .into_iter()
        .filter_map(|v| m.population(&v).and_then(|p| p.concrete_size()).map(|n| (n, v)))
        .min();
    match smallest {
        Some((_, x)) => Ok(RuleApplication::GroundLVar(ground_lvar(m, &x)?)),
        None => {
            let sizes: Vec<String> = m.populations.values().map(|p| p.size.to_string()).collect();
            Err(Error::NeedsConcrete(sizes.join(", ")))
        }
    }
}
