//! Conditioning on evidence. Populations are split so that individuals with
//! identical evidence share a logical variable, then the observed atoms are
//! replaced by their values.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{invalid, Result};
use crate::mln::{Mln, Prv, Term};
use crate::size::SizeExpr;

#[derive(Clone, Debug, PartialEq)]
pub enum Observation {
    /// A ground atom observed true or false.
    Ground { prv: Prv, value: bool },
    /// `predicate(lvar)` holds for exactly `count` individuals.
    Count {
        predicate: String,
        lvar: String,
        count: u64,
    },
}

/// Splits the single logical variable of `pattern` at `count` and conditions
/// the pattern true on the first part and false on the second. Returns the
/// conditioned MLN and the names of the two parts.
pub(crate) fn condition_count(m: &Mln, pattern: &Prv, count: SizeExpr) -> Result<(Mln, String, String)> {
    let vars = pattern.lvars();
    let x = match vars.as_slice() {
        [x] => x.to_string(),
        _ => return invalid(format!("{pattern} must have exactly one logical variable")),
    };
    let (split, x1, x2) = m.split_population_expr(&x, count)?;
    let conditioned = split
        .condition_family(pattern, &x, &x1, true)
        .condition_family(pattern, &x, &x2, false);
    Ok((conditioned, x1, x2))
}

fn occurs_unary(m: &Mln, pred: &str, x: &str) -> bool {
    m.atoms()
        .iter()
        .any(|p| p.predicate == pred && p.args == [Term::Var(x.to_string())])
}

/// Conditions `pred(x)` to be true for exactly `i` of the individuals of `x`.
pub fn apply_count_observation(m: &Mln, pred: &str, x: &str, i: u64) -> Result<Mln> {
    let size = match m.population(x).and_then(|p| p.concrete_size()) {
        Some(n) => n,
        None => return invalid(format!("no concrete population for {x}")),
    };
    if i > size {
        return invalid(format!("count {i} exceeds |{x}| = {size}"));
    }
    if !occurs_unary(m, pred, x) {
        return invalid(format!("{pred}({x}) does not occur in the MLN"));
    }
    let mut with_members = m.clone();
    if let Some(p) = with_members.populations.get_mut(x) {
        p.members = p.member_names();
    }
    let pattern = Prv::new(pred, vec![Term::var(x)]);
    Ok(condition_count(&with_members, &pattern, SizeExpr::constant(i as i64))?.0)
}

/// Conditions an MLN on a list of observations.
pub fn shatter(m: &Mln, obs: &[Observation]) -> Result<Mln> {
    let mut ground: BTreeMap<&Prv, bool> = BTreeMap::new();
    let mut counted: BTreeSet<&str> = BTreeSet::new();
    for o in obs {
        match o {
            Observation::Ground { prv, value } => {
                if !prv.is_ground() {
                    return invalid(format!("observed atom {prv} is not ground"));
                }
                if prv.arity() > 1 {
                    return invalid(format!(
                        "observation on {prv}: only unary and arity-0 predicates can be shattered"
                    ));
                }
                if let Some(prev) = ground.insert(prv, *value) {
                    if prev != *value {
                        return invalid(format!("contradictory observations on {prv}"));
                    }
                }
            }
            Observation::Count { predicate, .. } => {
                if !counted.insert(predicate) {
                    return invalid(format!("more than one count observation on {predicate}"));
                }
            }
        }
    }
    if let Some(p) = ground.keys().find(|p| counted.contains(p.predicate.as_str())) {
        return invalid(format!("{} has both count and ground observations", p.predicate));
    }

    let mut m = m.clone();
    for o in obs {
        if let Observation::Count { predicate, lvar, count } = o {
            m = apply_count_observation(&m, predicate, lvar, *count)?;
        }
    }
    for (prv, value) in ground.iter().filter(|(p, _)| p.arity() == 0) {
        m = m.condition_literal(prv, *value)?;
    }

    // Unary evidence: find the logical variable each constant belongs to.
    let mut evidence: BTreeMap<String, BTreeMap<String, BTreeMap<String, bool>>> = BTreeMap::new();
    for (prv, value) in ground.iter().filter(|(p, _)| p.arity() == 1) {
        let c = match &prv.args[0] {
            Term::Const(c) => c.clone(),
            Term::Var(_) => unreachable!("checked ground"),
        };
        let owner = m
            .atoms()
            .iter()
            .filter(|a| a.predicate == prv.predicate)
            .filter_map(|a| a.args.first().and_then(Term::as_var).map(str::to_string))
            .find(|v| {
                m.population(v)
                    .and_then(|p| p.member_names())
                    .is_some_and(|ms| ms.contains(&c))
            });
        let Some(x) = owner else {
            return invalid(format!("{c} is not an individual of any population {} ranges over", prv.predicate));
        };
        evidence
            .entry(x)
            .or_default()
            .entry(c)
            .or_default()
            .insert(prv.predicate.clone(), *value);
    }

    for (x, by_member) in evidence {
        let members = m.population(&x).and_then(|p| p.member_names()).expect("owner has members");
        // Cells of individuals with identical evidence; unobserved individuals last.
        let mut cells: BTreeMap<Vec<(String, bool)>, Vec<String>> = BTreeMap::new();
        let mut unobserved = Vec::new();
        for c in &members {
            match by_member.get(c) {
                Some(ev) => cells
                    .entry(ev.iter().map(|(k, v)| (k.clone(), *v)).collect())
                    .or_default()
                    .push(c.clone()),
                None => unobserved.push(c.clone()),
            }
        }
        let mut ordered: Vec<String> = cells.values().flatten().cloned().collect();
        ordered.extend(unobserved.iter().cloned());
        if let Some(p) = m.populations.get_mut(&x) {
            p.members = Some(ordered);
        }
        let mut rest = x.clone();
        let n_cells = cells.len() + usize::from(!unobserved.is_empty());
        for (i, (signature, cell)) in cells.iter().enumerate() {
            let part = if i + 1 == n_cells {
                rest.clone()
            } else {
                let size = cell.len() as i64;
                let (split, first, second) = m.split_population_expr(&rest, SizeExpr::constant(size))?;
                m = split;
                rest = second;
                first
            };
            for (pred, value) in signature {
                let pattern = Prv::new(pred.clone(), vec![Term::var(part.clone())]);
                m = m.condition_family(&pattern, &part, &part, *value);
            }
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canon::canonicalize;
    use crate::mln::tests::{example1, lit};
    use crate::mln::{Formula, WeightedFormula};

    #[test]
    fn ground_evidence_on_two_individuals() {
        let m = example1(5, 2);
        let obs = vec![
            Observation::Ground { prv: lit("T", &["X1"], true).prv, value: true },
            Observation::Ground { prv: lit("T", &["X2"], true).prv, value: true },
        ];
        let s = shatter(&m, &obs).unwrap();
        assert_eq!(s.wfs.len(), 4);
        let mut expected = Mln::new().with_population("a", 2).with_population("b", 3).with_population("m", 2);
        for (l, w) in [("a", 1.2), ("b", 1.2)] {
            expected.wfs.push(WeightedFormula::new(
                Formula::conj(vec![lit("R", &[l, "m"], true), lit("S", &[l, "m"], true)]),
                w,
            ));
        }
        expected.wfs.push(WeightedFormula::new(Formula::conj(vec![lit("S", &["a", "m"], true)]), 0.2));
        expected.wfs.push(WeightedFormula::new(
            Formula::conj(vec![lit("S", &["b", "m"], true), lit("T", &["b"], true)]),
            0.2,
        ));
        assert_eq!(canonicalize(&s), canonicalize(&expected));
    }

    #[test]
    fn count_observation_example() {
        let m = example1(5, 2);
        let c = apply_count_observation(&m, "T", "x", 2).unwrap();
        assert_eq!(c.wfs.len(), 4);
        // the T-true copy lost its T literal; the T-false copy is False
        assert_eq!(c.wfs.iter().filter(|wf| wf.formula.is_false()).count(), 1);
        assert!(apply_count_observation(&m, "T", "x", 6).is_err());
        assert!(apply_count_observation(&m, "Q", "x", 1).is_err());
    }

    #[test]
    fn trivial_cases() {
        let m = example1(3, 2);
        assert_eq!(canonicalize(&shatter(&m, &[]).unwrap()), canonicalize(&m));
        let all = shatter(&m, &[Observation::Count { predicate: "T".into(), lvar: "x".into(), count: 3 }]).unwrap();
        let sizes: Vec<Option<u64>> = all.clone().prune_populations().populations.values().map(|p| p.concrete_size()).collect();
        assert!(sizes.contains(&Some(3)));
        let bad = vec![
            Observation::Ground { prv: lit("T", &["X1"], true).prv, value: true },
            Observation::Ground { prv: lit("T", &["X1"], true).prv, value: false },
        ];
        assert!(shatter(&m, &bad).is_err());
        let binary = vec![Observation::Ground { prv: lit("R", &["X1", "M1"], true).prv, value: true }];
        assert!(shatter(&m, &binary).is_err());
    }
}
