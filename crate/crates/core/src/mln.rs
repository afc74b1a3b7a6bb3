//! Populations, parametrized random variables, weighted formulae and the
//! structural operations every inference rule is built from.
//!
//! Each logical variable is typed by a population of the same name, so
//! "every WF mentioning `x`" and "every WF over population `x`" coincide.
//! Formulae are conjunctions of literals. A conjunction that becomes false
//! keeps the atoms it still mentions (its *residue*): those ground variables
//! remain part of the world space even though the formula no longer
//! constrains them.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::error::{invalid, Result};
use crate::size::SizeExpr;

#[derive(Clone, Debug, PartialEq)]
pub struct Population {
    pub name: String,
    pub size: SizeExpr,
    /// Individual names; `None` means synthesized on demand.
    pub members: Option<Vec<String>>,
}

impl Population {
    pub fn new(name: impl Into<String>, size: u64) -> Self {
        Self {
            name: name.into(),
            size: SizeExpr::constant(size as i64),
            members: None,
        }
    }

    pub fn symbolic(name: impl Into<String>, size: SizeExpr) -> Self {
        Self {
            name: name.into(),
            size,
            members: None,
        }
    }

    pub fn concrete_size(&self) -> Option<u64> {
        self.size.as_constant().and_then(|c| u64::try_from(c).ok())
    }

    /// Members, synthesizing `X1..Xn` for a population named `x`.
    pub fn member_names(&self) -> Option<Vec<String>> {
        if let Some(m) = &self.members {
            return Some(m.clone());
        }
        let n = self.concrete_size()?;
        let stem = capitalize(&self.name);
        Some((1..=n).map(|i| format!("{stem}{i}")).collect())
    }
}

pub(crate) fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    Const(String),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Self {
        Term::Var(name.into())
    }

    pub fn constant(name: impl Into<String>) -> Self {
        Term::Const(name.into())
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Prv {
    pub predicate: String,
    pub args: Vec<Term>,
}

impl Prv {
    pub fn new(predicate: impl Into<String>, args: Vec<Term>) -> Self {
        Self {
            predicate: predicate.into(),
            args,
        }
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    /// Distinct logical variables, in argument order.
    pub fn lvars(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for v in self.args.iter().filter_map(Term::as_var) {
            if !out.contains(&v) {
                out.push(v);
            }
        }
        out
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(|t| matches!(t, Term::Const(_)))
    }

    fn map_terms(&self, f: &impl Fn(&Term) -> Term) -> Prv {
        Prv {
            predicate: self.predicate.clone(),
            args: self.args.iter().map(f).collect(),
        }
    }

    /// Whether this PRV is `pattern` with its single variable renamed to `var`.
    fn matches_pattern(&self, pattern: &Prv, pattern_var: &str, var: &str) -> bool {
        self.predicate == pattern.predicate
            && self.args.len() == pattern.args.len()
            && self.args.iter().zip(&pattern.args).all(|(a, p)| match (a, p) {
                (Term::Var(a), Term::Var(p)) => a == var && p == pattern_var,
                (Term::Const(a), Term::Const(p)) => a == p,
                _ => false,
            })
    }
}

impl fmt::Display for Prv {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.predicate)?;
        if !self.args.is_empty() {
            let args: Vec<&str> = self
                .args
                .iter()
                .map(|t| match t {
                    Term::Var(v) | Term::Const(v) => v.as_str(),
                })
                .collect();
            write!(f, "({})", args.join(","))?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub prv: Prv,
    pub positive: bool,
}

impl Literal {
    pub fn new(prv: Prv, positive: bool) -> Self {
        Self { prv, positive }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.positive {
            write!(f, "!")?;
        }
        write!(f, "{}", self.prv)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Formula {
    /// Nonempty, sorted, duplicate-free conjunction.
    Conj(Vec<Literal>),
    True,
    /// Unsatisfiable; `residue` lists the atoms still mentioned (sorted, deduplicated).
    False { residue: Vec<Prv> },
}

impl Formula {
    pub fn conj(literals: Vec<Literal>) -> Formula {
        Formula::Conj(literals).normalized()
    }

    pub fn falsum() -> Formula {
        Formula::False { residue: Vec::new() }
    }

    /// Sorts literals, drops duplicates, and collapses complementary pairs to False.
    pub fn normalized(self) -> Formula {
        match self {
            Formula::Conj(mut lits) => {
                lits.sort();
                lits.dedup();
                if lits.is_empty() {
                    return Formula::True;
                }
                let contradictory = lits.windows(2).any(|w| w[0].prv == w[1].prv && w[0].positive != w[1].positive);
                if contradictory {
                    let mut residue: Vec<Prv> = lits.into_iter().map(|l| l.prv).collect();
                    residue.dedup();
                    Formula::False { residue }
                } else {
                    Formula::Conj(lits)
                }
            }
            Formula::False { mut residue } => {
                residue.sort();
                residue.dedup();
                Formula::False { residue }
            }
            Formula::True => Formula::True,
        }
    }

    /// Every atom the formula mentions, including a false formula's residue.
    pub fn atoms(&self) -> Vec<&Prv> {
        match self {
            Formula::Conj(l) => l.iter().map(|l| &l.prv).collect(),
            Formula::True => Vec::new(),
            Formula::False { residue } => residue.iter().collect(),
        }
    }

    pub fn literals(&self) -> &[Literal] {
        match self {
            Formula::Conj(l) => l,
            _ => &[],
        }
    }

    pub fn is_false(&self) -> bool {
        matches!(self, Formula::False { .. })
    }

    pub fn is_true(&self) -> bool {
        matches!(self, Formula::True)
    }

    fn map_terms(&self, f: &impl Fn(&Term) -> Term) -> Formula {
        match self {
            Formula::Conj(lits) => Formula::Conj(
                lits.iter()
                    .map(|l| Literal::new(l.prv.map_terms(f), l.positive))
                    .collect(),
            )
            .normalized(),
            Formula::True => Formula::True,
            Formula::False { residue } => Formula::False {
                residue: residue.iter().map(|p| p.map_terms(f)).collect(),
            }
            .normalized(),
        }
    }

    /// Assigns a truth value to every atom selected by `assign`.
    fn condition(&self, assign: &impl Fn(&Prv) -> Option<bool>) -> Formula {
        match self {
            Formula::True => Formula::True,
            Formula::False { residue } => Formula::False {
                residue: residue.iter().filter(|p| assign(p).is_none()).cloned().collect(),
            },
            Formula::Conj(lits) => {
                let mut kept = Vec::new();
                let mut falsified = false;
                for lit in lits {
                    match assign(&lit.prv) {
                        Some(v) if v == lit.positive => {}
                        Some(_) => falsified = true,
                        None => kept.push(lit.clone()),
                    }
                }
                if falsified {
                    Formula::False {
                        residue: kept.into_iter().map(|l| l.prv).collect(),
                    }
                    .normalized()
                } else {
                    Formula::Conj(kept).normalized()
                }
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => write!(f, "True"),
            Formula::False { .. } => write!(f, "False"),
            Formula::Conj(l) => {
                let parts: Vec<String> = l.iter().map(|l| l.to_string()).collect();
                write!(f, "{}", parts.join(" & "))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeightedFormula {
    pub lvars: BTreeSet<String>,
    pub formula: Formula,
    pub weight: f64,
}

impl WeightedFormula {
    /// A weighted formula whose logical variables are exactly those of `formula`.
    pub fn new(formula: Formula, weight: f64) -> Self {
        let lvars = formula
            .atoms()
            .iter()
            .flat_map(|p| p.lvars())
            .map(str::to_string)
            .collect();
        Self {
            lvars,
            formula: formula.normalized(),
            weight,
        }
    }

    pub fn with_lvars(lvars: impl IntoIterator<Item = impl Into<String>>, formula: Formula, weight: f64) -> Self {
        Self {
            lvars: lvars.into_iter().map(Into::into).collect(),
            formula: formula.normalized(),
            weight,
        }
    }

    pub fn mentions(&self, lvar: &str) -> bool {
        self.lvars.contains(lvar)
    }

    pub fn predicates(&self) -> BTreeSet<&str> {
        self.formula.atoms().iter().map(|p| p.predicate.as_str()).collect()
    }

    fn map_terms(&self, f: &impl Fn(&Term) -> Term, lvars: BTreeSet<String>) -> WeightedFormula {
        WeightedFormula {
            lvars,
            formula: self.formula.map_terms(f),
            weight: self.weight,
        }
    }
}

impl fmt::Display for WeightedFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l: Vec<&str> = self.lvars.iter().map(String::as_str).collect();
        write!(f, "<{{{}}}, {}, {}>", l.join(","), self.formula, self.weight)
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Mln {
    pub populations: BTreeMap<String, Population>,
    pub wfs: Vec<WeightedFormula>,
}

impl Mln {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_population(mut self, name: &str, size: u64) -> Self {
        self.populations.insert(name.to_string(), Population::new(name, size));
        self
    }

    pub fn with_wf(mut self, wf: WeightedFormula) -> Self {
        self.wfs.push(wf);
        self
    }

    pub fn population(&self, lvar: &str) -> Option<&Population> {
        self.populations.get(lvar)
    }

    pub fn size_of(&self, lvar: &str) -> SizeExpr {
        self.populations
            .get(lvar)
            .map(|p| p.size.clone())
            .unwrap_or_else(SizeExpr::zero)
    }

    /// Checks population references and arity consistency.
    pub fn validate(&self) -> Result<()> {
        let mut arities: HashMap<&str, usize> = HashMap::new();
        for wf in &self.wfs {
            for atom in wf.formula.atoms() {
                for v in atom.lvars() {
                    if !wf.lvars.contains(v) {
                        return invalid(format!("logical variable {v} of {atom} is not among the formula's variables"));
                    }
                }
                match arities.insert(&atom.predicate, atom.arity()) {
                    Some(a) if a != atom.arity() => {
                        return invalid(format!("predicate {} used with arities {a} and {}", atom.predicate, atom.arity()));
                    }
                    _ => {}
                }
            }
            for v in &wf.lvars {
                if !self.populations.contains_key(v) {
                    return invalid(format!("logical variable {v} has no population"));
                }
            }
        }
        Ok(())
    }

    /// Predicate names, sorted.
    pub fn predicates(&self) -> BTreeSet<String> {
        self.wfs
            .iter()
            .flat_map(|wf| wf.formula.atoms().into_iter().map(|p| p.predicate.clone()))
            .collect()
    }

    /// Logical variables referenced by some weighted formula.
    pub fn used_lvars(&self) -> BTreeSet<String> {
        self.wfs.iter().flat_map(|wf| wf.lvars.iter().cloned()).collect()
    }

    pub fn constants(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for wf in &self.wfs {
            for atom in wf.formula.atoms() {
                for t in &atom.args {
                    if let Term::Const(c) = t {
                        out.insert(c.clone());
                    }
                }
            }
        }
        out
    }

    /// Distinct atoms (PRVs) across all formulae, residues included.
    pub fn atoms(&self) -> BTreeSet<Prv> {
        self.wfs
            .iter()
            .flat_map(|wf| wf.formula.atoms().into_iter().cloned())
            .collect()
    }

    /// Drops populations no weighted formula refers to.
    pub fn prune_populations(mut self) -> Self {
        let used = self.used_lvars();
        self.populations.retain(|k, _| used.contains(k));
        self
    }

    /// A logical-variable name not used in this MLN, derived from `base`.
    pub fn fresh_lvar(&self, base: &str) -> String {
        let taken = |s: &str| self.populations.contains_key(s) || self.used_lvars().contains(s);
        (1..)
            .map(|i| format!("{base}{i}"))
            .find(|s| !taken(s))
            .expect("unbounded")
    }

    /// A constant name not used in this MLN.
    pub fn fresh_constant(&self, base: &str) -> String {
        let consts = self.constants();
        let stem = capitalize(base);
        (1..)
            .map(|i| format!("{stem}{i}"))
            .find(|s| !consts.contains(s))
            .expect("unbounded")
    }

    /// Replaces every occurrence of the ground atom `prv` by `value`.
    pub fn condition_literal(&self, prv: &Prv, value: bool) -> Result<Mln> {
        if !prv.is_ground() {
            return invalid(format!("cannot condition on {prv}: it has logical variables"));
        }
        let assign = |p: &Prv| (p == prv).then_some(value);
        Ok(self.map_formulas(|f| f.condition(&assign)))
    }

    fn map_formulas(&self, f: impl Fn(&Formula) -> Formula) -> Mln {
        Mln {
            populations: self.populations.clone(),
            wfs: self
                .wfs
                .iter()
                .map(|wf| WeightedFormula {
                    lvars: wf.lvars.clone(),
                    formula: f(&wf.formula),
                    weight: wf.weight,
                })
                .collect(),
        }
    }

    /// Assigns `value` to every atom that is `pattern` (whose single variable
    /// is `pattern_var`) with that variable renamed to `var`.
    pub(crate) fn condition_family(&self, pattern: &Prv, pattern_var: &str, var: &str, value: bool) -> Mln {
        let assign = |p: &Prv| p.matches_pattern(pattern, pattern_var, var).then_some(value);
        self.map_formulas(|f| f.condition(&assign))
    }

    /// Groups weighted formulae into maximal sets connected through shared predicates.
    pub fn connected_components(&self) -> Vec<Mln> {
        let n = self.wfs.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], i: usize) -> usize {
            let mut r = i;
            while parent[r] != r {
                r = parent[r];
            }
            let mut i = i;
            while parent[i] != r {
                let next = parent[i];
                parent[i] = r;
                i = next;
            }
            r
        }
        let mut owner: HashMap<&str, usize> = HashMap::new();
        for (i, wf) in self.wfs.iter().enumerate() {
            for p in wf.predicates() {
                if let Some(&j) = owner.get(p) {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    parent[a.max(b)] = a.min(b);
                } else {
                    owner.insert(p, i);
                }
            }
        }
        let mut groups: BTreeMap<usize, Vec<WeightedFormula>> = BTreeMap::new();
        for i in 0..n {
            let r = find(&mut parent, i);
            groups.entry(r).or_default().push(self.wfs[i].clone());
        }
        groups
            .into_values()
            .map(|wfs| {
                Mln {
                    populations: self.populations.clone(),
                    wfs,
                }
                .prune_populations()
            })
            .collect()
    }

    /// Renames logical variables (and their populations).
    pub fn rename_lvars(&self, map: &HashMap<String, String>) -> Mln {
        let rn = |v: &String| map.get(v).cloned().unwrap_or_else(|| v.clone());
        let f = |t: &Term| match t {
            Term::Var(v) => Term::Var(rn(v)),
            c => c.clone(),
        };
        Mln {
            populations: self
                .populations
                .iter()
                .map(|(k, p)| {
                    let name = rn(k);
                    (
                        name.clone(),
                        Population {
                            name,
                            size: p.size.clone(),
                            members: p.members.clone(),
                        },
                    )
                })
                .collect(),
            wfs: self
                .wfs
                .iter()
                .map(|wf| wf.map_terms(&f, wf.lvars.iter().map(rn).collect()))
                .collect(),
        }
    }

    /// Substitutes logical variable `x` by constant `c` everywhere and drops its population.
    pub fn substitute_lvar(&self, x: &str, c: &str) -> Mln {
        let f = |t: &Term| match t {
            Term::Var(v) if v == x => Term::Const(c.to_string()),
            t => t.clone(),
        };
        let mut populations = self.populations.clone();
        populations.remove(x);
        Mln {
            populations,
            wfs: self
                .wfs
                .iter()
                .map(|wf| {
                    let mut lvars = wf.lvars.clone();
                    lvars.remove(x);
                    wf.map_terms(&f, lvars)
                })
                .collect(),
        }
    }

    /// Replaces every weighted formula over `x` by one copy over `x1` (size
    /// `first`) and one over `x2` (size `|x| - first`). Returns the new names.
    pub fn split_population_expr(&self, x: &str, first: SizeExpr) -> Result<(Mln, String, String)> {
        let pop = match self.populations.get(x) {
            Some(p) => p.clone(),
            None => return invalid(format!("no population for logical variable {x}")),
        };
        let second = pop.size.sub(&first);
        if let (Some(a), Some(b)) = (first.as_constant(), second.as_constant()) {
            if a < 0 || b < 0 {
                return invalid(format!("cannot split {x} of size {} into {a} and {b}", pop.size));
            }
        }
        let x1 = self.fresh_lvar(x);
        let x2 = {
            let mut probe = self.clone();
            probe.populations.insert(x1.clone(), Population::new(&x1, 0));
            probe.fresh_lvar(x)
        };
        let (m1, m2) = match (&pop.members, first.as_constant()) {
            (Some(m), Some(a)) if (a as usize) <= m.len() => {
                let a = a as usize;
                (Some(m[..a].to_vec()), Some(m[a..].to_vec()))
            }
            _ => (None, None),
        };
        let mut populations = self.populations.clone();
        populations.remove(x);
        populations.insert(
            x1.clone(),
            Population {
                name: x1.clone(),
                size: first,
                members: m1,
            },
        );
        populations.insert(
            x2.clone(),
            Population {
                name: x2.clone(),
                size: second,
                members: m2,
            },
        );
        let mut wfs = Vec::new();
        for wf in &self.wfs {
            if wf.mentions(x) {
                for target in [&x1, &x2] {
                    let f = |t: &Term| match t {
                        Term::Var(v) if v == x => Term::Var(target.clone()),
                        t => t.clone(),
                    };
                    let lvars = wf
                        .lvars
                        .iter()
                        .map(|v| if v == x { target.clone() } else { v.clone() })
                        .collect();
                    wfs.push(wf.map_terms(&f, lvars));
                }
            } else {
                wfs.push(wf.clone());
            }
        }
        Ok((Mln { populations, wfs }, x1, x2))
    }

    /// Splits `x` into parts of concrete sizes `(n1, n2)`; the first `n1` members go to the first part.
    pub fn split_population(&self, x: &str, sizes: (u64, u64)) -> Result<Mln> {
        let pop = match self.populations.get(x) {
            Some(p) => p,
            None => return invalid(format!("no population for logical variable {x}")),
        };
        match pop.concrete_size() {
            Some(n) if n == sizes.0 + sizes.1 => {}
            _ => {
                return invalid(format!(
                    "split sizes {} + {} do not add up to |{x}| = {}",
                    sizes.0, sizes.1, pop.size
                ))
            }
        }
        let members = pop.member_names();
        let mut with_members = self.clone();
        if let Some(p) = with_members.populations.get_mut(x) {
            p.members = members;
        }
        Ok(with_members.split_population_expr(x, SizeExpr::constant(sizes.0 as i64))?.0)
    }

    /// Number of ground atoms; `None` if some size is symbolic.
    pub fn ground_atom_count(&self) -> Option<u64> {
        let mut total = 0u64;
        for atom in self.atoms() {
            let mut n = 1u64;
            for v in atom.lvars() {
                n = n.checked_mul(self.populations.get(v)?.concrete_size()?)?;
            }
            total = total.checked_add(n)?;
        }
        Some(total)
    }

    /// Whether every population size is a constant.
    pub fn is_concrete(&self) -> bool {
        self.populations.values().all(|p| p.size.is_constant())
    }

    /// Replaces size symbols by expressions.
    pub fn substitute_sizes(&self, map: &HashMap<String, SizeExpr>) -> Mln {
        let mut out = self.clone();
        for p in out.populations.values_mut() {
            p.size = p.size.substitute(map);
        }
        out
    }

    /// Sets population sizes by name; unknown names are reported.
    pub fn with_sizes(&self, sizes: &[(String, u64)]) -> Result<Mln> {
        let mut out = self.clone();
        for (name, n) in sizes {
            match out.populations.get_mut(name) {
                Some(p) => {
                    p.size = SizeExpr::constant(*n as i64);
                    p.members = None;
                }
                None => return invalid(format!("no population named {name}")),
            }
        }
        Ok(out)
    }

    /// Sets every population to size `n`.
    pub fn with_uniform_size(&self, n: u64) -> Mln {
        let mut out = self.clone();
        for p in out.populations.values_mut() {
            p.size = SizeExpr::constant(n as i64);
            p.members = None;
        }
        out
    }
}

impl fmt::Display for Mln {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in self.populations.values() {
            writeln!(f, "population {} {}", p.name, p.size)?;
        }
        for wf in &self.wfs {
            writeln!(f, "{wf}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub fn lit(pred: &str, args: &[&str], positive: bool) -> Literal {
        let args = args
            .iter()
            .map(|a| {
                if a.chars().next().is_some_and(char::is_uppercase) {
                    Term::constant(*a)
                } else {
                    Term::var(*a)
                }
            })
            .collect();
        Literal::new(Prv::new(pred, args), positive)
    }

    pub fn example1(x: u64, m: u64) -> Mln {
        Mln::new()
            .with_population("x", x)
            .with_population("m", m)
            .with_wf(WeightedFormula::new(
                Formula::conj(vec![lit("R", &["x", "m"], true), lit("S", &["x", "m"], true)]),
                1.2,
            ))
            .with_wf(WeightedFormula::new(
                Formula::conj(vec![lit("S", &["x", "m"], true), lit("T", &["x"], true)]),
                0.2,
            ))
    }

    #[test]
    fn normalization_is_idempotent_and_detects_contradiction() {
        let f = Formula::conj(vec![lit("A", &[], true), lit("B", &[], true), lit("A", &[], true)]);
        assert_eq!(f.literals().len(), 2);
        assert_eq!(f.clone().normalized(), f);
        let g = Formula::conj(vec![lit("A", &[], true), lit("A", &[], false), lit("B", &[], true)]);
        assert!(g.is_false());
        assert_eq!(g.atoms().len(), 2);
    }

    #[test]
    fn conditioning_collapses_false_and_true() {
        let m = Mln::new().with_wf(WeightedFormula::new(
            Formula::conj(vec![lit("A", &[], true), lit("B", &[], true)]),
            0.7,
        ));
        let a = Prv::new("A", vec![]);
        let f = m.condition_literal(&a, false).unwrap();
        assert!(f.wfs[0].formula.is_false());
        let t = m.condition_literal(&a, true).unwrap();
        let b = Prv::new("B", vec![]);
        let tt = t.condition_literal(&b, true).unwrap();
        assert!(tt.wfs[0].formula.is_true());
        // absent predicate: unchanged
        let q = Prv::new("Q", vec![]);
        assert_eq!(m.condition_literal(&q, true).unwrap(), m);
        // non-ground rejected
        let bad = Prv::new("T", vec![Term::var("x")]);
        assert!(m.condition_literal(&bad, true).is_err());
    }

    #[test]
    fn example9_conditioning() {
        // <{m2}, True & t(X1), 1.2> with T(X1) := true gives <{m2}, True, 1.2>
        let m = Mln::new().with_population("m2", 2).with_wf(WeightedFormula::with_lvars(
            ["m2"],
            Formula::conj(vec![lit("T", &["X1"], true)]),
            1.2,
        ));
        let c = m.condition_literal(&Prv::new("T", vec![Term::constant("X1")]), true).unwrap();
        assert_eq!(c.wfs.len(), 1);
        assert!(c.wfs[0].formula.is_true());
        assert!(c.wfs[0].lvars.contains("m2"));
        assert_eq!(c.wfs[0].weight, 1.2);
    }

    #[test]
    fn components_partition() {
        assert!(Mln::new().connected_components().is_empty());
        let m = example1(2, 2);
        let comps = m.connected_components();
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].wfs, m.wfs);
        let two = Mln::new()
            .with_population("m1", 2)
            .with_wf(WeightedFormula::new(Formula::conj(vec![lit("R", &["X1", "m1"], true)]), 1.2))
            .with_wf(WeightedFormula::with_lvars(["m1"], Formula::conj(vec![lit("T", &["X1"], true)]), 0.2));
        let comps = two.connected_components();
        assert_eq!(comps.len(), 2);
        assert_eq!(comps.iter().map(|c| c.wfs.len()).sum::<usize>(), 2);
    }

    #[test]
    fn split_population_copies_wfs() {
        let m = example1(5, 2).with_wf(WeightedFormula::new(Formula::conj(vec![lit("U", &["m"], true)]), 0.1));
        let s = m.split_population("x", (2, 3)).unwrap();
        assert_eq!(s.wfs.len(), 5);
        assert!(s.wfs.iter().any(|wf| wf.lvars.len() == 1 && wf.mentions("m")));
        let x1 = s.populations.get("x1").unwrap();
        assert_eq!(x1.members.as_deref(), Some(&["X1".to_string(), "X2".to_string()][..]));
        assert_eq!(s.populations.get("x2").unwrap().concrete_size(), Some(3));
        assert!(m.split_population("x", (2, 2)).is_err());
        let degenerate = m.split_population("x", (0, 5)).unwrap();
        assert_eq!(degenerate.populations.get("x1").unwrap().concrete_size(), Some(0));
    }
}
