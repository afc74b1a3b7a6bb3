//! Integer polynomials over size symbols.
//!
//! Population sizes, exponents and loop bounds stay symbolic while a circuit
//! is being generated: splitting a population of size `n` on a loop index `i`
//! yields parts of size `i` and `n - i`, and the number of eliminated ground
//! atoms is a sum of products of such sizes. Keeping them as polynomials in
//! normal form makes structural equality exact.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

/// A monomial is a sorted multiset of symbol names (empty = constant term).
type Monomial = Vec<String>;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct SizeExpr {
    terms: BTreeMap<Monomial, i64>,
}

impl SizeExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: i64) -> Self {
        let mut terms = BTreeMap::new();
        if c != 0 {
            terms.insert(Vec::new(), c);
        }
        Self { terms }
    }

    pub fn symbol(name: impl Into<String>) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(vec![name.into()], 1);
        Self { terms }
    }

    pub fn as_constant(&self) -> Option<i64> {
        match self.terms.len() {
            0 => Some(0),
            1 => self.terms.get(&Vec::new()).copied(),
            _ => None,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.as_constant().is_some()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Symbols occurring in the expression, sorted and deduplicated.
    pub fn symbols(&self) -> Vec<String> {
        let mut out: Vec<String> = self.terms.keys().flatten().cloned().collect();
        out.sort();
        out.dedup();
        out
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[String], i64)> {
        self.terms.iter().map(|(m, c)| (m.as_slice(), *c))
    }

    fn add_term(&mut self, mono: Monomial, coeff: i64) {
        if coeff == 0 {
            return;
        }
        let entry = self.terms.entry(mono).or_insert(0);
        *entry += coeff;
        if *entry == 0 {
            self.terms.retain(|_, c| *c != 0);
        }
    }

    pub fn add(&self, other: &SizeExpr) -> SizeExpr {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), *c);
        }
        out
    }

    pub fn sub(&self, other: &SizeExpr) -> SizeExpr {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -*c);
        }
        out
    }

    pub fn mul(&self, other: &SizeExpr) -> SizeExpr {
        let mut out = SizeExpr::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let mut mono = ma.clone();
                mono.extend(mb.iter().cloned());
                mono.sort();
                out.add_term(mono, ca * cb);
            }
        }
        out
    }

    /// Replaces symbols by expressions. Symbols absent from `map` are kept.
    pub fn substitute(&self, map: &HashMap<String, SizeExpr>) -> SizeExpr {
        let mut out = SizeExpr::zero();
        for (mono, c) in &self.terms {
            let mut term = SizeExpr::constant(*c);
            for s in mono {
                let factor = map.get(s).cloned().unwrap_or_else(|| SizeExpr::symbol(s.clone()));
                term = term.mul(&factor);
            }
            out = out.add(&term);
        }
        out
    }

    pub fn rename(&self, map: &HashMap<String, String>) -> SizeExpr {
        let subst = map
            .iter()
            .map(|(k, v)| (k.clone(), SizeExpr::symbol(v.clone())))
            .collect();
        self.substitute(&subst)
    }

    /// Evaluates under a binding; `None` if a symbol is unbound.
    pub fn eval_with(&self, lookup: impl Fn(&str) -> Option<i64>) -> Option<i64> {
        let mut total = 0i64;
        for (mono, c) in &self.terms {
            let mut v = *c;
            for s in mono {
                v = v.checked_mul(lookup(s)?)?;
            }
            total = total.checked_add(v)?;
        }
        Some(total)
    }

    pub fn eval(&self, env: &HashMap<String, i64>) -> Option<i64> {
        self.eval_with(|s| env.get(s).copied())
    }

    /// Upper bound over the box `0 <= sym <= bound(sym)`.
    pub fn upper_bound(&self, bound: impl Fn(&str) -> i64) -> i64 {
        let mut total = 0i64;
        for (mono, c) in &self.terms {
            if *c > 0 {
                let mut v = *c;
                for s in mono {
                    v = v.saturating_mul(bound(s).max(0));
                }
                total = total.saturating_add(v);
            }
        }
        total
    }
}

impl From<i64> for SizeExpr {
    fn from(c: i64) -> Self {
        SizeExpr::constant(c)
    }
}

impl fmt::Display for SizeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        // Constant term last so that `2 - i` style sizes read naturally.
        let mut ordered: Vec<(&Monomial, &i64)> = self.terms.iter().filter(|(m, _)| !m.is_empty()).collect();
        let constant = self.terms.get(&Vec::new()).copied();
        let mut first = true;
        if let Some(c) = constant {
            write!(f, "{c}")?;
            first = false;
        }
        ordered.sort();
        for (mono, c) in ordered {
            let (sign, mag) = if *c < 0 { ("-", -*c) } else { ("+", *c) };
            if first {
                if sign == "-" {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            if mag != 1 {
                write!(f, "{mag}*")?;
            }
            write!(f, "{}", mono.join("*"))?;
        }
        Ok(())
    }
}
