//! Canonical forms of MLNs, used as cache keys and as the representative
//! instance on which rules are applied.
//!
//! Two MLNs that differ only by renaming of logical variables, constants and
//! size symbols, or by the order of weighted formulae and literals, map to the
//! same key. The key is a complete serialization of the relabelled MLN, so
//! equal keys always denote isomorphic MLNs. Labels are chosen by colour
//! refinement followed by a bounded search over ties; when the tie search
//! exceeds its budget the first candidate is used, which can only cost cache
//! hits.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::hash::{Hash, Hasher};

use crate::mln::{Formula, Mln, Population, Prv, Term, WeightedFormula};
use crate::size::SizeExpr;

const REFINEMENT_ROUNDS: usize = 4;
const MAX_LABELINGS: usize = 720;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalKey(String);

impl CanonicalKey {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for CanonicalKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Canonical relabelling of an MLN.
#[derive(Clone, Debug)]
pub struct CanonicalForm {
    pub key: CanonicalKey,
    /// The relabelled MLN: logical variables `x0..`, constants `K0..`, size symbols `s0..`.
    pub mln: Mln,
    /// Original size symbols; `symbols[k]` was renamed to `s{k}`.
    pub symbols: Vec<String>,
}

pub fn canonical_symbol(k: usize) -> String {
    format!("s{k}")
}

/// Index `k` of a canonical symbol `s{k}`.
pub fn symbol_slot(name: &str) -> Option<usize> {
    name.strip_prefix('s')?.parse().ok()
}

pub fn canonicalize(m: &Mln) -> CanonicalKey {
    canonical_form(m).key
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
enum Kind {
    Lvar,
    Const,
    Sym,
}

fn h<T: Hash>(t: &T) -> u64 {
    let mut s = DefaultHasher::new();
    t.hash(&mut s);
    s.finish()
}

struct Nodes {
    lvars: Vec<String>,
    consts: Vec<String>,
    syms: Vec<String>,
}

pub fn canonical_form(m: &Mln) -> CanonicalForm {
    let m = m.clone().prune_populations();
    let nodes = Nodes {
        lvars: m.used_lvars().into_iter().collect(),
        consts: m.constants().into_iter().collect(),
        syms: m
            .populations
            .values()
            .flat_map(|p| p.size.symbols())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect(),
    };
    let colors = refine(&m, &nodes);

    let groups = |kind: Kind, names: &[String]| -> Vec<Vec<String>> {
        let mut by_color: BTreeMap<u64, Vec<String>> = BTreeMap::new();
        for n in names {
            by_color.entry(colors[&(kind, n.clone())]).or_default().push(n.clone());
        }
        by_color.into_values().collect()
    };
    let mut all_groups = groups(Kind::Lvar, &nodes.lvars);
    let n_lvar_groups = all_groups.len();
    all_groups.extend(groups(Kind::Const, &nodes.consts));
    let n_const_groups = all_groups.len() - n_lvar_groups;
    all_groups.extend(groups(Kind::Sym, &nodes.syms));

    let total: usize = all_groups
        .iter()
        .map(|g| factorial_capped(g.len()))
        .fold(1usize, |a, b| a.saturating_mul(b));
    let candidates: Vec<Vec<Vec<String>>> = if total <= MAX_LABELINGS {
        enumerate_orders(&all_groups)
    } else {
        vec![all_groups.clone()]
    };

    let mut best: Option<(String, Mln, Vec<String>)> = None;
    for ordered in candidates {
        let lvar_order: Vec<&String> = ordered[..n_lvar_groups].iter().flatten().collect();
        let const_order: Vec<&String> = ordered[n_lvar_groups..n_lvar_groups + n_const_groups]
            .iter()
            .flatten()
            .collect();
        let sym_order: Vec<String> = ordered[n_lvar_groups + n_const_groups..].iter().flatten().cloned().collect();
        let (text, relabelled) = relabel(&m, &lvar_order, &const_order, &sym_order);
        if best.as_ref().is_none_or(|(b, _, _)| text < *b) {
            best = Some((text, relabelled, sym_order));
        }
    }
    let (text, mln, symbols) = best.unwrap_or_else(|| (String::new(), Mln::new(), Vec::new()));
    CanonicalForm {
        key: CanonicalKey(text),
        mln,
        symbols,
    }
}

fn factorial_capped(n: usize) -> usize {
    (1..=n).fold(1usize, |a, b| a.saturating_mul(b)).min(MAX_LABELINGS + 1)
}

fn permutations(items: &[String]) -> Vec<Vec<String>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head.clone());
            out.push(tail);
        }
    }
    out
}

fn enumerate_orders(groups: &[Vec<String>]) -> Vec<Vec<Vec<String>>> {
    let mut acc: Vec<Vec<Vec<String>>> = vec![Vec::new()];
    for g in groups {
        let perms = permutations(g);
        let mut next = Vec::with_capacity(acc.len() * perms.len());
        for prefix in &acc {
            for p in &perms {
                let mut v = prefix.clone();
                v.push(p.clone());
                next.push(v);
            }
        }
        acc = next;
    }
    acc
}

fn term_key(t: &Term) -> (Kind, String) {
    match t {
        Term::Var(v) => (Kind::Lvar, v.clone()),
        Term::Const(c) => (Kind::Const, c.clone()),
    }
}

/// Colour refinement over logical variables, constants and size symbols.
fn refine(m: &Mln, nodes: &Nodes) -> HashMap<(Kind, String), u64> {
    let mut colors: HashMap<(Kind, String), u64> = HashMap::new();
    for v in &nodes.lvars {
        let size = &m.populations[v].size;
        let mut shape: Vec<(usize, i64)> = size.terms().filter(|(mono, _)| !mono.is_empty()).map(|(mono, c)| (mono.len(), c)).collect();
        shape.sort();
        colors.insert((Kind::Lvar, v.clone()), h(&("L", size.as_constant(), size.terms().find(|(mono, _)| mono.is_empty()).map(|(_, c)| c), shape)));
    }
    for c in &nodes.consts {
        colors.insert((Kind::Const, c.clone()), h(&"C"));
    }
    for s in &nodes.syms {
        colors.insert((Kind::Sym, s.clone()), h(&"S"));
    }

    for _ in 0..REFINEMENT_ROUNDS {
        let atom_color = |p: &Prv, colors: &HashMap<(Kind, String), u64>| -> u64 {
            let args: Vec<u64> = p.args.iter().map(|t| colors[&term_key(t)]).collect();
            h(&(&p.predicate, args))
        };
        let mut incid: HashMap<(Kind, String), Vec<u64>> = HashMap::new();
        for wf in &m.wfs {
            let mut parts: Vec<u64> = match &wf.formula {
                Formula::Conj(lits) => lits.iter().map(|l| h(&(l.positive, atom_color(&l.prv, &colors)))).collect(),
                Formula::True => vec![h(&"T")],
                Formula::False { residue } => residue.iter().map(|p| h(&("F", atom_color(p, &colors)))).collect(),
            };
            parts.sort();
            let mut lv: Vec<u64> = wf.lvars.iter().map(|v| colors[&(Kind::Lvar, v.clone())]).collect();
            lv.sort();
            let wf_color = h(&(wf.weight.to_bits(), wf.formula.is_false(), parts, lv));

            for v in &wf.lvars {
                incid.entry((Kind::Lvar, v.clone())).or_default().push(h(&("in", wf_color)));
            }
            let atoms: Vec<(bool, &Prv)> = match &wf.formula {
                Formula::Conj(lits) => lits.iter().map(|l| (l.positive, &l.prv)).collect(),
                Formula::False { residue } => residue.iter().map(|p| (false, p)).collect(),
                Formula::True => Vec::new(),
            };
            for (sign, p) in atoms {
                let ac = atom_color(p, &colors);
                for (pos, t) in p.args.iter().enumerate() {
                    incid
                        .entry(term_key(t))
                        .or_default()
                        .push(h(&(wf_color, sign, ac, pos)));
                }
            }
        }
        for v in &nodes.lvars {
            for (mono, c) in m.populations[v].size.terms() {
                for s in mono {
                    let lc = colors[&(Kind::Lvar, v.clone())];
                    incid.entry((Kind::Sym, s.clone())).or_default().push(h(&(lc, mono.len(), c)));
                    let sc = colors[&(Kind::Sym, s.clone())];
                    incid.entry((Kind::Lvar, v.clone())).or_default().push(h(&(sc, mono.len(), c)));
                }
            }
        }
        let mut next = HashMap::with_capacity(colors.len());
        for (k, old) in &colors {
            let mut inc = incid.remove(k).unwrap_or_default();
            inc.sort();
            next.insert(k.clone(), h(&(old, inc)));
        }
        colors = next;
    }
    colors
}

fn relabel(m: &Mln, lvars: &[&String], consts: &[&String], syms: &[String]) -> (String, Mln) {
    let lmap: HashMap<&str, String> = lvars.iter().enumerate().map(|(i, v)| (v.as_str(), format!("x{i}"))).collect();
    let cmap: HashMap<&str, String> = consts.iter().enumerate().map(|(i, c)| (c.as_str(), format!("K{i}"))).collect();
    let smap: HashMap<String, String> = syms.iter().enumerate().map(|(i, s)| (s.clone(), canonical_symbol(i))).collect();

    let map_prv = |p: &Prv| Prv {
        predicate: p.predicate.clone(),
        args: p
            .args
            .iter()
            .map(|t| match t {
                Term::Var(v) => Term::Var(lmap[v.as_str()].clone()),
                Term::Const(c) => Term::Const(cmap[c.as_str()].clone()),
            })
            .collect(),
    };

    let mut populations = BTreeMap::new();
    for v in lvars {
        let name = lmap[v.as_str()].clone();
        populations.insert(
            name.clone(),
            Population::symbolic(name, m.populations[v.as_str()].size.rename(&smap)),
        );
    }

    let mut wfs: Vec<(String, WeightedFormula)> = m
        .wfs
        .iter()
        .map(|wf| {
            let formula = match &wf.formula {
                Formula::Conj(lits) => Formula::Conj(
                    lits.iter()
                        .map(|l| crate::mln::Literal::new(map_prv(&l.prv), l.positive))
                        .collect(),
                ),
                Formula::True => Formula::True,
                Formula::False { residue } => Formula::False {
                    residue: residue.iter().map(map_prv).collect(),
                },
            }
            .normalized();
            let lv: BTreeSet<String> = wf.lvars.iter().map(|v| lmap[v.as_str()].clone()).collect();
            let wf = WeightedFormula {
                lvars: lv,
                formula,
                weight: wf.weight,
            };
            (serialize_wf(&wf), wf)
        })
        .collect();
    wfs.sort_by(|a, b| a.0.cmp(&b.0));

    let mut text = String::new();
    for (i, v) in lvars.iter().enumerate() {
        let _ = v;
        let name = format!("x{i}");
        text.push_str(&format!("{name}={};", populations[&name].size));
    }
    text.push('|');
    for (s, _) in &wfs {
        text.push_str(s);
        text.push(';');
    }
    let mln = Mln {
        populations,
        wfs: wfs.into_iter().map(|(_, wf)| wf).collect(),
    };
    (text, mln)
}

fn serialize_wf(wf: &WeightedFormula) -> String {
    let lv: Vec<&str> = wf.lvars.iter().map(String::as_str).collect();
    let body = match &wf.formula {
        Formula::True => "T".to_string(),
        Formula::False { residue } => {
            let r: Vec<String> = residue.iter().map(|p| p.to_string()).collect();
            format!("F[{}]", r.join(","))
        }
        Formula::Conj(lits) => {
            let r: Vec<String> = lits.iter().map(|l| l.to_string()).collect();
            format!("C[{}]", r.join(","))
        }
    };
    format!("{:016x}{{{}}}{}", wf.weight.to_bits(), lv.join(","), body)
}

/// Maps the canonical symbols of `form` back onto expressions in the original symbols.
pub fn symbol_args(form: &CanonicalForm) -> Vec<SizeExpr> {
    form.symbols.iter().map(|s| SizeExpr::symbol(s.clone())).collect()
}
