//! Brute-force reference semantics: ground the MLN, enumerate every world,
//! and sum the unnormalized world weights.

use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::mln::{Formula, Mln, Prv, Term};
use crate::numeric::PartitionValue;

pub const DEFAULT_BOUND: usize = 24;
const CHUNK: u64 = 1 << 14;

/// A total truth assignment to the ground atoms of an MLN.
#[derive(Clone, Debug, PartialEq)]
pub struct World {
    atoms: Vec<Prv>,
    values: Vec<bool>,
}

impl World {
    /// The world in which exactly the atoms in `true_atoms` hold.
    pub fn from_true_atoms(m: &Mln, true_atoms: &[Prv]) -> Result<World> {
        let atoms = ground_atoms(m)?;
        for a in true_atoms {
            if !atoms.contains(a) {
                return invalid(format!("{a} is not a ground atom of the MLN"));
            }
        }
        let values = atoms.iter().map(|a| true_atoms.contains(a)).collect();
        Ok(World { atoms, values })
    }

    pub fn all_false(m: &Mln) -> Result<World> {
        Self::from_true_atoms(m, &[])
    }

    pub fn get(&self, atom: &Prv) -> Option<bool> {
        self.atoms.binary_search(atom).ok().map(|i| self.values[i])
    }
}

fn members(m: &Mln, lvar: &str) -> Result<Vec<String>> {
    match m.population(lvar).and_then(|p| p.member_names()) {
        Some(ms) => Ok(ms),
        None => invalid(format!("population {lvar} has no concrete size")),
    }
}

/// All assignments of members to `vars`, in lexicographic order.
fn assignments(m: &Mln, vars: &[String]) -> Result<Vec<HashMap<String, String>>> {
    let mut out = vec![HashMap::new()];
    for v in vars {
        let ms = members(m, v)?;
        let mut next = Vec::with_capacity(out.len() * ms.len());
        for a in &out {
            for c in &ms {
                let mut b = a.clone();
                b.insert(v.clone(), c.clone());
                next.push(b);
            }
        }
        out = next;
    }
    Ok(out)
}

fn ground(p: &Prv, sub: &HashMap<String, String>) -> Prv {
    Prv {
        predicate: p.predicate.clone(),
        args: p
            .args
            .iter()
            .map(|t| match t {
                Term::Var(v) => Term::Const(sub[v].clone()),
                c => c.clone(),
            })
            .collect(),
    }
}

/// Ground atoms of the MLN, sorted lexicographically.
pub fn ground_atoms(m: &Mln) -> Result<Vec<Prv>> {
    let mut out = BTreeSet::new();
    for atom in m.atoms() {
        let vars: Vec<String> = atom.lvars().into_iter().map(str::to_string).collect();
        for sub in assignments(m, &vars)? {
            out.insert(ground(&atom, &sub));
        }
    }
    Ok(out.into_iter().collect())
}

fn formula_vars(f: &Formula) -> Vec<String> {
    let mut vars: Vec<String> = f.atoms().iter().flat_map(|p| p.lvars()).map(str::to_string).collect();
    vars.sort();
    vars.dedup();
    vars
}

/// Number of assignments of individuals to `lvars` under which `formula` holds in `world`.
pub fn eta(m: &Mln, lvars: &BTreeSet<String>, formula: &Formula, world: &World) -> Result<u64> {
    let fv = formula_vars(formula);
    let mut extra = 1u64;
    for v in lvars.iter().filter(|v| !fv.contains(v)) {
        extra *= members(m, v)?.len() as u64;
    }
    let count = match formula {
        Formula::True => 1,
        Formula::False { .. } => 0,
        Formula::Conj(lits) => {
            let mut n = 0u64;
            for sub in assignments(m, &fv)? {
                let holds = lits.iter().all(|l| world.get(&ground(&l.prv, &sub)) == Some(l.positive));
                n += holds as u64;
            }
            n
        }
    };
    Ok(count * extra)
}

/// Unnormalized weight `prod exp(eta * w)` of a world.
pub fn world_weight(m: &Mln, world: &World) -> Result<PartitionValue> {
    let mut v = 1.0;
    for wf in &m.wfs {
        let n = eta(m, &wf.lvars, &wf.formula, world)?;
        v *= (n as f64 * wf.weight).exp();
    }
    Ok(PartitionValue::Linear(v))
}

/// One weighted formula compiled to bit masks over the atom index.
struct Compiled {
    weight: f64,
    multiplier: f64,
    constant: u64,
    groundings: Vec<(u64, u64)>,
}

#[derive(Clone, Copy, Debug)]
pub struct GroundOracle {
    /// Maximum number of ground atoms; `None` disables the check.
    pub bound: Option<usize>,
}

impl Default for GroundOracle {
    fn default() -> Self {
        Self {
            bound: Some(DEFAULT_BOUND),
        }
    }
}

impl GroundOracle {
    pub fn forced() -> Self {
        Self { bound: None }
    }

    pub fn partition(&self, m: &Mln) -> Result<PartitionValue> {
        let atoms = ground_atoms(m)?;
        let n = atoms.len();
        if let Some(b) = self.bound {
            if n > b {
                return Err(Error::OracleBound { vars: n, bound: b });
            }
        }
        if n > 40 {
            return Err(Error::OracleBound { vars: n, bound: 40 });
        }
        let index: HashMap<&Prv, usize> = atoms.iter().enumerate().map(|(i, a)| (a, i)).collect();
        let mut compiled = Vec::new();
        for wf in &m.wfs {
            let fv = formula_vars(&wf.formula);
            let mut multiplier = 1u64;
            for v in wf.lvars.iter().filter(|v| !fv.contains(v)) {
                multiplier *= members(m, v)?.len() as u64;
            }
            let mut c = Compiled {
                weight: wf.weight,
                multiplier: multiplier as f64,
                constant: 0,
                groundings: Vec::new(),
            };
            match &wf.formula {
                Formula::True => c.constant = multiplier,
                Formula::False { .. } => {}
                Formula::Conj(lits) => {
                    for sub in assignments(m, &fv)? {
                        let (mut pos, mut neg) = (0u64, 0u64);
                        for l in lits {
                            let bit = 1u64 << index[&ground(&l.prv, &sub)];
                            if l.positive {
                                pos |= bit;
                            } else {
                                neg |= bit;
                            }
                        }
                        if pos & neg == 0 {
                            c.groundings.push((pos, neg));
                        }
                    }
                }
            }
            compiled.push(c);
        }
        let weight_of = |world: u64| -> f64 {
            let mut log_w = 0.0;
            for c in &compiled {
                let hits = c.groundings.iter().filter(|(p, q)| world & p == *p && world & q == 0).count();
                let eta = c.constant as f64 + c.multiplier * hits as f64;
                log_w += eta * c.weight;
            }
            log_w.exp()
        };
        let total: u64 = 1u64 << n;
        let chunks = total.div_ceil(CHUNK);
        let partial: Vec<f64> = (0..chunks)
            .into_par_iter()
            .map(|k| {
                let lo = k * CHUNK;
                let hi = (lo + CHUNK).min(total);
                (lo..hi).map(weight_of).sum::<f64>()
            })
            .collect();
        Ok(PartitionValue::Linear(partial.iter().sum()))
    }
}

/// Partition function by exhaustive enumeration, under the default bound.
pub fn ground_partition(m: &Mln) -> Result<PartitionValue> {
    GroundOracle::default().partition(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mln::tests::{example1, lit};
    use crate::mln::WeightedFormula;
    use crate::numeric::rel_diff;

    fn atom(pred: &str, args: &[&str]) -> Prv {
        lit(pred, args, true).prv
    }

    #[test]
    fn eta_matches_worked_example() {
        let m = example1(5, 2);
        let world = World::from_true_atoms(
            &m,
            &[
                atom("R", &["X1", "M1"]),
                atom("S", &["X1", "M1"]),
                atom("S", &["X1", "M2"]),
                atom("T", &["X1"]),
            ],
        )
        .unwrap();
        assert_eq!(eta(&m, &m.wfs[0].lvars, &m.wfs[0].formula, &world).unwrap(), 1);
        assert_eq!(eta(&m, &m.wfs[1].lvars, &m.wfs[1].formula, &world).unwrap(), 2);
        assert_eq!(eta(&m, &BTreeSet::new(), &Formula::True, &world).unwrap(), 1);
        let w = world_weight(&m, &world).unwrap().linear();
        assert!(rel_diff(w, (1.2f64).exp() * (0.4f64).exp()) < 1e-15);
        let zero = World::all_false(&m).unwrap();
        assert_eq!(world_weight(&m, &zero).unwrap().linear(), 1.0);
    }

    #[test]
    fn example1_unit_populations() {
        // brute force over 8 worlds: 5 + e^0.2 + e^1.2 + e^1.4
        let z = ground_partition(&example1(1, 1)).unwrap().linear();
        let expected = 5.0 + 0.2f64.exp() + 1.2f64.exp() + 1.4f64.exp();
        assert!(rel_diff(z, expected) < 1e-12);
        assert!((z - 13.5967).abs() < 1e-4);
    }

    #[test]
    fn independent_groundings_closed_form() {
        for n in 1..=5u64 {
            for w in [-1.0, 0.0, 0.5, 2.0] {
                let m = Mln::new()
                    .with_population("x", n)
                    .with_wf(WeightedFormula::new(Formula::conj(vec![lit("T", &["x"], true)]), w));
                let z = ground_partition(&m).unwrap().linear();
                assert!(rel_diff(z, (w.exp() + 1.0).powi(n as i32)) < 1e-9);
            }
        }
    }

    #[test]
    fn empty_and_unconstrained() {
        assert_eq!(ground_partition(&Mln::new()).unwrap().linear(), 1.0);
        let m = Mln::new().with_population("x", 3).with_wf(WeightedFormula::with_lvars(
            ["x"],
            Formula::False {
                residue: vec![atom("A", &["x"]), atom("B", &[])],
            },
            1.0,
        ));
        assert_eq!(ground_partition(&m).unwrap().linear(), 16.0);
        let t = Mln::new().with_wf(WeightedFormula::new(Formula::True, 0.3));
        assert!(rel_diff(ground_partition(&t).unwrap().linear(), 0.3f64.exp()) < 1e-15);
    }

    #[test]
    fn bound_is_enforced() {
        match ground_partition(&example1(5, 5)) {
            Err(Error::OracleBound { vars, bound }) => {
                assert_eq!(vars, 55);
                assert_eq!(bound, DEFAULT_BOUND);
            }
            other => panic!("expected refusal, got {other:?}"),
        }
    }
}
