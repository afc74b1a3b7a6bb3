//! Small random MLNs and evidence, sized so the ground oracle can check them.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::mln::{Formula, Literal, Mln, Prv, Term, WeightedFormula};
use crate::shatter::Observation;

const LVARS: [&str; 3] = ["x", "y", "z"];
const PREDICATES: [&str; 3] = ["P", "Q", "R"];

#[derive(Clone, Debug)]
pub struct GeneratorConfig {
    pub max_predicates: usize,
    pub max_arity: usize,
    pub max_wfs: usize,
    pub max_population: u64,
    pub max_weight: f64,
    pub max_ground_atoms: u64,
    /// Chance that a WF quantifies over a variable its formula does not mention.
    pub extra_lvar_prob: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            max_predicates: 3,
            max_arity: 2,
            max_wfs: 3,
            max_population: 3,
            max_weight: 2.0,
            max_ground_atoms: 16,
            extra_lvar_prob: 0.1,
        }
    }
}

fn signature<R: Rng>(rng: &mut R, max_arity: usize) -> Vec<&'static str> {
    let arity = rng.gen_range(0..=max_arity.min(2));
    let mut vars = LVARS.to_vec();
    vars.shuffle(rng);
    vars.truncate(arity);
    vars
}

fn attempt<R: Rng>(rng: &mut R, cfg: &GeneratorConfig) -> Mln {
    let npred = rng.gen_range(1..=cfg.max_predicates.clamp(1, PREDICATES.len()));
    let sigs: Vec<(&str, Vec<&str>)> = PREDICATES[..npred]
        .iter()
        .map(|p| (*p, signature(rng, cfg.max_arity)))
        .collect();
    let mut m = Mln::new();
    for v in LVARS {
        m = m.with_population(v, rng.gen_range(1..=cfg.max_population.max(1)));
    }
    for _ in 0..rng.gen_range(1..=cfg.max_wfs.max(1)) {
        let nlits = rng.gen_range(1..=3);
        let lits: Vec<Literal> = (0..nlits)
            .map(|_| {
                let (p, args) = sigs.choose(rng).expect("at least one predicate");
                let prv = Prv::new(*p, args.iter().map(|a| Term::var(*a)).collect());
                Literal::new(prv, rng.gen_bool(0.7))
            })
            .collect();
        let formula = Formula::conj(lits);
        let weight = (rng.gen_range(-cfg.max_weight..=cfg.max_weight) * 100.0).round() / 100.0;
        let mut wf = WeightedFormula::new(formula, weight);
        if rng.gen_bool(cfg.extra_lvar_prob) {
            wf.lvars.insert(LVARS.choose(rng).expect("nonempty").to_string());
        }
        m.wfs.push(wf);
    }
    m.prune_populations()
}

/// A random MLN within the configured limits. Draws are repeated until the
/// ground-atom count is within bounds.
pub fn random_mln<R: Rng>(rng: &mut R, cfg: &GeneratorConfig) -> Mln {
    loop {
        let m = attempt(rng, cfg);
        if m.ground_atom_count().is_some_and(|n| n <= cfg.max_ground_atoms) {
            return m;
        }
    }
}

pub fn random_mln_seeded(seed: u64) -> Mln {
    random_mln(&mut ChaCha8Rng::seed_from_u64(seed), &GeneratorConfig::default())
}

/// `pred(x)` patterns of the MLN that a count observation can target.
pub fn unary_patterns(m: &Mln) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = m
        .atoms()
        .iter()
        .filter_map(|p| match p.args.as_slice() {
            [Term::Var(x)] => Some((p.predicate.clone(), x.clone())),
            _ => None,
        })
        .collect();
    out.dedup();
    out
}

/// Random ground evidence on unary and arity-0 atoms, using the synthesized
/// member names. Each atom is observed with probability `density`.
pub fn random_observations<R: Rng>(rng: &mut R, m: &Mln, density: f64) -> Vec<Observation> {
    let mut obs = Vec::new();
    for p in m.atoms() {
        let candidates: Vec<Prv> = match p.args.as_slice() {
            [] => vec![p.clone()],
            [Term::Var(x)] => m
                .population(x)
                .and_then(|pop| pop.member_names())
                .unwrap_or_default()
                .into_iter()
                .map(|c| Prv::new(p.predicate.clone(), vec![Term::constant(c)]))
                .collect(),
            _ => continue,
        };
        for prv in candidates {
            if rng.gen_bool(density) {
                obs.push(Observation::Ground { prv, value: rng.gen_bool(0.5) });
            }
        }
    }
    obs
}
