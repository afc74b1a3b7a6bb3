use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use liftc::canon::canonicalize;
use liftc::codegen::{compile, interpret, prune};
use liftc::engine::{lifted_z, NumericMode};
use liftc::generate::random_mln_seeded;
use liftc::heuristics::{greedy_order, min_nested_loops, nesting_depth, CaseAnalysisOrder};
use liftc::numeric::rel_diff;
use liftc::oracle::ground_partition;

fn shuffled_order(m: &liftc::mln::Mln, seed: u64) -> CaseAnalysisOrder {
    let mut preds: Vec<String> = m.predicates().into_iter().collect();
    preds.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    CaseAnalysisOrder::new(preds)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn engine_interpreter_and_pruned_program_agree_bitwise(seed in any::<u64>(), order_seed in any::<u64>()) {
        let m = random_mln_seeded(seed);
        let order = shuffled_order(&m, order_seed);
        let p = compile(&m, &order).unwrap();
        let engine = lifted_z(&m, &order, NumericMode::Linear).unwrap().linear();
        let interp = interpret(&p, NumericMode::Linear).unwrap().linear();
        let pruned = interpret(&prune(&p), NumericMode::Linear).unwrap().linear();
        prop_assert_eq!(engine.to_bits(), interp.to_bits());
        prop_assert_eq!(interp.to_bits(), pruned.to_bits());
    }

    #[test]
    fn lifted_matches_oracle_in_both_modes(seed in any::<u64>()) {
        let m = random_mln_seeded(seed);
        let want = ground_partition(&m).unwrap().linear();
        let order = greedy_order(&m);
        let lin = lifted_z(&m, &order, NumericMode::Linear).unwrap().linear();
        let log = lifted_z(&m, &order, NumericMode::LogSpace).unwrap().ln();
        prop_assert!(rel_diff(lin, want) < 1e-9);
        prop_assert!((log - want.ln()).abs() < 1e-9 * want.ln().abs().max(1.0));
    }

    #[test]
    fn predicted_depth_matches_program(seed in any::<u64>(), order_seed in any::<u64>()) {
        let m = random_mln_seeded(seed);
        let order = shuffled_order(&m, order_seed);
        prop_assert_eq!(nesting_depth(&m, &order).unwrap(), compile(&m, &order).unwrap().loop_depth());
        let found = min_nested_loops(&m, &order, 10, order_seed);
        prop_assert!(nesting_depth(&m, &found).unwrap() <= nesting_depth(&m, &order).unwrap());
    }

    #[test]
    fn z_does_not_depend_on_order(seed in any::<u64>(), a in any::<u64>(), b in any::<u64>()) {
        let m = random_mln_seeded(seed);
        let x = lifted_z(&m, &shuffled_order(&m, a), NumericMode::Linear).unwrap().linear();
        let y = lifted_z(&m, &shuffled_order(&m, b), NumericMode::Linear).unwrap().linear();
        prop_assert!(rel_diff(x, y) < 1e-9);
    }

    #[test]
    fn canonical_key_ignores_lvar_names(seed in any::<u64>()) {
        let m = random_mln_seeded(seed);
        let renaming = m
            .used_lvars()
            .into_iter()
            .map(|v| (v.clone(), format!("{v}_r")))
            .collect();
        prop_assert_eq!(canonicalize(&m), canonicalize(&m.rename_lvars(&renaming)));
    }
}
