mod common;

use proptest::prelude::*;

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 50,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn comparison_principle(seed in any::<u64>()) {
        let v = common::comparison_violation(seed);
        prop_assert!(v <= 1e-12, "violation {v}");
    }

    #[test]
    fn superposition(seed in any::<u64>()) {
        let d = common::superposition_defect(seed);
        prop_assert!(d <= 1e-12, "defect {d}");
    }

    #[test]
    fn audit_constants_are_scale_invariant(seed in any::<u64>()) {
        let d = common::audit_scaling_defect(seed);
        prop_assert!(d <= 1e-8, "defect {d}");
    }

    #[test]
    fn stable_solutions_scale_covariantly(seed in any::<u64>()) {
        let d = common::solution_scaling_defect(seed);
        prop_assert!(d <= 1e-8, "defect {d}");
    }

    #[test]
    fn monte_carlo_is_seed_reproducible(seed in 0u64..1_000_000) {
        prop_assert!(common::mc_reproducible(seed));
    }
}

proptest! {
    // Each case spawns the binary twice.
    #![proptest_config(ProptestConfig { cases: 50, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn cli_output_is_byte_identical(seed in 0u64..1_000_000) {
        prop_assert!(common::cli_reproducible(seed));
    }
}
