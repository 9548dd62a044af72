mod common;

use abmap_core::assimilate::map_offline;
use abmap_core::encode::{assignment_for, default_multiplicity, encode_offline};
use abmap_core::FeasibilityMode;
use common::{desk, mixed_params, online_pass};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn real_trajectory_is_a_feasible_point(seed in 0u64..10_000, i in 0u64..1000, full in any::<bool>()) {
        let (n, pred, prey, t) = mixed_params(i);
        let d = desk(seed, n, pred, prey, t, if full { 1.0 } else { 2.0 / 3.0 });
        let m = default_multiplicity(&d.model, &d.real.initial);
        let (program, map) = encode_offline(&d.model, &d.real.initial, &d.observations, t, m).unwrap();
        let x = assignment_for(&d.model, &program, &map, &d.real).unwrap();
        prop_assert!(program.violations(&x, 1e-9).is_empty(), "{:?}", program.violations(&x, 1e-9));
        prop_assert!((program.objective_value(&x) - d.model.log_probability(&d.real)).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn map_dominates_online_and_real(seed in 0u64..10_000, i in 0u64..1000) {
        let (n, pred, prey, t) = mixed_params(i);
        let d = desk(seed, n, pred, prey, t, 2.0 / 3.0);
        let m = default_multiplicity(&d.model, &d.real.initial);
        let map = map_offline(&d.model, &d.real.initial, &d.observations, t, m).unwrap();
        prop_assert!(d.model.check_feasible(&map, FeasibilityMode::Complete).is_empty());
        prop_assert!(d.model.satisfies(&map, &d.observations).is_empty());
        let lp_map = d.model.log_probability(&map);
        prop_assert!(lp_map >= d.model.log_probability(&d.real) - 1e-6);
        let (online, _) = online_pass(&d.model, &d.real, &d.observations).unwrap();
        prop_assert!(d.model.check_feasible(&online, FeasibilityMode::Complete).is_empty());
        prop_assert!(d.model.satisfies(&online, &d.observations).is_empty());
        prop_assert!(d.model.log_probability(&online) <= lp_map + 1e-6);
    }
}
