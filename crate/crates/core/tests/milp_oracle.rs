mod common;

use abmap_core::milp::{export_lp_text, parse_lp_text, solve_lp, solve_milp, LpStatus, MilpLimits, MilpStatus};
use common::{brute_force_ip, random_program, vertex_lp};
use proptest::prelude::*;

#[test]
fn twenty_programs_match_enumeration() {
    let mut feasible = 0;
    for seed in 0..20 {
        let p = random_program(seed, 6);
        let r = solve_milp(&p, MilpLimits::default()).unwrap();
        match brute_force_ip(&p) {
            Some(best) => {
                feasible += 1;
                assert_eq!(r.status, MilpStatus::Optimal, "seed {seed}");
                assert_eq!(r.objective, best, "seed {seed}");
                assert!(p.violations(r.incumbent.as_ref().unwrap(), 1e-9).is_empty());
            }
            None => assert_eq!(r.status, MilpStatus::Infeasible, "seed {seed}"),
        }
    }
    assert!(feasible >= 10, "only {feasible} feasible programs");
}

#[test]
fn relaxations_match_vertex_enumeration() {
    for seed in 100..130 {
        let p = random_program(seed, 5);
        let lp = solve_lp(&p, &[]).unwrap();
        match vertex_lp(&p) {
            Some(best) => {
                assert_eq!(lp.status, LpStatus::Optimal, "seed {seed}");
                assert!((lp.objective - best).abs() <= 1e-7, "seed {seed}: {} vs {best}", lp.objective);
            }
            None => assert_eq!(lp.status, LpStatus::Infeasible, "seed {seed}"),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn milp_equals_enumeration(seed in any::<u64>()) {
        let p = random_program(seed, 5);
        let r = solve_milp(&p, MilpLimits::default()).unwrap();
        match brute_force_ip(&p) {
            Some(best) => prop_assert_eq!(r.objective, best),
            None => prop_assert_eq!(r.status, MilpStatus::Infeasible),
        }
    }

    #[test]
    fn lp_bounds_milp(seed in any::<u64>()) {
        let p = random_program(seed, 5);
        let lp = solve_lp(&p, &[]).unwrap();
        let r = solve_milp(&p, MilpLimits::default()).unwrap();
        if r.status == MilpStatus::Optimal {
            prop_assert!(lp.objective >= r.objective - 1e-7);
        }
    }

    #[test]
    fn lp_text_round_trips(seed in any::<u64>()) {
        let p = random_program(seed, 6);
        let text = export_lp_text(&p);
        let back = parse_lp_text(&text).unwrap();
        prop_assert_eq!(export_lp_text(&back), text);
        let a = solve_milp(&p, MilpLimits::default()).unwrap();
        let b = solve_milp(&back, MilpLimits::default()).unwrap();
        prop_assert_eq!(a.status, b.status);
        if a.status == MilpStatus::Optimal {
            prop_assert!((a.objective - b.objective).abs() <= 1e-9);
        }
    }
}
