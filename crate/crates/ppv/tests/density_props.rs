//! Properties of the density semantics: locality, fuel, guide purity and
//! determinism.

mod common;

use common::*;
use ppv::density::{exec_density, sample_trace, DensityOutcome, Fuel};
use ppv::rng::CounterRng;
use proptest::prelude::*;

fn same(a: &DensityOutcome, b: &DensityOutcome) -> bool {
    // Bitwise comparison so that NaN weights compare equal to themselves.
    format!("{a:?}") == format!("{b:?}")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn locality(c in loop_free(true), s in store(), dbs in proptest::collection::vec((database(), extra_database()), 20)) {
        for (r, extra) in &dbs {
            check_locality(&c, &s, r, extra).map_err(TestCaseError::fail)?;
        }
    }

    #[test]
    fn more_fuel_never_changes_a_result(c in with_loops(), s in store(), r in database(), f in 1u64..60) {
        let low = exec_density(&c, &s, &r, Fuel(f));
        for g in [f + 1, 2 * f, 10_000] {
            let high = exec_density(&c, &s, &r, Fuel(g));
            if !low.is_bot() {
                prop_assert!(same(&low, &high));
            }
        }
    }

    #[test]
    fn guides_have_unit_weight(c in loop_free(false), s in store(), r in database()) {
        if let DensityOutcome::Ok(o) = exec_density(&c, &s, &r, Fuel::default()) {
            prop_assert_eq!(o.log_weight, 0.0);
        }
    }

    #[test]
    fn identical_inputs_identical_outputs(c in with_loops(), s in store(), r in database(), seed in any::<u64>()) {
        prop_assert!(same(&exec_density(&c, &s, &r, Fuel::default()), &exec_density(&c, &s, &r, Fuel::default())));
        let t1 = sample_trace(&c, &s, &mut CounterRng::new(seed), Fuel::default());
        let t2 = sample_trace(&c, &s, &mut CounterRng::new(seed), Fuel::default());
        prop_assert_eq!(format!("{t1:?}"), format!("{t2:?}"));
    }
}

/// The locality suite is not vacuous: most generated cases reach `Ok`.
#[test]
fn locality_cases_mostly_succeed() {
    use proptest::strategy::ValueTree;
    use proptest::test_runner::TestRunner;
    let mut runner = TestRunner::deterministic();
    let strat = (loop_free(true), store(), database(), extra_database());
    let mut ok = 0;
    for _ in 0..500 {
        let (c, s, r, e) = strat.new_tree(&mut runner).unwrap().current();
        if check_locality(&c, &s, &r, &e).unwrap() {
            ok += 1;
        }
    }
    assert!(ok > 100, "only {ok} of 500 cases ran to completion");
}
