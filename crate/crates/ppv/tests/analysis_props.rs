//! Soundness and monotonicity of the static checks.

mod common;

use std::collections::BTreeSet;

use common::*;
use ppv::absint::analyze;
use ppv::analyses::bounds::{bound_holds, bound_infer, BoundKind};
use ppv::analyses::diff::{diff_analyze, DiffDomain};
use ppv::analyses::support::{support_analyze, SupportAbs, SupportDomain, SupportMode};
use ppv::analyses::{check_with, CheckOptions, Requirement, Status};
use ppv::density::{exec_density, param_store, sample_trace, DensityOutcome, Fuel, Store};
use ppv::lang::{vars_of_real, PrimOp, Program, Registry};
use ppv::rng::CounterRng;
use proptest::prelude::*;

fn theta_for(p: &Program) -> Store {
    param_store(&p.params, &vec![0.3; p.params.len()])
}

#[test]
fn support_names_match_sampled_names() {
    let mut checked = 0;
    for (id, m, g) in corpus_pairs() {
        for p in [&m, &g] {
            for mode in [SupportMode::Strict, SupportMode::Refined] {
                let SupportAbs::Names(k) = support_analyze(&p.body, mode) else { continue };
                for i in 0..100 {
                    let t = sample_trace(&p.body, &theta_for(p), &mut CounterRng::new(i), Fuel::default()).unwrap();
                    let got: BTreeSet<String> = t.rdb.keys().cloned().collect();
                    assert_eq!(got, k, "{id} trace {i}");
                    checked += 1;
                }
            }
        }
    }
    assert!(checked > 1000);
}

#[test]
fn unchanged_variables_stay_unchanged() {
    use rand::{Rng, SeedableRng};
    let reg = Registry::standard();
    let mut rng = rand::rngs::StdRng::seed_from_u64(5);
    for (id, _, g) in corpus_pairs() {
        let x = diff_analyze(&g, reg).x;
        let vars = ppv::lang::validate::program_vars(&g);
        for i in 0..50 {
            let mut s = theta_for(&g);
            for v in &vars {
                s.entry(v.clone()).or_insert_with(|| rng.random_range(-3.0..3.0));
            }
            let t = sample_trace(&g.body, &s, &mut CounterRng::new(i), Fuel::default()).unwrap();
            let DensityOutcome::Ok(o) = exec_density(&g.body, &s, &t.rdb, Fuel::default()) else { panic!("{id}: replay failed") };
            for v in &x {
                if let Some(before) = s.get(v) {
                    assert_eq!(o.store.get(v), Some(before), "{id}: `{v}` reported unchanged");
                }
            }
        }
    }
}

#[test]
fn loop_fixpoints_stabilize_quickly() {
    let reg = Registry::standard();
    for (id, m, g) in corpus_pairs() {
        for p in [&m, &g] {
            for mode in [SupportMode::Strict, SupportMode::Refined] {
                let r = analyze(&p.body, &SupportDomain { mode }).unwrap();
                assert!(r.max_loop_iterations <= 3, "{id}: support took {}", r.max_loop_iterations);
            }
            let r = analyze(&p.body, &DiffDomain::for_program(p, reg)).unwrap();
            assert!(r.max_loop_iterations <= 3, "{id}: diff took {}", r.max_loop_iterations);
        }
    }
}

#[test]
fn weakening_primitives_never_gains_verification() {
    let std_reg = Registry::standard();
    let pairs = corpus_pairs();
    let base: Vec<_> = pairs
        .iter()
        .map(|(id, m, g)| check_with(id, m, g, &CheckOptions::default()))
        .collect();
    for op in PrimOp::ALL {
        for weaker in [std_reg.without_c1(op), std_reg.without_bound_rules(op, ppv::lang::registry::BoundRules::ALL)] {
            let opts = CheckOptions { registry: &weaker, ..CheckOptions::default() };
            for ((id, m, g), b) in pairs.iter().zip(&base) {
                let w = check_with(id, m, g, &opts);
                for req in Requirement::ALL {
                    if w.get(req).unwrap().status == Status::Verified {
                        assert_eq!(b.get(req).unwrap().status, Status::Verified, "{id} {req:?} without {op:?}");
                    }
                }
            }
        }
    }
}

#[test]
fn catalogue_bounds_hold_everywhere() {
    for (i, (e, scale, _)) in bound_catalogue().iter().enumerate() {
        let (_, violations) = bound_classify_and_validate(e, *scale, 10_000, i as u64);
        assert_eq!(violations, 0, "{e}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn inferred_bounds_hold(e in real_expr(&VARS), pts in proptest::collection::vec(proptest::collection::vec(-20.0f64..20.0, 3), 200)) {
        let reg = Registry::standard();
        let vars = vars_of_real(&e);
        let b = bound_infer(&e, &vars, reg);
        for p in pts {
            let pt = VARS.iter().map(|s| s.to_string()).zip(p).collect();
            for (k, f) in [(BoundKind::Affine, &b.affine), (BoundKind::AffExp, &b.affexp), (BoundKind::PosLower, &b.pos_lower)] {
                if let Some(f) = f {
                    prop_assert_ne!(bound_holds(&e, k, f, &pt, reg), Some(false), "{:?} {:?} at {:?}", k, f, pt);
                }
            }
        }
    }
}
