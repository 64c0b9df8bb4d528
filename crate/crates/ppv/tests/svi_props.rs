//! Gradient, estimator and training properties.

mod common;

use common::*;
use ppv::density::Fuel;
use ppv::lang::parse_source;
use ppv::rng::CounterRng;
use ppv::svi::{estimate_gradient, kl_quadrature, mean_of, svi_run, QuadSpec, SviConfig};

#[test]
fn forward_gradients_match_differences_on_corpus_guides() {
    let mut total = 0;
    for (id, _, guide) in corpus_pairs() {
        if guide.params.is_empty() {
            continue;
        }
        let (n, fails) = fd_check_guide(&guide, 20, 11);
        assert!(fails.is_empty(), "{id}: {fails:#?}");
        total += n;
    }
    assert!(total >= 300, "only {total} points compared");
}

#[test]
fn estimate_is_the_mean_of_its_terms() {
    let (m, g) = load_pair("linear_regression");
    for seed in 0..5 {
        let est = estimate_gradient(&m, &g, &[0.3, -0.2, 1.0, 0.1], 40, &CounterRng::new(seed), Fuel::default()).unwrap();
        let again = mean_of(&est.terms, 4);
        assert_eq!(est.mean.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), again.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
    }
}

#[test]
fn guide_equal_to_model_has_zero_divergence() {
    let src = parse_source(
        r#"model { a := sample("a", Normal(1.0, 2.0)); b := sample("b", Normal(a, 1.0)) }
           guide(t) { a := sample("a", Normal(t, 2.0)); b := sample("b", Normal(a, 1.0)) }"#,
    )
    .unwrap();
    let (m, g) = (src.model.unwrap(), src.guide.unwrap());
    let kl = kl_quadrature(&m, &g, &[1.0], &QuadSpec::default(), Fuel::default()).unwrap();
    assert!(kl.value.abs() < 1e-5, "KL = {}", kl.value);
    let est = estimate_gradient(&m, &g, &[1.0], 2000, &CounterRng::new(3), Fuel::default()).unwrap();
    let se = est.std_error()[0];
    assert!(est.mean[0].abs() <= 3.0 * se + 1e-12, "mean {} se {se}", est.mean[0]);
}

#[test]
fn training_is_reproducible_across_thread_counts() {
    let (m, g) = load_pair("branching_prior");
    let cfg = SviConfig { steps: 100, ..SviConfig::default() };
    let run_with = |threads: usize| {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| svi_run(&m, &g, &[3.0], &cfg).unwrap())
    };
    let one = run_with(1);
    assert_eq!(one, run_with(4));
    assert_eq!(one, svi_run(&m, &g, &[3.0], &cfg).unwrap());
}
