//! The score estimator is blind to a guide whose support moves with θ.
//!
//! For a uniform guide on `[θ-1, θ+1]` the log density is `-ln 2` wherever
//! it is defined, so every score term is zero. The true gradient of the
//! objective, computed by quadrature, is not.

use ppv::analyses::check_all;
use ppv::density::Fuel;
use ppv::lang::parse_source;
use ppv::rng::CounterRng;
use ppv::svi::{estimate_gradient, kl_grad_numeric, QuadSpec};

fn main() {
    let src = parse_source(include_str!("../corpus/sliding_uniform_guide.ppv")).unwrap();
    let (model, guide) = (src.model.unwrap(), src.guide.unwrap());
    let fuel = Fuel::default();
    let spec = QuadSpec::default();
    println!("{:>6} {:>12} {:>12}", "theta", "estimator", "true");
    for theta in [-2.0, -0.5, 0.0, 0.5, 3.0] {
        let est = estimate_gradient(&model, &guide, &[theta], 64, &CounterRng::new(1), fuel).unwrap();
        let truth = kl_grad_numeric(&model, &guide, &[theta], 1e-3, &spec, fuel).unwrap();
        println!("{theta:>6.2} {:>12.6} {:>12.6}", est.mean[0], truth[0]);
    }
    let report = check_all("uniform-guide", &model, &guide);
    for r in &report.requirements {
        println!("{:?}: {}", r.id, r.status);
    }
}
