//! Fits the one-parameter guide of the branching model with the score
//! estimator and plain SGD.
//!
//! `cargo run --release --example train_guide`

use ppv::lang::parse_source;
use ppv::svi::{svi_run, SviConfig};

fn main() {
    let src = parse_source(include_str!("../corpus/branching_prior.ppv")).unwrap();
    let (model, guide) = (src.model.unwrap(), src.guide.unwrap());
    let cfg = SviConfig::default();
    println!("steps {}, samples {}, lr {}, seed {}", cfg.steps, cfg.samples, cfg.lr, cfg.seed);
    let tr = svi_run(&model, &guide, &[3.0], &cfg).expect("guide and model agree on support");
    for r in tr.rows.iter().step_by(250) {
        let g = r.grad.as_ref().map(|g| format!("{:+.4}", g[0])).unwrap_or_default();
        println!("step {:>5}  theta {:+.4}  grad {g}", r.step, r.theta[0]);
    }
    println!("final theta = {:.4}", tr.final_theta()[0]);
}
