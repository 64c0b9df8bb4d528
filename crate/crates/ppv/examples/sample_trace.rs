//! Draws traces from a model and from its guide, then replays each sampled
//! database through the density semantics.

use ppv::density::{exec_density, param_store, sample_trace, Fuel, Store};
use ppv::lang::parse_source;
use ppv::rng::CounterRng;

fn main() {
    let src = parse_source(include_str!("../corpus/iid_normals.ppv")).unwrap();
    let (model, guide) = (src.model.unwrap(), src.guide.unwrap());
    let fuel = Fuel::default();

    let root = CounterRng::new(0);
    for i in 0..3 {
        let t = sample_trace(&model.body, &Store::new(), &mut root.substream(i), fuel).unwrap();
        println!("model trace {i}: {}", t.rdb_json());
        println!("  log w = {:.4}, log p = {:.4}", t.log_weight, t.log_density);
        // Replaying the drawn values reproduces the same weight and density.
        let replay = exec_density(&model.body, &Store::new(), &t.rdb, fuel).ok().unwrap();
        assert!(replay.leftover.is_empty());
        assert!((replay.log_density - t.log_density).abs() < 1e-12);
    }

    let theta = vec![0.5; guide.params.len()];
    let gs = param_store(&guide.params, &theta);
    let t = sample_trace(&guide.body, &gs, &mut CounterRng::new(7), fuel).unwrap();
    println!("guide trace at theta = {theta:?}: {}", t.rdb_json());
    println!("  guide log density = {:.4}", t.log_density);
}
