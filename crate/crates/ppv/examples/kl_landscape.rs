//! Sweeps the KL objective of a one-parameter guide and locates its minimum.
//!
//! Run with `cargo run --example kl_landscape`.

use ppv::density::Fuel;
use ppv::lang::parse_source;
use ppv::svi::{kl_grad_numeric, kl_sweep, normalizing_constant, QuadSpec};

const SRC: &str = r#"
model {
  v := sample("v", Normal(0.0, 5.0));
  if (0 < v) { score(Normal(1.0, 1.0), 0.0) } else { score(Normal(-2.0, 1.0), 0.0) }
}
guide(theta) {
  v := sample("v", Normal(theta, 1.0))
}
"#;

fn main() {
    let src = parse_source(SRC).expect("fixture parses");
    let (model, guide) = (src.model.unwrap(), src.guide.unwrap());
    let spec = QuadSpec::default();
    let fuel = Fuel::default();

    let z = normalizing_constant(&model, &spec, fuel).expect("finite");
    println!("Z = {:.10}", z.value);

    let grid: Vec<f64> = (0..=60).map(|k| -1.0 + 0.1 * k as f64).collect();
    let rows = kl_sweep(&model, &guide, &grid, &spec, fuel);
    println!("theta,objective");
    for (t, v) in &rows {
        println!("{t:.2},{:.6}", v.as_ref().expect("finite"));
    }
    let (best, val) = rows
        .iter()
        .map(|(t, v)| (*t, *v.as_ref().unwrap()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    println!("argmin on grid: {best:.2} (objective {val:.6}, KL {:.6})", val + z.value.ln());
    let g = kl_grad_numeric(&model, &guide, &[3.0], 1.0 / 32.0, &spec, fuel).unwrap();
    println!("gradient at 3: {:.6}", g[0]);
}
