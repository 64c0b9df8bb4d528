//! Forward sampling and density quadrature agree on the mass of a region.

use ppv::density::Fuel;
use ppv::lang::parse_program;
use ppv::svi::{measure_density_check, QuadSpec};

fn main() {
    let model = parse_program(
        r#"model {
  a := sample("a", Normal(0.0, 1.0));
  b := sample("b", Uniform(0.0, 2.0));
  score(Normal(a + b, 1.0), 1.5)
}"#,
    )
    .unwrap();
    let region = |r: &ppv::density::RandomDatabase| r["a"] > 0.0 && r["b"] < 1.0;
    let rep = measure_density_check(&model, region, 100_000, 0, &QuadSpec::default(), Fuel::default()).unwrap();
    println!("Monte Carlo: {:.5} +/- {:.5}", rep.mc_estimate, rep.mc_std_error);
    println!("quadrature:  {:.5}", rep.quadrature);
    println!("z = {:.2}", rep.z_score());
}
