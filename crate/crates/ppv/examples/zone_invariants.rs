//! Loop invariants over indexed sample names, in interval-product notation.

use ppv::lang::parse_source;
use ppv::zone::{analyze_indexed, support_match_extended};

const NESTED: &str = r#"
model {
  N := 3; M := 2; m := 0.0; d := 1.0;
  for i in 1..N+1 { for j in 1..M+1 { val := sample("x_{i}_{j}", Normal(m, d)) } }
}
guide(t) {
  N := 3; M := 2; m := 0.0; d := 1.0;
  for i in 1..N { for j in 1..M+1 { val := sample("x_{i}_{j}", Normal(m, d)) } }
}
"#;

fn main() {
    let src = parse_source(NESTED).unwrap();
    let (model, guide) = (src.model.unwrap(), src.guide.unwrap());
    let a = analyze_indexed(&model).unwrap();
    for t in &a.trace {
        println!("{:<22} {}", t.point, t.rdb);
    }
    println!("exit: {}", a.exit);
    println!("longest widening sequence: {}", a.max_loop_iterations);

    // The guide stops one row early.
    let v = support_match_extended(&model, &guide);
    println!("support match: {}", v.status);
    for r in v.reasons {
        println!("  {}", r.message);
    }
}
