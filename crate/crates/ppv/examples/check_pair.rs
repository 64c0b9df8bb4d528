//! Runs all four static checks on a model-guide pair and prints the JSON
//! report. Without an argument it walks a few bundled pairs.
//!
//! `cargo run --example check_pair [FILE]`

use ppv::analyses::check_all;
use ppv::lang::parse_source;

const BUNDLED: [(&str, &str); 5] = [
    ("linear_regression", include_str!("../corpus/linear_regression.ppv")),
    ("scale_normal_guide", include_str!("../corpus/scale_normal_guide.ppv")),
    ("topic_point_mass", include_str!("../corpus/topic_point_mass.ppv")),
    ("sliding_uniform_guide", include_str!("../corpus/sliding_uniform_guide.ppv")),
    ("grid", include_str!("../corpus/grid.ppv")),
];

fn main() {
    let inputs: Vec<(String, String)> = match std::env::args().nth(1) {
        Some(p) => vec![(p.clone(), std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{p}: {e}")))],
        None => BUNDLED.iter().map(|(id, s)| (id.to_string(), s.to_string())).collect(),
    };
    for (id, text) in inputs {
        let src = parse_source(&text).expect("pair parses");
        let report = check_all(&id, src.model.as_ref().unwrap(), src.guide.as_ref().unwrap());
        println!("{}", report.to_json());
    }
}
