//! Parses a model-guide file, reports validation issues and prints the
//! canonical form. Printing then reparsing gives back the same syntax tree.
//!
//! `cargo run --example parse_and_print [FILE]`

use ppv::lang::{parse_source, pretty_print, validate, validate_pair};

const DEFAULT: &str = include_str!("../corpus/linear_regression.ppv");

fn main() {
    let text = match std::env::args().nth(1) {
        Some(path) => std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}")),
        None => DEFAULT.to_string(),
    };
    let src = match parse_source(&text) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(3);
        }
    };
    for p in src.model.iter().chain(src.guide.iter()) {
        let printed = pretty_print(p);
        println!("{printed}");
        let again = parse_source(&printed).expect("printed form parses");
        let back = again.model.or(again.guide).unwrap();
        assert_eq!(&back, p, "round trip changed the program");
        for issue in validate(p) {
            println!("  issue: {issue}");
        }
    }
    if let (Some(m), Some(g)) = (&src.model, &src.guide) {
        let issues = validate_pair(m, g);
        println!("pair issues: {}", issues.len());
    }
}
