//! Runs the bundled corpus manifest and prints one line per pair.

use std::path::Path;

use ppv::cli::{load_manifest, run_corpus};

fn main() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus");
    let manifest = load_manifest(&dir.join("manifest.toml")).expect("manifest loads");
    let rows = run_corpus(&manifest, &dir);
    for r in &rows {
        let mark = if r.same { " " } else { "!" };
        println!("{mark} {:<16} {:<30} {:<9} {}", r.category, r.id, r.status, r.detail.as_deref().unwrap_or(""));
    }
    let same = rows.iter().filter(|r| r.same).count();
    println!("{same}/{} as expected", rows.len());
}
