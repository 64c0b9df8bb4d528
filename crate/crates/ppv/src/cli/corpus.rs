//! Corpus manifests: labelled model-guide pairs whose support-match outcome
//! is recorded ahead of time.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{read_source, CliError, CliResult, CorpusArgs, EXIT_INVALID, EXIT_OK};
use crate::analyses::support::support_match;
use crate::analyses::SupportMode;
use crate::lang::validate_pair;

pub const CATEGORIES: [&str; 7] = ["no-plates", "single-for", "nested-for", "single-with", "nested-with", "non-nested-with", "mixed"];

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
pub struct CorpusPair {
    pub id: String,
    pub path: PathBuf,
    pub category: String,
    /// verified, invalid, unknown or error.
    pub expected: String,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
pub struct CorpusManifest {
    #[serde(rename = "pair")]
    pub pairs: Vec<CorpusPair>,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct CorpusRow {
    pub id: String,
    pub category: String,
    pub expected: String,
    pub status: String,
    pub same: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

pub fn load_manifest(path: &Path) -> Result<CorpusManifest, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    let m: CorpusManifest = toml::from_str(&text).map_err(|e| CliError::Parse { path: path.to_path_buf(), msg: e.to_string() })?;
    for p in &m.pairs {
        if !CATEGORIES.contains(&p.category.as_str()) {
            return Err(CliError::Parse { path: path.to_path_buf(), msg: format!("pair `{}` has unknown category `{}`", p.id, p.category) });
        }
    }
    Ok(m)
}

fn status_of(path: &Path) -> (String, Option<String>) {
    let sf = match read_source(path) {
        Ok(sf) => sf,
        Err(e) => return ("error".into(), Some(e.to_string())),
    };
    let (Some(m), Some(g)) = (sf.model, sf.guide) else {
        return ("error".into(), Some("file needs a model and a guide".into()));
    };
    let issues = validate_pair(&m, &g);
    if let Some(i) = issues.first() {
        return ("error".into(), Some(i.to_string()));
    }
    let v = support_match(&m, &g, SupportMode::Refined);
    (v.status.to_string(), v.reasons.first().map(|r| r.message.clone()))
}

/// Runs the support check on every pair; rows follow manifest order.
pub fn run_corpus(manifest: &CorpusManifest, base: &Path) -> Vec<CorpusRow> {
    manifest
        .pairs
        .par_iter()
        .map(|p| {
            let (status, detail) = status_of(&base.join(&p.path));
            // Report paths relative to the manifest.
            let prefix = format!("{}/", base.display());
            let detail = detail.map(|d| if prefix == "/" { d } else { d.replace(&prefix, "") });
            CorpusRow { id: p.id.clone(), category: p.category.clone(), expected: p.expected.clone(), same: status == p.expected, status, detail }
        })
        .collect()
}

pub(super) fn cmd_corpus(a: &CorpusArgs, out: &mut dyn Write) -> CliResult {
    let started = Instant::now();
    let m = load_manifest(&a.manifest)?;
    let base = a.manifest.parent().unwrap_or(Path::new("."));
    let rows = run_corpus(&m, base);
    let all_same = rows.iter().all(|r| r.same);
    if a.out.json {
        let mut v = json!({ "pairs": rows });
        if !a.out.no_meta {
            v["meta"] = json!({ "elapsed_ms": started.elapsed().as_secs_f64() * 1e3 });
        }
        let _ = writeln!(out, "{}", serde_json::to_string_pretty(&v).expect("rows serialize"));
    } else {
        let _ = writeln!(out, "{:<16} {:>5} {:>9} {:>8} {:>8} {:>6} {:>5}", "category", "pairs", "verified", "invalid", "unknown", "error", "same");
        let mut totals = [0usize; 6];
        for cat in CATEGORIES {
            let rs: Vec<&CorpusRow> = rows.iter().filter(|r| r.category == cat).collect();
            let count = |s: &str| rs.iter().filter(|r| r.status == s).count();
            let line = [rs.len(), count("verified"), count("invalid"), count("unknown"), count("error"), rs.iter().filter(|r| r.same).count()];
            for (t, x) in totals.iter_mut().zip(line) {
                *t += x;
            }
            let _ = writeln!(out, "{cat:<16} {:>5} {:>9} {:>8} {:>8} {:>6} {:>5}", line[0], line[1], line[2], line[3], line[4], line[5]);
        }
        let t = totals;
        let _ = writeln!(out, "{:<16} {:>5} {:>9} {:>8} {:>8} {:>6} {:>5}", "total", t[0], t[1], t[2], t[3], t[4], t[5]);
        for r in rows.iter().filter(|r| !r.same) {
            let _ = writeln!(out, "mismatch {}: expected {}, got {} ({})", r.id, r.expected, r.status, r.detail.as_deref().unwrap_or(""));
        }
        if !a.out.no_meta {
            let _ = writeln!(out, "time: {:.1} ms", started.elapsed().as_secs_f64() * 1e3);
        }
    }
    Ok(if all_same { EXIT_OK } else { EXIT_INVALID })
}
