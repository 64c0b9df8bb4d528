//! Static checks for the four SVI requirements: matching supports (R1),
//! differentiability of the guide density (R2), and the two integrability
//! conditions that stand in for the remaining ones (C2b on the model, C456
//! on the guide).

pub mod bounds;
pub mod c456;
pub mod cond2b;
pub mod diff;
pub mod support;

use serde::Serialize;

use crate::lang::{Program, Registry};
pub use support::SupportMode;

/// Outcome of one check. `Invalid` needs a concrete witness; anything the
/// analysis cannot decide is `Unknown`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Verified,
    Invalid,
    Unknown,
}

impl Status {
    /// Combination of two partial verdicts: invalid beats unknown beats verified.
    pub fn meet(self, o: Status) -> Status {
        use Status::*;
        match (self, o) {
            (Invalid, _) | (_, Invalid) => Invalid,
            (Unknown, _) | (_, Unknown) => Unknown,
            _ => Verified,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::Verified => "verified",
            Status::Invalid => "invalid",
            Status::Unknown => "unknown",
        }
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Why a check did not verify, pointing at a random-variable name or a
/// printed source fragment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Reason {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub span: Option<String>,
    pub message: String,
}

impl Reason {
    pub fn name(n: impl Into<String>, message: impl Into<String>) -> Self {
        Reason { name: Some(n.into()), span: None, message: message.into() }
    }

    pub fn span(s: impl Into<String>, message: impl Into<String>) -> Self {
        Reason { name: None, span: Some(s.into()), message: message.into() }
    }

    pub fn message(message: impl Into<String>) -> Self {
        Reason { name: None, span: None, message: message.into() }
    }
}

impl std::fmt::Display for Reason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub status: Status,
    pub reasons: Vec<Reason>,
}

impl Verdict {
    pub fn new(status: Status, reasons: Vec<Reason>) -> Self {
        Verdict { status, reasons }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Requirement {
    R1,
    R2,
    C2b,
    C456,
}

impl Requirement {
    pub const ALL: [Requirement; 4] = [Requirement::R1, Requirement::R2, Requirement::C2b, Requirement::C456];

    pub fn parse(s: &str) -> Option<Requirement> {
        match s.to_ascii_lowercase().as_str() {
            "r1" => Some(Requirement::R1),
            "r2" => Some(Requirement::R2),
            "c2b" | "2b" => Some(Requirement::C2b),
            "c456" | "456" => Some(Requirement::C456),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RequirementReport {
    pub id: Requirement,
    pub status: Status,
    pub reasons: Vec<Reason>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub pair_id: String,
    pub requirements: Vec<RequirementReport>,
    pub overall: String,
}

impl Report {
    pub fn get(&self, id: Requirement) -> Option<&RequirementReport> {
        self.requirements.iter().find(|r| r.id == id)
    }

    /// Combined status of the requirements present.
    pub fn status(&self) -> Status {
        self.requirements.iter().fold(Status::Verified, |s, r| s.meet(r.status))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Clone, Debug)]
pub struct CheckOptions<'a> {
    pub registry: &'a Registry,
    pub support_mode: SupportMode,
    pub which: Vec<Requirement>,
}

impl Default for CheckOptions<'_> {
    fn default() -> Self {
        CheckOptions { registry: Registry::standard(), support_mode: SupportMode::Refined, which: Requirement::ALL.to_vec() }
    }
}

pub fn check_one(req: Requirement, model: &Program, guide: &Program, opts: &CheckOptions) -> Verdict {
    match req {
        Requirement::R1 => support::support_match(model, guide, opts.support_mode),
        Requirement::R2 => diff::diff_check(guide, opts.registry),
        Requirement::C2b => cond2b::cond2b_analyze(model, opts.registry),
        Requirement::C456 => c456::cond456_analyze(guide, opts.registry),
    }
}

/// Runs the selected checks on a model-guide pair.
pub fn check_with(pair_id: &str, model: &Program, guide: &Program, opts: &CheckOptions) -> Report {
    use rayon::prelude::*;
    let requirements: Vec<RequirementReport> = opts
        .which
        .par_iter()
        .map(|&id| {
            let v = check_one(id, model, guide, opts);
            RequirementReport { id, status: v.status, reasons: v.reasons }
        })
        .collect();
    let all = requirements.len() == 4 && requirements.iter().all(|r| r.status == Status::Verified);
    let overall = if all {
        "SVI-safe".to_string()
    } else {
        match requirements.iter().fold(Status::Verified, |s, r| s.meet(r.status)) {
            Status::Invalid => "unsafe".to_string(),
            _ => "not certified".to_string(),
        }
    };
    Report { pair_id: pair_id.to_string(), requirements, overall }
}

pub fn check_all(pair_id: &str, model: &Program, guide: &Program) -> Report {
    check_with(pair_id, model, guide, &CheckOptions::default())
}
