//! R1 for programs with loops and indexed names: both sides must reach
//! equivalent abstract random databases with no ⊤ entries.

use std::collections::{BTreeMap, BTreeSet};

use super::{analyze_indexed, Entry, Zone};
use crate::analyses::support::compare_sites;
use crate::analyses::{Reason, Status, Verdict};
use crate::lang::Program;

const ENUM_LIMIT: usize = 1_000_000;

fn concretize(zs: &[Zone], vals: &BTreeMap<String, f64>) -> Option<BTreeSet<Vec<i64>>> {
    let mut out = BTreeSet::new();
    for z in zs {
        out.extend(z.enumerate(vals, ENUM_LIMIT)?);
    }
    Some(out)
}

fn render_index(base: &str, idx: &[i64]) -> String {
    let mut s = base.to_string();
    for k in idx {
        s.push_str(&format!("_{k}"));
    }
    s
}

pub fn support_match_extended(model: &Program, guide: &Program) -> Verdict {
    let (am, ag) = match (analyze_indexed(model), analyze_indexed(guide)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return Verdict::new(Status::Unknown, vec![Reason::message(e.to_string())]),
    };
    let tops: Vec<Reason> = am
        .exit
        .top_names()
        .into_iter()
        .map(|n| (n, "model"))
        .chain(ag.exit.top_names().into_iter().map(|n| (n, "guide")))
        .map(|(n, side)| Reason::name(n, format!("indices of `{n}` in the {side} are not determined")))
        .collect();
    if !tops.is_empty() {
        return Verdict::new(Status::Unknown, tops);
    }
    let (km, kg): (BTreeSet<&String>, BTreeSet<&String>) = (am.exit.0.keys().collect(), ag.exit.0.keys().collect());
    if km != kg {
        let mut reasons = Vec::new();
        for n in km.difference(&kg) {
            reasons.push(Reason::name(*n, format!("`{n}` is sampled by the model but not by the guide")));
        }
        for n in kg.difference(&km) {
            reasons.push(Reason::name(*n, format!("`{n}` is sampled by the guide but not by the model")));
        }
        return Verdict::new(Status::Invalid, reasons);
    }
    let mut status = Status::Verified;
    let mut reasons = Vec::new();
    for n in km {
        let (Entry::Zones(zm, dm), Entry::Zones(zg, dg)) = (&am.exit.0[n], &ag.exit.0[n]) else {
            unreachable!("⊤ entries were rejected above")
        };
        let same_shape = zm.iter().map(Zone::to_string).collect::<Vec<_>>() == zg.iter().map(Zone::to_string).collect::<Vec<_>>();
        let zones_ok = match (concretize(zm, &am.num.vals), concretize(zg, &ag.num.vals)) {
            (Some(cm), Some(cg)) => {
                if let Some(w) = cm.symmetric_difference(&cg).next() {
                    let (by, not) = if cm.contains(w) { ("model", "guide") } else { ("guide", "model") };
                    let full = render_index(n, w);
                    status = status.meet(Status::Invalid);
                    reasons.push(Reason::name(n.as_str(), format!("indices of `{n}` differ: the {by} samples `{full}` but the {not} does not")));
                    false
                } else {
                    true
                }
            }
            _ if same_shape => true,
            _ => {
                status = status.meet(Status::Unknown);
                reasons.push(Reason::name(n.as_str(), format!("cannot compare index zones of `{n}`")));
                false
            }
        };
        if zones_ok {
            let (st, r) = compare_sites(n, std::slice::from_ref(&dm.dist), std::slice::from_ref(&dg.dist));
            status = status.meet(st);
            reasons.extend(r);
        }
    }
    Verdict::new(status, reasons)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_source;

    fn check(src: &str) -> Verdict {
        let s = parse_source(src).unwrap();
        support_match_extended(s.model.as_ref().unwrap(), s.guide.as_ref().unwrap())
    }

    #[test]
    fn matching_nested_loops() {
        let v = check(
            "model { N := 3; M := 2; for i in 1..N+1 { for j in 1..M+1 { v := sample(\"x_{i}_{j}\", Normal(0.0, 1.0)) } } }
             guide(t) { N := 3; M := 2; for i in 1..N+1 { for j in 1..M+1 { v := sample(\"x_{i}_{j}\", Normal(t, 1.0)) } } }",
        );
        assert_eq!(v.status, Status::Verified, "{v:?}");
    }

    #[test]
    fn short_guide_loop_is_invalid() {
        let v = check(
            "model { N := 4; for i in 1..N+1 { v := sample(\"x_{i}\", Normal(0.0, 1.0)) } }
             guide(t) { N := 4; for i in 1..N { v := sample(\"x_{i}\", Normal(t, 1.0)) } }",
        );
        assert_eq!(v.status, Status::Invalid);
        assert!(v.reasons[0].message.contains("`x_4`"), "{}", v.reasons[0].message);
    }

    #[test]
    fn delta_against_normal_is_invalid() {
        let v = check(
            "model { for i in 0..3 { v := sample(\"x_{i}\", Normal(0.0, 1.0)) } }
             guide(t) { for i in 0..3 { v := sample(\"x_{i}\", Delta(t)) } }",
        );
        assert_eq!(v.status, Status::Invalid);
        assert!(v.reasons[0].message.starts_with("reference measures of `x` differ"));
    }
}
