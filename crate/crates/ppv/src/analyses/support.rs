//! Sampled-name analysis and the model-guide support match (R1).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::{Reason, Status, Verdict};
use crate::absint::{analyze, AbstractDomain};
use crate::lang::{BoolExpr, Command, Distribution, NameExpr, Program, RealExpr, SupportShape};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SupportAbs {
    Bot,
    Top,
    Names(BTreeSet<String>),
}

impl fmt::Display for SupportAbs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SupportAbs::Bot => write!(f, "⊥"),
            SupportAbs::Top => write!(f, "⊤"),
            SupportAbs::Names(k) => {
                let v: Vec<&str> = k.iter().map(String::as_str).collect();
                write!(f, "{{{}}}", v.join(", "))
            }
        }
    }
}

/// How sequential composition combines name sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SupportMode {
    /// Composition is the widening: different sets give ⊤.
    Strict,
    /// Disjoint sets compose to their union.
    #[default]
    Refined,
}

pub struct SupportDomain {
    pub mode: SupportMode,
}

impl AbstractDomain for SupportDomain {
    type Elem = SupportAbs;

    fn bottom(&self) -> SupportAbs {
        SupportAbs::Bot
    }

    fn widen(&self, a: &SupportAbs, b: &SupportAbs) -> SupportAbs {
        match (a, b) {
            (SupportAbs::Bot, x) | (x, SupportAbs::Bot) => x.clone(),
            (SupportAbs::Names(x), SupportAbs::Names(y)) if x == y => a.clone(),
            _ => SupportAbs::Top,
        }
    }

    fn cond(&self, _: &BoolExpr, a: &SupportAbs, b: &SupportAbs) -> SupportAbs {
        self.widen(a, b)
    }

    fn compose(&self, later: &SupportAbs, earlier: &SupportAbs) -> SupportAbs {
        match self.mode {
            SupportMode::Strict => self.widen(later, earlier),
            SupportMode::Refined => match (later, earlier) {
                (SupportAbs::Bot, _) | (_, SupportAbs::Bot) => SupportAbs::Bot,
                (SupportAbs::Names(x), SupportAbs::Names(y)) if x.is_disjoint(y) => {
                    SupportAbs::Names(x.union(y).cloned().collect())
                }
                _ => SupportAbs::Top,
            },
        }
    }

    fn skip(&self) -> SupportAbs {
        SupportAbs::Names(BTreeSet::new())
    }

    fn update(&self, _: &str, _: &RealExpr) -> SupportAbs {
        self.skip()
    }

    fn sample(&self, _: &str, n: &NameExpr, _: &Distribution) -> SupportAbs {
        if n.is_literal() {
            SupportAbs::Names(BTreeSet::from([n.base.clone()]))
        } else {
            SupportAbs::Top
        }
    }

    fn score(&self, _: &Distribution, _: &RealExpr) -> SupportAbs {
        self.skip()
    }
}

pub fn support_analyze(c: &Command, mode: SupportMode) -> SupportAbs {
    analyze(c, &SupportDomain { mode })
        .expect("the support widening stabilizes in two steps")
        .elem
}

/// A constant support set.
#[derive(Clone, Debug, PartialEq)]
pub enum SupportSet {
    /// Closed interval with possibly infinite ends.
    Interval(f64, f64),
    Points(Vec<f64>),
}

fn num(x: f64) -> String {
    if x == f64::INFINITY {
        "∞".into()
    } else if x == f64::NEG_INFINITY {
        "-∞".into()
    } else {
        format!("{x}")
    }
}

impl fmt::Display for SupportSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SupportSet::Interval(a, b) if a.is_infinite() && b.is_infinite() => write!(f, "R"),
            SupportSet::Interval(a, b) => {
                let l = if a.is_infinite() { "(" } else { "[" };
                let r = if b.is_infinite() { ")" } else { "]" };
                write!(f, "{l}{},{}{r}", num(*a), num(*b))
            }
            SupportSet::Points(p) => {
                let v: Vec<String> = p.iter().map(|x| num(*x)).collect();
                write!(f, "{{{}}}", v.join(","))
            }
        }
    }
}

impl SupportSet {
    pub fn subset_of(&self, o: &SupportSet) -> bool {
        match (self, o) {
            (SupportSet::Interval(a, b), SupportSet::Interval(c, d)) => c <= a && b <= d,
            (SupportSet::Points(p), SupportSet::Interval(c, d)) => p.iter().all(|x| c <= x && x <= d),
            (SupportSet::Points(p), SupportSet::Points(q)) => p.iter().all(|x| q.contains(x)),
            (SupportSet::Interval(a, b), SupportSet::Points(q)) => a == b && q.contains(a),
        }
    }
}

/// Support of `d` when it does not depend on the store.
pub fn constant_support(d: &Distribution) -> Option<SupportSet> {
    let c = |k: usize| d.args[k].as_const();
    Some(match d.kind.descriptor().support {
        SupportShape::RealLine => SupportSet::Interval(f64::NEG_INFINITY, f64::INFINITY),
        SupportShape::HalfLine => SupportSet::Interval(0.0, f64::INFINITY),
        SupportShape::ArgInterval => SupportSet::Interval(c(0)?, c(1)?),
        SupportShape::ArgPoint => SupportSet::Points(vec![c(0)?]),
        SupportShape::Binary => SupportSet::Points(vec![0.0, 1.0]),
    })
}

/// Distributions used at each literal name.
pub fn sites_by_name(c: &Command) -> BTreeMap<String, Vec<Distribution>> {
    let mut out: BTreeMap<String, Vec<Distribution>> = BTreeMap::new();
    for (_, n, d) in c.sample_sites() {
        out.entry(n.base.clone()).or_default().push(d.clone());
    }
    out
}

/// Per-name comparison of guide and model distributions: measure tags must
/// agree and the guide's support must lie inside the model's.
pub fn compare_sites(name: &str, model: &[Distribution], guide: &[Distribution]) -> (Status, Option<Reason>) {
    for g in guide {
        for m in model {
            let (gt, mt) = (g.kind.descriptor().measure, m.kind.descriptor().measure);
            if gt != mt {
                return (
                    Status::Invalid,
                    Some(Reason::name(
                        name,
                        format!("reference measures of `{name}` differ: guide {} ({gt}) vs model {} ({mt})", g.kind.name(), m.kind.name()),
                    )),
                );
            }
        }
    }
    let mut status = Status::Verified;
    let mut reason = None;
    for g in guide {
        for m in model {
            match (constant_support(g), constant_support(m)) {
                (Some(gs), Some(ms)) => {
                    if !gs.subset_of(&ms) {
                        return (Status::Invalid, Some(Reason::name(name, format!("guide support {gs} ⊄ {ms} for `{name}`"))));
                    }
                }
                _ => {
                    status = Status::Unknown;
                    reason = Some(Reason::name(name, format!("support of `{name}` depends on the store; cannot compare")));
                }
            }
        }
    }
    (status, reason)
}

/// Discharges R1 for programs with literal names; programs using indexed
/// names or loops go through the zone matcher.
pub fn support_match(model: &Program, guide: &Program, mode: SupportMode) -> Verdict {
    if needs_zones(&model.body) || needs_zones(&guide.body) {
        return crate::zone::support_match_extended(model, guide);
    }
    let (am, ag) = (support_analyze(&model.body, mode), support_analyze(&guide.body, mode));
    let (km, kg) = match (&am, &ag) {
        (SupportAbs::Names(a), SupportAbs::Names(b)) => (a, b),
        _ => {
            return Verdict::new(
                Status::Unknown,
                vec![Reason::message(format!("sampled names not determined (model {am}, guide {ag})"))],
            )
        }
    };
    if km != kg {
        let mut reasons = Vec::new();
        for n in km.difference(kg) {
            reasons.push(Reason::name(n, format!("`{n}` is sampled by the model but not by the guide")));
        }
        for n in kg.difference(km) {
            reasons.push(Reason::name(n, format!("`{n}` is sampled by the guide but not by the model")));
        }
        return Verdict::new(Status::Invalid, reasons);
    }
    let (sm, sg) = (sites_by_name(&model.body), sites_by_name(&guide.body));
    let mut status = Status::Verified;
    let mut reasons = Vec::new();
    for n in km {
        let (st, r) = compare_sites(n, &sm[n], &sg[n]);
        status = status.meet(st);
        reasons.extend(r);
    }
    Verdict::new(status, reasons)
}

pub fn needs_zones(c: &Command) -> bool {
    c.has_indexed_names() || c.contains_for()
}
