//! Condition (456): the guide is a product of normals whose means and scales
//! are C¹ functions of the parameters alone.
//!
//! The transfer functions for this check are not spelled out in the source
//! material; this is a reconstruction. It certifies the mean-field shape
//! syntactically and relies on the C¹ rulebook for each argument.

use std::collections::BTreeMap;

use super::diff::kink_witness;
use super::{Reason, Status, Verdict};
use crate::lang::{c1_vars, is_guarded_positive, print_real, vars_of_bool, vars_of_real, Command, DistKind, Program, RealExpr, Registry, VarSet};

/// Variables assigned exactly once, from an expression over literals and
/// other such variables, with that expression fully inlined.
fn constant_defs(body: &Command) -> BTreeMap<String, RealExpr> {
    let mut count: BTreeMap<&String, usize> = BTreeMap::new();
    let mut rhs: BTreeMap<&String, &RealExpr> = BTreeMap::new();
    body.walk(&mut |c| match c {
        Command::Assign(x, e) => {
            *count.entry(x).or_default() += 1;
            rhs.insert(x, e);
        }
        Command::Sample(x, ..) | Command::For(x, ..) => *count.entry(x).or_default() += 2,
        _ => {}
    });
    let mut defs: BTreeMap<String, RealExpr> = BTreeMap::new();
    loop {
        let before = defs.len();
        for (x, e) in &rhs {
            if count[x] == 1 && !defs.contains_key(*x) && vars_of_real(e).iter().all(|v| defs.contains_key(v)) {
                defs.insert((*x).clone(), inline(e, &defs));
            }
        }
        if defs.len() == before {
            return defs;
        }
    }
}

fn inline(e: &RealExpr, defs: &BTreeMap<String, RealExpr>) -> RealExpr {
    match e {
        RealExpr::Var(x) => defs.get(x).cloned().unwrap_or_else(|| e.clone()),
        RealExpr::Prim(op, a) => RealExpr::Prim(*op, a.iter().map(|x| inline(x, defs)).collect()),
        RealExpr::Const(_) => e.clone(),
    }
}

pub fn cond456_analyze(guide: &Program, reg: &Registry) -> Verdict {
    let params: VarSet = guide.params.iter().cloned().collect();
    let loop_vars: VarSet = {
        let mut v = VarSet::new();
        guide.body.walk(&mut |c| {
            if let Command::For(x, ..) = c {
                v.insert(x.clone());
            }
        });
        v
    };
    let defs = constant_defs(&guide.body);
    let mut sampled = VarSet::new();
    guide.body.walk(&mut |c| {
        if let Command::Sample(x, ..) = c {
            sampled.insert(x.clone());
        }
    });
    let mut invalid = Vec::new();
    let mut unknown = Vec::new();
    guide.body.walk(&mut |c| match c {
        Command::Sample(_, n, d) => {
            let at = &n.base;
            let args: Vec<RealExpr> = d.args.iter().map(|a| inline(a, &defs)).collect();
            for a in &args {
                if let Some((t, e)) = kink_witness(a, &guide.params, reg) {
                    invalid.push(Reason::span(
                        print_real(&e),
                        format!("scale or mean of `{at}` is not differentiable in `{t}` at `{}`", print_real(&e)),
                    ));
                }
            }
            if d.kind != DistKind::Normal {
                unknown.push(Reason::name(at, format!("`{at}` is drawn from {}, not a normal", d.kind.name())));
                return;
            }
            for a in &args {
                let foreign: Vec<String> = vars_of_real(a).difference(&params).cloned().collect();
                if !foreign.is_empty() {
                    let which = if foreign.iter().any(|v| loop_vars.contains(v)) {
                        "a loop counter"
                    } else if foreign.iter().any(|v| sampled.contains(v)) {
                        "an earlier sample"
                    } else {
                        "a program variable"
                    };
                    unknown.push(Reason::name(
                        at,
                        format!("sample parameter depends on {which}: `{}` reads {}", print_real(a), foreign.join(", ")),
                    ));
                    continue;
                }
                let c1 = c1_vars(a, reg);
                for t in vars_of_real(a).difference(&c1) {
                    unknown.push(Reason::span(print_real(a), format!("`{}` is not certified C¹ in `{t}`", print_real(a))));
                }
            }
            if !is_guarded_positive(&args[1]) {
                unknown.push(Reason::span(print_real(&d.args[1]), format!("scale of `{at}` is not certified positive")));
            }
        }
        Command::If(b, ..) | Command::While(b, _) => {
            let hit: Vec<String> = vars_of_bool(b).intersection(&params).cloned().collect();
            if !hit.is_empty() {
                unknown.push(Reason::message(format!("branch condition reads parameter(s) {}", hit.join(", "))));
            }
        }
        _ => {}
    });
    if !invalid.is_empty() {
        Verdict::new(Status::Invalid, invalid)
    } else if !unknown.is_empty() {
        Verdict::new(Status::Unknown, unknown)
    } else {
        Verdict::new(Status::Verified, vec![])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_program;

    fn check(src: &str) -> Verdict {
        cond456_analyze(&parse_program(src).unwrap(), Registry::standard())
    }

    #[test]
    fn linear_regression_guide_verified() {
        let v = check("guide(t1, t2, t3, t4) { s := sample_N(\"slope\", t1, exp(t2)); i := sample_N(\"intercept\", t3, exp(t4)) }");
        assert_eq!(v.status, Status::Verified);
    }

    #[test]
    fn dependent_scale_unknown() {
        let v = check("guide(t1, t2) { x1 := sample_N(\"a_1\", t1, 1); x2 := sample_N(\"a_2\", t2, exp(x1)) }");
        assert_eq!(v.status, Status::Unknown);
        assert!(v.reasons[0].message.starts_with("sample parameter depends on an earlier sample"));
    }

    #[test]
    fn constant_scale_variable_is_inlined() {
        let v = check("guide(t) { d := 1.0; x := sample_N(\"a\", t, d) }");
        assert_eq!(v.status, Status::Verified, "{v:?}");
    }

    #[test]
    fn relu_scale_invalid() {
        assert_eq!(check("guide(theta) { x := sample_N(\"a\", 0, relu(theta) + 2) }").status, Status::Invalid);
    }
}
