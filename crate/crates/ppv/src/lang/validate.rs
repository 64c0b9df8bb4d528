//! Static well-formedness checks on programs and model-guide pairs.

use std::collections::BTreeSet;

use thiserror::Error;

use super::ast::{Command, Program, RealExpr, Role};
use super::meta::{vars_of_bool, vars_of_command, vars_of_dist, vars_of_name, vars_of_real};
use super::registry::PrimOp;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Issue {
    #[error("guide contains a score statement")]
    GuideHasScore,
    #[error("guide contains a while loop")]
    GuideHasWhile,
    #[error("parameter `{0}` is assigned or sampled into")]
    ParamAssigned(String),
    #[error("loop variable `{0}` is assigned in its loop body")]
    ForVarAssigned(String),
    #[error("`{name}` expects {expected} argument(s), found {found}")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("exponent of pow must be a natural-number literal")]
    NonNaturalExponent,
    #[error("duplicate parameter `{0}`")]
    DuplicateParam(String),
    #[error("model declares parameters")]
    ModelHasParams,
    #[error("model reads guide parameter `{0}`")]
    ModelReadsParam(String),
}

fn check_expr(e: &RealExpr, out: &mut Vec<Issue>) {
    if let RealExpr::Prim(op, args) = e {
        if args.len() != op.arity() {
            out.push(Issue::Arity {
                name: op.name().into(),
                expected: op.arity(),
                found: args.len(),
            });
        }
        if *op == PrimOp::Pow {
            let ok = matches!(args.get(1), Some(RealExpr::Const(n)) if *n >= 0.0 && n.fract() == 0.0);
            if !ok {
                out.push(Issue::NonNaturalExponent);
            }
        }
        args.iter().for_each(|a| check_expr(a, out));
    }
}

fn check_command(c: &Command, params: &BTreeSet<String>, loop_vars: &mut Vec<String>, out: &mut Vec<Issue>) {
    let assigned = |x: &String, loop_vars: &Vec<String>, out: &mut Vec<Issue>| {
        if params.contains(x) {
            out.push(Issue::ParamAssigned(x.clone()));
        }
        if loop_vars.contains(x) {
            out.push(Issue::ForVarAssigned(x.clone()));
        }
    };
    match c {
        Command::Skip => {}
        Command::Assign(x, e) => {
            assigned(x, loop_vars, out);
            check_expr(e, out);
        }
        Command::Seq(a, b) => {
            check_command(a, params, loop_vars, out);
            check_command(b, params, loop_vars, out);
        }
        Command::If(_, a, b) => {
            check_command(a, params, loop_vars, out);
            check_command(b, params, loop_vars, out);
        }
        Command::While(_, body) => check_command(body, params, loop_vars, out),
        Command::Sample(x, n, d) => {
            assigned(x, loop_vars, out);
            n.indices.iter().for_each(|e| check_expr(e, out));
            check_dist(d, out);
        }
        Command::Score(d, obs) => {
            check_dist(d, out);
            check_expr(obs, out);
        }
        Command::For(v, lo, hi, body) => {
            assigned(v, loop_vars, out);
            check_expr(lo, out);
            check_expr(hi, out);
            loop_vars.push(v.clone());
            check_command(body, params, loop_vars, out);
            loop_vars.pop();
        }
    }
}

fn check_dist(d: &super::ast::Distribution, out: &mut Vec<Issue>) {
    if d.args.len() != d.kind.arity() {
        out.push(Issue::Arity {
            name: d.kind.name().into(),
            expected: d.kind.arity(),
            found: d.args.len(),
        });
    }
    d.args.iter().for_each(|e| check_expr(e, out));
}

/// Returns every violated program invariant; empty when the program is valid.
pub fn validate(p: &Program) -> Vec<Issue> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for x in &p.params {
        if !seen.insert(x.clone()) {
            out.push(Issue::DuplicateParam(x.clone()));
        }
    }
    match p.role {
        Role::Guide => {
            if p.body.contains_score() {
                out.push(Issue::GuideHasScore);
            }
            if p.body.contains_while() {
                out.push(Issue::GuideHasWhile);
            }
        }
        Role::Model => {
            if !p.params.is_empty() {
                out.push(Issue::ModelHasParams);
            }
        }
    }
    check_command(&p.body, &seen, &mut Vec::new(), &mut out);
    out
}

/// Validates both programs and checks that the model never reads a guide
/// parameter.
pub fn validate_pair(model: &Program, guide: &Program) -> Vec<Issue> {
    let mut out = validate(model);
    out.extend(validate(guide));
    let read = model_reads(&model.body);
    for t in &guide.params {
        if read.contains(t) {
            out.push(Issue::ModelReadsParam(t.clone()));
        }
    }
    out
}

fn model_reads(c: &Command) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    c.walk(&mut |c| match c {
        Command::Assign(_, e) => out.extend(vars_of_real(e)),
        Command::If(b, ..) | Command::While(b, _) => out.extend(vars_of_bool(b)),
        Command::Sample(_, n, d) => {
            out.extend(vars_of_name(n));
            out.extend(vars_of_dist(d));
        }
        Command::Score(d, e) => {
            out.extend(vars_of_dist(d));
            out.extend(vars_of_real(e));
        }
        Command::For(_, lo, hi, _) => {
            out.extend(vars_of_real(lo));
            out.extend(vars_of_real(hi));
        }
        _ => {}
    });
    out
}

/// All variables of a program including its parameters.
pub fn program_vars(p: &Program) -> BTreeSet<String> {
    let mut v = vars_of_command(&p.body);
    v.extend(p.params.iter().cloned());
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::ast::Program;
    use crate::lang::parser::{parse_command, parse_program};

    const REGRESSION_GUIDE: &str = "guide(t1, t2, t3, t4) {
        s := sample_N(\"slope\", t1, exp(t2));
        i := sample_N(\"intercept\", t3, exp(t4))
    }";

    #[test]
    fn linear_regression_guide_is_valid() {
        assert_eq!(validate(&parse_program(REGRESSION_GUIDE).unwrap()), vec![]);
    }

    #[test]
    fn param_assignment() {
        let g = Program::guide(&["t1"], parse_command("t1 := 2.0").unwrap());
        assert_eq!(validate(&g), vec![Issue::ParamAssigned("t1".into())]);
        let g = Program::guide(&["t1"], parse_command("t1 := sample_N(\"a\", 0, 1)").unwrap());
        assert_eq!(validate(&g), vec![Issue::ParamAssigned("t1".into())]);
    }

    #[test]
    fn model_reading_param() {
        let m = parse_program("model { x := sample_N(\"a\", t1, 1.0) }").unwrap();
        let g = parse_program("guide(t1) { x := sample_N(\"a\", t1, 1.0) }").unwrap();
        assert_eq!(validate_pair(&m, &g), vec![Issue::ModelReadsParam("t1".into())]);
    }

    #[test]
    fn for_var_assigned() {
        let m = Program::model(parse_command("for i in 0..3 { i := 1 }").unwrap());
        assert_eq!(validate(&m), vec![Issue::ForVarAssigned("i".into())]);
    }

    #[test]
    fn guide_restrictions_on_built_asts() {
        let g = Program::guide(&[], parse_command("score_N(0, 0, 1); while (0 < 1) { skip }").unwrap());
        assert_eq!(validate(&g), vec![Issue::GuideHasScore, Issue::GuideHasWhile]);
    }

    #[test]
    fn pow_exponent() {
        let m = Program::model(parse_command("x := pow(y, 2)").unwrap());
        assert!(validate(&m).is_empty());
        let m = Program::model(parse_command("x := pow(y, z)").unwrap());
        assert_eq!(validate(&m), vec![Issue::NonNaturalExponent]);
    }
}
