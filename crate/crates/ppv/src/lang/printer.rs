//! Pretty printer producing re-parseable source text.

use super::ast::{BoolExpr, Command, Distribution, NameExpr, Program, RealExpr, Role};
use super::registry::PrimOp;

fn prec(e: &RealExpr) -> u8 {
    match e {
        RealExpr::Prim(PrimOp::Add | PrimOp::Sub, _) => 1,
        RealExpr::Prim(PrimOp::Mul | PrimOp::Div, _) => 2,
        _ => 3,
    }
}

pub fn fmt_num(v: f64) -> String {
    format!("{v:?}")
}

pub fn print_real(e: &RealExpr) -> String {
    match e {
        RealExpr::Const(c) => fmt_num(*c),
        RealExpr::Var(x) => x.clone(),
        RealExpr::Prim(PrimOp::Neg, args) => format!("-({})", print_real(&args[0])),
        RealExpr::Prim(op, args) => match op.infix() {
            Some(sym) => {
                let p = prec(e);
                let l = &args[0];
                let r = &args[1];
                let ls = if prec(l) < p { format!("({})", print_real(l)) } else { print_real(l) };
                let rs = if prec(r) <= p { format!("({})", print_real(r)) } else { print_real(r) };
                format!("{ls} {sym} {rs}")
            }
            None => {
                let inner: Vec<String> = args.iter().map(print_real).collect();
                format!("{}({})", op.name(), inner.join(", "))
            }
        },
    }
}

pub fn print_bool(b: &BoolExpr) -> String {
    match b {
        BoolExpr::True => "true".into(),
        BoolExpr::Less(x, y) => format!("{} < {}", print_real(x), print_real(y)),
        BoolExpr::And(l, r) => {
            let rs = match **r {
                BoolExpr::And(..) => format!("({})", print_bool(r)),
                _ => print_bool(r),
            };
            format!("{} && {}", print_bool(l), rs)
        }
        BoolExpr::Not(x) => match **x {
            BoolExpr::True | BoolExpr::Not(_) => format!("!{}", print_bool(x)),
            _ => format!("!({})", print_bool(x)),
        },
    }
}

pub fn print_name(n: &NameExpr) -> String {
    let mut s = format!("\"{}", n.base);
    for i in &n.indices {
        s.push_str(&format!("_{{{}}}", print_real(i)));
    }
    s.push('"');
    s
}

pub fn print_dist(d: &Distribution) -> String {
    let args: Vec<String> = d.args.iter().map(print_real).collect();
    format!("{}({})", d.kind.name(), args.join(", "))
}

fn indent(depth: usize) -> String {
    "  ".repeat(depth)
}

/// Flattens the right spine of a sequence into statements.
fn stmts(c: &Command) -> Vec<&Command> {
    let mut out = Vec::new();
    let mut cur = c;
    while let Command::Seq(a, b) = cur {
        out.push(a.as_ref());
        cur = b;
    }
    out.push(cur);
    out
}

fn write_block(c: &Command, depth: usize, out: &mut String) {
    out.push_str("{\n");
    write_cmds(c, depth + 1, out);
    out.push_str(&indent(depth));
    out.push('}');
}

fn write_cmds(c: &Command, depth: usize, out: &mut String) {
    let list = stmts(c);
    let n = list.len();
    for (k, s) in list.into_iter().enumerate() {
        out.push_str(&indent(depth));
        if matches!(s, Command::Seq(..)) {
            write_block(s, depth, out);
        } else {
            write_stmt(s, depth, out);
        }
        if k + 1 < n {
            out.push(';');
        }
        out.push('\n');
    }
}

fn write_stmt(c: &Command, depth: usize, out: &mut String) {
    match c {
        Command::Skip => out.push_str("skip"),
        Command::Assign(x, e) => out.push_str(&format!("{x} := {}", print_real(e))),
        Command::Seq(..) => write_block(c, depth, out),
        Command::If(b, t, e) => {
            out.push_str(&format!("if ({}) ", print_bool(b)));
            write_block(t, depth, out);
            out.push_str(" else ");
            write_block(e, depth, out);
        }
        Command::While(b, body) => {
            out.push_str(&format!("while ({}) ", print_bool(b)));
            write_block(body, depth, out);
        }
        Command::Sample(x, n, d) => {
            out.push_str(&format!("{x} := sample({}, {})", print_name(n), print_dist(d)))
        }
        Command::Score(d, obs) => out.push_str(&format!("score({}, {})", print_dist(d), print_real(obs))),
        Command::For(v, lo, hi, body) => {
            out.push_str(&format!("for {v} in {}..{} ", print_real(lo), print_real(hi)));
            write_block(body, depth, out);
        }
    }
}

/// Prints a command as a statement list at top level.
pub fn print_command(c: &Command) -> String {
    let mut out = String::new();
    write_cmds(c, 0, &mut out);
    out.trim_end().to_string()
}

/// Prints a program as a `model { .. }` or `guide(..) { .. }` block.
pub fn pretty_print(p: &Program) -> String {
    let mut out = match p.role {
        Role::Model => "model ".to_string(),
        Role::Guide => format!("guide({}) ", p.params.join(", ")),
    };
    write_block(&p.body, 0, &mut out);
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parser::{parse_command, parse_program, parse_real};

    #[test]
    fn skip_prints() {
        assert_eq!(print_command(&Command::Skip), "skip");
    }

    #[test]
    fn precedence() {
        for src in ["a - (b - c)", "a - b - c", "(a + b) * c", "a / (b * c)", "-(a + b) * 2.0", "x * -2.0"] {
            let e = parse_real(src).unwrap();
            assert_eq!(parse_real(&print_real(&e)).unwrap(), e, "{src}");
        }
        assert_eq!(print_real(&parse_real("a - (b - c)").unwrap()), "a - (b - c)");
        assert_eq!(print_real(&parse_real("1 + 2 * x").unwrap()), "1.0 + 2.0 * x");
    }

    #[test]
    fn left_nested_sequence_round_trips() {
        let c = Command::seq(
            Command::seq(Command::assign("a", RealExpr::Const(1.0)), Command::Skip),
            Command::assign("b", RealExpr::Const(2.0)),
        );
        assert_eq!(parse_command(&print_command(&c)).unwrap(), c);
    }

    #[test]
    fn linear_regression_prints_names() {
        let src = "model {
            s := sample_N(\"slope\", 0.0, 5.0);
            i := sample_N(\"intercept\", 0.0, 5.0);
            score_N(2.3, s * 1.0 + i, 1.0)
        }";
        let p = parse_program(src).unwrap();
        let text = pretty_print(&p);
        assert!(text.contains("\"slope\"") && text.contains("\"intercept\""));
        assert_eq!(parse_program(&text).unwrap(), p);
    }
}
