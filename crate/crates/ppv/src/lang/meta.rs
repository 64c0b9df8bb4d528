//! Syntactic metadata: occurring variables and C¹ variables.

use std::collections::BTreeSet;

use super::ast::{BoolExpr, Command, Distribution, NameExpr, RealExpr};
use super::registry::{C1Flag, PrimOp, Registry};

pub type VarSet = BTreeSet<String>;

pub fn vars_of_real(e: &RealExpr) -> VarSet {
    let mut out = VarSet::new();
    collect_real(e, &mut out);
    out
}

fn collect_real(e: &RealExpr, out: &mut VarSet) {
    match e {
        RealExpr::Const(_) => {}
        RealExpr::Var(x) => {
            out.insert(x.clone());
        }
        RealExpr::Prim(_, args) => args.iter().for_each(|a| collect_real(a, out)),
    }
}

pub fn vars_of_bool(b: &BoolExpr) -> VarSet {
    let mut out = VarSet::new();
    collect_bool(b, &mut out);
    out
}

fn collect_bool(b: &BoolExpr, out: &mut VarSet) {
    match b {
        BoolExpr::True => {}
        BoolExpr::Less(x, y) => {
            collect_real(x, out);
            collect_real(y, out);
        }
        BoolExpr::And(x, y) => {
            collect_bool(x, out);
            collect_bool(y, out);
        }
        BoolExpr::Not(x) => collect_bool(x, out),
    }
}

pub fn vars_of_name(n: &NameExpr) -> VarSet {
    let mut out = VarSet::new();
    n.indices.iter().for_each(|e| collect_real(e, &mut out));
    out
}

pub fn vars_of_dist(d: &Distribution) -> VarSet {
    let mut out = VarSet::new();
    d.args.iter().for_each(|e| collect_real(e, &mut out));
    out
}

/// Every variable mentioned anywhere in a command, including assigned ones.
pub fn vars_of_command(c: &Command) -> VarSet {
    let mut out = VarSet::new();
    c.walk(&mut |c| match c {
        Command::Assign(x, e) => {
            out.insert(x.clone());
            collect_real(e, &mut out);
        }
        Command::If(b, ..) | Command::While(b, _) => collect_bool(b, &mut out),
        Command::Sample(x, n, d) => {
            out.insert(x.clone());
            out.extend(vars_of_name(n));
            out.extend(vars_of_dist(d));
        }
        Command::Score(d, e) => {
            out.extend(vars_of_dist(d));
            collect_real(e, &mut out);
        }
        Command::For(v, lo, hi, _) => {
            out.insert(v.clone());
            collect_real(lo, &mut out);
            collect_real(hi, &mut out);
        }
        Command::Skip | Command::Seq(..) => {}
    });
    out
}

/// Variables assigned or sampled into anywhere in `c` (loop counters included).
pub fn assigned_vars(c: &Command) -> VarSet {
    let mut out = VarSet::new();
    c.walk(&mut |c| match c {
        Command::Assign(x, _) | Command::Sample(x, ..) | Command::For(x, ..) => {
            out.insert(x.clone());
        }
        _ => {}
    });
    out
}

/// Syntactic forms that are certified strictly positive: `exp(·)`,
/// `softplus(·)`, `|·| + c` with a positive literal `c`, and positive literals.
pub fn is_guarded_positive(e: &RealExpr) -> bool {
    match e {
        RealExpr::Const(c) => *c > 0.0,
        RealExpr::Prim(PrimOp::Exp | PrimOp::Softplus, _) => true,
        RealExpr::Prim(PrimOp::Add, args) => matches!(
            (&args[0], &args[1]),
            (RealExpr::Prim(PrimOp::Abs, _), RealExpr::Const(c))
                | (RealExpr::Const(c), RealExpr::Prim(PrimOp::Abs, _)) if *c > 0.0
        ),
        _ => false,
    }
}

/// Variables in which `e` is certified continuously differentiable. A subset
/// of `vars_of_real(e)`.
pub fn c1_vars(e: &RealExpr, reg: &Registry) -> VarSet {
    match e {
        RealExpr::Const(_) => VarSet::new(),
        RealExpr::Var(x) => VarSet::from([x.clone()]),
        RealExpr::Prim(op, args) => {
            let flags = &reg.entry(*op).c1;
            if flags
                .iter()
                .zip(args)
                .any(|(f, a)| *f == C1Flag::WhenGuarded && !is_guarded_positive(a))
            {
                return VarSet::new();
            }
            let per_arg: Vec<(VarSet, VarSet, C1Flag)> = args
                .iter()
                .zip(flags)
                .map(|(a, f)| (vars_of_real(a), c1_vars(a, reg), *f))
                .collect();
            vars_of_real(e)
                .into_iter()
                .filter(|v| {
                    per_arg
                        .iter()
                        .all(|(vs, c1, f)| !vs.contains(v) || (*f != C1Flag::Never && c1.contains(v)))
                })
                .collect()
        }
    }
}

/// Variables of `universe` in which `e` is C¹: those it does not mention plus
/// its certified C¹ variables.
pub fn c1_full(e: &RealExpr, universe: &VarSet, reg: &Registry) -> VarSet {
    let occ = vars_of_real(e);
    let c1 = c1_vars(e, reg);
    universe
        .iter()
        .filter(|v| !occ.contains(*v) || c1.contains(*v))
        .cloned()
        .collect()
}
