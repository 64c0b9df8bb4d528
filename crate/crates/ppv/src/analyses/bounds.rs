//! Affine and affine-exponential bounds on expressions.
//!
//! Forms are `c0 + Σ c_j·|x_j|` with `c_j ≥ 0`. For an expression `E`:
//! `affine` gives `|E| ≤ l`, `affexp` gives `|E| ≤ exp(l)`, and `pos_lower`
//! gives `E ≥ exp(-m)`, so in particular `E > 0` and `1/E ≤ exp(m)`.

use std::collections::BTreeMap;
use std::f64::consts::LN_2;
use std::fmt;

use crate::lang::{PrimOp, RealExpr, Registry, VarSet};

#[derive(Clone, Debug, PartialEq)]
pub struct AffineForm {
    pub c0: f64,
    pub coef: BTreeMap<String, f64>,
}

impl AffineForm {
    pub fn constant(c: f64) -> Self {
        AffineForm { c0: c, coef: BTreeMap::new() }
    }

    /// `|x|`.
    pub fn abs_var(x: &str) -> Self {
        AffineForm { c0: 0.0, coef: BTreeMap::from([(x.to_string(), 1.0)]) }
    }

    pub fn is_constant(&self) -> bool {
        self.coef.values().all(|c| *c == 0.0)
    }

    pub fn add(&self, o: &AffineForm) -> AffineForm {
        let mut coef = self.coef.clone();
        for (k, v) in &o.coef {
            *coef.entry(k.clone()).or_insert(0.0) += v;
        }
        AffineForm { c0: self.c0 + o.c0, coef }
    }

    /// Coefficientwise maximum; bounds the pointwise maximum of two forms.
    pub fn max(&self, o: &AffineForm) -> AffineForm {
        let mut coef = self.coef.clone();
        for (k, v) in &o.coef {
            let e = coef.entry(k.clone()).or_insert(0.0);
            *e = e.max(*v);
        }
        AffineForm { c0: self.c0.max(o.c0), coef }
    }

    /// Multiplies every coefficient by `k ≥ 0`.
    pub fn scale(&self, k: f64) -> AffineForm {
        AffineForm {
            c0: self.c0 * k,
            coef: self.coef.iter().map(|(x, c)| (x.clone(), c * k)).collect(),
        }
    }

    pub fn shift(&self, k: f64) -> AffineForm {
        AffineForm { c0: self.c0 + k, coef: self.coef.clone() }
    }

    pub fn eval(&self, abs_vals: &BTreeMap<String, f64>) -> f64 {
        self.c0 + self.coef.iter().map(|(x, c)| c * abs_vals.get(x).copied().unwrap_or(0.0).abs()).sum::<f64>()
    }

    pub fn vars(&self) -> VarSet {
        self.coef.iter().filter(|(_, c)| **c != 0.0).map(|(x, _)| x.clone()).collect()
    }
}

impl fmt::Display for AffineForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.c0)?;
        for (x, c) in &self.coef {
            if *c != 0.0 {
                write!(f, " + {c}|{x}|")?;
            }
        }
        Ok(())
    }
}

/// The three certificates available for one expression.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct BoundAbs {
    pub affine: Option<AffineForm>,
    pub affexp: Option<AffineForm>,
    pub pos_lower: Option<AffineForm>,
}

impl BoundAbs {
    pub fn none() -> Self {
        BoundAbs::default()
    }

    fn with_affine(affine: AffineForm) -> Self {
        BoundAbs { affexp: Some(affine.clone()), affine: Some(affine), pos_lower: None }
    }

    pub fn is_empty(&self) -> bool {
        self.affine.is_none() && self.affexp.is_none() && self.pos_lower.is_none()
    }

    /// A bound valid for either of two values.
    pub fn join(&self, o: &BoundAbs) -> BoundAbs {
        let j = |a: &Option<AffineForm>, b: &Option<AffineForm>| match (a, b) {
            (Some(x), Some(y)) => Some(x.max(y)),
            _ => None,
        };
        BoundAbs {
            affine: j(&self.affine, &o.affine),
            affexp: j(&self.affexp, &o.affexp),
            pos_lower: j(&self.pos_lower, &o.pos_lower),
        }
    }

    /// `|E| ≤ exp(l)` holds for a literal `c` with `l = max(ln|c|, 0)`.
    fn literal(c: f64) -> BoundAbs {
        BoundAbs {
            affine: Some(AffineForm::constant(c.abs())),
            affexp: Some(AffineForm::constant(c.abs().ln().max(0.0))),
            pos_lower: (c > 0.0).then(|| AffineForm::constant(-c.ln())),
        }
    }
}

fn lit(e: &RealExpr) -> Option<f64> {
    match e {
        RealExpr::Prim(PrimOp::Neg, a) => a[0].as_const().map(|c| -c),
        _ => e.as_const(),
    }
}

/// Raises the constant term to at least 0, so `exp(l) ≥ 1`.
fn normalized(l: &AffineForm) -> AffineForm {
    AffineForm { c0: l.c0.max(0.0), coef: l.coef.clone() }
}

/// `|e| + c` or `c + |e|` with a positive literal `c`.
fn abs_plus_const(args: &[RealExpr]) -> Option<f64> {
    match (&args[0], &args[1]) {
        (RealExpr::Prim(PrimOp::Abs, _), RealExpr::Const(c)) | (RealExpr::Const(c), RealExpr::Prim(PrimOp::Abs, _)) if *c > 0.0 => Some(*c),
        _ => None,
    }
}

/// Bounds for `e` where variables get bounds from `var`.
pub fn bound_infer_with(e: &RealExpr, var: &dyn Fn(&str) -> BoundAbs, reg: &Registry) -> BoundAbs {
    match e {
        RealExpr::Const(c) => BoundAbs::literal(*c),
        RealExpr::Var(x) => var(x),
        RealExpr::Prim(op, args) => {
            let rules = reg.entry(*op).bounds;
            let a: Vec<BoundAbs> = args.iter().map(|x| bound_infer_with(x, var, reg)).collect();
            let mut out = prim_bounds(*op, args, &a);
            if !rules.affine {
                out.affine = None;
            }
            if !rules.affexp {
                out.affexp = None;
            }
            if !rules.pos_lower {
                out.pos_lower = None;
            }
            if out.affexp.is_none() {
                out.affexp = out.affine.clone();
            }
            out
        }
    }
}

fn prim_bounds(op: PrimOp, args: &[RealExpr], a: &[BoundAbs]) -> BoundAbs {
    let both = |f: fn(&AffineForm, &AffineForm) -> AffineForm, x: &Option<AffineForm>, y: &Option<AffineForm>| match (x, y) {
        (Some(p), Some(q)) => Some(f(p, q)),
        _ => None,
    };
    match op {
        PrimOp::Add | PrimOp::Sub => BoundAbs {
            affine: both(AffineForm::add, &a[0].affine, &a[1].affine),
            affexp: both(AffineForm::max, &a[0].affexp, &a[1].affexp).map(|l| l.shift(LN_2)),
            pos_lower: if op == PrimOp::Add { abs_plus_const(args).map(|c| AffineForm::constant(-c.ln())) } else { None },
        },
        PrimOp::Mul => {
            let affine = match (lit(&args[0]), lit(&args[1])) {
                (Some(c), _) => a[1].affine.as_ref().map(|l| l.scale(c.abs())),
                (_, Some(c)) => a[0].affine.as_ref().map(|l| l.scale(c.abs())),
                _ => None,
            };
            BoundAbs { affine, affexp: both(AffineForm::add, &a[0].affexp, &a[1].affexp), pos_lower: None }
        }
        PrimOp::Div => {
            let affexp = both(AffineForm::add, &a[0].affexp, &a[1].pos_lower);
            let affine = match lit(&args[1]) {
                Some(c) if c != 0.0 => a[0].affine.as_ref().map(|l| l.scale(1.0 / c.abs())),
                _ => None,
            };
            // Only reciprocals of `|e| + c` are certified.
            let guarded = matches!(&args[1], RealExpr::Prim(PrimOp::Add, b) if abs_plus_const(b).is_some());
            let pos_lower = match (lit(&args[0]), &a[1].affexp) {
                (Some(c), Some(u)) if c > 0.0 && guarded => Some(u.shift(-c.ln())),
                _ => None,
            };
            BoundAbs { affine, affexp, pos_lower }
        }
        PrimOp::Max | PrimOp::Min => BoundAbs {
            affine: both(AffineForm::max, &a[0].affine, &a[1].affine),
            affexp: both(AffineForm::max, &a[0].affexp, &a[1].affexp),
            pos_lower: None,
        },
        PrimOp::Neg | PrimOp::Relu | PrimOp::Abs => BoundAbs {
            affine: a[0].affine.clone(),
            affexp: a[0].affexp.clone(),
            pos_lower: None,
        },
        PrimOp::Tanh | PrimOp::Sigmoid => BoundAbs::with_affine(AffineForm::constant(1.0)),
        PrimOp::Softplus => BoundAbs {
            affine: a[0].affine.as_ref().map(|l| l.shift(LN_2)),
            affexp: a[0].affexp.as_ref().map(|l| normalized(l).shift(LN_2)),
            pos_lower: a[0].affine.as_ref().map(|l| l.shift(LN_2)),
        },
        PrimOp::Exp => BoundAbs {
            affine: None,
            affexp: a[0].affine.clone(),
            pos_lower: a[0].affine.clone(),
        },
        PrimOp::Pow => {
            let n = lit(&args[1]).unwrap_or(f64::NAN);
            let affine = if n == 0.0 {
                Some(AffineForm::constant(1.0))
            } else if n == 1.0 {
                a[0].affine.clone()
            } else {
                None
            };
            let affexp = if n >= 0.0 { a[0].affexp.as_ref().map(|l| l.scale(n)) } else { None };
            BoundAbs { affine, affexp, pos_lower: None }
        }
        PrimOp::Log => BoundAbs::none(),
    }
}

/// Bounds for `e` with the variables in `tracked` bounded by their own
/// absolute value and every other variable unbounded.
pub fn bound_infer(e: &RealExpr, tracked: &VarSet, reg: &Registry) -> BoundAbs {
    bound_infer_with(
        e,
        &|x| {
            if tracked.contains(x) {
                BoundAbs::with_affine(AffineForm::abs_var(x))
            } else {
                BoundAbs::none()
            }
        },
        reg,
    )
}

/// Which certificate a soundness check is about.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundKind {
    Affine,
    AffExp,
    PosLower,
}

/// Checks one emitted bound at one point; `None` when `e` is undefined there.
pub fn bound_holds(e: &RealExpr, kind: BoundKind, form: &AffineForm, point: &BTreeMap<String, f64>, reg: &Registry) -> Option<bool> {
    let v = crate::density::eval_real_in(e, point, reg).ok()?;
    let l = form.eval(point);
    let slack = 1e-9;
    Some(match kind {
        BoundKind::Affine => v.abs() <= l * (1.0 + slack) + slack,
        BoundKind::AffExp => v.abs() <= l.exp() * (1.0 + slack),
        BoundKind::PosLower => v >= (-l).exp() * (1.0 - slack),
    })
}
