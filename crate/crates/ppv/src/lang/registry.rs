//! The declared set of primitive real functions.
//!
//! Every primitive carries an evaluator, its partial derivatives, the
//! arguments in which it is continuously differentiable, and switches for the
//! bound-calculus rules the analyses may apply to it. Tests build weakened
//! copies of the standard registry to check that analyses only get less
//! precise when rules are removed.

use std::sync::LazyLock;

use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PrimOp {
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Exp,
    Log,
    Abs,
    Relu,
    Softplus,
    Tanh,
    Sigmoid,
    Min,
    Max,
    Pow,
}

impl PrimOp {
    pub const ALL: [PrimOp; 15] = [
        PrimOp::Add,
        PrimOp::Sub,
        PrimOp::Mul,
        PrimOp::Div,
        PrimOp::Neg,
        PrimOp::Exp,
        PrimOp::Log,
        PrimOp::Abs,
        PrimOp::Relu,
        PrimOp::Softplus,
        PrimOp::Tanh,
        PrimOp::Sigmoid,
        PrimOp::Min,
        PrimOp::Max,
        PrimOp::Pow,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PrimOp::Add => "add",
            PrimOp::Sub => "sub",
            PrimOp::Mul => "mul",
            PrimOp::Div => "div",
            PrimOp::Neg => "neg",
            PrimOp::Exp => "exp",
            PrimOp::Log => "log",
            PrimOp::Abs => "abs",
            PrimOp::Relu => "relu",
            PrimOp::Softplus => "softplus",
            PrimOp::Tanh => "tanh",
            PrimOp::Sigmoid => "sigmoid",
            PrimOp::Min => "min",
            PrimOp::Max => "max",
            PrimOp::Pow => "pow",
        }
    }

    /// Infix symbol for the arithmetic operators.
    pub fn infix(self) -> Option<&'static str> {
        match self {
            PrimOp::Add => Some("+"),
            PrimOp::Sub => Some("-"),
            PrimOp::Mul => Some("*"),
            PrimOp::Div => Some("/"),
            _ => None,
        }
    }

    pub fn arity(self) -> usize {
        match self {
            PrimOp::Add | PrimOp::Sub | PrimOp::Mul | PrimOp::Div => 2,
            PrimOp::Min | PrimOp::Max | PrimOp::Pow => 2,
            _ => 1,
        }
    }

    /// Distance from `args` to the nearest point where the primitive is not
    /// continuously differentiable, if it has such points.
    pub fn kink_distance(self, args: &[f64]) -> Option<f64> {
        match self {
            PrimOp::Abs | PrimOp::Relu => Some(args[0].abs()),
            PrimOp::Min | PrimOp::Max => Some((args[0] - args[1]).abs()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("{op}: argument {arg} outside domain")]
    Domain { op: &'static str, arg: f64 },
    #[error("pow: exponent {0} is not a natural number")]
    BadExponent(f64),
    #[error("index {0} is not an integer")]
    NonIntegerIndex(f64),
    #[error("index {0} is negative")]
    NegativeIndex(f64),
    #[error("loop bound {0} is not an integer")]
    NonIntegerBound(f64),
    #[error("non-finite value {0}")]
    NonFinite(f64),
}

/// How a primitive behaves with respect to continuous differentiability in
/// one argument.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum C1Flag {
    Always,
    Never,
    /// C¹ only where the argument is certified positive by a guarded form.
    WhenGuarded,
}

/// Bound-calculus rules that may be applied to a primitive.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundRules {
    pub affine: bool,
    pub affexp: bool,
    pub pos_lower: bool,
}

impl BoundRules {
    pub const ALL: BoundRules = BoundRules {
        affine: true,
        affexp: true,
        pos_lower: true,
    };
    pub const NONE: BoundRules = BoundRules {
        affine: false,
        affexp: false,
        pos_lower: false,
    };
}

pub type Evaluator = fn(&[f64]) -> Result<f64, EvalError>;
pub type Partials = fn(&[f64]) -> Vec<f64>;

#[derive(Clone, Debug)]
pub struct PrimFnEntry {
    pub op: PrimOp,
    pub arity: usize,
    pub eval: Evaluator,
    pub partials: Partials,
    pub c1: Vec<C1Flag>,
    pub bounds: BoundRules,
}

#[derive(Clone, Debug)]
pub struct Registry {
    entries: Vec<PrimFnEntry>,
}

static STANDARD: LazyLock<Registry> = LazyLock::new(Registry::build_standard);

fn sigmoid(a: f64) -> f64 {
    if a >= 0.0 {
        1.0 / (1.0 + (-a).exp())
    } else {
        let e = a.exp();
        e / (1.0 + e)
    }
}

fn softplus(a: f64) -> f64 {
    if a > 0.0 {
        a + (-a).exp().ln_1p()
    } else {
        a.exp().ln_1p()
    }
}

fn natural_exponent(n: f64) -> Result<i32, EvalError> {
    if n >= 0.0 && n.fract() == 0.0 && n <= i32::MAX as f64 {
        Ok(n as i32)
    } else {
        Err(EvalError::BadExponent(n))
    }
}

fn entry(op: PrimOp, eval: Evaluator, partials: Partials, c1: Vec<C1Flag>) -> PrimFnEntry {
    PrimFnEntry {
        op,
        arity: op.arity(),
        eval,
        partials,
        c1,
        bounds: BoundRules::ALL,
    }
}

impl Registry {
    /// The shared standard registry.
    pub fn standard() -> &'static Registry {
        &STANDARD
    }

    fn build_standard() -> Registry {
        use C1Flag::*;
        let entries = vec![
            entry(PrimOp::Add, |a| Ok(a[0] + a[1]), |_| vec![1.0, 1.0], vec![Always, Always]),
            entry(PrimOp::Sub, |a| Ok(a[0] - a[1]), |_| vec![1.0, -1.0], vec![Always, Always]),
            entry(PrimOp::Mul, |a| Ok(a[0] * a[1]), |a| vec![a[1], a[0]], vec![Always, Always]),
            entry(
                PrimOp::Div,
                |a| {
                    if a[1] == 0.0 {
                        Err(EvalError::Domain { op: "div", arg: a[1] })
                    } else {
                        Ok(a[0] / a[1])
                    }
                },
                |a| vec![1.0 / a[1], -a[0] / (a[1] * a[1])],
                vec![Always, WhenGuarded],
            ),
            entry(PrimOp::Neg, |a| Ok(-a[0]), |_| vec![-1.0], vec![Always]),
            entry(PrimOp::Exp, |a| Ok(a[0].exp()), |a| vec![a[0].exp()], vec![Always]),
            entry(
                PrimOp::Log,
                |a| {
                    if a[0] > 0.0 {
                        Ok(a[0].ln())
                    } else {
                        Err(EvalError::Domain { op: "log", arg: a[0] })
                    }
                },
                |a| vec![1.0 / a[0]],
                vec![WhenGuarded],
            ),
            entry(
                PrimOp::Abs,
                |a| Ok(a[0].abs()),
                |a| vec![if a[0] > 0.0 { 1.0 } else if a[0] < 0.0 { -1.0 } else { 0.0 }],
                vec![Never],
            ),
            entry(
                PrimOp::Relu,
                |a| Ok(if a[0] > 0.0 { a[0] } else { 0.0 }),
                |a| vec![if a[0] > 0.0 { 1.0 } else { 0.0 }],
                vec![Never],
            ),
            entry(PrimOp::Softplus, |a| Ok(softplus(a[0])), |a| vec![sigmoid(a[0])], vec![Always]),
            entry(
                PrimOp::Tanh,
                |a| Ok(a[0].tanh()),
                |a| {
                    let t = a[0].tanh();
                    vec![1.0 - t * t]
                },
                vec![Always],
            ),
            entry(
                PrimOp::Sigmoid,
                |a| Ok(sigmoid(a[0])),
                |a| {
                    let s = sigmoid(a[0]);
                    vec![s * (1.0 - s)]
                },
                vec![Always],
            ),
            entry(
                PrimOp::Min,
                |a| Ok(a[0].min(a[1])),
                |a| if a[0] <= a[1] { vec![1.0, 0.0] } else { vec![0.0, 1.0] },
                vec![Never, Never],
            ),
            entry(
                PrimOp::Max,
                |a| Ok(a[0].max(a[1])),
                |a| if a[0] >= a[1] { vec![1.0, 0.0] } else { vec![0.0, 1.0] },
                vec![Never, Never],
            ),
            entry(
                PrimOp::Pow,
                |a| Ok(a[0].powi(natural_exponent(a[1])?)),
                |a| {
                    let n = a[1] as i32;
                    let d = if n == 0 { 0.0 } else { n as f64 * a[0].powi(n - 1) };
                    vec![d, 0.0]
                },
                vec![Always, Never],
            ),
        ];
        debug_assert!(entries.iter().zip(PrimOp::ALL).all(|(e, op)| e.op == op));
        Registry { entries }
    }

    pub fn entry(&self, op: PrimOp) -> &PrimFnEntry {
        &self.entries[op as usize]
    }

    /// Looks up a primitive by its source name.
    pub fn lookup(&self, name: &str) -> Option<PrimOp> {
        PrimOp::ALL.into_iter().find(|op| op.name() == name)
    }

    pub fn eval(&self, op: PrimOp, args: &[f64]) -> Result<f64, EvalError> {
        let v = (self.entry(op).eval)(args)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite(v))
        }
    }

    pub fn partials(&self, op: PrimOp, args: &[f64]) -> Vec<f64> {
        (self.entry(op).partials)(args)
    }

    /// Copy with every C¹ flag of `op` set to `Never`.
    pub fn without_c1(&self, op: PrimOp) -> Registry {
        let mut r = self.clone();
        let e = &mut r.entries[op as usize];
        e.c1.iter_mut().for_each(|f| *f = C1Flag::Never);
        r
    }

    /// Copy with the given bound rules of `op` switched off.
    pub fn without_bound_rules(&self, op: PrimOp, remove: BoundRules) -> Registry {
        let mut r = self.clone();
        let b = &mut r.entries[op as usize].bounds;
        b.affine &= !remove.affine;
        b.affexp &= !remove.affexp;
        b.pos_lower &= !remove.pos_lower;
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partials_match_finite_differences() {
        let reg = Registry::standard();
        let h = 1e-6;
        let points: [[f64; 2]; 4] = [[0.7, 1.3], [-1.2, 0.4], [2.5, -0.9], [0.3, 3.0]];
        for op in PrimOp::ALL {
            for p in points {
                let mut args = p[..op.arity()].to_vec();
                if op == PrimOp::Pow {
                    args[1] = 3.0;
                }
                if op == PrimOp::Log {
                    args[0] = args[0].abs();
                }
                if op.kink_distance(&args).is_some_and(|d| d < 1e-3) {
                    continue;
                }
                let d = reg.partials(op, &args);
                let last = if op == PrimOp::Pow { 1 } else { args.len() };
                for i in 0..last {
                    let mut hi = args.clone();
                    let mut lo = args.clone();
                    hi[i] += h;
                    lo[i] -= h;
                    let fd = (reg.eval(op, &hi).unwrap() - reg.eval(op, &lo).unwrap()) / (2.0 * h);
                    assert!(
                        (fd - d[i]).abs() <= 1e-5 * (1.0 + fd.abs()),
                        "{op:?} arg {i} at {args:?}: fd {fd} vs {}",
                        d[i]
                    );
                }
            }
        }
    }

    #[test]
    fn domain_errors() {
        let reg = Registry::standard();
        assert!(reg.eval(PrimOp::Log, &[0.0]).is_err());
        assert!(reg.eval(PrimOp::Div, &[1.0, 0.0]).is_err());
        assert!(reg.eval(PrimOp::Pow, &[2.0, 0.5]).is_err());
        assert_eq!(reg.eval(PrimOp::Pow, &[2.0, 3.0]).unwrap(), 8.0);
    }

    #[test]
    fn stable_softplus_and_sigmoid() {
        let reg = Registry::standard();
        assert!((reg.eval(PrimOp::Softplus, &[800.0]).unwrap() - 800.0).abs() < 1e-9);
        assert!(reg.eval(PrimOp::Softplus, &[-800.0]).unwrap() >= 0.0);
        assert_eq!(reg.eval(PrimOp::Sigmoid, &[-800.0]).unwrap(), 0.0);
    }

    #[test]
    fn weakening_is_local() {
        let reg = Registry::standard().without_c1(PrimOp::Exp);
        assert_eq!(reg.entry(PrimOp::Exp).c1, vec![C1Flag::Never]);
        assert_eq!(reg.entry(PrimOp::Tanh).c1, vec![C1Flag::Always]);
    }
}
