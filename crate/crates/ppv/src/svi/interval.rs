//! Interval evaluation, used to find integration boxes.

use std::collections::BTreeMap;

use crate::lang::{PrimOp, RealExpr, Registry};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Iv {
    pub lo: f64,
    pub hi: f64,
}

impl Iv {
    pub fn new(lo: f64, hi: f64) -> Self {
        Iv { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Iv { lo: x, hi: x }
    }

    pub fn hull(self, o: Iv) -> Iv {
        Iv::new(self.lo.min(o.lo), self.hi.max(o.hi))
    }

    pub fn is_point(self) -> bool {
        self.lo == self.hi
    }

    fn finite(self) -> Option<Iv> {
        (self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi).then_some(self)
    }

    fn monotone(self, f: impl Fn(f64) -> f64) -> Iv {
        Iv::new(f(self.lo), f(self.hi))
    }

    fn corners(xs: [f64; 4]) -> Iv {
        let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Iv::new(lo, hi)
    }
}

/// Sound enclosure of `e` over the box `env`; unbound variables read as 0.
/// `None` when an operation may leave its domain or overflow.
pub fn eval_iv(e: &RealExpr, env: &BTreeMap<String, Iv>, reg: &Registry) -> Option<Iv> {
    match e {
        RealExpr::Const(c) => Iv::point(*c).finite(),
        RealExpr::Var(x) => Some(env.get(x).copied().unwrap_or(Iv::point(0.0))),
        RealExpr::Prim(op, args) => {
            let a = args
                .iter()
                .map(|x| eval_iv(x, env, reg))
                .collect::<Option<Vec<Iv>>>()?;
            if a.iter().all(|x| x.is_point()) {
                let vals: Vec<f64> = a.iter().map(|x| x.lo).collect();
                return reg.eval(*op, &vals).ok().map(Iv::point);
            }
            let r = match op {
                PrimOp::Add => Iv::new(a[0].lo + a[1].lo, a[0].hi + a[1].hi),
                PrimOp::Sub => Iv::new(a[0].lo - a[1].hi, a[0].hi - a[1].lo),
                PrimOp::Mul => {
                    let (x, y) = (a[0], a[1]);
                    Iv::corners([x.lo * y.lo, x.lo * y.hi, x.hi * y.lo, x.hi * y.hi])
                }
                PrimOp::Div => {
                    let (x, y) = (a[0], a[1]);
                    if y.lo <= 0.0 && y.hi >= 0.0 {
                        return None;
                    }
                    Iv::corners([x.lo / y.lo, x.lo / y.hi, x.hi / y.lo, x.hi / y.hi])
                }
                PrimOp::Neg => Iv::new(-a[0].hi, -a[0].lo),
                PrimOp::Exp => a[0].monotone(f64::exp),
                PrimOp::Log => {
                    if a[0].lo <= 0.0 {
                        return None;
                    }
                    a[0].monotone(f64::ln)
                }
                PrimOp::Abs => {
                    let x = a[0];
                    if x.lo >= 0.0 {
                        x
                    } else if x.hi <= 0.0 {
                        Iv::new(-x.hi, -x.lo)
                    } else {
                        Iv::new(0.0, (-x.lo).max(x.hi))
                    }
                }
                PrimOp::Relu => a[0].monotone(|v| v.max(0.0)),
                PrimOp::Softplus | PrimOp::Tanh | PrimOp::Sigmoid => {
                    let f = reg.entry(*op).eval;
                    Iv::new(f(&[a[0].lo]).ok()?, f(&[a[0].hi]).ok()?)
                }
                PrimOp::Min => Iv::new(a[0].lo.min(a[1].lo), a[0].hi.min(a[1].hi)),
                PrimOp::Max => Iv::new(a[0].lo.max(a[1].lo), a[0].hi.max(a[1].hi)),
                PrimOp::Pow => {
                    if !a[1].is_point() {
                        return None;
                    }
                    let n = a[1].lo;
                    let (x, f) = (a[0], |v: f64| v.powf(n));
                    if n as i64 % 2 == 0 && x.lo < 0.0 && x.hi > 0.0 {
                        Iv::new(0.0, f(x.lo).max(f(x.hi)))
                    } else {
                        Iv::corners([f(x.lo), f(x.hi), f(x.lo), f(x.hi)])
                    }
                }
            };
            r.finite()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_real;

    fn iv(src: &str, env: &[(&str, f64, f64)]) -> Option<Iv> {
        let env = env.iter().map(|(k, l, h)| (k.to_string(), Iv::new(*l, *h))).collect();
        eval_iv(&parse_real(src).unwrap(), &env, Registry::standard())
    }

    #[test]
    fn basic_enclosures() {
        assert_eq!(iv("x * x", &[("x", -1.0, 2.0)]), Some(Iv::new(-2.0, 4.0)));
        assert_eq!(iv("pow(x, 2)", &[("x", -1.0, 2.0)]), Some(Iv::new(0.0, 4.0)));
        assert_eq!(iv("abs(x) + 1", &[("x", -3.0, 2.0)]), Some(Iv::new(1.0, 4.0)));
        assert_eq!(iv("1 / x", &[("x", -1.0, 2.0)]), None);
        assert_eq!(iv("log(x)", &[("x", 0.0, 2.0)]), None);
        assert_eq!(iv("theta + 1", &[("theta", 3.0, 3.0)]), Some(Iv::point(4.0)));
    }
}
