//! Scalar values the interpreter computes with.

use crate::lang::{EvalError, PrimOp, Registry};

/// Arithmetic needed by expression evaluation and the density formulas.
/// Implemented by `f64` and by forward-mode dual numbers.
pub trait Value: Clone + std::fmt::Debug + PartialEq {
    fn cst(c: f64) -> Self;
    fn val(&self) -> f64;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn ln(&self) -> Self;
    fn prim(reg: &Registry, op: PrimOp, args: &[Self]) -> Result<Self, EvalError>;
}

impl Value for f64 {
    fn cst(c: f64) -> Self {
        c
    }
    fn val(&self) -> f64 {
        *self
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn ln(&self) -> Self {
        f64::ln(*self)
    }
    fn prim(reg: &Registry, op: PrimOp, args: &[Self]) -> Result<Self, EvalError> {
        reg.eval(op, args)
    }
}
