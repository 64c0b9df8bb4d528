//! Forward-mode dual numbers with a gradient vector.

use crate::density::Value;
use crate::lang::{EvalError, PrimOp, Registry};

/// A value together with its partial derivatives in each active parameter.
/// An empty derivative vector stands for the zero vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Dual {
    pub v: f64,
    pub d: Vec<f64>,
}

impl Dual {
    /// The `j`-th of `p` active parameters with value `v`.
    pub fn active(v: f64, j: usize, p: usize) -> Self {
        let mut d = vec![0.0; p];
        d[j] = 1.0;
        Dual { v, d }
    }

    /// Derivative vector padded to length `p`.
    pub fn grad(&self, p: usize) -> Vec<f64> {
        let mut g = self.d.clone();
        g.resize(p, 0.0);
        g
    }
}

/// `a*x + b*y` over sparse-by-length derivative vectors.
fn lin(a: f64, x: &[f64], b: f64, y: &[f64]) -> Vec<f64> {
    let n = x.len().max(y.len());
    (0..n)
        .map(|k| {
            let xk = x.get(k).map_or(0.0, |v| a * v);
            let yk = y.get(k).map_or(0.0, |v| b * v);
            xk + yk
        })
        .collect()
}

impl Value for Dual {
    fn cst(c: f64) -> Self {
        Dual { v: c, d: Vec::new() }
    }
    fn val(&self) -> f64 {
        self.v
    }
    fn add(&self, o: &Self) -> Self {
        Dual { v: self.v + o.v, d: lin(1.0, &self.d, 1.0, &o.d) }
    }
    fn sub(&self, o: &Self) -> Self {
        Dual { v: self.v - o.v, d: lin(1.0, &self.d, -1.0, &o.d) }
    }
    fn mul(&self, o: &Self) -> Self {
        Dual { v: self.v * o.v, d: lin(o.v, &self.d, self.v, &o.d) }
    }
    fn div(&self, o: &Self) -> Self {
        let q = self.v / o.v;
        Dual { v: q, d: lin(1.0 / o.v, &self.d, -q / o.v, &o.d) }
    }
    fn ln(&self) -> Self {
        Dual { v: self.v.ln(), d: lin(1.0 / self.v, &self.d, 0.0, &[]) }
    }
    fn prim(reg: &Registry, op: PrimOp, args: &[Self]) -> Result<Self, EvalError> {
        let vals: Vec<f64> = args.iter().map(|a| a.v).collect();
        let v = reg.eval(op, &vals)?;
        let mut d: Vec<f64> = Vec::new();
        if args.iter().any(|a| !a.d.is_empty()) {
            let parts = reg.partials(op, &vals);
            for (a, pk) in args.iter().zip(parts) {
                // Skipping constant arguments keeps a NaN partial from poisoning the result.
                if !a.d.is_empty() {
                    d = lin(1.0, &d, pk, &a.d);
                }
            }
        }
        Ok(Dual { v, d })
    }
}
