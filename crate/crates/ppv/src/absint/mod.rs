//! Generic transformer-style abstract interpretation.
//!
//! An abstract element describes a set of density-semantics transformers.
//! Instances supply the lattice operations and one transfer function per
//! atomic command; [`analyze`] composes them structurally, solving loops
//! with a widened fixpoint.

use std::fmt::Debug;

use thiserror::Error;

use crate::lang::{BoolExpr, Command, Distribution, NameExpr, RealExpr};

/// Capabilities an abstract domain provides to [`analyze`].
pub trait AbstractDomain {
    type Elem: Clone + PartialEq + Debug;

    fn bottom(&self) -> Self::Elem;
    /// Upper bound that stabilizes every increasing chain.
    fn widen(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    /// Abstract `if b { then } else { els }`.
    fn cond(&self, b: &BoolExpr, then: &Self::Elem, els: &Self::Elem) -> Self::Elem;
    /// Abstract sequencing: `later` runs after `earlier`.
    fn compose(&self, later: &Self::Elem, earlier: &Self::Elem) -> Self::Elem;
    fn skip(&self) -> Self::Elem;
    fn update(&self, x: &str, e: &RealExpr) -> Self::Elem;
    fn sample(&self, x: &str, name: &NameExpr, d: &Distribution) -> Self::Elem;
    fn score(&self, d: &Distribution, obs: &RealExpr) -> Self::Elem;
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FrameworkFault {
    #[error("widened fixpoint did not stabilize within {cap} iterations; last element: {last}")]
    NoFixpoint { cap: usize, last: String },
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisResult<E> {
    pub elem: E,
    /// Total number of transformer applications across all loops.
    pub iterations: usize,
    /// Longest widened sequence of any single loop solve.
    pub max_loop_iterations: usize,
}

pub const DEFAULT_CAP: usize = 1000;

struct Driver<'a, D> {
    dom: &'a D,
    cap: usize,
    iterations: usize,
    max_loop: usize,
}

impl<D: AbstractDomain> Driver<'_, D> {
    fn run(&mut self, c: &Command) -> Result<D::Elem, FrameworkFault> {
        let d = self.dom;
        Ok(match c {
            Command::Skip => d.skip(),
            Command::Assign(x, e) => d.update(x, e),
            Command::Seq(a, b) => {
                let ta = self.run(a)?;
                let tb = self.run(b)?;
                d.compose(&tb, &ta)
            }
            Command::If(b, t, e) => {
                let tt = self.run(t)?;
                let te = self.run(e)?;
                d.cond(b, &tt, &te)
            }
            Command::While(b, body) => {
                let tb = self.run(body)?;
                self.loop_fix(b, &tb)?
            }
            Command::For(v, lo, hi, body) => self.run(&desugar_for(v, lo, hi, body))?,
            Command::Sample(x, n, dist) => d.sample(x, n, dist),
            Command::Score(dist, obs) => d.score(dist, obs),
        })
    }

    fn loop_fix(&mut self, b: &BoolExpr, body: &D::Elem) -> Result<D::Elem, FrameworkFault> {
        let d = self.dom;
        let skip = d.skip();
        let (t, n) = wfix(d, |t| d.cond(b, &d.compose(t, body), &skip), self.cap)?;
        self.iterations += n;
        self.max_loop = self.max_loop.max(n);
        Ok(t)
    }
}

/// Variable holding the upper bound of a desugared `for` loop.
pub fn bound_var(v: &str) -> String {
    format!("{v}#hi")
}

/// `for v in lo..hi { c }` as `v#hi := hi; v := lo; while (v < v#hi) { c; v := v + 1 }`.
pub fn desugar_for(v: &str, lo: &RealExpr, hi: &RealExpr, body: &Command) -> Command {
    let h = bound_var(v);
    Command::seq_all(vec![
        Command::assign(&h, hi.clone()),
        Command::assign(v, lo.clone()),
        Command::while_(
            BoolExpr::less(RealExpr::var(v), RealExpr::var(&h)),
            Command::seq(body.clone(), Command::assign(v, RealExpr::add(RealExpr::var(v), RealExpr::Const(1.0)))),
        ),
    ])
}

/// First `t_m` with `t_m = widen(t_m, T(t_m))`, starting from bottom.
/// Returns the element and the number of `T` applications.
pub fn wfix<D, T>(d: &D, t: T, cap: usize) -> Result<(D::Elem, usize), FrameworkFault>
where
    D: AbstractDomain,
    T: Fn(&D::Elem) -> D::Elem,
{
    let mut cur = d.bottom();
    for n in 1..=cap {
        let next = d.widen(&cur, &t(&cur));
        if next == cur {
            return Ok((cur, n));
        }
        cur = next;
    }
    Err(FrameworkFault::NoFixpoint { cap, last: format!("{cur:?}") })
}

pub fn analyze<D: AbstractDomain>(c: &Command, d: &D) -> Result<AnalysisResult<D::Elem>, FrameworkFault> {
    analyze_with_cap(c, d, DEFAULT_CAP)
}

pub fn analyze_with_cap<D: AbstractDomain>(c: &Command, d: &D, cap: usize) -> Result<AnalysisResult<D::Elem>, FrameworkFault> {
    let mut drv = Driver { dom: d, cap, iterations: 0, max_loop: 0 };
    let elem = drv.run(c)?;
    Ok(AnalysisResult { elem, iterations: drv.iterations, max_loop_iterations: drv.max_loop })
}
