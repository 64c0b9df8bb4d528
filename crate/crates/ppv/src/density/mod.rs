//! Executable density semantics.
//!
//! `exec_density` runs a command against a random database, consuming one
//! entry per sample statement, and returns the output store, the leftover
//! database, the score weight and the sampling density. `sample_trace` runs
//! the same interpreter but draws each sampled value from a seeded stream.
//! Weights and densities are accumulated as logarithms.

mod value;

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution as _, Exp, StandardNormal};
use thiserror::Error;

use crate::lang::{BoolExpr, Command, DistKind, EvalError, NameExpr, PrimOp, RealExpr, Registry};
use crate::rng::CounterRng;

pub use value::Value;

pub type Store = BTreeMap<String, f64>;
pub type RandomDatabase = BTreeMap<String, f64>;

/// Loop-iteration and sequencing budget.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Fuel(pub u64);

impl Default for Fuel {
    fn default() -> Self {
        Fuel(1_000_000)
    }
}

impl Fuel {
    /// Default fuel, overridden by the `PPV_FUEL` environment variable.
    pub fn from_env() -> Self {
        std::env::var("PPV_FUEL")
            .ok()
            .and_then(|s| s.trim().parse().ok())
            .map(Fuel)
            .unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TraceError {
    #[error("name `{0}` sampled twice")]
    NameReused(String),
    #[error("invalid parameters for {kind:?} at `{name}`: {args:?}")]
    InvalidParameter {
        name: String,
        kind: DistKind,
        args: Vec<f64>,
    },
    #[error("invalid parameters for {kind:?} in score: {args:?}")]
    InvalidScore { kind: DistKind, args: Vec<f64> },
    #[error("evaluation error: {0}")]
    Eval(#[from] EvalError),
    #[error("fuel exhausted")]
    FuelExhausted,
}

/// Successful outcome of the density semantics.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOk<V> {
    pub store: BTreeMap<String, V>,
    pub leftover: RandomDatabase,
    pub log_weight: V,
    pub log_density: V,
}

impl<V: Value> DensityOk<V> {
    /// Score weight `w`; underflow clamps to 0.
    pub fn weight(&self) -> f64 {
        self.log_weight.val().exp()
    }

    /// Sampling density `p`; underflow clamps to 0.
    pub fn density(&self) -> f64 {
        self.log_density.val().exp()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum DensityOutcome<V = f64> {
    Bot,
    Ok(DensityOk<V>),
}

impl<V> DensityOutcome<V> {
    pub fn ok(self) -> Option<DensityOk<V>> {
        match self {
            DensityOutcome::Ok(o) => Some(o),
            DensityOutcome::Bot => None,
        }
    }

    pub fn is_bot(&self) -> bool {
        matches!(self, DensityOutcome::Bot)
    }
}

/// Why execution stopped early.
#[derive(Debug)]
enum Halt {
    Bot,
    Fault(TraceError),
}

impl From<EvalError> for Halt {
    fn from(e: EvalError) -> Self {
        Halt::Fault(TraceError::Eval(e))
    }
}

type Run<T> = Result<T, Halt>;

/// Supplies the value of each sample statement.
trait Source {
    fn take(&mut self, name: &str, kind: DistKind, args: &[f64]) -> Run<f64>;
}

struct DbSource {
    db: RandomDatabase,
}

impl Source for DbSource {
    fn take(&mut self, name: &str, _kind: DistKind, _args: &[f64]) -> Run<f64> {
        self.db.remove(name).ok_or(Halt::Bot)
    }
}

struct RngSource<'a> {
    rng: &'a mut CounterRng,
    drawn: RandomDatabase,
}

impl Source for RngSource<'_> {
    fn take(&mut self, name: &str, kind: DistKind, a: &[f64]) -> Run<f64> {
        if self.drawn.contains_key(name) {
            return Err(Halt::Fault(TraceError::NameReused(name.to_string())));
        }
        if !params_valid(kind, a) {
            return Err(Halt::Fault(TraceError::InvalidParameter {
                name: name.to_string(),
                kind,
                args: a.to_vec(),
            }));
        }
        let v = match kind {
            DistKind::Normal => {
                let z: f64 = self.rng.sample(StandardNormal);
                a[0] + a[1] * z
            }
            DistKind::Uniform => a[0] + (a[1] - a[0]) * self.rng.random::<f64>(),
            DistKind::Exponential => Exp::new(a[0]).expect("rate checked positive").sample(self.rng),
            DistKind::Delta => a[0],
            DistKind::Bernoulli => {
                if self.rng.random::<f64>() < a[0] {
                    1.0
                } else {
                    0.0
                }
            }
        };
        self.drawn.insert(name.to_string(), v);
        Ok(v)
    }
}

/// Parameter validity per distribution family; invalid parameters are ⊥.
pub fn params_valid(kind: DistKind, a: &[f64]) -> bool {
    if a.iter().any(|x| !x.is_finite()) {
        return false;
    }
    match kind {
        DistKind::Normal => a[1] > 0.0,
        DistKind::Uniform => a[0] < a[1],
        DistKind::Exponential => a[0] > 0.0,
        DistKind::Delta => true,
        DistKind::Bernoulli => a[0] > 0.0 && a[0] < 1.0,
    }
}

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Log density of `v` under the distribution; `None` for invalid parameters.
pub fn log_pdf<V: Value>(kind: DistKind, args: &[V], v: f64) -> Option<V> {
    let raw: Vec<f64> = args.iter().map(Value::val).collect();
    if !params_valid(kind, &raw) {
        return None;
    }
    let neg_inf = V::cst(f64::NEG_INFINITY);
    Some(match kind {
        DistKind::Normal => {
            let z = V::cst(v).sub(&args[0]).div(&args[1]);
            V::cst(-HALF_LN_2PI)
                .sub(&args[1].ln())
                .sub(&z.mul(&z).mul(&V::cst(0.5)))
        }
        DistKind::Uniform => {
            if raw[0] <= v && v <= raw[1] {
                V::cst(0.0).sub(&args[1].sub(&args[0]).ln())
            } else {
                neg_inf
            }
        }
        DistKind::Exponential => {
            if v >= 0.0 {
                args[0].ln().sub(&args[0].mul(&V::cst(v)))
            } else {
                neg_inf
            }
        }
        DistKind::Delta => {
            if v == raw[0] {
                V::cst(0.0)
            } else {
                neg_inf
            }
        }
        DistKind::Bernoulli => {
            if v == 1.0 {
                args[0].ln()
            } else if v == 0.0 {
                V::cst(1.0).sub(&args[0]).ln()
            } else {
                neg_inf
            }
        }
    })
}

pub fn pdf(kind: DistKind, args: &[f64], v: f64) -> Option<f64> {
    log_pdf(kind, args, v).map(f64::exp)
}

struct Interp<'a, V, S> {
    reg: &'a Registry,
    fuel: u64,
    source: S,
    store: BTreeMap<String, V>,
    log_w: V,
    log_p: V,
}

fn lookup<V: Value>(store: &BTreeMap<String, V>, x: &str) -> V {
    store.get(x).cloned().unwrap_or_else(|| V::cst(0.0))
}

pub fn eval_real_in<V: Value>(e: &RealExpr, s: &BTreeMap<String, V>, reg: &Registry) -> Result<V, EvalError> {
    match e {
        RealExpr::Const(c) => Ok(V::cst(*c)),
        RealExpr::Var(x) => Ok(lookup(s, x)),
        RealExpr::Prim(op, args) => {
            let vals = args
                .iter()
                .map(|a| eval_real_in(a, s, reg))
                .collect::<Result<Vec<V>, _>>()?;
            V::prim(reg, *op, &vals)
        }
    }
}

pub fn eval_bool_in<V: Value>(b: &BoolExpr, s: &BTreeMap<String, V>, reg: &Registry) -> Result<bool, EvalError> {
    Ok(match b {
        BoolExpr::True => true,
        BoolExpr::Less(x, y) => eval_real_in(x, s, reg)?.val() < eval_real_in(y, s, reg)?.val(),
        BoolExpr::And(x, y) => eval_bool_in(x, s, reg)? && eval_bool_in(y, s, reg)?,
        BoolExpr::Not(x) => !eval_bool_in(x, s, reg)?,
    })
}

/// Rounds `v` to an integer if it is within 1e-9 of one.
pub fn as_integer(v: f64) -> Option<i64> {
    let r = v.round();
    ((v - r).abs() <= 1e-9 && r.abs() < 9.0e15).then_some(r as i64)
}

pub fn eval_name_in<V: Value>(n: &NameExpr, s: &BTreeMap<String, V>, reg: &Registry) -> Result<String, EvalError> {
    let mut out = n.base.clone();
    for e in &n.indices {
        let v = eval_real_in(e, s, reg)?.val();
        let k = as_integer(v).ok_or(EvalError::NonIntegerIndex(v))?;
        if k < 0 {
            return Err(EvalError::NegativeIndex(v));
        }
        out.push('_');
        out.push_str(&k.to_string());
    }
    Ok(out)
}

pub fn eval_real(e: &RealExpr, s: &Store) -> Result<f64, EvalError> {
    eval_real_in(e, s, Registry::standard())
}

pub fn eval_bool(b: &BoolExpr, s: &Store) -> Result<bool, EvalError> {
    eval_bool_in(b, s, Registry::standard())
}

pub fn eval_name(n: &NameExpr, s: &Store) -> Result<String, EvalError> {
    eval_name_in(n, s, Registry::standard())
}

impl<V: Value, S: Source> Interp<'_, V, S> {
    fn tick(&mut self) -> Run<()> {
        if self.fuel == 0 {
            return Err(Halt::Fault(TraceError::FuelExhausted));
        }
        self.fuel -= 1;
        Ok(())
    }

    fn args(&self, es: &[RealExpr]) -> Run<Vec<V>> {
        Ok(es
            .iter()
            .map(|e| eval_real_in(e, &self.store, self.reg))
            .collect::<Result<_, _>>()?)
    }

    fn int_bound(&self, e: &RealExpr) -> Run<i64> {
        let v = eval_real_in(e, &self.store, self.reg)?.val();
        Ok(as_integer(v).ok_or(EvalError::NonIntegerBound(v))?)
    }

    fn exec(&mut self, c: &Command) -> Run<()> {
        match c {
            Command::Skip => Ok(()),
            Command::Assign(x, e) => {
                let v = eval_real_in(e, &self.store, self.reg)?;
                self.store.insert(x.clone(), v);
                Ok(())
            }
            Command::Seq(a, b) => {
                self.tick()?;
                self.exec(a)?;
                self.exec(b)
            }
            Command::If(b, t, e) => {
                if eval_bool_in(b, &self.store, self.reg)? {
                    self.exec(t)
                } else {
                    self.exec(e)
                }
            }
            Command::While(b, body) => {
                while eval_bool_in(b, &self.store, self.reg)? {
                    self.tick()?;
                    self.exec(body)?;
                }
                Ok(())
            }
            Command::For(v, lo, hi, body) => {
                let (lo, hi) = (self.int_bound(lo)?, self.int_bound(hi)?);
                for k in lo..hi {
                    self.tick()?;
                    self.store.insert(v.clone(), V::cst(k as f64));
                    self.exec(body)?;
                }
                Ok(())
            }
            Command::Sample(x, n, d) => {
                let name = eval_name_in(n, &self.store, self.reg)?;
                let args = self.args(&d.args)?;
                let raw: Vec<f64> = args.iter().map(Value::val).collect();
                let v = self.source.take(&name, d.kind, &raw)?;
                let lp = log_pdf(d.kind, &args, v).ok_or(Halt::Bot)?;
                self.log_p = self.log_p.add(&lp);
                self.store.insert(x.clone(), V::cst(v));
                Ok(())
            }
            Command::Score(d, obs) => {
                let o = eval_real_in(obs, &self.store, self.reg)?.val();
                let args = self.args(&d.args)?;
                let lp = log_pdf(d.kind, &args, o).ok_or_else(|| {
                    Halt::Fault(TraceError::InvalidScore {
                        kind: d.kind,
                        args: args.iter().map(Value::val).collect(),
                    })
                })?;
                self.log_w = self.log_w.add(&lp);
                Ok(())
            }
        }
    }
}

/// Runs the density semantics with values of type `V`.
pub fn exec_density_with<V: Value>(
    c: &Command,
    s: BTreeMap<String, V>,
    r: &RandomDatabase,
    fuel: Fuel,
    reg: &Registry,
) -> DensityOutcome<V> {
    let mut it = Interp {
        reg,
        fuel: fuel.0,
        source: DbSource { db: r.clone() },
        store: s,
        log_w: V::cst(0.0),
        log_p: V::cst(0.0),
    };
    match it.exec(c) {
        Ok(()) => DensityOutcome::Ok(DensityOk {
            store: it.store,
            leftover: it.source.db,
            log_weight: it.log_w,
            log_density: it.log_p,
        }),
        Err(_) => DensityOutcome::Bot,
    }
}

pub fn exec_density(c: &Command, s: &Store, r: &RandomDatabase, fuel: Fuel) -> DensityOutcome {
    exec_density_with(c, s.clone(), r, fuel, Registry::standard())
}

/// `log(w·p)` when execution succeeds with an empty leftover, else `-inf`.
pub fn log_density_of(c: &Command, s: &Store, r: &RandomDatabase, fuel: Fuel) -> f64 {
    match exec_density(c, s, r, fuel) {
        DensityOutcome::Ok(o) if o.leftover.is_empty() => {
            let v = o.log_weight + o.log_density;
            if v.is_nan() {
                f64::NEG_INFINITY
            } else {
                v
            }
        }
        _ => f64::NEG_INFINITY,
    }
}

/// `w·p` when execution succeeds with an empty leftover, else 0.
pub fn density_of(c: &Command, s: &Store, r: &RandomDatabase, fuel: Fuel) -> f64 {
    log_density_of(c, s, r, fuel).exp()
}

/// Output store when execution succeeds with an empty leftover.
pub fn get_of(c: &Command, s: &Store, r: &RandomDatabase, fuel: Fuel) -> Option<Store> {
    match exec_density(c, s, r, fuel) {
        DensityOutcome::Ok(o) if o.leftover.is_empty() => Some(o.store),
        _ => None,
    }
}

/// A forward-sampled execution.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct Trace {
    pub rdb: RandomDatabase,
    pub log_weight: f64,
    pub log_density: f64,
    pub store: Store,
}

impl Trace {
    pub fn weight(&self) -> f64 {
        self.log_weight.exp()
    }

    /// The sampled values as a JSON object.
    pub fn rdb_json(&self) -> String {
        serde_json::to_string(&self.rdb).expect("map of floats serializes")
    }
}

/// Runs `c` drawing every sampled value from `rng`.
pub fn sample_trace(c: &Command, s: &Store, rng: &mut CounterRng, fuel: Fuel) -> Result<Trace, TraceError> {
    sample_trace_with(c, s, rng, fuel, Registry::standard())
}

pub fn sample_trace_with(
    c: &Command,
    s: &Store,
    rng: &mut CounterRng,
    fuel: Fuel,
    reg: &Registry,
) -> Result<Trace, TraceError> {
    let mut it = Interp {
        reg,
        fuel: fuel.0,
        source: RngSource {
            rng,
            drawn: RandomDatabase::new(),
        },
        store: s.clone(),
        log_w: 0.0,
        log_p: 0.0,
    };
    match it.exec(c) {
        Ok(()) => Ok(Trace {
            rdb: it.source.drawn,
            log_weight: it.log_w,
            log_density: it.log_p,
            store: it.store,
        }),
        Err(Halt::Fault(e)) => Err(e),
        Err(Halt::Bot) => unreachable!("sampling never reads a missing name"),
    }
}

/// The initial store with parameter values bound.
pub fn param_store(params: &[String], theta: &[f64]) -> Store {
    params.iter().cloned().zip(theta.iter().copied()).collect()
}

/// True if `op` is a primitive that may fail on part of its domain.
pub fn is_partial(op: PrimOp) -> bool {
    matches!(op, PrimOp::Div | PrimOp::Log | PrimOp::Pow)
}
