//! Deterministic quadrature oracles: KL objective, normalizing constant and
//! the measure–density cross-check.
//!
//! Integration runs over a rectangular box built from each sampled name's
//! distribution (normals truncated at ±8σ). Axes are split at constants that
//! `if` conditions compare a sampled variable against, so each piece is
//! smooth. Each piece uses the composite midpoint rule on 2^k cells per axis,
//! with Richardson extrapolation across levels.

use std::collections::BTreeMap;

use rayon::prelude::*;
use thiserror::Error;

use super::interval::{eval_iv, Iv};
use crate::density::{log_density_of, param_store, sample_trace, Fuel, RandomDatabase, Store};
use crate::lang::{BoolExpr, Command, DistKind, Program, RealExpr, Registry};
use crate::rng::CounterRng;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadError {
    #[error("integral diverges: {0}")]
    Divergent(String),
    #[error("cannot build an integration box: {0}")]
    Unsupported(String),
    #[error("no finite integration range for `{0}`; supply an override")]
    UnboundedAxis(String),
    #[error("{0} continuous dimensions exceed the limit of 3")]
    TooManyDimensions(usize),
}

/// One integration axis, keyed by a random-database name.
#[derive(Clone, Debug, PartialEq)]
pub enum Axis {
    Continuous { name: String, segments: Vec<(f64, f64)> },
    Discrete { name: String, points: Vec<f64> },
}

impl Axis {
    pub fn name(&self) -> &str {
        match self {
            Axis::Continuous { name, .. } | Axis::Discrete { name, .. } => name,
        }
    }
}

/// Tuning knobs; the default needs no configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadSpec {
    /// Replaces the discovered range of a name.
    pub overrides: BTreeMap<String, (f64, f64)>,
    /// Extra split points per name, on top of the discovered ones.
    pub breakpoints: BTreeMap<String, Vec<f64>>,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Finest refinement level; defaults to 16, 10 or 6 for 1, 2 or 3 axes.
    pub max_level: Option<u32>,
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec {
            overrides: BTreeMap::new(),
            breakpoints: BTreeMap::new(),
            rel_tol: 1e-6,
            abs_tol: 1e-9,
            max_level: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub level: u32,
    pub converged: bool,
    /// Last change of the extrapolated estimate.
    pub delta: f64,
}

#[derive(Clone, Debug)]
enum AxisBox {
    Range(Iv),
    Points(Vec<f64>),
}

impl AxisBox {
    fn hull(self, o: AxisBox) -> AxisBox {
        match (self, o) {
            (AxisBox::Range(a), AxisBox::Range(b)) => AxisBox::Range(a.hull(b)),
            (AxisBox::Points(mut a), AxisBox::Points(b)) => {
                a.extend(b);
                a.sort_by(f64::total_cmp);
                a.dedup();
                AxisBox::Points(a)
            }
            (AxisBox::Range(a), AxisBox::Points(p)) | (AxisBox::Points(p), AxisBox::Range(a)) => {
                AxisBox::Range(p.iter().fold(a, |acc, &x| acc.hull(Iv::point(x))))
            }
        }
    }

    fn iv(&self) -> Iv {
        match self {
            AxisBox::Range(i) => *i,
            AxisBox::Points(p) => Iv::new(p[0], p[p.len() - 1]),
        }
    }
}

struct BoxWalker<'a> {
    reg: &'a Registry,
    spec: &'a QuadSpec,
    order: Vec<String>,
    boxes: BTreeMap<String, AxisBox>,
}

type Env = BTreeMap<String, Iv>;

fn unknown() -> Iv {
    Iv::new(f64::NEG_INFINITY, f64::INFINITY)
}

fn join_env(a: Env, b: &Env) -> Env {
    let keys: std::collections::BTreeSet<&String> = a.keys().chain(b.keys()).collect();
    keys.into_iter()
        .map(|k| {
            let x = a.get(k).copied().unwrap_or(Iv::point(0.0));
            let y = b.get(k).copied().unwrap_or(Iv::point(0.0));
            (k.clone(), x.hull(y))
        })
        .collect()
}

impl BoxWalker<'_> {
    fn iv(&self, e: &RealExpr, env: &Env, what: &str) -> Result<Iv, QuadError> {
        eval_iv(e, env, self.reg).ok_or_else(|| QuadError::UnboundedAxis(what.to_string()))
    }

    fn walk(&mut self, c: &Command, env: &mut Env) -> Result<(), QuadError> {
        match c {
            Command::Skip | Command::Score(..) => Ok(()),
            Command::Assign(x, e) => {
                let v = eval_iv(e, env, self.reg).unwrap_or_else(unknown);
                env.insert(x.clone(), v);
                Ok(())
            }
            Command::Seq(a, b) => {
                self.walk(a, env)?;
                self.walk(b, env)
            }
            Command::If(_, t, e) => {
                let mut env2 = env.clone();
                self.walk(t, env)?;
                self.walk(e, &mut env2)?;
                *env = join_env(std::mem::take(env), &env2);
                Ok(())
            }
            Command::While(..) | Command::For(..) => {
                Err(QuadError::Unsupported("loops are not supported by the quadrature oracle".into()))
            }
            Command::Sample(x, n, d) => {
                if !n.is_literal() {
                    return Err(QuadError::Unsupported(format!("indexed name `{}`", n.base)));
                }
                let name = &n.base;
                let b = match self.spec.overrides.get(name) {
                    Some(&(lo, hi)) => AxisBox::Range(Iv::new(lo, hi)),
                    None => self.dist_box(name, d.kind, &d.args, env)?,
                };
                env.insert(x.clone(), b.iv());
                let merged = match self.boxes.remove(name) {
                    Some(old) => old.hull(b),
                    None => {
                        self.order.push(name.clone());
                        b
                    }
                };
                self.boxes.insert(name.clone(), merged);
                Ok(())
            }
        }
    }

    fn dist_box(&self, name: &str, kind: DistKind, args: &[RealExpr], env: &Env) -> Result<AxisBox, QuadError> {
        let a = |k: usize| self.iv(&args[k], env, name);
        Ok(match kind {
            DistKind::Normal => {
                let (mu, sd) = (a(0)?, a(1)?);
                if sd.hi <= 0.0 {
                    return Err(QuadError::UnboundedAxis(name.into()));
                }
                AxisBox::Range(Iv::new(mu.lo - 8.0 * sd.hi, mu.hi + 8.0 * sd.hi))
            }
            DistKind::Uniform => AxisBox::Range(Iv::new(a(0)?.lo, a(1)?.hi)),
            DistKind::Exponential => {
                let l = a(0)?;
                if l.lo <= 0.0 {
                    return Err(QuadError::UnboundedAxis(name.into()));
                }
                AxisBox::Range(Iv::new(0.0, 36.0 / l.lo))
            }
            DistKind::Delta => {
                let c = a(0)?;
                if !c.is_point() {
                    return Err(QuadError::Unsupported(format!("Delta at `{name}` has a non-constant location")));
                }
                AxisBox::Points(vec![c.lo])
            }
            DistKind::Bernoulli => AxisBox::Points(vec![0.0, 1.0]),
        })
    }
}

/// Split points from conditions of the form `v < c` or `c < v` where `v` holds
/// a sampled value.
fn collect_breakpoints(c: &Command, held: &mut BTreeMap<String, String>, out: &mut BTreeMap<String, Vec<f64>>) {
    fn cond(b: &BoolExpr, held: &BTreeMap<String, String>, out: &mut BTreeMap<String, Vec<f64>>) {
        match b {
            BoolExpr::True => {}
            BoolExpr::Less(l, r) => {
                let hit = match (l, r) {
                    (RealExpr::Var(x), RealExpr::Const(k)) | (RealExpr::Const(k), RealExpr::Var(x)) => Some((x, *k)),
                    _ => None,
                };
                if let Some((x, k)) = hit {
                    if let Some(name) = held.get(x) {
                        out.entry(name.clone()).or_default().push(k);
                    }
                }
            }
            BoolExpr::And(a, b) => {
                cond(a, held, out);
                cond(b, held, out);
            }
            BoolExpr::Not(a) => cond(a, held, out),
        }
    }
    match c {
        Command::Assign(x, _) => {
            held.remove(x);
        }
        Command::Sample(x, n, _) => {
            if n.is_literal() {
                held.insert(x.clone(), n.base.clone());
            } else {
                held.remove(x);
            }
        }
        Command::Seq(a, b) => {
            collect_breakpoints(a, held, out);
            collect_breakpoints(b, held, out);
        }
        Command::If(b, t, e) => {
            cond(b, held, out);
            let mut h2 = held.clone();
            collect_breakpoints(t, held, out);
            collect_breakpoints(e, &mut h2, out);
            held.retain(|k, v| h2.get(k) == Some(v));
        }
        Command::While(b, body) => {
            held.clear();
            cond(b, held, out);
            collect_breakpoints(body, held, out);
            held.clear();
        }
        Command::For(_, _, _, body) => {
            held.clear();
            collect_breakpoints(body, held, out);
            held.clear();
        }
        Command::Skip | Command::Score(..) => {}
    }
}

/// Integration axes for the names sampled by `c` when run from `store`.
/// Split points come from `c` and from every command in `also`.
pub fn discover_axes(c: &Command, store: &Store, also: &[&Command], spec: &QuadSpec) -> Result<Vec<Axis>, QuadError> {
    let mut w = BoxWalker {
        reg: Registry::standard(),
        spec,
        order: Vec::new(),
        boxes: BTreeMap::new(),
    };
    let mut env: Env = store.iter().map(|(k, v)| (k.clone(), Iv::point(*v))).collect();
    w.walk(c, &mut env)?;
    let mut cuts = spec.breakpoints.clone();
    for cmd in std::iter::once(c).chain(also.iter().copied()) {
        collect_breakpoints(cmd, &mut BTreeMap::new(), &mut cuts);
    }
    let mut axes = Vec::new();
    for name in w.order {
        axes.push(match &w.boxes[&name] {
            AxisBox::Points(p) => Axis::Discrete { name, points: p.clone() },
            AxisBox::Range(iv) => {
                if !(iv.lo.is_finite() && iv.hi.is_finite()) || iv.lo >= iv.hi {
                    return Err(QuadError::UnboundedAxis(name));
                }
                let mut pts = vec![iv.lo, iv.hi];
                pts.extend(cuts.get(&name).into_iter().flatten().filter(|&&k| iv.lo < k && k < iv.hi));
                pts.sort_by(f64::total_cmp);
                pts.dedup();
                let segments = pts.windows(2).map(|w| (w[0], w[1])).collect();
                Axis::Continuous { name, segments }
            }
        });
    }
    Ok(axes)
}

fn axis_nodes(a: &Axis, k: u32) -> Vec<(f64, f64)> {
    match a {
        Axis::Discrete { points, .. } => points.iter().map(|&p| (p, 1.0)).collect(),
        Axis::Continuous { segments, .. } => {
            let n = 1usize << k;
            segments
                .iter()
                .flat_map(|&(lo, hi)| {
                    let h = (hi - lo) / n as f64;
                    (0..n).map(move |i| (lo + (i as f64 + 0.5) * h, h))
                })
                .collect()
        }
    }
}

fn level_sum<F>(axes: &[Axis], k: u32, f: &F) -> Result<f64, QuadError>
where
    F: Fn(&RandomDatabase) -> Result<f64, QuadError> + Sync,
{
    let nodes: Vec<Vec<(f64, f64)>> = axes.iter().map(|a| axis_nodes(a, k)).collect();
    let total: usize = nodes.iter().map(Vec::len).product();
    let names: Vec<&str> = axes.iter().map(Axis::name).collect();
    let first = nodes.first().map_or(1, Vec::len);
    let per_first = total / first.max(1);
    // Partial sums per first-axis node keep the summation order independent of scheduling.
    let partial: Vec<Result<f64, QuadError>> = (0..first)
        .into_par_iter()
        .map(|i0| {
            let mut acc = 0.0;
            let mut r = RandomDatabase::new();
            for rest in 0..per_first {
                let mut idx = i0 * per_first + rest;
                let mut w = 1.0;
                for a in (0..nodes.len()).rev() {
                    let n = nodes[a].len();
                    let (x, wa) = nodes[a][idx % n];
                    idx /= n;
                    w *= wa;
                    r.insert(names[a].to_string(), x);
                }
                let v = f(&r)?;
                if v != 0.0 {
                    acc += w * v;
                }
            }
            Ok(acc)
        })
        .collect();
    let mut s = 0.0;
    for p in partial {
        s += p?;
    }
    Ok(s)
}

/// Integrates `f` over the product of `axes` (counting measure on discrete
/// axes), refining until the extrapolated value settles.
pub fn integrate<F>(axes: &[Axis], spec: &QuadSpec, f: F) -> Result<QuadResult, QuadError>
where
    F: Fn(&RandomDatabase) -> Result<f64, QuadError> + Sync,
{
    let dims = axes.iter().filter(|a| matches!(a, Axis::Continuous { .. })).count();
    if dims > 3 {
        return Err(QuadError::TooManyDimensions(dims));
    }
    if dims == 0 {
        let value = level_sum(axes, 0, &f)?;
        return Ok(QuadResult { value, level: 0, converged: true, delta: 0.0 });
    }
    let max_k = spec.max_level.unwrap_or([16, 10, 6][dims - 1]);
    let (mut prev_m, mut prev_r) = (f64::NAN, f64::NAN);
    let mut growth = 0;
    let mut delta = f64::INFINITY;
    for k in 0..=max_k {
        let m = level_sum(axes, k, &f)?;
        if !m.is_finite() {
            return Err(QuadError::Divergent(format!("non-finite sum at level {k}")));
        }
        if k >= 4 {
            growth = if m - prev_m > 0.1 * prev_m.abs() { growth + 1 } else { 0 };
            if growth >= 3 {
                return Err(QuadError::Divergent(format!(
                    "estimate grew by more than 10% on three consecutive refinements (level {k}: {m})"
                )));
            }
        }
        if k >= 1 {
            let r = (4.0 * m - prev_m) / 3.0;
            if k >= 2 {
                delta = (r - prev_r).abs();
                if delta <= spec.rel_tol * r.abs() + spec.abs_tol {
                    return Ok(QuadResult { value: r, level: k, converged: true, delta });
                }
            }
            prev_r = r;
        }
        prev_m = m;
    }
    Ok(QuadResult { value: prev_r, level: max_k, converged: false, delta })
}

/// `E_q[log q − log p̃]` for guide density `q` at `theta` and unnormalized
/// model density `p̃`; equals `KL(q ‖ p̃/Z) − log Z`.
pub fn kl_quadrature(model: &Program, guide: &Program, theta: &[f64], spec: &QuadSpec, fuel: Fuel) -> Result<QuadResult, QuadError> {
    let gs = param_store(&guide.params, theta);
    let si = Store::new();
    let axes = discover_axes(&guide.body, &gs, &[&model.body], spec)?;
    integrate(&axes, spec, |r| {
        let lq = log_density_of(&guide.body, &gs, r, fuel);
        if lq == f64::NEG_INFINITY {
            return Ok(0.0);
        }
        let lp = log_density_of(&model.body, &si, r, fuel);
        if lp == f64::NEG_INFINITY {
            return Err(QuadError::Divergent(format!("model density is zero where the guide's is positive, at {r:?}")));
        }
        Ok(lq.exp() * (lq - lp))
    })
}

/// Central differences of [`kl_quadrature`] with step `h`.
pub fn kl_grad_numeric(model: &Program, guide: &Program, theta: &[f64], h: f64, spec: &QuadSpec, fuel: Fuel) -> Result<Vec<f64>, QuadError> {
    (0..theta.len())
        .map(|j| {
            let mut tp = theta.to_vec();
            let mut tm = theta.to_vec();
            tp[j] += h;
            tm[j] -= h;
            let fp = kl_quadrature(model, guide, &tp, spec, fuel)?.value;
            let fm = kl_quadrature(model, guide, &tm, spec, fuel)?.value;
            Ok((fp - fm) / (2.0 * h))
        })
        .collect()
}

/// `(θ, objective)` rows for a one-parameter guide over `grid`.
pub fn kl_sweep(model: &Program, guide: &Program, grid: &[f64], spec: &QuadSpec, fuel: Fuel) -> Vec<(f64, Result<f64, QuadError>)> {
    grid.iter()
        .map(|&t| (t, kl_quadrature(model, guide, &[t], spec, fuel).map(|q| q.value)))
        .collect()
}

/// `Z = ∫ density(model, s_I)(r) dr`.
pub fn normalizing_constant(model: &Program, spec: &QuadSpec, fuel: Fuel) -> Result<QuadResult, QuadError> {
    let si = Store::new();
    let axes = discover_axes(&model.body, &si, &[], spec)?;
    integrate(&axes, spec, |r| Ok(log_density_of(&model.body, &si, r, fuel).exp()))
}

/// Monte-Carlo mass versus quadrature of the density over a region.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasureDensityReport {
    pub mc_estimate: f64,
    pub mc_std_error: f64,
    pub quadrature: f64,
}

impl MeasureDensityReport {
    /// Distance between the two estimates in Monte-Carlo standard errors.
    pub fn z_score(&self) -> f64 {
        let d = (self.mc_estimate - self.quadrature).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.mc_std_error
        }
    }
}

/// Compares `E[w·1[r ∈ A]]` over forward-sampled traces with the quadrature
/// of `1[r ∈ A]·density(model)`.
pub fn measure_density_check<A>(
    model: &Program,
    region: A,
    mc_samples: usize,
    seed: u64,
    spec: &QuadSpec,
    fuel: Fuel,
) -> Result<MeasureDensityReport, QuadError>
where
    A: Fn(&RandomDatabase) -> bool + Sync,
{
    let si = Store::new();
    let root = CounterRng::new(seed);
    let vals: Vec<f64> = (0..mc_samples as u64)
        .into_par_iter()
        .map(|i| match sample_trace(&model.body, &si, &mut root.substream(i), fuel) {
            Ok(t) if region(&t.rdb) => t.weight(),
            _ => 0.0,
        })
        .collect();
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    let axes = discover_axes(&model.body, &si, &[], spec)?;
    let quad = integrate(&axes, spec, |r| {
        Ok(if region(r) { log_density_of(&model.body, &si, r, fuel).exp() } else { 0.0 })
    })?;
    Ok(MeasureDensityReport {
        mc_estimate: mean,
        mc_std_error: (var / n).sqrt(),
        quadrature: quad.value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{parse_command, parse_program};

    #[test]
    fn axes_with_breakpoint() {
        let m = parse_command("v := sample(\"v\", Normal(0, 5)); if (0 < v) { score(Normal(1, 1), 0) } else { score(Normal(-2, 1), 0) }").unwrap();
        let axes = discover_axes(&m, &Store::new(), &[], &QuadSpec::default()).unwrap();
        assert_eq!(axes, vec![Axis::Continuous { name: "v".into(), segments: vec![(-40.0, 0.0), (0.0, 40.0)] }]);
    }

    #[test]
    fn standard_normal_mass() {
        let m = parse_program("model { x := sample_N(\"a\", 0.0, 1.0) }").unwrap();
        let z = normalizing_constant(&m, &QuadSpec::default(), Fuel::default()).unwrap();
        assert!(z.converged && (z.value - 1.0).abs() < 1e-6, "{z:?}");
    }

    #[test]
    fn discrete_axis() {
        let m = parse_program("model { b := sample(\"b\", Bernoulli(0.3)); score(Normal(b, 1), 1) }").unwrap();
        let z = normalizing_constant(&m, &QuadSpec::default(), Fuel::default()).unwrap();
        let n = |v: f64| (-0.5 * v * v).exp() / (2.0 * std::f64::consts::PI).sqrt();
        assert!((z.value - (0.3 * n(0.0) + 0.7 * n(1.0))).abs() < 1e-12);
    }

    #[test]
    fn loops_are_rejected() {
        let m = parse_program("model { for i in 0..2 { x := sample_N(\"a_{i}\", 0, 1) } }").unwrap();
        assert!(matches!(normalizing_constant(&m, &QuadSpec::default(), Fuel::default()), Err(QuadError::Unsupported(_))));
    }
}
