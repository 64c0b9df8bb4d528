//! Score-estimator stochastic variational inference.
//!
//! Each step draws `N` traces from the guide, weighs the guide's score
//! `∇θ log q_θ(r)` by the log ratio `log q_θ(r) − log p̃(r)` and moves θ
//! against the average. The random stream for trace `i` of step `k` is
//! `CounterRng::at(seed, [k, i])`, so results do not depend on the thread
//! count.

mod dual;
pub mod interval;
pub mod quadrature;

use std::fmt::Write as _;

use rayon::prelude::*;
use thiserror::Error;

use crate::density::{exec_density_with, log_density_of, param_store, sample_trace, DensityOutcome, Fuel, RandomDatabase, Store, TraceError};
use crate::lang::{Program, Registry};
use crate::rng::CounterRng;

pub use dual::Dual;
pub use quadrature::{
    discover_axes, integrate, kl_grad_numeric, kl_quadrature, kl_sweep, measure_density_check, normalizing_constant, Axis,
    MeasureDensityReport, QuadError, QuadResult, QuadSpec,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SviError {
    #[error("guide declares {expected} parameter(s) but {found} were given")]
    ParamCount { expected: usize, found: usize },
    #[error("guide density is zero at {rdb:?}")]
    OutsideSupport { rdb: RandomDatabase },
    #[error("model density is zero at guide sample {rdb:?}{}", step.map(|s| format!(" (step {s})")).unwrap_or_default())]
    SupportViolation { step: Option<usize>, rdb: RandomDatabase },
    #[error("guide sampling failed: {0}")]
    Trace(#[from] TraceError),
}

fn check_params(guide: &Program, theta: &[f64]) -> Result<(), SviError> {
    if guide.params.len() != theta.len() {
        return Err(SviError::ParamCount { expected: guide.params.len(), found: theta.len() });
    }
    Ok(())
}

/// `log q_θ(r)` and its gradient in θ by a forward-mode pass.
pub fn guide_logdensity_and_grad(guide: &Program, theta: &[f64], r: &RandomDatabase, fuel: Fuel) -> Result<(f64, Vec<f64>), SviError> {
    check_params(guide, theta)?;
    let p = theta.len();
    let store = guide
        .params
        .iter()
        .enumerate()
        .map(|(j, x)| (x.clone(), Dual::active(theta[j], j, p)))
        .collect();
    let outside = || SviError::OutsideSupport { rdb: r.clone() };
    match exec_density_with::<Dual>(&guide.body, store, r, fuel, Registry::standard()) {
        DensityOutcome::Ok(o) if o.leftover.is_empty() => {
            let lq = o.log_density;
            if lq.v == f64::NEG_INFINITY || lq.v.is_nan() {
                return Err(outside());
            }
            Ok((lq.v, lq.grad(p)))
        }
        _ => Err(outside()),
    }
}

/// Averaged gradient with the per-sample terms it was built from.
#[derive(Clone, Debug, PartialEq)]
pub struct GradEstimate {
    pub mean: Vec<f64>,
    pub terms: Vec<Vec<f64>>,
}

impl GradEstimate {
    pub fn from_terms(terms: Vec<Vec<f64>>, p: usize) -> Self {
        GradEstimate { mean: mean_of(&terms, p), terms }
    }

    /// Standard error of each mean component.
    pub fn std_error(&self) -> Vec<f64> {
        let n = self.terms.len() as f64;
        (0..self.mean.len())
            .map(|j| {
                let var = self.terms.iter().map(|t| (t[j] - self.mean[j]).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
                (var / n).sqrt()
            })
            .collect()
    }
}

/// Componentwise mean, summing in index order.
pub fn mean_of(terms: &[Vec<f64>], p: usize) -> Vec<f64> {
    let mut m = vec![0.0; p];
    for t in terms {
        for (a, b) in m.iter_mut().zip(t) {
            *a += b;
        }
    }
    let n = terms.len() as f64;
    m.iter_mut().for_each(|a| *a /= n);
    m
}

/// One score-estimator gradient from `n` guide traces. Trace `i` uses
/// `rng.substream(i)`.
pub fn estimate_gradient(
    model: &Program,
    guide: &Program,
    theta: &[f64],
    n: usize,
    rng: &CounterRng,
    fuel: Fuel,
) -> Result<GradEstimate, SviError> {
    check_params(guide, theta)?;
    let gs = param_store(&guide.params, theta);
    let si = Store::new();
    let terms: Vec<Result<Vec<f64>, SviError>> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let trace = sample_trace(&guide.body, &gs, &mut rng.substream(i), fuel)?;
            let (lq, g) = guide_logdensity_and_grad(guide, theta, &trace.rdb, fuel)?;
            let lp = log_density_of(&model.body, &si, &trace.rdb, fuel);
            if lp == f64::NEG_INFINITY {
                return Err(SviError::SupportViolation { step: None, rdb: trace.rdb });
            }
            let ratio = lq - lp;
            Ok(g.into_iter().map(|gj| gj * ratio).collect())
        })
        .collect();
    let terms = terms.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(GradEstimate::from_terms(terms, theta.len()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Optimizer {
    Sgd,
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl Optimizer {
    pub fn adam() -> Self {
        Optimizer::Adam { beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SviConfig {
    pub samples: usize,
    pub lr: f64,
    pub steps: usize,
    pub seed: u64,
    pub fuel: Fuel,
    pub optimizer: Optimizer,
}

impl Default for SviConfig {
    fn default() -> Self {
        SviConfig {
            samples: 32,
            lr: 0.01,
            steps: 2000,
            seed: 0,
            fuel: Fuel::default(),
            optimizer: Optimizer::Sgd,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRow {
    pub step: usize,
    pub theta: Vec<f64>,
    /// Gradient estimate taken at this θ; absent on the final row.
    pub grad: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub params: Vec<String>,
    pub rows: Vec<TrajectoryRow>,
}

impl Trajectory {
    pub fn final_theta(&self) -> &[f64] {
        &self.rows.last().expect("trajectory holds θ0").theta
    }

    /// `step,θ…,grad…` with empty gradient cells on the final row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step");
        for p in &self.params {
            write!(out, ",{p}").unwrap();
        }
        for p in &self.params {
            write!(out, ",grad_{p}").unwrap();
        }
        out.push('\n');
        for r in &self.rows {
            write!(out, "{}", r.step).unwrap();
            for t in &r.theta {
                write!(out, ",{t}").unwrap();
            }
            for j in 0..self.params.len() {
                match &r.grad {
                    Some(g) => write!(out, ",{}", g[j]).unwrap(),
                    None => out.push(','),
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Runs `cfg.steps` updates from `theta0`.
pub fn svi_run(model: &Program, guide: &Program, theta0: &[f64], cfg: &SviConfig) -> Result<Trajectory, SviError> {
    check_params(guide, theta0)?;
    let p = theta0.len();
    let mut theta = theta0.to_vec();
    let mut rows = Vec::with_capacity(cfg.steps + 1);
    let (mut m1, mut m2) = (vec![0.0; p], vec![0.0; p]);
    for step in 0..cfg.steps {
        let rng = CounterRng::at(cfg.seed, &[step as u64]);
        let est = estimate_gradient(model, guide, &theta, cfg.samples, &rng, cfg.fuel).map_err(|e| match e {
            SviError::SupportViolation { rdb, .. } => SviError::SupportViolation { step: Some(step), rdb },
            e => e,
        })?;
        let g = est.mean;
        rows.push(TrajectoryRow { step, theta: theta.clone(), grad: Some(g.clone()) });
        match cfg.optimizer {
            Optimizer::Sgd => {
                for (t, gj) in theta.iter_mut().zip(&g) {
                    *t -= cfg.lr * gj;
                }
            }
            Optimizer::Adam { beta1, beta2, eps } => {
                let k = (step + 1) as i32;
                for j in 0..p {
                    m1[j] = beta1 * m1[j] + (1.0 - beta1) * g[j];
                    m2[j] = beta2 * m2[j] + (1.0 - beta2) * g[j] * g[j];
                    let mh = m1[j] / (1.0 - beta1.powi(k));
                    let vh = m2[j] / (1.0 - beta2.powi(k));
                    theta[j] -= cfg.lr * mh / (vh.sqrt() + eps);
                }
            }
        }
    }
    rows.push(TrajectoryRow { step: cfg.steps, theta, grad: None });
    Ok(Trajectory { params: guide.params.clone(), rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_program;

    fn db(pairs: &[(&str, f64)]) -> RandomDatabase {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn normal_guide_gradient() {
        let g = parse_program("guide(theta) { v := sample(\"v\", Normal(theta, 1.0)) }").unwrap();
        let (lq, gr) = guide_logdensity_and_grad(&g, &[3.0], &db(&[("v", 3.0)]), Fuel::default()).unwrap();
        assert!((lq - -0.918_938_533_204_672_7).abs() < 1e-15);
        assert_eq!(gr, vec![0.0]);
        let (_, gr) = guide_logdensity_and_grad(&g, &[3.0], &db(&[("v", 4.0)]), Fuel::default()).unwrap();
        assert_eq!(gr, vec![1.0]);
    }

    #[test]
    fn uniform_guide_gradient_is_zero() {
        let g = parse_program("guide(theta) { v := sample(\"v\", Uniform(theta - 1.0, theta + 1.0)) }").unwrap();
        let (_, gr) = guide_logdensity_and_grad(&g, &[0.0], &db(&[("v", 0.5)]), Fuel::default()).unwrap();
        assert_eq!(gr, vec![0.0]);
        let e = guide_logdensity_and_grad(&g, &[0.0], &db(&[("v", 1.5)]), Fuel::default()).unwrap_err();
        assert!(matches!(e, SviError::OutsideSupport { .. }));
    }

    #[test]
    fn identical_model_and_guide_give_zero() {
        let m = parse_program("model { v := sample(\"v\", Normal(1.5, 2.0)) }").unwrap();
        let g = parse_program("guide(t) { v := sample(\"v\", Normal(1.5, 2.0)) }").unwrap();
        let est = estimate_gradient(&m, &g, &[0.3], 50, &CounterRng::new(4), Fuel::default()).unwrap();
        assert_eq!(est.mean, vec![0.0]);
    }

    #[test]
    fn support_violation_is_reported() {
        let m = parse_program("model { s := sample(\"s\", Uniform(0, 10)) }").unwrap();
        let g = parse_program("guide(loc) { s := sample(\"s\", Normal(loc, 0.05)) }").unwrap();
        let cfg = SviConfig { steps: 200, samples: 8, ..SviConfig::default() };
        let e = svi_run(&m, &g, &[0.0], &cfg).unwrap_err();
        assert!(matches!(e, SviError::SupportViolation { step: Some(0), .. }), "{e}");
    }

    #[test]
    fn zero_steps_and_csv() {
        let m = parse_program("model { v := sample(\"v\", Normal(0, 1)) }").unwrap();
        let g = parse_program("guide(t) { v := sample(\"v\", Normal(t, 1)) }").unwrap();
        let cfg = SviConfig { steps: 0, ..SviConfig::default() };
        let tr = svi_run(&m, &g, &[3.0], &cfg).unwrap();
        assert_eq!(tr.rows, vec![TrajectoryRow { step: 0, theta: vec![3.0], grad: None }]);
        assert_eq!(tr.to_csv(), "step,t,grad_t\n0,3,\n");
    }

    #[test]
    fn mean_rebuilds_from_terms() {
        let m = parse_program("model { v := sample(\"v\", Normal(0, 5)); score(Normal(v, 1), 3) }").unwrap();
        let g = parse_program("guide(t) { v := sample(\"v\", Normal(t, 1)) }").unwrap();
        let est = estimate_gradient(&m, &g, &[1.0], 100, &CounterRng::new(2), Fuel::default()).unwrap();
        assert_eq!(mean_of(&est.terms, 1), est.mean);
    }
}
