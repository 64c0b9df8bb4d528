//! Condition (2b): the model's log-density terms are bounded by functions of
//! the sampled values that are integrable against any normal guide.
//!
//! A forward pass maps each program variable to bounds over `|r(α)|` for the
//! names sampled so far, then checks every distribution argument against the
//! obligations of its family. Loops keep only the bounds that a body
//! iteration leaves unchanged.

use std::collections::BTreeMap;

use super::bounds::{bound_infer_with, AffineForm, BoundAbs};
use super::{Reason, Status, Verdict};
use crate::lang::{print_name, print_real, Command, DistKind, Distribution, Program, RealExpr, Registry};

type Env = BTreeMap<String, BoundAbs>;

struct Pass<'a> {
    reg: &'a Registry,
    collect: bool,
    failures: Vec<Reason>,
}

impl Pass<'_> {
    fn bound(&self, e: &RealExpr, env: &Env) -> BoundAbs {
        bound_infer_with(
            e,
            // Unassigned variables read the all-zero input store.
            &|x| env.get(x).cloned().unwrap_or_else(|| BoundAbs {
                affine: Some(AffineForm::constant(0.0)),
                affexp: Some(AffineForm::constant(0.0)),
                pos_lower: None,
            }),
            self.reg,
        )
    }

    fn need(&mut self, e: &RealExpr, env: &Env, what: &str, pos: bool) {
        if !self.collect {
            return;
        }
        let b = self.bound(e, env);
        let msg = if b.affexp.is_none() {
            Some(format!("no affine-exponential bound for {what} `{}`", print_real(e)))
        } else if pos && b.pos_lower.is_none() {
            Some(format!("no positive lower bound for {what} `{}`", print_real(e)))
        } else {
            None
        };
        if let Some(m) = msg {
            self.failures.push(Reason::span(print_real(e), m));
        }
    }

    fn obligations(&mut self, d: &Distribution, obs: Option<&RealExpr>, env: &Env) {
        match d.kind {
            DistKind::Normal => {
                self.need(&d.args[0], env, "mean", false);
                self.need(&d.args[1], env, "scale", true);
                if let Some(o) = obs {
                    self.need(o, env, "observation", false);
                }
            }
            DistKind::Exponential => self.need(&d.args[0], env, "rate", true),
            _ => {
                if self.collect {
                    for a in &d.args {
                        if a.as_const().is_none() {
                            self.failures.push(Reason::span(
                                print_real(a),
                                format!("{} argument `{}` is not a literal", d.kind.name(), print_real(a)),
                            ));
                        }
                    }
                }
            }
        }
    }

    fn run(&mut self, c: &Command, env: Env) -> Env {
        match c {
            Command::Skip => env,
            Command::Assign(x, e) => {
                let b = self.bound(e, &env);
                let mut env = env;
                env.insert(x.clone(), b);
                env
            }
            Command::Seq(a, b) => {
                let env = self.run(a, env);
                self.run(b, env)
            }
            Command::If(_, t, e) => {
                let et = self.run(t, env.clone());
                let ee = self.run(e, env);
                join(&et, &ee)
            }
            Command::While(_, body) => self.loop_fix(body, env, None),
            Command::For(v, lo, hi, body) => {
                let (bl, bh) = (self.bound(lo, &env), self.bound(hi, &env));
                let counter = BoundAbs { affine: bl.affine.zip(bh.affine).map(|(a, b)| a.max(&b)), affexp: None, pos_lower: None };
                let counter = BoundAbs { affexp: counter.affine.clone(), ..counter };
                self.loop_fix(body, env, Some((v, counter)))
            }
            Command::Sample(x, n, d) => {
                self.obligations(d, None, &env);
                let mut env = env;
                let sym = print_name(n);
                env.insert(
                    x.clone(),
                    BoundAbs { affine: Some(AffineForm::abs_var(&sym)), affexp: Some(AffineForm::abs_var(&sym)), pos_lower: None },
                );
                env
            }
            Command::Score(d, o) => {
                self.obligations(d, Some(o), &env);
                env
            }
        }
    }

    /// Iterates the body until the kept bounds stop changing, then makes one
    /// more pass that records obligations.
    fn loop_fix(&mut self, body: &Command, env: Env, counter: Option<(&String, BoundAbs)>) -> Env {
        let collect = self.collect;
        self.collect = false;
        let with_counter = |mut e: Env| {
            if let Some((v, b)) = &counter {
                e.insert((*v).clone(), b.clone());
            }
            e
        };
        let mut cur = with_counter(env.clone());
        loop {
            let out = self.run(body, cur.clone());
            let next = with_counter(keep_equal(&cur, &out));
            if next == cur {
                break;
            }
            cur = next;
        }
        self.collect = collect;
        let out = self.run(body, cur.clone());
        // Zero iterations leave the entry environment.
        join(&env, &keep_equal(&cur, &out))
    }
}

fn join(a: &Env, b: &Env) -> Env {
    let mut out = Env::new();
    for k in a.keys().chain(b.keys()) {
        let v = match (a.get(k), b.get(k)) {
            (Some(x), Some(y)) => x.join(y),
            _ => BoundAbs::none(),
        };
        out.insert(k.clone(), v);
    }
    out
}

/// Entries of `b`, with anything that differs from `a` dropped to no bound.
fn keep_equal(a: &Env, b: &Env) -> Env {
    b.iter()
        .map(|(k, v)| (k.clone(), if a.get(k) == Some(v) { v.clone() } else { BoundAbs::none() }))
        .collect()
}

pub fn cond2b_analyze(model: &Program, reg: &Registry) -> Verdict {
    let mut p = Pass { reg, collect: true, failures: Vec::new() };
    p.run(&model.body, Env::new());
    if p.failures.is_empty() {
        Verdict::new(Status::Verified, vec![])
    } else {
        Verdict::new(Status::Unknown, p.failures)
    }
}
