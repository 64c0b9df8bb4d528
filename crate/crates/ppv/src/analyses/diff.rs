//! Differentiability of the guide density in its parameters (R2).
//!
//! An element `(X, Y, R)` says: variables in `X` are left unchanged, the
//! density is C¹ in each input variable of `Y`, and each output `u` is a C¹
//! function of input `z` for `(z, u) ∈ R`. Sets range over a finite universe
//! of program variables.

use std::collections::BTreeSet;

use super::{Reason, Status, Verdict};
use crate::absint::{analyze, bound_var, AbstractDomain};
use crate::lang::{
    c1_full, is_guarded_positive, print_real, vars_of_bool, vars_of_name, vars_of_real, BoolExpr, Command, DistKind,
    Distribution, NameExpr, PrimOp, Program, RealExpr, Registry, VarSet,
};
use crate::lang::validate::program_vars;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiffTriple {
    pub x: VarSet,
    pub y: VarSet,
    pub r: BTreeSet<(String, String)>,
}

pub struct DiffDomain<'a> {
    pub universe: VarSet,
    pub reg: &'a Registry,
}

impl<'a> DiffDomain<'a> {
    /// Domain over the variables of `p`, including loop-bound temporaries.
    pub fn for_program(p: &Program, reg: &'a Registry) -> Self {
        let mut universe = program_vars(p);
        p.body.walk(&mut |c| {
            if let Command::For(v, ..) = c {
                universe.insert(bound_var(v));
            }
        });
        DiffDomain { universe, reg }
    }

    fn all_pairs(&self, zs: &VarSet) -> BTreeSet<(String, String)> {
        zs.iter()
            .flat_map(|z| self.universe.iter().map(move |u| (z.clone(), u.clone())))
            .collect()
    }

    fn minus(&self, s: &VarSet) -> VarSet {
        self.universe.difference(s).cloned().collect()
    }

    fn c1(&self, e: &RealExpr) -> VarSet {
        c1_full(e, &self.universe, self.reg)
    }

    /// `(Y, blocked)` for a density factor of `d` evaluated at `at`: the
    /// variables the factor is C¹ in, and the variables whose change can make
    /// the execution fail or jump.
    fn factor(&self, d: &Distribution, at: &VarSet, extra_c1: Option<&RealExpr>) -> (VarSet, VarSet) {
        let vars = |es: &[RealExpr]| es.iter().flat_map(vars_of_real).collect::<VarSet>();
        let with_obs = |mut y: VarSet| {
            if let Some(o) = extra_c1 {
                y = y.intersection(&self.c1(o)).cloned().collect();
            }
            y
        };
        match d.kind {
            DistKind::Normal | DistKind::Exponential => {
                let scale = d.args.last().expect("arity checked");
                if is_guarded_positive(scale) {
                    let y = d.args.iter().fold(self.universe.clone(), |acc, a| acc.intersection(&self.c1(a)).cloned().collect());
                    (with_obs(y).difference(at).cloned().collect(), at.clone())
                } else {
                    let mut blocked = at.clone();
                    blocked.extend(vars_of_real(scale));
                    let loc = if d.kind == DistKind::Normal { self.c1(&d.args[0]) } else { self.universe.clone() };
                    (with_obs(loc).difference(&blocked).cloned().collect(), blocked)
                }
            }
            DistKind::Bernoulli if matches!(&d.args[0], RealExpr::Prim(PrimOp::Sigmoid, _)) => {
                (with_obs(self.c1(&d.args[0])).difference(at).cloned().collect(), at.clone())
            }
            DistKind::Uniform | DistKind::Delta | DistKind::Bernoulli => {
                let mut blocked = at.clone();
                blocked.extend(vars(&d.args));
                if let Some(o) = extra_c1 {
                    blocked.extend(vars_of_real(o));
                }
                (self.minus(&blocked), blocked)
            }
        }
    }
}

impl AbstractDomain for DiffDomain<'_> {
    type Elem = DiffTriple;

    fn bottom(&self) -> DiffTriple {
        self.skip()
    }

    fn widen(&self, a: &DiffTriple, b: &DiffTriple) -> DiffTriple {
        DiffTriple {
            x: a.x.intersection(&b.x).cloned().collect(),
            y: a.y.intersection(&b.y).cloned().collect(),
            r: a.r.intersection(&b.r).cloned().collect(),
        }
    }

    fn cond(&self, b: &BoolExpr, t0: &DiffTriple, t1: &DiffTriple) -> DiffTriple {
        let ve = vars_of_bool(b);
        let x: VarSet = t0.x.intersection(&t1.x).cloned().collect();
        let y = t0.y.intersection(&t1.y).filter(|v| !ve.contains(*v)).cloned().collect();
        let r = t0
            .r
            .intersection(&t1.r)
            .filter(|(z, u)| !ve.contains(z) || x.contains(u))
            .cloned()
            .collect();
        DiffTriple { x, y, r }
    }

    fn compose(&self, later: &DiffTriple, earlier: &DiffTriple) -> DiffTriple {
        let u = &self.universe;
        let x = later.x.intersection(&earlier.x).cloned().collect();
        let y = earlier
            .y
            .iter()
            .filter(|xv| u.iter().all(|yv| earlier.r.contains(&((*xv).clone(), yv.clone())) && later.y.contains(yv)))
            .cloned()
            .collect();
        let mut r = BTreeSet::new();
        for z in u {
            for v in u {
                if u.iter().all(|m| earlier.r.contains(&(z.clone(), m.clone())) && later.r.contains(&(m.clone(), v.clone()))) {
                    r.insert((z.clone(), v.clone()));
                }
            }
        }
        DiffTriple { x, y, r }
    }

    fn skip(&self) -> DiffTriple {
        DiffTriple {
            x: self.universe.clone(),
            y: self.universe.clone(),
            r: self.all_pairs(&self.universe),
        }
    }

    fn update(&self, x: &str, e: &RealExpr) -> DiffTriple {
        let others = self.minus(&VarSet::from([x.to_string()]));
        let mut r: BTreeSet<(String, String)> = self
            .universe
            .iter()
            .flat_map(|z| others.iter().map(move |u| (z.clone(), u.clone())))
            .collect();
        r.extend(self.c1(e).into_iter().map(|y| (y, x.to_string())));
        DiffTriple { x: others, y: self.universe.clone(), r }
    }

    fn sample(&self, x: &str, n: &NameExpr, d: &Distribution) -> DiffTriple {
        let (y, blocked) = self.factor(d, &vars_of_name(n), None);
        DiffTriple {
            x: self.minus(&VarSet::from([x.to_string()])),
            y,
            r: self.all_pairs(&self.minus(&blocked)),
        }
    }

    fn score(&self, d: &Distribution, obs: &RealExpr) -> DiffTriple {
        let (y, blocked) = self.factor(d, &VarSet::new(), Some(obs));
        DiffTriple {
            x: self.universe.clone(),
            y,
            r: self.all_pairs(&self.minus(&blocked)),
        }
    }
}

pub fn diff_analyze(guide: &Program, reg: &Registry) -> DiffTriple {
    analyze(&guide.body, &DiffDomain::for_program(guide, reg))
        .expect("intersection widening stabilizes")
        .elem
}

/// `e` is `θ`, `-θ`, `θ ± c`, `c ± θ` or `c·θ` with `c ≠ 0`: it sweeps every
/// real as `θ` does.
fn onto_in(e: &RealExpr, theta: &str) -> bool {
    let is_t = |e: &RealExpr| matches!(e, RealExpr::Var(v) if v == theta);
    match e {
        RealExpr::Var(v) => v == theta,
        RealExpr::Prim(PrimOp::Neg, a) => is_t(&a[0]),
        RealExpr::Prim(PrimOp::Add | PrimOp::Sub, a) => {
            (is_t(&a[0]) && a[1].as_const().is_some()) || (is_t(&a[1]) && a[0].as_const().is_some())
        }
        RealExpr::Prim(PrimOp::Mul, a) => {
            (is_t(&a[0]) && a[1].as_const().is_some_and(|c| c != 0.0))
                || (is_t(&a[1]) && a[0].as_const().is_some_and(|c| c != 0.0))
        }
        _ => false,
    }
}

/// A non-C¹ primitive applied directly to an affine image of a parameter,
/// so its kink is reached at some parameter value.
pub fn kink_witness(e: &RealExpr, params: &[String], reg: &Registry) -> Option<(String, RealExpr)> {
    if let RealExpr::Prim(op, args) = e {
        let flags = &reg.entry(*op).c1;
        for (a, f) in args.iter().zip(flags) {
            if *f == crate::lang::registry::C1Flag::Never && a.as_const().is_none() {
                let hits: Vec<&String> = params.iter().filter(|t| onto_in(a, t)).collect();
                let kink = match op {
                    PrimOp::Min | PrimOp::Max => args.iter().any(|o| o.as_const().is_some()) && !hits.is_empty(),
                    _ => !hits.is_empty(),
                };
                if kink {
                    return Some((hits[0].clone(), e.clone()));
                }
            }
        }
        for a in args {
            if let Some(w) = kink_witness(a, params, reg) {
                return Some(w);
            }
        }
    }
    None
}

/// Parameter-dependent discontinuities that certainly break R2.
fn r2_witnesses(guide: &Program, reg: &Registry) -> Vec<Reason> {
    let mut out = Vec::new();
    for (_, n, d) in guide.body.sample_sites() {
        for a in &d.args {
            if let Some((t, e)) = kink_witness(a, &guide.params, reg) {
                out.push(Reason::span(
                    print_real(&e),
                    format!("parameter `{t}` reaches the non-differentiable point of `{}` at `{}`", print_real(&e), n.base),
                ));
            }
        }
        if matches!(d.kind, DistKind::Uniform) {
            let vs: VarSet = d.args.iter().flat_map(vars_of_real).collect();
            for t in guide.params.iter().filter(|t| vs.contains(*t)) {
                out.push(Reason::name(
                    &n.base,
                    format!("parameter `{t}` moves the bounds of Uniform at `{}`; the density jumps there", n.base),
                ));
            }
        }
    }
    out
}

/// Verified iff every parameter lies in the analysed `Y`.
pub fn diff_check(guide: &Program, reg: &Registry) -> Verdict {
    let t = diff_analyze(guide, reg);
    let missing: Vec<&String> = guide.params.iter().filter(|p| !t.y.contains(*p)).collect();
    if missing.is_empty() {
        return Verdict::new(Status::Verified, vec![]);
    }
    let witnesses = r2_witnesses(guide, reg);
    if !witnesses.is_empty() {
        return Verdict::new(Status::Invalid, witnesses);
    }
    let reasons = missing
        .into_iter()
        .map(|p| Reason::name(p, format!("density not certified C¹ in `{p}`")))
        .collect();
    Verdict::new(Status::Unknown, reasons)
}
