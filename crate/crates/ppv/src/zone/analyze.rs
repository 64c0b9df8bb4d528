//! Forward state analysis over (numeric facts, abstract random database).
//!
//! `for` loops are solved at their head: the body result is shifted back by
//! one counter step, fused, and widened against the previous head state.
//! At exit the counter equals `hi - 1`, which is folded into the bounds.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use super::{absrdb_widen, AbsRdb, Bound, DistAbs, Entry, Interval, Lin, Zone};
use crate::density::eval_real_in;
use crate::lang::{print_name, vars_of_real, Command, Program, RealExpr, Registry};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ZoneError {
    #[error("zone widening for loop `{var}` did not stabilize within {cap} iterations")]
    NoFixpoint { var: String, cap: usize },
}

/// Numeric side facts: symbolic equalities for loop counters and known
/// constant values.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct NumState {
    pub eqs: BTreeMap<String, BTreeSet<Lin>>,
    pub vals: BTreeMap<String, f64>,
}

impl NumState {
    fn forget(&mut self, x: &str) {
        self.eqs.remove(x);
        self.vals.remove(x);
        for s in self.eqs.values_mut() {
            s.retain(|l| !l.mentions(x));
        }
        self.eqs.retain(|_, s| !s.is_empty());
    }

    fn widen(&self, o: &NumState) -> NumState {
        let eqs = self
            .eqs
            .iter()
            .filter_map(|(k, s)| {
                let t: BTreeSet<Lin> = s.intersection(o.eqs.get(k)?).cloned().collect();
                (!t.is_empty()).then(|| (k.clone(), t))
            })
            .collect();
        let vals = self.vals.iter().filter(|(k, v)| o.vals.get(*k) == Some(v)).map(|(k, v)| (k.clone(), *v)).collect();
        NumState { eqs, vals }
    }

    /// Every expression known equal to `l`, including `l`.
    fn bound_for(&self, l: &Lin) -> Bound {
        let mut s = BTreeSet::from([l.clone()]);
        if let (Some(v), Lin::Ctr(_, c) | Lin::Sym(_, c)) = (l.var(), l) {
            if let Some(e) = self.eqs.get(v) {
                s.extend(e.iter().map(|x| x.offset(*c)));
            }
        }
        Bound(s)
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
struct State {
    num: NumState,
    rdb: AbsRdb,
}

impl State {
    /// Drops every fact about `x`; bounds that only mentioned `x` turn
    /// their name into ⊤.
    fn forget(&mut self, x: &str) {
        self.num.forget(x);
        self.rdb.map_bounds(|b| {
            let s: BTreeSet<Lin> = b.0.iter().filter(|l| !l.mentions(x)).cloned().collect();
            (!s.is_empty()).then_some(Bound(s))
        });
    }

    /// Re-expresses the state after `v := v + 1`.
    fn shift(&mut self, v: &str) {
        let back = |l: &Lin| match l {
            Lin::Ctr(x, c) if x == v => Lin::Ctr(x.clone(), c - 1),
            _ => l.clone(),
        };
        self.rdb.map_bounds(|b| Some(b.map(back)));
        for (k, s) in self.num.eqs.iter_mut() {
            *s = if k == v { s.iter().map(|l| l.offset(1)).collect() } else { s.iter().map(back).collect() };
        }
        if let Some(x) = self.num.vals.get_mut(v) {
            *x += 1.0;
        }
        self.rdb.fuse();
    }

    fn widen(&self, o: &State) -> State {
        State { num: self.num.widen(&o.num), rdb: absrdb_widen(&self.rdb, &o.rdb) }
    }

    fn join(&self, o: &State) -> State {
        let keys: BTreeSet<&String> = self.rdb.0.keys().chain(o.rdb.0.keys()).collect();
        let rdb = keys
            .into_iter()
            .map(|k| {
                let e = match (self.rdb.0.get(k), o.rdb.0.get(k)) {
                    (Some(a), Some(b)) if a == b => a.clone(),
                    _ => Entry::Top,
                };
                (k.clone(), e)
            })
            .collect();
        State { num: self.num.widen(&o.num), rdb: AbsRdb(rdb) }
    }
}

/// Abstract random database at one program point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TracePoint {
    pub point: String,
    pub rdb: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IndexedAnalysis {
    pub exit: AbsRdb,
    pub num: NumState,
    /// Last state seen at each labelled point, in first-visit order.
    pub trace: Vec<TracePoint>,
    /// Longest widened sequence of any loop.
    pub max_loop_iterations: usize,
}

struct Driver<'a> {
    counters: BTreeSet<String>,
    reg: &'a Registry,
    cap: usize,
    trace: Vec<TracePoint>,
    max_loop: usize,
}

impl Driver<'_> {
    fn record(&mut self, point: String, st: &State) {
        let rdb = st.rdb.to_string();
        match self.trace.iter_mut().find(|t| t.point == point) {
            Some(t) => t.rdb = rdb,
            None => self.trace.push(TracePoint { point, rdb }),
        }
    }

    fn lin(&self, e: &RealExpr) -> Option<Lin> {
        Lin::of_expr(e, &self.counters)
    }

    fn value(&self, e: &RealExpr, st: &State) -> Option<f64> {
        if !vars_of_real(e).iter().all(|x| st.num.vals.contains_key(x)) {
            return None;
        }
        eval_real_in(e, &st.num.vals, self.reg).ok()
    }

    fn exec(&mut self, c: &Command, mut st: State) -> Result<State, ZoneError> {
        Ok(match c {
            Command::Skip | Command::Score(..) => st,
            Command::Assign(x, e) => {
                let v = self.value(e, &st);
                st.forget(x);
                if let Some(v) = v {
                    st.num.vals.insert(x.clone(), v);
                }
                st
            }
            Command::Seq(a, b) => {
                let st = self.exec(a, st)?;
                self.exec(b, st)?
            }
            Command::If(_, t, e) => {
                let a = self.exec(t, st.clone())?;
                let b = self.exec(e, st)?;
                a.join(&b)
            }
            Command::While(_, body) => {
                let mut assigned = BTreeSet::new();
                let mut names = BTreeSet::new();
                body.walk(&mut |c| match c {
                    Command::Assign(x, _) | Command::For(x, ..) => {
                        assigned.insert(x.clone());
                    }
                    Command::Sample(x, n, _) => {
                        assigned.insert(x.clone());
                        names.insert(n.base.clone());
                    }
                    _ => {}
                });
                for x in &assigned {
                    st.forget(x);
                }
                for n in names {
                    st.rdb.0.insert(n, Entry::Top);
                }
                st
            }
            Command::For(v, lo, hi, body) => self.exec_for(v, lo, hi, body, st)?,
            Command::Sample(x, n, d) => {
                st.forget(x);
                let zone: Option<Zone> = n
                    .indices
                    .iter()
                    .map(|e| {
                        let b = st.num.bound_for(&self.lin(e)?);
                        Some(Interval::new(b.clone(), b))
                    })
                    .collect::<Option<Vec<_>>>()
                    .map(Zone);
                let dist = DistAbs::of(d);
                let entry = match (zone, st.rdb.0.remove(&n.base)) {
                    (None, _) | (_, Some(Entry::Top)) => Entry::Top,
                    (Some(z), None) => Entry::Zones(vec![z], dist),
                    (Some(z), Some(Entry::Zones(mut zs, d0))) => {
                        if d0 != dist || zs.iter().any(|y| y.dim() != z.dim() || *y == z) {
                            Entry::Top
                        } else {
                            zs.push(z);
                            Entry::Zones(super::zone_fuse(&zs), d0)
                        }
                    }
                };
                st.rdb.0.insert(n.base.clone(), entry);
                self.record(format!("after sample {}", print_name(n)), &st);
                st
            }
        })
    }

    fn exec_for(&mut self, v: &str, lo: &RealExpr, hi: &RealExpr, body: &Command, mut st: State) -> Result<State, ZoneError> {
        let (lo_l, hi_l) = (self.lin(lo), self.lin(hi));
        let (lo_v, hi_v) = (self.value(lo, &st), self.value(hi, &st));
        st.forget(v);
        let entry = st.clone();
        let mut head = st;
        if let Some(l) = &lo_l {
            head.num.eqs.insert(v.to_string(), BTreeSet::from([l.clone()]));
        }
        if let Some(x) = lo_v {
            head.num.vals.insert(v.to_string(), x);
        }
        let next_head = |d: &mut Self, h: &State| -> Result<(State, State), ZoneError> {
            let out = d.exec(body, h.clone())?;
            let mut n = out.clone();
            n.shift(v);
            Ok((out, n))
        };
        // The first step adopts the shifted result; widening starts after it.
        let (_, mut h) = next_head(self, &head)?;
        // The counter's concrete value has done its job (seeding lower
        // bounds); keeping it invites coincidental fusions with constants.
        h.num.eqs.remove(v);
        h.num.vals.remove(v);
        let mut n_iter = 1;
        let out = loop {
            n_iter += 1;
            if n_iter > self.cap {
                return Err(ZoneError::NoFixpoint { var: v.to_string(), cap: self.cap });
            }
            let (out, n) = next_head(self, &h)?;
            let w = h.widen(&n);
            if w == h {
                break out;
            }
            h = w;
        };
        self.max_loop = self.max_loop.max(n_iter);
        self.record(format!("head of for {v}"), &h);

        // The invariant must hold before the first iteration: zones that
        // were not there on entry have to be empty at `v = lo`.
        let mut at_lo = h.clone();
        match &lo_l {
            Some(l) => at_lo.rdb.map_bounds(|b| {
                Some(b.map(|x| match x {
                    Lin::Ctr(y, c) if y == v => l.offset(*c),
                    _ => x.clone(),
                }))
            }),
            None => at_lo.rdb = AbsRdb(at_lo.rdb.0.keys().map(|k| (k.clone(), Entry::Top)).collect()),
        }
        let mut exit = out;
        for (name, e) in exit.rdb.0.iter_mut() {
            let ok = match (entry.rdb.0.get(name), at_lo.rdb.0.get(name), h.rdb.0.get(name)) {
                (_, _, Some(Entry::Top)) | (_, Some(Entry::Top), _) | (Some(Entry::Top), _, _) => false,
                (before, Some(Entry::Zones(zl, _)), Some(Entry::Zones(zh, _))) => {
                    let old: &[Zone] = match before {
                        Some(Entry::Zones(z, _)) => z,
                        _ => &[],
                    };
                    zh.iter().zip(zl).all(|(z, z_lo)| old.contains(z) || z_lo.is_empty(&entry.num.vals))
                }
                _ => true,
            };
            if !ok {
                *e = Entry::Top;
            }
        }

        // Fold `v = hi - 1`.
        if let Some(last) = hi_l.as_ref().map(|h| h.offset(-1)) {
            exit.rdb.map_bounds(|b| {
                let mut s = b.0.clone();
                for l in &b.0 {
                    if let Lin::Ctr(y, c) = l {
                        if y == v {
                            s.insert(last.offset(*c));
                        }
                    }
                }
                Some(Bound(s))
            });
            exit.num.eqs.insert(v.to_string(), BTreeSet::from([last]));
        }
        if let Some(x) = hi_v {
            exit.num.vals.insert(v.to_string(), x - 1.0);
        }
        exit.rdb.fuse();
        let runs = matches!((lo_v, hi_v), (Some(a), Some(b)) if a < b);
        let exit = if runs { exit } else { entry.join(&exit) };
        self.record(format!("exit of for {v}"), &exit);
        Ok(exit)
    }
}

/// Analyzes a program with indexed names, returning the exit database and
/// the invariants seen along the way.
pub fn analyze_indexed(p: &Program) -> Result<IndexedAnalysis, ZoneError> {
    analyze_indexed_with(p, Registry::standard(), crate::absint::DEFAULT_CAP)
}

pub fn analyze_indexed_with(p: &Program, reg: &Registry, cap: usize) -> Result<IndexedAnalysis, ZoneError> {
    let mut counters = BTreeSet::new();
    p.body.walk(&mut |c| {
        if let Command::For(v, ..) = c {
            counters.insert(v.clone());
        }
    });
    let mut d = Driver { counters, reg, cap, trace: Vec::new(), max_loop: 0 };
    let st = d.exec(&p.body, State::default())?;
    Ok(IndexedAnalysis { exit: st.rdb, num: st.num, trace: d.trace, max_loop_iterations: d.max_loop })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_program;

    const NM: &str = "model { N := 3; M := 2; m := 0.0; d := 1.0;
        for i in 1..N+1 { for j in 1..M+1 { val := sample(\"x_{i}_{j}\", Normal(m, d)) } } }";

    #[test]
    fn nested_loop_invariants() {
        let a = analyze_indexed(&parse_program(NM).unwrap()).unwrap();
        assert_eq!(a.exit.to_string(), "x -> ([1,i=N]x[1,j=M], normal(m,d))");
        let mid = a.trace.iter().find(|t| t.point.starts_with("after sample")).unwrap();
        assert_eq!(mid.rdb, "x -> ([1,i-1]x[1,M] U [i,i]x[1,j], normal(m,d))");
        assert!(a.max_loop_iterations <= 4);
    }

    #[test]
    fn literal_sample_is_zero_dimensional() {
        let a = analyze_indexed(&parse_program("model { a := sample_N(\"a\", 0, 1) }").unwrap()).unwrap();
        assert_eq!(a.exit.to_string(), "a -> ((), normal(0.0,1.0))");
    }

    #[test]
    fn literal_name_in_loop_is_top() {
        let a = analyze_indexed(&parse_program("model { for i in 0..3 { a := sample_N(\"a\", 0, 1) } }").unwrap()).unwrap();
        assert_eq!(a.exit.to_string(), "a -> T");
    }

    #[test]
    fn single_loop_with_constant_bounds() {
        let a = analyze_indexed(&parse_program("model { for i in 0..5 { x := sample_N(\"x_{i}\", 0, 1) } }").unwrap()).unwrap();
        assert_eq!(a.exit.to_string(), "x -> ([0,i=4], normal(0.0,1.0))");
    }
}
