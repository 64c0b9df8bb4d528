//! Zones: unions of index rectangles with symbolic bounds, describing which
//! indexed names `x_{i}_{j}` a program samples.
//!
//! A bound is a non-empty set of linear expressions known to be equal at the
//! program point where it is used, so `j-1=M` is the set `{j-1, M}`.
//! Widening keeps only shared expressions; fusion merges adjacent rectangles.

mod analyze;
mod matcher;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

pub use analyze::{analyze_indexed, IndexedAnalysis, NumState, TracePoint, ZoneError};
pub use matcher::support_match_extended;

use crate::lang::{print_real, DistKind, Distribution, PrimOp, RealExpr};

/// A linear index expression.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Lin {
    /// Loop counter plus offset.
    Ctr(String, i64),
    /// Other variable plus offset; expected constant while in scope.
    Sym(String, i64),
    Num(i64),
}

impl Lin {
    pub fn var(&self) -> Option<&str> {
        match self {
            Lin::Ctr(v, _) | Lin::Sym(v, _) => Some(v),
            Lin::Num(_) => None,
        }
    }

    pub fn offset(&self, k: i64) -> Lin {
        match self {
            Lin::Ctr(v, c) => Lin::Ctr(v.clone(), c + k),
            Lin::Sym(v, c) => Lin::Sym(v.clone(), c + k),
            Lin::Num(c) => Lin::Num(c + k),
        }
    }

    pub fn mentions(&self, x: &str) -> bool {
        self.var() == Some(x)
    }

    pub fn eval(&self, vals: &BTreeMap<String, f64>) -> Option<i64> {
        match self {
            Lin::Num(c) => Some(*c),
            Lin::Ctr(v, c) | Lin::Sym(v, c) => vals.get(v).map(|x| x.round() as i64 + c),
        }
    }

    /// `a - b` when it is a known integer without looking at values.
    fn diff(&self, o: &Lin) -> Option<i64> {
        match (self, o) {
            (Lin::Num(a), Lin::Num(b)) => Some(a - b),
            (Lin::Ctr(x, a), Lin::Ctr(y, b)) | (Lin::Sym(x, a), Lin::Sym(y, b)) if x == y => Some(a - b),
            _ => None,
        }
    }

    /// Linear form of an index expression.
    pub fn of_expr(e: &RealExpr, counters: &BTreeSet<String>) -> Option<Lin> {
        let int = |c: f64| (c.fract() == 0.0 && c.abs() < 1e12).then_some(c as i64);
        match e {
            RealExpr::Const(c) => int(*c).map(Lin::Num),
            RealExpr::Var(v) if counters.contains(v) => Some(Lin::Ctr(v.clone(), 0)),
            RealExpr::Var(v) => Some(Lin::Sym(v.clone(), 0)),
            RealExpr::Prim(PrimOp::Add, a) => match (&a[0], &a[1]) {
                (x, RealExpr::Const(c)) | (RealExpr::Const(c), x) => Some(Lin::of_expr(x, counters)?.offset(int(*c)?)),
                _ => None,
            },
            RealExpr::Prim(PrimOp::Sub, a) => match &a[1] {
                RealExpr::Const(c) => Some(Lin::of_expr(&a[0], counters)?.offset(-int(*c)?)),
                _ => None,
            },
            _ => None,
        }
    }
}

impl fmt::Display for Lin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Lin::Num(c) => write!(f, "{c}"),
            Lin::Ctr(v, c) | Lin::Sym(v, c) => match c.cmp(&0) {
                std::cmp::Ordering::Equal => write!(f, "{v}"),
                std::cmp::Ordering::Greater => write!(f, "{v}+{c}"),
                std::cmp::Ordering::Less => write!(f, "{v}{c}"),
            },
        }
    }
}

/// Equal expressions for one end of an interval.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Bound(pub BTreeSet<Lin>);

impl Bound {
    pub fn konst(c: i64) -> Bound {
        Bound(BTreeSet::from([Lin::Num(c)]))
    }

    pub fn var_plus(x: &str, c: i64) -> Bound {
        Bound(BTreeSet::from([Lin::Ctr(x.to_string(), c)]))
    }

    pub fn sym(x: &str) -> Bound {
        Bound(BTreeSet::from([Lin::Sym(x.to_string(), 0)]))
    }

    /// `x + c = c′`, with `c′` a constant or a symbol.
    pub fn both(x: &str, c: i64, other: Lin) -> Bound {
        Bound(BTreeSet::from([Lin::Ctr(x.to_string(), c), other]))
    }

    pub fn shares(&self, o: &Bound) -> bool {
        !self.0.is_disjoint(&o.0)
    }

    pub fn offset(&self, k: i64) -> Bound {
        Bound(self.0.iter().map(|l| l.offset(k)).collect())
    }

    pub fn eval(&self, vals: &BTreeMap<String, f64>) -> Option<i64> {
        self.0.iter().find_map(|l| l.eval(vals))
    }

    fn map(&self, f: impl Fn(&Lin) -> Lin) -> Bound {
        Bound(self.0.iter().map(f).collect())
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v: Vec<String> = self.0.iter().map(Lin::to_string).collect();
        f.write_str(&v.join("="))
    }
}

/// Weak unification of two bounds: the shared expressions, or `None` (drop)
/// when there are none.
pub fn bound_widen(b0: &Bound, b1: &Bound) -> Option<Bound> {
    let s: BTreeSet<Lin> = b0.0.intersection(&b1.0).cloned().collect();
    (!s.is_empty()).then_some(Bound(s))
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Interval {
    pub lo: Bound,
    pub hi: Bound,
}

impl Interval {
    pub fn new(lo: Bound, hi: Bound) -> Self {
        Interval { lo, hi }
    }

    fn same(&self, o: &Interval) -> bool {
        self.lo.shares(&o.lo) && self.hi.shares(&o.hi)
    }

    fn merge_same(&self, o: &Interval) -> Interval {
        Interval { lo: Bound(&self.lo.0 | &o.lo.0), hi: Bound(&self.hi.0 | &o.hi.0) }
    }

    /// `self` ends right before `o` starts.
    fn precedes(&self, o: &Interval) -> bool {
        self.hi.offset(1).shares(&o.lo)
    }

    /// Provably empty: some lower expression exceeds some upper expression.
    fn is_empty(&self, vals: &BTreeMap<String, f64>) -> bool {
        self.lo.0.iter().any(|l| {
            self.hi.0.iter().any(|u| match l.diff(u) {
                Some(d) => d > 0,
                None => matches!((l.eval(vals), u.eval(vals)), (Some(a), Some(b)) if a > b),
            })
        })
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.lo, self.hi)
    }
}

/// A rectangle, one interval per index position.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Zone(pub Vec<Interval>);

impl Zone {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self, vals: &BTreeMap<String, f64>) -> bool {
        self.0.iter().any(|i| i.is_empty(vals))
    }

    fn map_bounds(&self, f: &impl Fn(&Bound) -> Option<Bound>) -> Option<Zone> {
        self.0
            .iter()
            .map(|i| Some(Interval { lo: f(&i.lo)?, hi: f(&i.hi)? }))
            .collect::<Option<Vec<_>>>()
            .map(Zone)
    }

    /// Concrete index tuples, given integer values for the variables.
    pub fn enumerate(&self, vals: &BTreeMap<String, f64>, limit: usize) -> Option<Vec<Vec<i64>>> {
        let mut out: Vec<Vec<i64>> = vec![vec![]];
        for iv in &self.0 {
            let (a, b) = (iv.lo.eval(vals)?, iv.hi.eval(vals)?);
            let mut next = Vec::new();
            for p in &out {
                for k in a..=b {
                    let mut q = p.clone();
                    q.push(k);
                    next.push(q);
                    if next.len() > limit {
                        return None;
                    }
                }
            }
            out = next;
        }
        Some(out)
    }
}

impl fmt::Display for Zone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("()");
        }
        let v: Vec<String> = self.0.iter().map(Interval::to_string).collect();
        f.write_str(&v.join("x"))
    }
}

/// Two zones that agree everywhere except one adjacent dimension.
fn fuse_pair(a: &Zone, b: &Zone) -> Option<Zone> {
    if a.dim() != b.dim() || a.dim() == 0 {
        return None;
    }
    let differing: Vec<usize> = (0..a.dim()).filter(|&k| !a.0[k].same(&b.0[k])).collect();
    let k = match differing.as_slice() {
        [k] => *k,
        // Identical in every dimension: both describe the same rectangle
        // only if some interval is a point shared by both, so leave them.
        _ => return None,
    };
    let (x, y) = (&a.0[k], &b.0[k]);
    let merged = if x.precedes(y) {
        Interval { lo: x.lo.clone(), hi: y.hi.clone() }
    } else if y.precedes(x) {
        Interval { lo: y.lo.clone(), hi: x.hi.clone() }
    } else {
        return None;
    };
    let mut out: Vec<Interval> = a.0.iter().zip(&b.0).map(|(p, q)| p.merge_same(q)).collect();
    out[k] = merged;
    Some(Zone(out))
}

/// Merges adjacent rectangles until no merge applies.
pub fn zone_fuse(zs: &[Zone]) -> Vec<Zone> {
    let mut zs = zs.to_vec();
    'outer: loop {
        for i in 0..zs.len() {
            for j in 0..zs.len() {
                if i == j {
                    continue;
                }
                if let Some(z) = fuse_pair(&zs[i], &zs[j]) {
                    let (hi, lo) = (i.max(j), i.min(j));
                    zs.remove(hi);
                    zs.remove(lo);
                    zs.push(z);
                    continue 'outer;
                }
            }
        }
        break;
    }
    zs.sort_by_key(|z| z.to_string());
    zs
}

/// Distribution family at a name plus fingerprints of its arguments.
#[derive(Clone, Debug, PartialEq)]
pub struct DistAbs {
    pub kind: DistKind,
    pub args: Vec<String>,
    /// A representative, for support and measure comparisons.
    pub dist: Distribution,
}

impl DistAbs {
    pub fn of(d: &Distribution) -> Self {
        DistAbs { kind: d.kind, args: d.args.iter().map(print_real).collect(), dist: d.clone() }
    }
}

impl fmt::Display for DistAbs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.kind.name().to_lowercase(), self.args.join(","))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Entry {
    Top,
    Zones(Vec<Zone>, DistAbs),
}

impl fmt::Display for Entry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Entry::Top => f.write_str("T"),
            Entry::Zones(zs, d) => {
                let v: Vec<String> = zs.iter().map(Zone::to_string).collect();
                write!(f, "({}, {d})", v.join(" U "))
            }
        }
    }
}

/// Abstract random database: base name to zones and distribution.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct AbsRdb(pub BTreeMap<String, Entry>);

impl AbsRdb {
    pub fn top_names(&self) -> Vec<&String> {
        self.0.iter().filter(|(_, e)| **e == Entry::Top).map(|(k, _)| k).collect()
    }

    /// Rewrites every bound; a bound mapped to `None` turns its name into ⊤.
    fn map_bounds(&mut self, f: impl Fn(&Bound) -> Option<Bound>) {
        for e in self.0.values_mut() {
            if let Entry::Zones(zs, _) = e {
                match zs.iter().map(|z| z.map_bounds(&f)).collect::<Option<Vec<_>>>() {
                    Some(n) => *zs = n,
                    None => *e = Entry::Top,
                }
            }
        }
    }

    fn fuse(&mut self) {
        for e in self.0.values_mut() {
            if let Entry::Zones(zs, _) = e {
                *zs = zone_fuse(zs);
            }
        }
    }
}

impl fmt::Display for AbsRdb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("[]");
        }
        let v: Vec<String> = self.0.iter().map(|(k, e)| format!("{k} -> {e}")).collect();
        f.write_str(&v.join("; "))
    }
}

fn widen_entry(a: &Entry, b: &Entry) -> Entry {
    let (Entry::Zones(za, da), Entry::Zones(zb, db)) = (a, b) else {
        return Entry::Top;
    };
    if da != db {
        return Entry::Top;
    }
    let (za, zb) = (zone_fuse(za), zone_fuse(zb));
    if za.len() != zb.len() {
        return Entry::Top;
    }
    let mut out = Vec::new();
    for (x, y) in za.iter().zip(&zb) {
        if x.dim() != y.dim() {
            return Entry::Top;
        }
        let mut ivs = Vec::new();
        for (p, q) in x.0.iter().zip(&y.0) {
            match (bound_widen(&p.lo, &q.lo), bound_widen(&p.hi, &q.hi)) {
                (Some(lo), Some(hi)) => ivs.push(Interval { lo, hi }),
                _ => return Entry::Top,
            }
        }
        out.push(Zone(ivs));
    }
    Entry::Zones(out, da.clone())
}

/// Per-name widening after fusion; names on one side only become ⊤.
pub fn absrdb_widen(r0: &AbsRdb, r1: &AbsRdb) -> AbsRdb {
    let keys: BTreeSet<&String> = r0.0.keys().chain(r1.0.keys()).collect();
    AbsRdb(
        keys.into_iter()
            .map(|k| {
                let e = match (r0.0.get(k), r1.0.get(k)) {
                    (Some(a), Some(b)) => widen_entry(a, b),
                    _ => Entry::Top,
                };
                (k.clone(), e)
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(lo: Bound, hi: Bound) -> Interval {
        Interval::new(lo, hi)
    }

    fn normal() -> DistAbs {
        DistAbs::of(&Distribution::normal(RealExpr::var("m"), RealExpr::var("d")))
    }

    fn m() -> Lin {
        Lin::Sym("M".into(), 0)
    }

    #[test]
    fn fuse_adjacent_rows() {
        let a = Zone(vec![iv(Bound::konst(1), Bound::var_plus("i", -1)), iv(Bound::konst(1), Bound::both("j", 0, m()))]);
        let b = Zone(vec![iv(Bound::var_plus("i", 0), Bound::var_plus("i", 0)), iv(Bound::konst(1), Bound::both("j", 0, m()))]);
        let f = zone_fuse(&[a, b]);
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].to_string(), "[1,i]x[1,j=M]");
    }

    #[test]
    fn fuse_leaves_gaps() {
        let a = Zone(vec![iv(Bound::konst(1), Bound::konst(3)), iv(Bound::konst(1), Bound::konst(5))]);
        let b = Zone(vec![iv(Bound::konst(7), Bound::konst(9)), iv(Bound::konst(1), Bound::konst(5))]);
        assert_eq!(zone_fuse(&[a.clone(), b.clone()]).len(), 2);
        assert_eq!(zone_fuse(std::slice::from_ref(&a)), vec![a]);
    }

    #[test]
    fn widen_keeps_shared_symbol() {
        let row = iv(Bound::konst(1), Bound::var_plus("i", 0));
        let r0 = AbsRdb(BTreeMap::from([(
            "x".into(),
            Entry::Zones(vec![Zone(vec![row.clone(), iv(Bound::konst(1), Bound::both("j", -1, m()))])], normal()),
        )]));
        let r1 = AbsRdb(BTreeMap::from([(
            "x".into(),
            Entry::Zones(vec![Zone(vec![row.clone(), iv(Bound::konst(1), Bound::both("j", 0, m()))])], normal()),
        )]));
        assert_eq!(absrdb_widen(&r0, &r1).to_string(), "x -> ([1,i]x[1,M], normal(m,d))");
        let r2 = AbsRdb(BTreeMap::from([(
            "x".into(),
            Entry::Zones(vec![Zone(vec![row, iv(Bound::konst(1), Bound::var_plus("j", -1))])], normal()),
        )]));
        assert_eq!(absrdb_widen(&r2, &r1).to_string(), "x -> T");
        assert_eq!(absrdb_widen(&r1, &r1), r1);
    }

    #[test]
    fn bound_rendering() {
        assert_eq!(Bound::var_plus("i", -1).to_string(), "i-1");
        assert_eq!(Bound::both("j", 0, Lin::Num(1)).to_string(), "j=1");
        assert_eq!(Bound::both("j", -1, m()).to_string(), "j-1=M");
        assert_eq!(Bound::sym("M").to_string(), "M");
    }
}
