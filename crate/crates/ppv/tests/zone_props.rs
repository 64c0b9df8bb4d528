//! Concretization properties of zone fusion and widening, and end-to-end
//! agreement between sampled names and the inferred exit database.

mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::*;
use ppv::density::{param_store, sample_trace, Fuel};
use ppv::lang::{Command, Distribution, RealExpr};
use ppv::rng::CounterRng;
use ppv::zone::{absrdb_widen, analyze_indexed, zone_fuse, AbsRdb, Bound, DistAbs, Entry, Interval, Lin, Zone};
use proptest::prelude::*;

type Vals = BTreeMap<String, f64>;

fn lin() -> impl Strategy<Value = Lin> {
    prop_oneof![
        (0i64..4).prop_map(Lin::Num),
        (proptest::sample::select(vec!["i", "j"]), -1i64..2).prop_map(|(v, c)| Lin::Ctr(v.into(), c)),
        proptest::sample::select(vec!["N", "M"]).prop_map(|s| Lin::Sym(s.into(), 0)),
    ]
}

fn bound() -> impl Strategy<Value = Bound> {
    proptest::collection::btree_set(lin(), 1..3).prop_map(Bound)
}

fn interval() -> impl Strategy<Value = Interval> {
    (bound(), bound()).prop_map(|(a, b)| Interval::new(a, b))
}

/// A zone together with its split along one dimension at a bound.
fn zone_set(dim: usize) -> impl Strategy<Value = Vec<Zone>> {
    let zone = proptest::collection::vec(interval(), dim).prop_map(Zone);
    let split = (proptest::collection::vec(interval(), dim), 0..dim, bound()).prop_map(|(ivs, k, p)| {
        let (mut a, mut b) = (ivs.clone(), ivs);
        a[k] = Interval::new(a[k].lo.clone(), p.offset(-1));
        b[k] = Interval::new(p, b[k].hi.clone());
        vec![Zone(a), Zone(b)]
    });
    (proptest::collection::vec(zone, 0..3), proptest::collection::vec(split, 0..2))
        .prop_map(|(zs, splits)| zs.into_iter().chain(splits.into_iter().flatten()).collect())
}

fn instantiations() -> Vec<Vals> {
    let mut out = Vec::new();
    for i in 0..=8 {
        for j in 0..=8 {
            for n in 0..=8 {
                for m in [0, 2, 5, 8] {
                    out.push([("i", i), ("j", j), ("N", n), ("M", m)].into_iter().map(|(k, v)| (k.to_string(), v as f64)).collect());
                }
            }
        }
    }
    out
}

/// Every bound's expressions agree and no interval runs backwards by more
/// than one (an empty `[a, a-1]` is allowed, as in `[1, i-1]` at `i = 1`).
fn admissible(zs: &[Zone], v: &Vals) -> bool {
    zs.iter().flat_map(|z| &z.0).all(|iv| {
        let vals = |b: &Bound| b.0.iter().map(|l| l.eval(v).unwrap()).collect::<BTreeSet<i64>>();
        let (lo, hi) = (vals(&iv.lo), vals(&iv.hi));
        lo.len() == 1 && hi.len() == 1 && lo.first().unwrap() <= &(hi.first().unwrap() + 1)
    })
}

fn gamma(zs: &[Zone], v: &Vals) -> BTreeSet<Vec<i64>> {
    zs.iter().flat_map(|z| z.enumerate(v, 100_000).unwrap()).collect()
}

fn rdb(zs: Vec<Zone>) -> AbsRdb {
    let d = DistAbs::of(&Distribution::normal(RealExpr::var("m"), RealExpr::var("d")));
    AbsRdb(BTreeMap::from([("x".to_string(), Entry::Zones(zs, d))]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn fusion_preserves_indices(zs in (1usize..3).prop_flat_map(zone_set)) {
        let fused = zone_fuse(&zs);
        for v in instantiations().iter().filter(|v| admissible(&zs, v)) {
            prop_assert_eq!(gamma(&zs, v), gamma(&fused, v), "{:?} -> {:?} at {:?}", zs, fused, v);
        }
    }

    #[test]
    fn widening_covers_both_sides(pair in (1usize..3).prop_flat_map(|d| (zone_set(d), zone_set(d)))) {
        let (a, b) = pair;
        let w = absrdb_widen(&rdb(a.clone()), &rdb(b.clone()));
        let Entry::Zones(wz, _) = &w.0["x"] else { return Ok(()) };
        for side in [&a, &b] {
            for v in instantiations().iter().filter(|v| admissible(side, v)) {
                prop_assert!(gamma(side, v).is_subset(&gamma(wz, v)));
            }
        }
    }
}

/// Replaces the literal value of a top-level size variable.
fn with_size(c: &Command, var: &str, k: f64) -> Command {
    match c {
        Command::Assign(x, RealExpr::Const(_)) if x == var => Command::assign(x, RealExpr::Const(k)),
        Command::Seq(a, b) => Command::seq(with_size(a, var, k), with_size(b, var, k)),
        _ => c.clone(),
    }
}

fn split_name<'a>(full: &'a str, bases: &BTreeMap<String, Entry>) -> Option<(&'a str, Vec<i64>)> {
    let mut parts = full.split('_').collect::<Vec<_>>();
    let mut idx = Vec::new();
    loop {
        let base = parts.join("_");
        if let Some((k, _)) = bases.get_key_value(&base) {
            idx.reverse();
            return Some((&full[..k.len()], idx));
        }
        idx.push(parts.pop()?.parse().ok()?);
    }
}

#[test]
fn sampled_names_lie_in_exit_zones() {
    let mut checked = 0;
    for (id, m, g) in corpus_pairs() {
        for p in [m, g] {
            for n in 1..=6 {
                for mm in 1..=6 {
                    let mut q = p.clone();
                    q.body = with_size(&with_size(&q.body, "N", n as f64), "M", mm as f64);
                    let Ok(a) = analyze_indexed(&q) else { continue };
                    assert!(a.max_loop_iterations <= 4, "{id}: {} iterations", a.max_loop_iterations);
                    let theta = param_store(&q.params, &vec![0.5; q.params.len()]);
                    let t = sample_trace(&q.body, &theta, &mut CounterRng::new(n * 7 + mm), Fuel::default()).unwrap();
                    for name in t.rdb.keys() {
                        let (base, idx) = split_name(name, &a.exit.0).unwrap_or_else(|| panic!("{id}: `{name}` missing from {}", a.exit));
                        if let Entry::Zones(zs, _) = &a.exit.0[base] {
                            let g = gamma(zs, &a.num.vals);
                            assert!(g.contains(&idx), "{id} N={n} M={mm}: `{name}` outside {}", a.exit);
                            checked += 1;
                        }
                    }
                }
            }
        }
    }
    assert!(checked > 1000, "{checked}");
}
