//! Shared generators and fixture loading for the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ppv::density::{RandomDatabase, Store};
use ppv::lang::{parse_source, BoolExpr, Command, DistKind, Distribution, NameExpr, PrimOp, Program, RealExpr};
use proptest::prelude::*;

pub const VARS: [&str; 3] = ["x", "y", "z"];
pub const NAMES: [&str; 4] = ["a", "b", "c", "d"];
/// Names no generated program samples.
pub const EXTRA_NAMES: [&str; 3] = ["e", "f", "g"];

pub fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

/// Every parseable pair in the bundled corpus, by file stem.
pub fn corpus_pairs() -> Vec<(String, Program, Program)> {
    let mut out = Vec::new();
    let mut paths: Vec<PathBuf> = std::fs::read_dir(corpus_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "ppv"))
        .collect();
    paths.sort();
    for p in paths {
        let Ok(src) = parse_source(&std::fs::read_to_string(&p).unwrap()) else { continue };
        let stem = p.file_stem().unwrap().to_string_lossy().into_owned();
        out.push((stem, src.model.unwrap(), src.guide.unwrap()));
    }
    out
}

pub fn load_pair(stem: &str) -> (Program, Program) {
    let text = std::fs::read_to_string(corpus_dir().join(format!("{stem}.ppv"))).unwrap();
    let s = parse_source(&text).unwrap();
    (s.model.unwrap(), s.guide.unwrap())
}

fn konst() -> impl Strategy<Value = RealExpr> {
    (0u8..12).prop_map(|k| RealExpr::Const(k as f64 * 0.5))
}

pub fn real_expr(vars: &'static [&'static str]) -> impl Strategy<Value = RealExpr> {
    let leaf = prop_oneof![konst(), proptest::sample::select(vars).prop_map(RealExpr::var)];
    leaf.prop_recursive(3, 12, 2, |inner| {
        let unary = proptest::sample::select(vec![
            PrimOp::Neg,
            PrimOp::Exp,
            PrimOp::Log,
            PrimOp::Abs,
            PrimOp::Relu,
            PrimOp::Softplus,
            PrimOp::Tanh,
            PrimOp::Sigmoid,
        ]);
        let binary = proptest::sample::select(vec![
            PrimOp::Add,
            PrimOp::Sub,
            PrimOp::Mul,
            PrimOp::Div,
            PrimOp::Min,
            PrimOp::Max,
            PrimOp::Pow,
        ]);
        prop_oneof![
            (unary, inner.clone()).prop_map(|(op, a)| RealExpr::Prim(op, vec![a])),
            (binary, inner.clone(), inner).prop_map(|(op, a, b)| RealExpr::Prim(op, vec![a, b])),
        ]
    })
}

pub fn bool_expr() -> impl Strategy<Value = BoolExpr> {
    let leaf = prop_oneof![
        Just(BoolExpr::True),
        (real_expr(&VARS), real_expr(&VARS)).prop_map(|(a, b)| BoolExpr::less(a, b)),
    ];
    leaf.prop_recursive(2, 4, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| BoolExpr::and(a, b)),
            inner.prop_map(BoolExpr::not),
        ]
    })
}

pub fn distribution() -> impl Strategy<Value = Distribution> {
    let e = || real_expr(&VARS);
    prop_oneof![
        3 => (e(), e()).prop_map(|(m, s)| Distribution::normal(m, RealExpr::add(RealExpr::prim(PrimOp::Softplus, vec![s]), RealExpr::Const(0.1)))),
        1 => (e(), e()).prop_map(|(a, b)| Distribution::uniform(a.clone(), RealExpr::add(a, RealExpr::add(RealExpr::prim(PrimOp::Abs, vec![b]), RealExpr::Const(1.0))))),
        1 => e().prop_map(|r| Distribution { kind: DistKind::Exponential, args: vec![RealExpr::exp(r)] }),
        1 => e().prop_map(|r| Distribution { kind: DistKind::Normal, args: vec![r.clone(), r] }),
    ]
}

fn atom(with_score: bool) -> BoxedStrategy<Command> {
    let var = || proptest::sample::select(&VARS[..]);
    let assign = (var(), real_expr(&VARS)).prop_map(|(x, e)| Command::assign(x, e));
    let sample = (var(), proptest::sample::select(&NAMES[..]), distribution())
        .prop_map(|(x, n, d)| Command::sample(x, NameExpr::literal(n), d));
    let score = (distribution(), real_expr(&VARS)).prop_map(|(d, e)| Command::Score(d, e));
    if with_score {
        prop_oneof![1 => Just(Command::Skip), 3 => assign, 3 => sample, 2 => score].boxed()
    } else {
        prop_oneof![1 => Just(Command::Skip), 3 => assign, 3 => sample].boxed()
    }
}

/// Loop-free commands. Sequences nest to the right, as the parser builds them.
pub fn loop_free(with_score: bool) -> impl Strategy<Value = Command> {
    atom(with_score).prop_recursive(3, 16, 4, |inner| {
        prop_oneof![
            proptest::collection::vec(inner.clone(), 2..4).prop_map(Command::seq_all),
            (bool_expr(), inner.clone(), inner).prop_map(|(b, t, e)| Command::if_(b, t, e)),
        ]
    })
}

/// Commands that may contain counted `while` loops and `for` loops.
pub fn with_loops() -> impl Strategy<Value = Command> {
    let counted = (1u8..6, loop_free(true)).prop_map(|(k, body)| {
        Command::seq(
            Command::assign("n", RealExpr::Const(k as f64)),
            Command::while_(
                BoolExpr::less(RealExpr::Const(0.0), RealExpr::var("n")),
                Command::seq(Command::assign("n", RealExpr::sub(RealExpr::var("n"), RealExpr::Const(1.0))), body),
            ),
        )
    });
    let for_loop = (0u8..4, loop_free(true)).prop_map(|(k, body)| Command::for_("i", RealExpr::Const(0.0), RealExpr::Const(k as f64), body));
    let piece = prop_oneof![loop_free(true), counted, for_loop];
    proptest::collection::vec(piece, 1..3).prop_map(Command::seq_all)
}

pub fn store() -> impl Strategy<Value = Store> {
    proptest::collection::vec(-3.0f64..3.0, VARS.len()).prop_map(|v| VARS.iter().map(|s| s.to_string()).zip(v).collect())
}

/// A database over the generated name pool; each name present with
/// probability 0.8.
pub fn database() -> impl Strategy<Value = RandomDatabase> {
    proptest::collection::vec((proptest::bool::weighted(0.8), -4.0f64..4.0), NAMES.len()).prop_map(|v| {
        NAMES.iter().zip(v).filter(|(_, (keep, _))| *keep).map(|(n, (_, x))| (n.to_string(), x)).collect()
    })
}

pub fn extra_database() -> impl Strategy<Value = RandomDatabase> {
    proptest::collection::btree_map(proptest::sample::select(&EXTRA_NAMES[..]).prop_map(String::from), -4.0f64..4.0, 0..3)
}

pub fn union(a: &RandomDatabase, b: &RandomDatabase) -> RandomDatabase {
    let mut out: BTreeMap<String, f64> = a.clone();
    out.extend(b.iter().map(|(k, v)| (k.clone(), *v)));
    out
}

/// Compares forward-mode gradients of `log q_θ(r)` with central differences
/// at `draws` random θ. Returns the number of points compared and a list of
/// failures. Points where the shifted density leaves the support (a
/// non-smooth locus of the guide) are skipped.
pub fn fd_check_guide(guide: &Program, draws: usize, seed: u64) -> (usize, Vec<String>) {
    use ppv::density::{param_store, sample_trace, Fuel};
    use ppv::rng::CounterRng;
    use ppv::svi::guide_logdensity_and_grad;
    use rand::{Rng, SeedableRng};

    const H: f64 = 1e-5;
    let fuel = Fuel::default();
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let p = guide.params.len();
    let (mut checked, mut fails) = (0, Vec::new());
    for k in 0..draws {
        let theta: Vec<f64> = (0..p).map(|_| rng.random_range(-2.0..2.0)).collect();
        let Ok(t) = sample_trace(&guide.body, &param_store(&guide.params, &theta), &mut CounterRng::new(seed).substream(k as u64), fuel) else {
            continue;
        };
        let Ok((_, grad)) = guide_logdensity_and_grad(guide, &theta, &t.rdb, fuel) else { continue };
        let mut smooth = true;
        let mut fd = vec![0.0; p];
        for j in 0..p {
            let at = |d: f64| {
                let mut th = theta.clone();
                th[j] += d;
                guide_logdensity_and_grad(guide, &th, &t.rdb, fuel).map(|x| x.0).ok()
            };
            match (at(H), at(-H)) {
                (Some(a), Some(b)) if a.is_finite() && b.is_finite() => fd[j] = (a - b) / (2.0 * H),
                _ => smooth = false,
            }
        }
        if !smooth {
            continue;
        }
        checked += 1;
        for j in 0..p {
            let tol = 1e-4 * fd[j].abs().max(grad[j].abs()).max(1.0);
            if (fd[j] - grad[j]).abs() > tol {
                fails.push(format!("θ={theta:?} component {j}: forward {} vs difference {}", grad[j], fd[j]));
            }
        }
    }
    (checked, fails)
}

pub const NN: &str = "relu(2 * x - y + 1) - 3 * tanh(x) + max(x, sigmoid(y)) + min(softplus(y), x)";
pub const POLY: &str = "3 * x * x * y - x + 2";

/// Mean and scale shapes that bounded-growth models are built from, with
/// whether each must be accepted. `true` in the second slot marks a scale,
/// which needs a positive lower bound on top of the affine-exponential one.
pub fn bound_catalogue() -> Vec<(String, bool, bool)> {
    let mut v = Vec::new();
    for (e, scale) in [
        (NN.to_string(), false),
        (POLY.to_string(), false),
        (format!("exp({NN})"), false),
        (format!("abs({NN}) + 0.5"), true),
        (format!("abs({POLY}) + 0.5"), true),
        (format!("exp({NN})"), true),
        (format!("1 / (abs({NN}) + 0.5)"), true),
        (format!("1 / (abs({POLY}) + 0.5)"), true),
        (format!("softplus({NN})"), true),
    ] {
        v.push((e, scale, true));
    }
    for (e, scale) in [
        ("1 / pow(x, 3)", false),
        ("exp(2 * pow(x, 3))", false),
        ("pow(abs(x), 3)", true),
        ("exp(2 * pow(x, 3))", true),
    ] {
        v.push((e.to_string(), scale, false));
    }
    v
}

/// Counts bound violations of `bound_infer(e)` at `n` random points;
/// returns `(accepted, violations)`.
pub fn bound_classify_and_validate(src: &str, scale: bool, n: usize, seed: u64) -> (bool, usize) {
    use ppv::analyses::bounds::{bound_holds, bound_infer, BoundKind};
    use ppv::lang::{parse_real, vars_of_real, Registry};
    use rand::{Rng, SeedableRng};

    let reg = Registry::standard();
    let e = parse_real(src).unwrap();
    let vars = vars_of_real(&e);
    let b = bound_infer(&e, &vars, reg);
    let accepted = b.affexp.is_some() && (!scale || b.pos_lower.is_some());
    let forms: Vec<(BoundKind, ppv::analyses::bounds::AffineForm)> = [
        (BoundKind::Affine, b.affine.clone()),
        (BoundKind::AffExp, b.affexp.clone()),
        (BoundKind::PosLower, b.pos_lower.clone()),
    ]
    .into_iter()
    .filter_map(|(k, f)| f.map(|f| (k, f)))
    .collect();
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let mut violations = 0;
    for i in 0..n {
        let span = [0.01, 1.0, 10.0, 50.0][i % 4];
        let pt: BTreeMap<String, f64> = vars.iter().map(|v| (v.clone(), rng.random_range(-span..span))).collect();
        violations += forms.iter().filter(|(k, f)| bound_holds(&e, *k, f, &pt, reg) == Some(false)).count();
    }
    (accepted, violations)
}

/// Checks both locality equalities for one run. `Ok(false)` when the run
/// itself does not succeed, so there is nothing to check.
pub fn check_locality(c: &Command, s: &Store, r: &RandomDatabase, extra: &RandomDatabase) -> Result<bool, String> {
    use ppv::density::{exec_density, DensityOutcome, Fuel};
    let fuel = Fuel::default();
    let key = |o: &ppv::density::DensityOk<f64>| format!("{:?}", (&o.store, o.log_weight, o.log_density));
    let DensityOutcome::Ok(o) = exec_density(c, s, r, fuel) else { return Ok(false) };
    // Running on exactly the consumed part leaves nothing behind.
    let used: RandomDatabase = r.iter().filter(|(k, _)| !o.leftover.contains_key(*k)).map(|(k, v)| (k.clone(), *v)).collect();
    let DensityOutcome::Ok(o2) = exec_density(c, s, &used, fuel) else { return Err("restriction to consumed names failed".into()) };
    if !o2.leftover.is_empty() || key(&o) != key(&o2) {
        return Err(format!("restricted run differs: {o:?} vs {o2:?}"));
    }
    // Unused names pass through untouched.
    let DensityOutcome::Ok(o3) = exec_density(c, s, &union(r, extra), fuel) else { return Err("extension by fresh names failed".into()) };
    if o3.leftover != union(&o.leftover, extra) || key(&o) != key(&o3) {
        return Err(format!("extended run differs: {o:?} vs {o3:?}"));
    }
    Ok(true)
}
