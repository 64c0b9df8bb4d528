//! Affine and exponential bounds on expressions, checked on random points.

use std::collections::BTreeMap;

use ppv::analyses::bounds::{bound_holds, bound_infer, BoundKind};
use ppv::lang::{parse_real, vars_of_real, Registry};
use rand::{Rng, SeedableRng};

fn main() {
    let reg = Registry::standard();
    let mut rng = rand::rngs::StdRng::seed_from_u64(0);
    for src in ["3 * x - y + 1", "exp(x) * 2", "tanh(x) + sigmoid(y)", "softplus(x - y)", "1 / (abs(x) + 2)", "x * y", "log(x)"] {
        let e = parse_real(src).unwrap();
        let vars = vars_of_real(&e);
        let b = bound_infer(&e, &vars, reg);
        println!("{src}");
        let mut forms = Vec::new();
        if let Some(f) = &b.affine {
            println!("  |e| <= {f}");
            forms.push((BoundKind::Affine, f.clone()));
        }
        if let Some(f) = &b.affexp {
            println!("  |e| <= exp({f})");
            forms.push((BoundKind::AffExp, f.clone()));
        }
        if let Some(f) = &b.pos_lower {
            println!("  e >= exp(-({f}))");
            forms.push((BoundKind::PosLower, f.clone()));
        }
        if forms.is_empty() {
            println!("  no bound");
        }
        let mut violations = 0;
        for _ in 0..1000 {
            let pt: BTreeMap<String, f64> = vars.iter().map(|v| (v.clone(), rng.random_range(-20.0..20.0))).collect();
            for (k, f) in &forms {
                if bound_holds(&e, *k, f, &pt, reg) == Some(false) {
                    violations += 1;
                }
            }
        }
        println!("  violations on 1000 points: {violations}");
    }
}
