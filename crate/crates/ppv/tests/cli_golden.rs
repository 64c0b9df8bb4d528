//! Golden-file tests for every command-line path. Each golden file holds the
//! exit code, stdout and stderr of one invocation. Set `UPDATE_GOLDEN=1` to
//! rewrite them.

use std::path::Path;

use ppv::cli::run;

fn invoke(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(std::iter::once("ppv").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn golden(name: &str, args: &[&str]) {
    let (code, out, err) = invoke(args);
    let got = format!("$ ppv {}\n[exit {code}]\n--- stdout\n{out}--- stderr\n{err}", args.join(" "));
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(format!("{name}.txt"));
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &got).unwrap();
        return;
    }
    let want = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}; run with UPDATE_GOLDEN=1", path.display()));
    assert_eq!(got, want, "golden mismatch for {name}");
}

macro_rules! goldens {
    ($($name:ident: [$($a:expr),*];)*) => {
        $(
            #[test]
            fn $name() {
                golden(stringify!($name), &[$($a),*]);
            }
        )*
    };
}

goldens! {
    parse_text: ["parse", "corpus/linear_regression.ppv"];
    parse_json: ["parse", "corpus/grid.ppv", "--json", "--no-meta"];
    parse_with_issue: ["parse", "tests/fixtures/scored_guide.ppv"];
    parse_syntax_error: ["parse", "tests/fixtures/bad_syntax.ppv"];
    parse_missing_file: ["parse", "tests/fixtures/absent.ppv"];
    run_model: ["run", "tests/fixtures/model_only.ppv", "--seed", "4"];
    run_guide_json: ["run", "corpus/linear_regression.ppv", "--use-guide", "--theta", "0.5,-1,2,0", "--json", "--no-meta"];
    run_wrong_theta: ["run", "corpus/linear_regression.ppv", "--use-guide", "--theta", "1"];
    run_out_of_fuel: ["run", "tests/fixtures/spin.ppv", "--fuel", "50"];
    run_no_guide: ["run", "tests/fixtures/model_only.ppv", "--use-guide"];
    svi_text: ["svi", "corpus/branching_prior.ppv", "--theta0", "3", "--steps", "40"];
    svi_json_split_files: ["svi", "--model", "tests/fixtures/model_only.ppv", "--guide", "tests/fixtures/guide_only.ppv", "--steps", "20", "--samples", "8", "--lr", "0.05", "--json", "--no-meta"];
    svi_adam: ["svi", "corpus/branching_prior.ppv", "--theta0", "3", "--steps", "200", "--lr", "0.05", "--adam"];
    svi_support_violation: ["svi", "corpus/scale_normal_guide.ppv", "--theta0", "0", "--steps", "5"];
    kl_point: ["kl", "corpus/branching_prior.ppv", "--theta", "3"];
    kl_point_json: ["kl", "corpus/branching_prior.ppv", "--theta", "2", "--json", "--no-meta"];
    kl_grid: ["kl", "corpus/branching_prior.ppv", "--grid", "-1:3:0.5"];
    kl_divergent: ["kl", "corpus/scale_uniform_guide.ppv"];
    kl_divergent_json: ["kl", "corpus/scale_uniform_guide.ppv", "--json", "--no-meta"];
    kl_bad_grid: ["kl", "corpus/branching_prior.ppv", "--grid", "3:1:0.5"];
    check_safe: ["check", "corpus/linear_regression.ppv"];
    check_support_mismatch: ["check", "corpus/scale_normal_guide.ppv"];
    check_measure_mismatch_json: ["check", "corpus/topic_point_mass.ppv", "--which", "support", "--json", "--no-meta"];
    check_diff_only: ["check", "corpus/sliding_uniform_guide.ppv", "--which", "diff"];
    check_c2b_only: ["check", "corpus/scale_uniform_guide.ppv", "--which", "c2b"];
    check_c456_only: ["check", "corpus/grid.ppv", "--which", "c456", "--id", "grid-pair"];
    check_strict_support: ["check", "corpus/hierarchy.ppv", "--which", "support", "--strict-support"];
    check_unknown_which: ["check", "corpus/grid.ppv", "--which", "r9"];
    check_missing_guide: ["check", "--model", "tests/fixtures/model_only.ppv"];
    corpus_table: ["corpus", "corpus/manifest.toml", "--no-meta"];
    corpus_json: ["corpus", "corpus/manifest.toml", "--json", "--no-meta"];
    zones_text: ["zones", "corpus/grid.ppv"];
    zones_json: ["zones", "corpus/grid_short_rows.ppv", "--use-guide", "--json", "--no-meta"];
    zones_unknown: ["zones", "corpus/triangle.ppv"];
    no_subcommand: [];
    unknown_flag: ["check", "--bogus"];
}

#[test]
fn identical_invocations_are_byte_identical() {
    for args in [
        &["check", "corpus/grid.ppv", "--json", "--no-meta"][..],
        &["svi", "corpus/branching_prior.ppv", "--steps", "30", "--json", "--no-meta"],
        &["corpus", "corpus/manifest.toml", "--json", "--no-meta"],
    ] {
        assert_eq!(invoke(args), invoke(args));
    }
}

#[test]
fn json_reports_round_trip() {
    let (_, out, _) = invoke(&["check", "corpus/linear_regression.ppv", "--json"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["overall"], "SVI-safe");
    assert!(v["meta"]["elapsed_ms"].as_f64().is_some());
    let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
    assert_eq!(keys, ["pair_id", "requirements", "overall", "meta"]);
    for args in [
        &["check", "corpus/scale_normal_guide.ppv", "--json", "--no-meta"][..],
        &["corpus", "corpus/manifest.toml", "--json", "--no-meta"],
        &["zones", "corpus/grid.ppv", "--json", "--no-meta"],
    ] {
        let (_, out, _) = invoke(args);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(serde_json::to_string_pretty(&v).unwrap(), out.trim_end());
    }
}

#[test]
fn trajectory_csv_is_written() {
    let dir = std::env::temp_dir().join(format!("ppv-traj-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("traj.csv");
    let (code, _, _) = invoke(&["svi", "corpus/branching_prior.ppv", "--steps", "10", "--trajectory", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    let csv = std::fs::read_to_string(&path).unwrap();
    assert!(csv.starts_with("step,theta,grad_theta\n"));
    assert_eq!(csv.lines().count(), 12);
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_ppv");
    let code = |args: &[&str]| std::process::Command::new(bin).args(args).output().unwrap().status.code().unwrap();
    assert_eq!(code(&["check", "corpus/linear_regression.ppv"]), 0);
    assert_eq!(code(&["check", "corpus/scale_normal_guide.ppv", "--which", "support"]), 1);
    assert_eq!(code(&["check", "corpus/triangle.ppv", "--which", "support"]), 2);
    assert_eq!(code(&["parse", "tests/fixtures/bad_syntax.ppv"]), 3);
}

#[test]
fn fuel_from_environment() {
    let bin = env!("CARGO_BIN_EXE_ppv");
    let out = std::process::Command::new(bin).args(["run", "tests/fixtures/spin.ppv"]).env("PPV_FUEL", "100").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("fuel"));
}
