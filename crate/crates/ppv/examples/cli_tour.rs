//! Drives the command-line front end in-process.

use ppv::cli::run;

fn main() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/corpus");
    let pair = format!("{dir}/linear_regression.ppv");
    let branching = format!("{dir}/branching_prior.ppv");
    let runs: Vec<Vec<String>> = vec![
        vec!["parse".into(), pair.clone()],
        vec!["run".into(), pair.clone(), "--seed".into(), "3".into()],
        vec!["check".into(), pair.clone()],
        vec!["check".into(), format!("{dir}/scale_normal_guide.ppv"), "--which".into(), "support".into(), "--json".into(), "--no-meta".into()],
        vec!["kl".into(), branching.clone(), "--theta".into(), "2".into()],
        vec!["svi".into(), branching, "--theta0".into(), "3".into(), "--steps".into(), "200".into()],
        vec!["zones".into(), format!("{dir}/grid.ppv")],
    ];
    let (mut out, mut err) = (std::io::stdout(), std::io::stderr());
    for args in runs {
        println!("$ ppv {}", args.join(" ").replace(dir, "corpus"));
        let code = run(std::iter::once("ppv".to_string()).chain(args), &mut out, &mut err);
        println!("[exit {code}]\n");
    }
}
