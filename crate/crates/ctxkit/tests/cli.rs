use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::sync::Arc;

use ctxkit::json;
use ctxkit::schema::{self, BehaviorDoc, Loader};
use ctxkit_core::cycle::build_cycle;
use ctxkit_core::wiring::{identity_pre, post_scenario, relabel_component, PostFamily, Wiring};
use ctxkit_core::Bits;
use serde_json::Value;

fn ctxkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ctxkit"))
        .args(args)
        .output()
        .expect("run ctxkit")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "{e}: stdout {:?} stderr {:?}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn gen_pr(dir: &Path) -> String {
    let path = dir.join("pr.json");
    let out = ctxkit(&[
        "cycle",
        "gen",
        "--b",
        "4",
        "--gamma",
        "1000",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    path.to_str().unwrap().to_string()
}

#[test]
fn check_nc_reports_an_inequality_for_the_pr_box() {
    let dir = tempfile::tempdir().unwrap();
    let pr = gen_pr(dir.path());
    let out = ctxkit(&["check-nc", &pr]);
    assert_eq!(out.status.code(), Some(0));
    let v = report(&out);
    assert_eq!(v["verdict"], "contextual");
    assert_eq!(v["certificate"]["kind"], "inequality");
    assert!(v["certificate"]["gap"].as_f64().unwrap() > 0.1);
    assert!((v["distance"].as_f64().unwrap() - 0.125).abs() < 1e-12);
}

#[test]
fn check_nc_lists_weights_for_a_deterministic_box() {
    let out = {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("z.json");
        let g = ctxkit(&[
            "cycle",
            "gen",
            "--b",
            "5",
            "--zeta",
            "01101",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(g.status.code(), Some(0));
        ctxkit(&["check-nc", path.to_str().unwrap()])
    };
    let v = report(&out);
    assert_eq!(v["verdict"], "noncontextual");
    assert_eq!(v["certificate"]["kind"], "weights");
    assert_eq!(
        v["certificate"]["strategies"][0],
        serde_json::json!([0, 3, 5, 6, 9])
    );
}

#[test]
fn check_nd_on_the_pr_box() {
    let dir = tempfile::tempdir().unwrap();
    let pr = gen_pr(dir.path());
    let out = ctxkit(&["check-nd", &pr]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["ok"], true);
}

#[test]
fn malformed_json_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, "{\"buttons\": 2, ").unwrap();
    let out = ctxkit(&["validate", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let missing = ctxkit(&["validate", dir.path().join("none.json").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn schema_errors_name_the_json_path() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("b.json");
    fs::write(
        &path,
        r#"{"scenario": {"buttons": 1, "lights": 2, "contexts": [[0]], "light_edges": [[0, 1]]},
            "table": [{"context": 0, "outcomes": [{"on": [0], "p": "half"}]}]}"#,
    )
    .unwrap();
    let out = ctxkit(&["check-nd", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("table[0].outcomes[0].p"), "{err}");
}

#[test]
fn unnormalized_behavior_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("b.json");
    fs::write(
        &path,
        r#"{"scenario": {"buttons": 1, "lights": 2, "contexts": [[0]], "light_edges": [[0, 1]]},
            "table": [{"context": 0, "outcomes": [{"on": [0], "p": 0.5}, {"on": [1], "p": 0.4}]}]}"#,
    )
    .unwrap();
    let out = ctxkit(&["validate", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let v = report(&out);
    assert_eq!(v["ok"], false);
    assert_eq!(v["violations"][0]["rule"], "normalization");
    assert_eq!(
        ctxkit(&["check-nc", path.to_str().unwrap()]).status.code(),
        Some(1)
    );
}

#[test]
fn scenario_paths_resolve_next_to_the_file() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("s.json"),
        r#"{"buttons": 1, "lights": 2, "contexts": [[0]], "light_edges": [[0, 1]]}"#,
    )
    .unwrap();
    let path = dir.path().join("b.json");
    fs::write(
        &path,
        r#"{"scenario": "s.json", "table": [{"context": 0, "outcomes": [{"on": [0], "p": 0.25}, {"on": [1], "p": 0.75}]}]}"#,
    )
    .unwrap();
    let out = ctxkit(&["validate", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["kind"], "behavior");
}

#[test]
fn identity_wiring_leaves_the_box_unchanged() {
    let dir = tempfile::tempdir().unwrap();
    let pr = gen_pr(dir.path());
    let target = Arc::new(build_cycle(4).unwrap());
    let pre = identity_pre(&target).unwrap();
    let l = target.num_lights();
    let edges = (0..l).map(|a| Bits::singleton(l, a)).collect();
    let post_in = Arc::new(post_scenario(&target, l, edges).unwrap());
    let comp = relabel_component(&pre, &target, &post_in, 1.0, |a| a).unwrap();
    let w = Wiring::new(pre, PostFamily::new(post_in, vec![comp]), target);
    let wpath = dir.path().join("w.json");
    json::write(&wpath, &schema::wiring_doc(&w)).unwrap();

    let v = ctxkit(&["validate", wpath.to_str().unwrap()]);
    assert_eq!(
        v.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&v.stdout)
    );
    let opath = dir.path().join("out.json");
    let out = ctxkit(&[
        "wire",
        wpath.to_str().unwrap(),
        &pr,
        "--out",
        opath.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(
        fs::read_to_string(&opath).unwrap(),
        fs::read_to_string(&pr).unwrap()
    );
}

#[test]
fn rc_prints_the_summary_and_the_argmin() {
    let dir = tempfile::tempdir().unwrap();
    let pr = gen_pr(dir.path());
    let argmin = dir.path().join("argmin.json");
    let out = ctxkit(&["rc", &pr, "--argmin", argmin.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = report(&out);
    assert!((v["value_bits"].as_f64().unwrap() - (4.0f64 / 3.0).log2()).abs() < 1e-6);
    assert_eq!(v["converged"], true);
    assert!(v["iterations"].as_u64().unwrap() > 0);
    assert!(v["worst_context"].as_u64().unwrap() < 4);
    let check = ctxkit(&["validate", "--kind", "nc-box", argmin.to_str().unwrap()]);
    assert_eq!(check.status.code(), Some(0));
}

#[test]
fn cycle_gen_output_loads_back() {
    let out = ctxkit(&["cycle", "gen", "--b", "5", "--gamma", "10000"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let doc: BehaviorDoc = json::parse(Path::new("stdout"), &text).unwrap();
    let b = Loader::new(Path::new("stdout")).behavior(&doc).unwrap();
    assert_eq!(b.scenario().num_buttons(), 5);
    assert!(b.validate(1e-9).ok);
    assert_eq!(
        ctxkit(&["cycle", "gen", "--b", "5", "--gamma", "11000"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn bit_demo_reports_small_residuals() {
    let out = ctxkit(&[
        "cycle", "bit-demo", "--b", "4", "--seed", "7", "--count", "5",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = report(&out);
    assert_eq!(v["instances"].as_array().unwrap().len(), 5);
    assert!(v["worst_residual"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn prop_suite_seed_override_keeps_verdicts() {
    let a = ctxkit(&["prop-suite", "--scale", "0.05", "--seed", "3"]);
    let b = ctxkit(&["prop-suite", "--scale", "0.05", "--seed", "4"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(b.status.code(), Some(0));
    let (va, vb) = (report(&a), report(&b));
    assert_eq!(va["pass"], vb["pass"]);
    assert_ne!(va["seed"], vb["seed"]);
    let only = ctxkit(&["prop-suite", "--scale", "0.05", "--suite", "monotonicity"]);
    assert_eq!(report(&only)["suites"].as_array().unwrap().len(), 1);
}

#[test]
fn bad_flags_are_usage_errors() {
    assert_eq!(
        ctxkit(&["prop-suite", "--eps-lp", "-1"]).status.code(),
        Some(2)
    );
    assert_eq!(
        ctxkit(&["prop-suite", "--suite", "nope"]).status.code(),
        Some(2)
    );
}
