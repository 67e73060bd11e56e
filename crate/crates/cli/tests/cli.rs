use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rc_glauber::{exact_measure, BoundaryCondition, Conditioning, Lattice, RcParams};
use serde_json::Value;

fn rcg(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rcg"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_spec(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn run_ok(dir: &Path, spec: &str, out: &str, sub: &str, extra: &[&str]) -> (PathBuf, Value) {
    let mut args = vec!["--spec", spec, "--out", out, sub];
    args.extend_from_slice(extra);
    let o = rcg(dir, &args);
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    (dir.join(v["run_dir"].as_str().unwrap()), v["summary"].clone())
}

fn error_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stderr).expect("stderr is a JSON error")
}

#[test]
fn oracle_matches_library() {
    let tmp = tempfile::tempdir().unwrap();
    write_spec(tmp.path(), "o.json", r#"{"n":2,"p":0.5,"q":2,"bc":"free","seed":7}"#);
    let (dir, summary) = run_ok(tmp.path(), "o.json", "runs", "oracle", &[]);
    let lat = Lattice::new(2).unwrap();
    let m = exact_measure(
        &lat,
        &BoundaryCondition::free(&lat),
        RcParams::new(0.5, 2.0).unwrap(),
        &Conditioning::none(),
    )
    .unwrap();
    assert_eq!(summary["partition_function"].as_f64().unwrap(), m.partition_function());
    let marginals: Vec<f64> = summary["edge_marginals"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert_eq!(marginals, m.edge_marginals());
    assert_eq!(marginals.len(), 4);
    for f in ["spec.json", "rows.csv", "summary.json", "timing.json"] {
        assert!(dir.join(f).exists(), "{f}");
    }
}

#[test]
fn identical_spec_gives_identical_csv() {
    let tmp = tempfile::tempdir().unwrap();
    write_spec(tmp.path(), "c.json", r#"{"n":4,"p":0.5,"q":2,"seed":11,"samples":200}"#);
    let (a, _) = run_ok(tmp.path(), "c.json", "one", "cftp", &[]);
    let (b, _) = run_ok(tmp.path(), "c.json", "two", "cftp", &[]);
    assert_eq!(a.file_name(), b.file_name());
    let ra = std::fs::read(a.join("rows.csv")).unwrap();
    let rb = std::fs::read(b.join("rows.csv")).unwrap();
    assert_eq!(ra, rb);
    assert_eq!(
        std::fs::read(a.join("summary.json")).unwrap(),
        std::fs::read(b.join("summary.json")).unwrap()
    );

    // a different seed is a different run directory
    let (c, _) = run_ok(tmp.path(), "c.json", "one", "cftp", &["--seed", "12"]);
    assert_ne!(a, c);
    assert_ne!(ra, std::fs::read(c.join("rows.csv")).unwrap());
}

#[test]
fn coupling_csv_is_deterministic_across_worker_counts() {
    let tmp = tempfile::tempdir().unwrap();
    write_spec(tmp.path(), "k.json", r#"{"n":6,"p":0.4,"q":2,"seed":5,"replicas":9}"#);
    let (a, summary) = run_ok(tmp.path(), "k.json", "one", "couple", &["--workers", "1"]);
    let (b, _) = run_ok(tmp.path(), "k.json", "two", "couple", &["--workers", "3"]);
    assert_eq!(
        std::fs::read(a.join("rows.csv")).unwrap(),
        std::fs::read(b.join("rows.csv")).unwrap()
    );
    assert_eq!(summary["capped"], 0);
    assert!(summary["median"].as_f64().unwrap() > 0.0);
    let csv = std::fs::read_to_string(a.join("rows.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "replica,coalescence,capped");
    assert_eq!(csv.lines().count(), 10);
}

#[test]
fn dual_sample_goes_through_the_subcritical_dual() {
    let tmp = tempfile::tempdir().unwrap();
    write_spec(tmp.path(), "d.json", r#"{"n":3,"p":0.8,"q":2,"seed":3,"samples":4000}"#);
    let (_, summary) = run_ok(tmp.path(), "d.json", "runs", "dual-sample", &[]);
    let p_star = summary["p_star"].as_f64().unwrap();
    let p_c = summary["p_c"].as_f64().unwrap();
    assert!(p_star < p_c);
    assert_eq!(summary["via_dual"], true);

    let lat = Lattice::new(3).unwrap();
    let exact = exact_measure(
        &lat,
        &BoundaryCondition::free(&lat),
        RcParams::new(0.8, 2.0).unwrap(),
        &Conditioning::none(),
    )
    .unwrap();
    let est = summary["edge_marginals"].as_array().unwrap();
    for (e, truth) in exact.edge_marginals().into_iter().enumerate() {
        let sd = (truth * (1.0 - truth) / 4000.0).sqrt();
        assert!((est[e].as_f64().unwrap() - truth).abs() < 4.5 * sd);
    }
}

#[test]
fn via_dual_flag_on_cftp() {
    let tmp = tempfile::tempdir().unwrap();
    write_spec(tmp.path(), "d.json", r#"{"n":3,"p":0.8,"q":2,"seed":3,"samples":50}"#);
    let (_, summary) = run_ok(tmp.path(), "d.json", "runs", "cftp", &["--via-dual"]);
    assert_eq!(summary["via_dual"], true);
    // below the self-dual point the flag leaves sampling direct
    write_spec(tmp.path(), "s.json", r#"{"n":3,"p":0.3,"q":2,"seed":3,"samples":50}"#);
    let (_, summary) = run_ok(tmp.path(), "s.json", "runs", "cftp", &["--via-dual"]);
    assert_eq!(summary["via_dual"], false);
}

#[test]
fn estimator_outputs_share_columns() {
    let tmp = tempfile::tempdir().unwrap();
    write_spec(
        tmp.path(),
        "decay.json",
        r#"{"n":8,"p":0.4,"q":2,"seed":1,"samples":300,"distances":[1,2,3],"margin":1}"#,
    );
    let (dir, summary) = run_ok(tmp.path(), "decay.json", "runs", "decay", &[]);
    let csv = std::fs::read_to_string(dir.join("rows.csv")).unwrap();
    let header = "experiment,n,p,q,bc,r_or_d,estimate,stderr,samples,backend,seed";
    assert_eq!(csv.lines().next().unwrap(), header);
    assert_eq!(csv.lines().count(), 4);
    assert_eq!(summary["backend"], "cftp");

    write_spec(
        tmp.path(),
        "spatial.json",
        r#"{"n":6,"p":0.5,"q":2,"seed":1,"samples":200,"radii":[1,2],"bc":{"sides":[1,3]}}"#,
    );
    let (dir, summary) = run_ok(tmp.path(), "spatial.json", "runs", "spatial", &[]);
    let csv = std::fs::read_to_string(dir.join("rows.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), header);
    assert!(csv.lines().nth(1).unwrap().contains("sides-1-3"));
    assert_eq!(summary["radii"][0]["backend"], "oracle");
    assert_eq!(summary["radii"][1]["backend"], "coupled-cftp");
}

#[test]
fn sandwich_and_sample_run() {
    let tmp = tempfile::tempdir().unwrap();
    write_spec(
        tmp.path(),
        "w.json",
        r#"{"n":6,"p":0.5,"q":2,"seed":1,"steps":2000,"every":500,"replicas":4,"radii":[1]}"#,
    );
    let (dir, summary) = run_ok(tmp.path(), "w.json", "runs", "sandwich", &[]);
    assert_eq!(summary["containment"], "held");
    let csv = std::fs::read_to_string(dir.join("rows.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 5);

    let (dir, _) = run_ok(tmp.path(), "w.json", "runs", "sample", &[]);
    let csv = std::fs::read_to_string(dir.join("rows.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 4);
}

#[test]
fn scaling_table() {
    let tmp = tempfile::tempdir().unwrap();
    write_spec(
        tmp.path(),
        "s.json",
        r#"{"p":0.4,"q":2,"seed":1,"sizes":[4,6,8],"replicas":5}"#,
    );
    let (_, summary) = run_ok(tmp.path(), "s.json", "runs", "scaling", &[]);
    assert_eq!(summary["rows"].as_array().unwrap().len(), 3);
    assert!(summary["ratio_spread"].as_f64().unwrap() >= 1.0);

    write_spec(tmp.path(), "t.json", r#"{"p":0.4,"q":2,"seed":1,"sizes":[4,6]}"#);
    let o = rcg(tmp.path(), &["--spec", "t.json", "scaling"]);
    assert!(!o.status.success());
    assert!(error_json(&o)["message"].as_str().unwrap().contains("3 sizes"));
}

#[test]
fn invalid_specs_fail_with_json() {
    let tmp = tempfile::tempdir().unwrap();
    for (i, body) in [
        r#"{"n":4,"p":1.5,"q":2,"seed":1}"#,
        r#"{"n":4,"p":0.5,"q":0.5,"seed":1}"#,
        r#"{"n":4,"p":0.5,"q":2}"#,
        r#"{"n":4,"p":0.5,"q":2,"seed":1,"colour":"red"}"#,
        r#"{"n":1,"p":0.5,"q":2,"seed":1}"#,
        r#"{"n":4,"p":0.5,"q":2,"seed":1,"bc":{"sides":[5]}}"#,
        r#"{"kind":"couple","n":4,"p":0.5,"q":2,"seed":1}"#,
    ]
    .iter()
    .enumerate()
    {
        let name = format!("bad{i}.json");
        write_spec(tmp.path(), &name, body);
        let o = rcg(tmp.path(), &["--spec", &name, "cftp"]);
        assert_eq!(o.status.code(), Some(2), "{body}");
        assert_eq!(error_json(&o)["error"], "invalid_spec", "{body}");
    }
    assert!(!tmp.path().join("runs").exists());
}

#[test]
fn cftp_cap_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    write_spec(
        tmp.path(),
        "c.json",
        r#"{"n":6,"p":0.5,"q":2,"seed":1,"samples":3,"cftp_cap":8}"#,
    );
    let o = rcg(tmp.path(), &["--spec", "c.json", "cftp"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(error_json(&o)["error"], "cap_exceeded");
}

#[test]
fn unknown_suite_is_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = rcg(tmp.path(), &["acceptance", "everything"]);
    assert!(!o.status.success());
    assert!(error_json(&o)["message"].as_str().unwrap().contains("unknown suite"));
}

#[test]
fn acceptance_exact_suite_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let o = rcg(tmp.path(), &["acceptance", "exact"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let out = String::from_utf8_lossy(&o.stdout);
    assert_eq!(out.lines().filter(|l| l.starts_with("PASS")).count(), 2);
}
