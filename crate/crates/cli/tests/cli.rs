use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn gridcomm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gridcomm"))
        .args(args)
        .env_remove("GRIDCOMM_JOBS")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn json(out: &Output) -> Value {
    assert_eq!(code(out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn validate_reports_the_bundled_fixture() {
    let v = json(&gridcomm(&["validate", "case5"]));
    assert_eq!(v["nodes"], 5);
    assert_eq!(v["lines"], 4);
    assert_eq!(v["generators"], 1);
    assert_eq!(v["omega_min"], 59.5);
}

#[test]
fn validate_rejects_a_positive_load() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(
        dir.path(),
        "bad.json",
        r#"{"nodes":[{"id":1,"kind":"generator","pg_init":0.5,"pg_max":1.0},{"id":2,"kind":"load","pl_init":0.5}],
            "lines":[{"id":1,"from":1,"to":2,"x":0.1,"f_max":1.0}]}"#,
    );
    let out = gridcomm(&["validate", &path]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("load"));
}

#[test]
fn unreadable_and_malformed_inputs_exit_2() {
    assert_eq!(code(&gridcomm(&["validate", "no/such/case.json"])), 2);
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "junk.json", "{\"nodes\": [");
    assert_eq!(code(&gridcomm(&["validate", &path])), 2);
    assert_eq!(code(&gridcomm(&["solve-full", "case5", "--fail", "99"])), 2);
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(code(&gridcomm(&[])), 1);
    assert_eq!(code(&gridcomm(&["frobnicate"])), 1);
    assert_eq!(
        code(&gridcomm(&[
            "solve-partial",
            "case5",
            "--uncontrollable",
            "2",
            "--mode",
            "sometimes"
        ])),
        1
    );
    assert_eq!(code(&gridcomm(&["solve-full", "case5", "--fail", "one"])), 1);
    assert_eq!(code(&gridcomm(&["--help"])), 0);
}

#[test]
fn intact_fixture_serves_everything() {
    let v = json(&gridcomm(&["solve-full", "case5"]));
    assert!((v["yield"]["ratio"].as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn losing_the_only_generator_sheds_everything() {
    let v = json(&gridcomm(&["solve-full", "case5", "--fail", "1"]));
    assert!(v["yield"]["ratio"].as_f64().unwrap().abs() < 1e-9);
}

#[test]
fn tripped_transit_bus_matches_full_control() {
    let full = json(&gridcomm(&["solve-full", "transit", "--fail", "7"]));
    let part = json(&gridcomm(&[
        "solve-partial",
        "transit",
        "--fail",
        "7",
        "--uncontrollable",
        "2",
        "--mode",
        "zero",
    ]));
    let (f, p) = (
        full["yield"]["ratio"].as_f64().unwrap(),
        part["yield"]["ratio"].as_f64().unwrap(),
    );
    assert!((f - p).abs() < 1e-6, "full {f} partial {p}");
    assert_eq!(part["areas"][0]["stable"], true);
}

#[test]
fn held_area_without_generation_collapses() {
    let v = json(&gridcomm(&["cascade", "transit", "--island", "2,5", "--mode", "init"]));
    let area = &v[0];
    assert_eq!(area["stability"]["stable"], false);
    assert_eq!(area["stability"]["diagnostic"], "no-equilibrium");
    assert_eq!(area["cascade"]["served"].as_f64().unwrap(), 0.0);
    assert!(!area["cascade"]["actions"].as_array().unwrap().is_empty());
}

#[test]
fn infeasible_model_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    // the generator cannot go below 0.2 but its only line carries 0.05
    let path = write(
        dir.path(),
        "stuck.json",
        r#"{"nodes":[{"id":1,"kind":"generator","pg_init":0.2,"pg_min":0.2,"pg_max":0.5},{"id":2,"kind":"bus"},
                     {"id":3,"kind":"load","pl_init":-0.2}],
            "lines":[{"id":1,"from":1,"to":2,"x":0.1,"f_max":0.05},{"id":2,"from":2,"to":3,"x":0.1,"f_max":1.0}]}"#,
    );
    assert_eq!(code(&gridcomm(&["solve-full", &path])), 3);
}

const SWEEP: &str = r#"{"master_seed": 11, "replications": 6, "runs": [
    {"n_failed": 1, "n_uncontrollable": 2, "cluster_size": 1, "mode": "init"},
    {"n_failed": 1, "n_uncontrollable": 2, "cluster_size": 1, "mode": "zero"},
    {"n_failed": 2, "n_uncontrollable": 4, "cluster_size": 2, "mode": "init"}]}"#;

#[test]
fn sweep_output_does_not_depend_on_job_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "sweep.json", SWEEP);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let run = |out: &Path, jobs: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_gridcomm"))
            .args([
                "sweep",
                "case30",
                "--config",
                &cfg,
                "--out",
                out.to_str().unwrap(),
                "--details",
                "--verify",
            ])
            .env("GRIDCOMM_JOBS", jobs)
            .output()
            .unwrap();
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    };
    run(&a, "1");
    run(&b, "3");
    let csv = std::fs::read_to_string(a.join("results.csv")).unwrap();
    assert_eq!(csv, std::fs::read_to_string(b.join("results.csv")).unwrap());
    assert_eq!(
        std::fs::read(a.join("details.jsonl")).unwrap(),
        std::fs::read(b.join("details.jsonl")).unwrap()
    );
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("n_failed,n_uncontrollable,cluster_size,mode,mean_yield_partial,mean_yield_full,frac_unstable,frac_pzero_gt_pinit,replications,master_seed")
    );
    assert_eq!(lines.count(), 3);
    let details = std::fs::read_to_string(a.join("details.jsonl")).unwrap();
    assert_eq!(details.lines().count(), 18);
}

#[test]
fn sweep_without_details_writes_only_the_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "sweep.json", SWEEP);
    let out = dir.path().join("o");
    assert_eq!(
        code(&gridcomm(&[
            "sweep",
            "case30",
            "--config",
            &cfg,
            "--out",
            out.to_str().unwrap(),
            "--jobs",
            "2"
        ])),
        0
    );
    assert!(out.join("results.csv").exists());
    assert!(!out.join("details.jsonl").exists());
}

#[test]
fn bad_sweep_configs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let out = out.to_str().unwrap();
    let uneven = write(
        dir.path(),
        "uneven.json",
        r#"{"master_seed": 1, "runs": [{"n_failed": 0, "n_uncontrollable": 3, "cluster_size": 2, "mode": "init"}]}"#,
    );
    assert_eq!(
        code(&gridcomm(&["sweep", "case30", "--config", &uneven, "--out", out])),
        2
    );
    let unknown = write(
        dir.path(),
        "unknown.json",
        r#"{"master_seed": 1, "runs": [], "colour": "red"}"#,
    );
    assert_eq!(
        code(&gridcomm(&["sweep", "case30", "--config", &unknown, "--out", out])),
        2
    );
    assert_eq!(
        code(&gridcomm(&[
            "sweep",
            "case30",
            "--config",
            "missing.json",
            "--out",
            out
        ])),
        2
    );
    assert_eq!(
        code(&gridcomm(&[
            "sweep", "case30", "--config", &uneven, "--out", out, "--jobs", "0"
        ])),
        1
    );
}

#[test]
fn dump_writes_the_model() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.lp");
    let p = path.to_str().unwrap();
    json(&gridcomm(&[
        "solve-partial",
        "transit",
        "--uncontrollable",
        "2",
        "--mode",
        "init",
        "--dump",
        p,
    ]));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("Minimize"));
    assert!(text.contains("Binaries"));
    assert!(text.trim_end().ends_with("End"));
}
