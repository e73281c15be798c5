use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn scrn(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scrn"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn scrn")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

/// stderr must be exactly one JSON object on one line.
fn stderr_json(o: &Output) -> Value {
    let text = String::from_utf8(o.stderr.clone()).unwrap();
    assert_eq!(text.trim_end().lines().count(), 1, "stderr: {text}");
    let v: Value = serde_json::from_str(text.trim()).expect("stderr is JSON");
    assert!(v["error"].is_string() && v["message"].is_string());
    v
}

fn read_json(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join(name)).unwrap()).unwrap()
}

fn setup() -> tempfile::TempDir {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(&scrn(d.path(), &["gen", "xor", "--out", "xor.csv"])), 0);
    assert_eq!(code(&scrn(d.path(), &["gen", "rings", "--out", "rings.csv"])), 0);
    d
}

#[test]
fn gen_writes_csv_with_header() {
    let d = setup();
    let text = std::fs::read_to_string(d.path().join("xor.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), "x1,x2,label");
    assert_eq!(text.lines().count(), 5);
    let o = scrn(
        d.path(),
        &["gen", "blobs", "--classes", "4", "--dim", "3", "--out", "b.csv"],
    );
    assert_eq!(code(&o), 0);
    assert_eq!(stdout_json(&o)["pairwise_mutual_convex"], true);
}

#[test]
fn gen_rejects_bad_parameters() {
    let d = tempfile::tempdir().unwrap();
    let o = scrn(d.path(), &["gen", "rings", "--rin", "4", "--out", "r.csv"]);
    assert_eq!(code(&o), 2);
    assert_eq!(stderr_json(&o)["error"], "ConfigError");
}

#[test]
fn check_verdicts_on_xor() {
    let d = setup();
    let o = scrn(d.path(), &["check", "--data", "xor.csv", "--mode", "linear"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout_json(&o)["separable"], false);
    let o = scrn(d.path(), &["check", "--data", "xor.csv", "--mode", "mutual_convex"]);
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    assert_eq!(v["separable"], true);
    assert!((v["distance"].as_f64().unwrap() - 0.5f64.sqrt()).abs() < 1e-6);
}

#[test]
fn check_linear_witness_separates() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("l.csv"), "x1,x2,label\n0,0,0\n1,0,0\n3,3,1\n4,3,1\n").unwrap();
    let v = stdout_json(&scrn(d.path(), &["check", "--data", "l.csv", "--mode", "linear"]));
    assert_eq!(v["separable"], true);
    let w: Vec<f64> = serde_json::from_value(v["witness"]["w"].clone()).unwrap();
    let b = v["witness"]["b"].as_f64().unwrap();
    let f = |x: [f64; 2]| w[0] * x[0] + w[1] * x[1] + b;
    assert!(f([0.0, 0.0]) > 0.0 && f([1.0, 0.0]) > 0.0);
    assert!(f([3.0, 3.0]) < 0.0 && f([4.0, 3.0]) < 0.0);
}

#[test]
fn usage_errors_exit_2() {
    let d = setup();
    for args in [
        &["check", "--data", "missing.csv", "--mode", "linear"][..],
        &["check", "--data", "xor.csv", "--mode", "sideways"],
        &["check", "--data", "xor.csv", "--mode", "linear", "--classes", "0"],
        &[
            "train", "--data", "xor.csv", "--arch", "shl", "--hidden", "0", "--out", "m.json",
        ],
        &[
            "train", "--data", "xor.csv", "--arch", "shl", "--init", "warm", "--out", "m.json",
        ],
        &["verify", "--suite", "everything"],
        &["frobnicate"],
    ] {
        let o = scrn(d.path(), args);
        assert_eq!(code(&o), 2, "{args:?}");
        stderr_json(&o);
    }
}

#[test]
fn malformed_csv_is_a_parse_error() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("bad.csv"), "x1,x2,label\n0,0,0\n1,oops,1\n").unwrap();
    let o = scrn(d.path(), &["check", "--data", "bad.csv", "--mode", "linear"]);
    assert_eq!(code(&o), 2);
    assert_eq!(stderr_json(&o)["error"], "ParseError");
}

#[test]
fn construct_shl_on_xor_reaches_unit_margins() {
    let d = setup();
    let o = scrn(
        d.path(),
        &["construct", "--data", "xor.csv", "--method", "shl", "--out", "m.json"],
    );
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    assert!(v["min_positive_margin"].as_f64().unwrap() >= 1.0 - 1e-9);
    assert!(v["max_negative_margin"].as_f64().unwrap() <= -1.0 + 1e-9);
    assert_eq!(read_json(d.path(), "m.json")["kind"], "scrn1");
}

#[test]
fn construct_shl_on_rings_names_the_interior_point() {
    let d = setup();
    let o = scrn(
        d.path(),
        &["construct", "--data", "rings.csv", "--method", "shl", "--out", "m.json"],
    );
    assert_eq!(code(&o), 1);
    let v = stderr_json(&o);
    assert_eq!(v["error"], "NotConvexlySeparable");
    // the center is the last row of the ring file
    assert_eq!(v["row"], 16);
    assert!(!d.path().join("m.json").exists());
}

#[test]
fn construct_thl_on_rings_succeeds() {
    let d = setup();
    let o = scrn(
        d.path(),
        &["construct", "--data", "rings.csv", "--method", "thl", "--out", "m.json"],
    );
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    assert!(v["min_positive_margin"].as_f64().unwrap() > 0.0);
    assert!(v["max_negative_margin"].as_f64().unwrap() < 0.0);
}

#[test]
fn construct_multiclass_sign_pattern() {
    let d = tempfile::tempdir().unwrap();
    scrn(d.path(), &["gen", "blobs", "--classes", "3", "--out", "b.csv"]);
    for method in ["shl-multi", "thl-multi"] {
        let o = scrn(
            d.path(),
            &["construct", "--data", "b.csv", "--method", method, "--out", "m.json"],
        );
        assert_eq!(code(&o), 0, "{method}");
        assert_eq!(stdout_json(&o)["sign_pattern_ok"], true, "{method}");
    }
}

#[test]
fn train_writes_model_trace_and_report() {
    let d = setup();
    let o = scrn(
        d.path(),
        &[
            "train", "--data", "xor.csv", "--arch", "shl", "--hidden", "3", "--seed", "4", "--out", "m.json",
            "--trace", "t.csv", "--report", "r.json",
        ],
    );
    assert_eq!(code(&o), 0);
    let trace = std::fs::read_to_string(d.path().join("t.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(lines.next().unwrap(), "iteration,objective,surrogate_min,time_ms");
    let objectives: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(objectives.windows(2).all(|w| w[1] <= w[0] + 1e-9));
    let report = read_json(d.path(), "r.json");
    for key in ["j_pos", "j_neg", "r", "total", "accuracy"] {
        assert!(report[key].is_number(), "{key}");
    }
    assert_eq!(read_json(d.path(), "m.json")["kind"], "canonical_shl");
}

#[test]
fn train_thl_constructive_on_rings_does_not_increase_objective() {
    let d = setup();
    let o = scrn(
        d.path(),
        &[
            "train",
            "--data",
            "rings.csv",
            "--arch",
            "thl",
            "--hidden",
            "12,4",
            "--init",
            "constructive",
            "--max-outer",
            "10",
            "--out",
            "m.json",
            "--trace",
            "t.csv",
        ],
    );
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    assert!(v["final_objective"].as_f64().unwrap() <= v["initial_objective"].as_f64().unwrap());
    assert_eq!(v["accuracy"], 1.0);
}

#[test]
fn train_warm_start_from_constructed_model() {
    let d = setup();
    scrn(
        d.path(),
        &["construct", "--data", "xor.csv", "--method", "shl", "--out", "c.json"],
    );
    let o = scrn(
        d.path(),
        &[
            "train", "--data", "xor.csv", "--arch", "shl", "--init", "warm", "--model", "c.json", "--out", "m.json",
        ],
    );
    assert_eq!(code(&o), 0);
    assert_eq!(stdout_json(&o)["accuracy"], 1.0);
}

#[test]
fn train_multiclass_trace_has_class_column() {
    let d = tempfile::tempdir().unwrap();
    scrn(d.path(), &["gen", "blobs", "--classes", "3", "--out", "b.csv"]);
    let o = scrn(
        d.path(),
        &[
            "train",
            "--data",
            "b.csv",
            "--arch",
            "shl",
            "--max-outer",
            "5",
            "--out",
            "m.json",
            "--trace",
            "t.csv",
        ],
    );
    assert_eq!(code(&o), 0);
    let trace = std::fs::read_to_string(d.path().join("t.csv")).unwrap();
    assert!(trace.starts_with("class,iteration,"));
    let classes: std::collections::BTreeSet<&str> =
        trace.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(classes.into_iter().collect::<Vec<_>>(), ["0", "1", "2"]);
    let model = read_json(d.path(), "m.json");
    assert_eq!(model["kind"], "scrn1");
}

#[test]
fn decompose_xor_gives_two_covering_subsets() {
    let d = setup();
    scrn(
        d.path(),
        &["construct", "--data", "xor.csv", "--method", "shl", "--out", "m.json"],
    );
    let o = scrn(
        d.path(),
        &[
            "decompose",
            "--data",
            "xor.csv",
            "--model",
            "m.json",
            "--mode",
            "shl",
            "--out",
            "r.json",
        ],
    );
    assert_eq!(code(&o), 0);
    let r = read_json(d.path(), "r.json");
    assert_eq!(r["subsets"].as_array().unwrap().len(), 2);
    assert_eq!(r["coverage_ok"], true);
}

#[test]
fn decompose_rings_thl_subsets_are_convexly_separable() {
    let d = setup();
    scrn(
        d.path(),
        &["construct", "--data", "rings.csv", "--method", "thl", "--out", "m.json"],
    );
    let o = scrn(
        d.path(),
        &[
            "decompose",
            "--data",
            "rings.csv",
            "--model",
            "m.json",
            "--mode",
            "thl",
            "--out",
            "r.json",
        ],
    );
    assert_eq!(code(&o), 0);
    let r = read_json(d.path(), "r.json");
    let subsets = r["subsets"].as_array().unwrap();
    assert!(!subsets.is_empty());
    assert!(subsets.iter().all(|s| s["convexly_separable"] == true));

    let o = scrn(
        d.path(),
        &[
            "decompose",
            "--data",
            "rings.csv",
            "--model",
            "m.json",
            "--mode",
            "drill",
            "--out",
            "dd.json",
        ],
    );
    assert_eq!(code(&o), 0);
    assert_eq!(read_json(d.path(), "dd.json")["all_verified"], true);
}

#[test]
fn decompose_wrong_pairing_exits_1() {
    let d = setup();
    scrn(
        d.path(),
        &["construct", "--data", "xor.csv", "--method", "shl", "--out", "m.json"],
    );
    std::fs::write(d.path().join("far.csv"), "x1,x2,label\n5,5,0\n6,5,0\n0,0,1\n").unwrap();
    let o = scrn(
        d.path(),
        &[
            "decompose",
            "--data",
            "far.csv",
            "--model",
            "m.json",
            "--mode",
            "shl",
            "--out",
            "r.json",
        ],
    );
    assert_eq!(code(&o), 1);
    assert_eq!(stderr_json(&o)["error"], "ModelDoesNotSeparate");
}

#[test]
fn plot_outputs() {
    let d = setup();
    let o = scrn(d.path(), &["plot", "--data", "xor.csv", "--out", "a.svg"]);
    assert_eq!(code(&o), 0);
    let svg = std::fs::read_to_string(d.path().join("a.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert_eq!(svg.matches("class=\"point\"").count(), 4);

    scrn(
        d.path(),
        &["construct", "--data", "xor.csv", "--method", "shl", "--out", "m.json"],
    );
    scrn(
        d.path(),
        &[
            "decompose",
            "--data",
            "xor.csv",
            "--model",
            "m.json",
            "--mode",
            "shl",
            "--out",
            "r.json",
        ],
    );
    let o = scrn(
        d.path(),
        &[
            "plot", "--data", "xor.csv", "--model", "m.json", "--report", "r.json", "--out", "b.svg",
        ],
    );
    assert_eq!(code(&o), 0);
    let svg = std::fs::read_to_string(d.path().join("b.svg")).unwrap();
    assert!(svg.contains("class=\"boundary\""));
    assert!(svg.contains("class=\"subset\""));
    assert!(svg.contains("class=\"separator\""));
}

#[test]
fn plot_rejects_three_dimensions() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("p.csv"), "x1,x2,x3,label\n0,0,0,0\n1,1,1,1\n").unwrap();
    let o = scrn(d.path(), &["plot", "--data", "p.csv", "--out", "p.svg"]);
    assert_eq!(code(&o), 1);
    assert_eq!(stderr_json(&o)["error"], "DimensionMismatch");
}

#[test]
fn verify_passes_and_detects_injected_fault() {
    let d = tempfile::tempdir().unwrap();
    let o = scrn(d.path(), &["verify", "--suite", "all", "--seed", "0"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().count() > 10);
    assert!(text.lines().all(|l| l.starts_with("PASS ")));

    let o = scrn(d.path(), &["verify", "--suite", "geometry", "--inject-fault"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8(o.stdout.clone()).unwrap().contains("FAIL "));
    assert_eq!(stderr_json(&o)["error"], "VerificationFailed");
}
