use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output};

fn model(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../docs").join(name)
}

fn fpslope(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fpslope"))
        .args(args)
        .env_remove("FPS_THRESHOLDS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn temp_model(text: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::Builder::new().suffix(".fps").tempfile().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f
}

#[test]
fn analyze_filter_unrolled() {
    let f = model("filter.fps");
    let o = fpslope(&["analyze", f.to_str().unwrap(), "--unroll", "25", "--no-fixpoint"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("steps 0..24"), "{out}");
    assert!(out.contains("[0.709999656, 10.2049357]"), "{out}");
    assert!(out.contains("no diagnostics"));
}

#[test]
fn filter_fixpoint_reports_possible_overflow_once() {
    let f = model("filter.fps");
    let o = fpslope(&["analyze", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert_eq!(out.matches("error[overflow]").count(), 1, "{out}");
    assert!(out.contains("fixpoint"));
}

#[test]
fn analyze_newton() {
    let f = model("newton.fps");
    let o = fpslope(&["analyze", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("[1.85621493, 3.04276455]"), "{}", stdout(&o));
}

#[test]
fn json_report_is_versioned() {
    let f = model("newton.fps");
    let o = fpslope(&["analyze", f.to_str().unwrap(), "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(v["domain"], "fps");
    assert_eq!(v["precision"], "single");
    assert_eq!(v["outputs"][0]["name"], "out");
    let lo: f64 = v["outputs"][0]["unrolled"]["lo"].as_str().unwrap().parse().unwrap();
    assert!((lo - 1.8562).abs() < 1e-4);
}

#[test]
fn interval_baseline_on_the_absorption_sum() {
    let f = model("sums.fps");
    let o = fpslope(&["analyze", f.to_str().unwrap(), "--domain", "interval", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["domain"], "interval");
    assert_eq!(v["outputs"][0]["unrolled"]["lo"], "11100");
    assert_eq!(v["outputs"][0]["unrolled"]["hi"], "11101.953125");
}

#[test]
fn precision_flag_overrides_the_model() {
    let f = model("newton.fps");
    let o = fpslope(&["analyze", f.to_str().unwrap(), "--precision", "double", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["precision"], "double");
}

#[test]
fn fuzz_filter_is_clean() {
    let f = model("filter.fps");
    let o = fpslope(&["fuzz", f.to_str().unwrap(), "--samples", "10000", "--seed", "42"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("0 violations"), "{}", stdout(&o));
}

#[test]
fn fuzz_flags_the_real_slope_baseline() {
    // real arithmetic ignores rounding, so binary32 runs escape it
    let f = model("illcond.fps");
    let o = fpslope(&["fuzz", f.to_str().unwrap(), "--samples", "3", "--domain", "real-slope"]);
    assert_eq!(o.status.code(), Some(3));
    let o = fpslope(&[
        "fuzz",
        f.to_str().unwrap(),
        "--samples",
        "3",
        "--domain",
        "real-slope",
        "--format",
        "json",
    ]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["violation_count"].as_u64().unwrap() > 0);
    assert!(v["violations"][0]["value_hex"].as_str().unwrap().starts_with("0x"));
}

#[test]
fn compare_tabulates_three_domains() {
    let f = model("newton.fps");
    let o = fpslope(&["compare", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let header = out.lines().next().unwrap();
    for d in ["interval", "real-slope", "fps"] {
        assert!(header.contains(d), "{header}");
    }
    assert!(out.lines().nth(1).unwrap().starts_with("out"));
}

#[test]
fn parse_errors_exit_2_with_positions() {
    let m = temp_model("x = input(0, 1)\ny = gain(2 x)\no = output(x)\n");
    let o = fpslope(&["analyze", m.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains(":2:12:"), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(fpslope(&["analyze"]).status.code(), Some(2));
    assert_eq!(fpslope(&["analyze", "x.fps", "--domain", "octagon"]).status.code(), Some(2));
    let o = fpslope(&["analyze", "/nonexistent/model.fps"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("cannot read"));
}

#[test]
fn division_by_zero_exits_1() {
    let m = temp_model("x = input(-1, 1)\nk = constant(1)\nq = div(k, x)\no = output(q)\n");
    let o = fpslope(&["analyze", m.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout(&o).matches("error[division-by-zero]").count(), 1);
}

#[test]
fn thresholds_from_the_environment() {
    // s' = s/2 + 1 from 0 settles below 2
    let m = temp_model("s = delay(n, 0)\nh = gain(0.5, s)\nk = constant(1)\nn = sum(h, k)\no = output(s)\nsimulate steps=2\n");
    let run = |th: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_fpslope"));
        c.args(["analyze", m.path().to_str().unwrap(), "--domain", "interval-directed", "--format", "json"]);
        match th {
            Some(t) => c.env("FPS_THRESHOLDS", t),
            None => c.env_remove("FPS_THRESHOLDS"),
        };
        c.output().unwrap()
    };
    let hi = |o: &Output| {
        let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        v["outputs"][0]["fixpoint"]["hi"].as_str().unwrap().to_string()
    };
    assert_eq!(hi(&run(None)), "16");
    let o = run(Some("0, 0x1p2"));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(hi(&o), "4");
    let o = run(Some("1, bogus"));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("FPS_THRESHOLDS"));
}
