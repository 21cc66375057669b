use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use appslice::scenario::{self, Scenario, SweepAxis, SweepPoint};

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn preset(name: &str) -> PathBuf {
    root().join("scenarios").join(format!("{name}.json"))
}

fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}

fn appslice(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_appslice"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Compare with a golden file; APPSLICE_BLESS=1 rewrites it.
fn check_golden(name: &str, actual: &str) {
    let path = golden(name);
    if std::env::var_os("APPSLICE_BLESS").is_some() {
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(&path, actual).unwrap();
    }
    let expected = fs::read_to_string(&path).unwrap();
    assert_eq!(actual, expected, "{name} differs from its golden copy");
}

#[test]
fn run_writes_the_three_outputs_and_matches_the_library() {
    for name in ["fig7a_appslice", "fig7a_besteffort", "fig7b"] {
        let dir = tempfile::tempdir().unwrap();
        let out = appslice(&["run", s(&preset(name)), "--out", s(dir.path())]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );

        let report = scenario::run(&Scenario::load(preset(name)).unwrap()).unwrap();
        let file = |f: &str| fs::read_to_string(dir.path().join(f)).unwrap();
        assert_eq!(file("report.json"), report.to_json());
        assert_eq!(file("metrics.csv"), report.metrics_csv());
        assert_eq!(file("adjustments.jsonl"), report.adjustments_jsonl());
    }
}

#[test]
fn run_reports_alert_counts() {
    let dir = tempfile::tempdir().unwrap();
    let alerts = |args: &[&str]| {
        let out = appslice(args);
        assert!(out.status.success());
        let report: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap())
                .unwrap();
        report["alerts"].as_u64().unwrap()
    };
    let out = s(dir.path());
    assert_eq!(
        alerts(&["run", s(&preset("fig7a_appslice")), "--out", out]),
        10
    );
    assert_eq!(
        alerts(&["run", s(&preset("fig7a_besteffort")), "--out", out]),
        1
    );
    assert_eq!(
        alerts(&[
            "run",
            s(&preset("fig7a_appslice")),
            "--out",
            out,
            "--best-effort"
        ]),
        1
    );
    assert_eq!(alerts(&["run", s(&preset("fig7b")), "--out", out]), 10);
    assert_eq!(
        alerts(&["run", s(&preset("fig7b")), "--out", out, "--no-dynamic"]),
        4
    );
}

#[test]
fn missing_scenario_exits_2_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = appslice(&["run", "no/such/scenario.json", "--out", s(&out_dir)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out_dir.exists());
}

#[test]
fn invalid_scenario_exits_2_with_paths() {
    let dir = tempfile::tempdir().unwrap();
    let mut v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(preset("baseline")).unwrap()).unwrap();
    v["appSlice"]["perFunction"]["ghost"] = v["appSlice"]["perFunction"]["faceDetection"].clone();
    let path = dir.path().join("ghost.json");
    fs::write(&path, v.to_string()).unwrap();

    for args in [
        vec!["validate", s(&path)],
        vec!["run", s(&path), "--out", s(dir.path())],
    ] {
        let out = appslice(&args);
        assert_eq!(out.status.code(), Some(2));
        let stderr = String::from_utf8_lossy(&out.stderr);
        assert!(stderr.contains("/appSlice/perFunction/ghost"), "{stderr}");
    }
    assert!(!dir.path().join("report.json").exists());
}

#[test]
fn non_monotone_profile_names_the_anchor_pair() {
    let dir = tempfile::tempdir().unwrap();
    let mut v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(preset("baseline")).unwrap()).unwrap();
    v["workload"]["profile"]["netAnchors"] =
        serde_json::json!([[0.25, 1], [0.5, 9], [3.0, 4], [5.0, 10]]);
    let path = dir.path().join("swapped.json");
    fs::write(&path, v.to_string()).unwrap();
    let out = appslice(&["validate", s(&path)]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("/workload/profile/netAnchors"), "{stderr}");
    assert!(
        stderr.contains("(0.5, 9)") && stderr.contains("(3, 4)"),
        "{stderr}"
    );
}

#[test]
fn allocation_failure_exits_3_with_json_report() {
    let dir = tempfile::tempdir().unwrap();
    let mut v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(preset("baseline")).unwrap()).unwrap();
    v["appSlice"]["perFunction"]["faceMatching"]["compute"]["minCPUCores"] = serde_json::json!(500);
    v["appSlice"]["perFunction"]["faceMatching"]["compute"]["maxCPUCores"] = serde_json::json!(500);
    let path = dir.path().join("huge.json");
    fs::write(&path, v.to_string()).unwrap();
    let out_dir = dir.path().join("out");
    let out = appslice(&["run", s(&path), "--out", s(&out_dir)]);
    assert_eq!(out.status.code(), Some(3));
    let report: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(report["failures"][0]["function"], "faceMatching");
    assert!(!out_dir.exists());

    // Unsliced, the same scenario still runs.
    let out = appslice(&["run", s(&path), "--out", s(&out_dir), "--best-effort"]);
    assert!(out.status.success());
}

#[test]
fn presets_validate() {
    for entry in fs::read_dir(root().join("scenarios")).unwrap() {
        let path = entry.unwrap().path();
        let out = appslice(&["validate", s(&path)]);
        assert!(out.status.success(), "{}", path.display());
    }
}

#[test]
fn sweep_matches_golden_and_library() {
    let cases = [
        ("fig5_net", "net", "5,3,0.5,0.25", "fig5_net_sweep.csv"),
        ("fig5_cpu", "cpu", "2,1,0.5,0.1", "fig5_cpu_sweep.csv"),
        (
            "fig5_net",
            "joint",
            "5:2,5:1,5:0.5,5:0.1,3:2,3:1,3:0.5,3:0.1,0.5:2,0.5:1,0.5:0.5,0.5:0.1,0.25:2,0.25:1,0.25:0.5,0.25:0.1",
            "fig6_joint_sweep.csv",
        ),
    ];
    for (base, axis, values, file) in cases {
        let out = appslice(&[
            "sweep",
            "--axis",
            axis,
            "--values",
            values,
            "--base",
            s(&preset(base)),
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        let stdout = String::from_utf8(out.stdout).unwrap();
        check_golden(file, &stdout);

        let axis: SweepAxis = axis.parse().unwrap();
        let points: Vec<SweepPoint> = values
            .split(',')
            .map(|v| SweepPoint::parse(axis, v).unwrap())
            .collect();
        let rows = scenario::sweep(&Scenario::load(preset(base)).unwrap(), &points).unwrap();
        assert_eq!(scenario::sweep_csv(&rows), stdout);
    }
}

#[test]
fn sweep_writes_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("net.csv");
    let out = appslice(&[
        "sweep",
        "--axis",
        "net",
        "--values",
        "5",
        "--values",
        "0.25",
        "--base",
        s(&preset("fig5_net")),
        "--out",
        s(&path),
    ]);
    assert!(out.status.success());
    let csv = fs::read_to_string(path).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.ends_with(",1,network\n"), "{csv}");
}

#[test]
fn sweep_rejects_bad_values() {
    let base = preset("fig5_net");
    for (axis, values) in [("net", "lots"), ("joint", "1"), ("net", "99")] {
        let out = appslice(&[
            "sweep",
            "--axis",
            axis,
            "--values",
            values,
            "--base",
            s(&base),
        ]);
        assert_eq!(out.status.code(), Some(2), "{axis} {values}");
    }
    let out = appslice(&[
        "sweep",
        "--axis",
        "diagonal",
        "--values",
        "1",
        "--base",
        s(&base),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn figure_metrics_match_golden() {
    for name in ["fig7a_appslice", "fig7a_besteffort", "fig7b"] {
        let dir = tempfile::tempdir().unwrap();
        let out = appslice(&["run", s(&preset(name)), "--out", s(dir.path())]);
        assert!(out.status.success());
        let csv = fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
        check_golden(&format!("{name}_metrics.csv"), &csv);
    }
}
