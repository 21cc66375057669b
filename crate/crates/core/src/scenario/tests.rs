use std::path::PathBuf;

use serde_json::json;

use super::*;
use crate::runtime::Action;
use crate::spec::Severity;
use crate::workload::Bottleneck;

fn scenarios_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn preset_value(name: &str) -> Value {
    serde_json::to_value(preset(name).unwrap()).unwrap()
}

fn invalid(value: &Value) -> Vec<Diagnostic> {
    match Scenario::from_value(value) {
        Err(ScenarioError::Invalid(d)) => d,
        other => panic!("expected diagnostics, got {other:?}"),
    }
}

/// Shipped preset files are the serialized presets. Set APPSLICE_BLESS=1
/// to rewrite them.
#[test]
fn shipped_presets_match_library() {
    let bless = std::env::var_os("APPSLICE_BLESS").is_some();
    for name in PRESETS {
        let path = scenarios_dir().join(format!("{name}.json"));
        let expected = preset(name).unwrap().to_json();
        if bless {
            fs::write(&path, &expected).unwrap();
        }
        let shipped = fs::read_to_string(&path).unwrap();
        assert_eq!(shipped, expected, "{name}");
        let (_, warnings) = Scenario::parse_with_warnings(&shipped).unwrap();
        assert!(warnings.iter().all(|d| d.severity == Severity::Warning));
    }
    assert!(preset("nope").is_none());
}

#[test]
fn preset_outcomes() {
    let alerts = |name: &str| run(&preset(name).unwrap()).unwrap().alerts;
    assert_eq!(alerts("baseline"), 10);
    assert_eq!(alerts("fig7a_appslice"), 10);
    assert_eq!(alerts("fig7a_besteffort"), 1);
    assert_eq!(alerts("fig7b"), 10);
    let fixed = preset("fig7b").unwrap().with_flags(false, true);
    assert_eq!(run(&fixed).unwrap().alerts, 4);
    let unsliced = preset("fig7a_appslice").unwrap().with_flags(true, false);
    assert_eq!(run(&unsliced).unwrap().alerts, 1);
}

#[test]
fn report_series_covers_duration() {
    let report = run(&preset("fig7b").unwrap()).unwrap();
    assert_eq!(report.metrics_series.len(), 30);
    assert_eq!(report.wall_clock, 60.0);
    assert_eq!(
        report.alerts,
        report.metrics_series.last().unwrap().app_alerts_so_far
    );
    assert!(matches!(
        report.adjustments[0].action,
        Action::GrowNetwork { to_kbps: 5000, .. }
    ));
    let csv = report.metrics_csv();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "time_s,function,delivered_mbps,demand_mbps,granted_millicpu,used_millicpu,latency_ms,per,alerts_cum"
    );
    assert_eq!(lines.count(), 30 * 6);
    assert_eq!(report.adjustments_jsonl().lines().count(), 1);
}

#[test]
fn runs_are_byte_identical() {
    for name in PRESETS {
        let s = preset(name).unwrap();
        let (a, b) = (run(&s).unwrap(), run(&s).unwrap());
        assert_eq!(a.to_json(), b.to_json(), "{name}");
        assert_eq!(a.metrics_csv(), b.metrics_csv(), "{name}");
    }
}

#[test]
fn report_round_trips() {
    let report = run(&preset("fig7b").unwrap()).unwrap();
    let back: RunReport = serde_json::from_str(&report.to_json()).unwrap();
    assert_eq!(back, report);
}

#[test]
fn ghost_function_slice_is_reported_at_its_path() {
    let mut v = preset_value("baseline");
    let entry = v["appSlice"]["perFunction"]["faceDetection"].clone();
    v["appSlice"]["perFunction"]["ghost"] = entry;
    let d = invalid(&v);
    assert!(
        d.iter().any(|d| d.path == "/appSlice/perFunction/ghost"),
        "{d:?}"
    );
}

#[test]
fn swapped_anchors_name_the_pair() {
    let mut v = preset_value("baseline");
    v["workload"]["profile"]["cpuAnchors"] = json!([[0.1, 1], [0.5, 8], [1.0, 5], [2.0, 10]]);
    let d = invalid(&v);
    assert_eq!(d[0].path, "/workload/profile/cpuAnchors");
    assert!(
        d[0].message.contains("(0.5, 8)") && d[0].message.contains("(1, 5)"),
        "{}",
        d[0]
    );
}

#[test]
fn unknown_load_target_is_reported() {
    let mut v = preset_value("baseline");
    v["fabric"]["loadSchedule"] = json!([
        {"time": 0, "target": "cloud->device", "kind": "trafficMbps", "value": 1}
    ]);
    let d = invalid(&v);
    assert_eq!(d[0].path, "/fabric/loadSchedule/0/target");
}

#[test]
fn schema_errors_carry_paths() {
    let mut v = preset_value("baseline");
    v["runtimeConfig"]["interval"] = json!("two");
    assert_eq!(invalid(&v)[0].path, "/runtimeConfig/interval");

    let mut v = preset_value("baseline");
    v["surprise"] = json!(1);
    assert!(invalid(&v)[0].message.contains("surprise"));

    let mut v = preset_value("baseline");
    v["runtimeConfig"]["saturationThreshold"] = json!(1.5);
    assert_eq!(invalid(&v)[0].path, "/runtimeConfig/saturationThreshold");

    assert!(matches!(
        Scenario::parse("{ not json"),
        Err(ScenarioError::Invalid(_))
    ));
}

#[test]
fn inconsistent_trace_is_rejected() {
    let mut s = preset("baseline").unwrap();
    let trace = s.workload.trace.as_mut().unwrap();
    // Make one registered person visible only in dropped frames.
    let first = *trace.registered.iter().next().unwrap();
    trace.appearances.retain(|a| a.person_id != first);
    trace.appearances.push(crate::workload::Appearance {
        person_id: first,
        first_frame: 19,
        last_frame: 19,
    });
    let d = s.validate();
    assert!(d.iter().any(|d| d.path == "/workload/trace"), "{d:?}");
}

#[test]
fn missing_file_is_an_io_error() {
    assert!(matches!(
        Scenario::load("/definitely/not/here.json"),
        Err(ScenarioError::Io { .. })
    ));
}

#[test]
fn allocation_failure_surfaces_the_report() {
    let mut s = preset("baseline").unwrap();
    s.fabric.links.clear();
    match run(&s) {
        Err(ScenarioError::Allocation(r)) => {
            assert_eq!(r.failures[0].function, "faceDetection")
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn sweeps_reproduce_the_curves() {
    let base = preset("fig5_net").unwrap();
    let points = |axis, vals: &[&str]| -> Vec<SweepPoint> {
        vals.iter()
            .map(|v| SweepPoint::parse(axis, v).unwrap())
            .collect()
    };
    let alerts = |rows: Vec<SweepRow>| rows.iter().map(|r| r.alerts).collect::<Vec<_>>();

    let net = sweep(&base, &points(SweepAxis::Net, &["5", "3", "0.5", "0.25"])).unwrap();
    assert_eq!(alerts(net.clone()), [10, 9, 4, 1]);
    assert!((net[3].delivered_mbps - 0.25).abs() < 1e-9);

    let cpu_base = preset("fig5_cpu").unwrap();
    let cpu = sweep(
        &cpu_base,
        &points(SweepAxis::Cpu, &["2", "1", "0.5", "0.1"]),
    )
    .unwrap();
    assert_eq!(alerts(cpu.clone()), [10, 8, 5, 1]);
    assert!((cpu[3].delivered_cores - 0.1).abs() < 1e-9);

    let joint = sweep(&base, &points(SweepAxis::Joint, &["0.5:0.5", "3:1"])).unwrap();
    assert_eq!(
        (joint[0].alerts, joint[0].bottleneck),
        (4, Bottleneck::Network)
    );
    assert_eq!(
        (joint[1].alerts, joint[1].bottleneck),
        (8, Bottleneck::Compute)
    );

    let csv = sweep_csv(&joint);
    assert_eq!(
        csv,
        "net_mbps,cpu_cores,delivered_mbps,delivered_cores,alerts,bottleneck\n\
         0.5,0.5,0.5,0.5,4,network\n3,1,3,1,8,compute\n"
    );
}

#[test]
fn sweep_rejects_points_outside_the_fabric() {
    let base = preset("fig5_net").unwrap();
    let p = SweepPoint::parse(SweepAxis::Net, "6").unwrap();
    assert!(matches!(
        sweep(&base, &[p]),
        Err(SweepError::NetOutOfRange { .. })
    ));
    let p = SweepPoint::parse(SweepAxis::Cpu, "20").unwrap();
    assert!(matches!(
        sweep(&base, &[p]),
        Err(SweepError::CpuOutOfRange { .. })
    ));
    assert!(SweepPoint::parse(SweepAxis::Joint, "1").is_err());
    assert!(SweepPoint::parse(SweepAxis::Net, "-1").is_err());
    assert!("sideways".parse::<SweepAxis>().is_err());
}
