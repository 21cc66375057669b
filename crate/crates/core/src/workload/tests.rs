use proptest::prelude::*;

use super::*;
use crate::spec::canonical_rtm_spec;

const NET_GRID: [f64; 4] = [5.0, 3.0, 0.5, 0.25];
const CPU_GRID: [f64; 4] = [2.0, 1.0, 0.5, 0.1];

fn rtm_app() -> AppSpec {
    canonical_rtm_spec().0
}

#[test]
fn full_rate_demand_is_five_mbps_and_two_cores() {
    let app = rtm_app();
    let model = PipelineModel::rtm(60.0);
    assert_eq!(model.full_rate(&app), (5.0, 2000.0));
    assert_eq!(model.demand(&app, 0.0), (5.0, 2000.0));
    assert_eq!(model.demand(&app, 60.0), (0.0, 0.0));
    assert_eq!(model.demand(&app, 1e6), (0.0, 0.0));

    let half = PipelineModel {
        fps: 10.0,
        ..PipelineModel::rtm(60.0)
    };
    assert_eq!(half.demand(&app, 0.0), (2.5, 1000.0));
}

#[test]
fn processed_fraction_examples() {
    let app = rtm_app();
    let model = PipelineModel::rtm(60.0);
    assert_eq!(model.processed_fraction(&app, 5.0, 2000.0), 1.0);
    assert_eq!(model.processed_fraction(&app, 0.5, 2000.0), 0.1);
    assert_eq!(model.processed_fraction(&app, 5.0, 1000.0), 0.5);
    assert_eq!(model.processed_fraction(&app, 50.0, 20_000.0), 1.0);
}

#[test]
fn pipeline_check_catches_bad_stages() {
    let app = rtm_app();
    assert!(PipelineModel::rtm(60.0).check(&app).is_ok());
    let mut bad = PipelineModel::rtm(60.0);
    bad.detector = "nobody".into();
    assert_eq!(
        bad.check(&app),
        Err(WorkloadError::UnknownDetector("nobody".into()))
    );
    let mut bad = PipelineModel::rtm(60.0);
    bad.stages.insert("ghost".into(), StageModel::default());
    assert_eq!(
        bad.check(&app),
        Err(WorkloadError::UnknownStage("ghost".into()))
    );
}

#[test]
fn constant_service_alerts() {
    let profile = CalibrationProfile::rtm();
    let p = profile.point_alerts(0.5, 0.5).unwrap();
    assert_eq!(p.alerts, 4);
    assert_eq!(p.bottleneck, Bottleneck::Network);
    let p = profile.point_alerts(3.0, 1.0).unwrap();
    assert_eq!(p.alerts, 8);
    assert_eq!(p.bottleneck, Bottleneck::Compute);
    let p = profile.point_alerts(5.0, 2.0).unwrap();
    assert_eq!(p.bottleneck, Bottleneck::None);
}

#[test]
fn run_total_is_best_interval() {
    let profile = CalibrationProfile::rtm();
    let tally = alerts(&[0.5, 0.5, 5.0, 5.0], &[2.0; 4], &profile).unwrap();
    assert_eq!(tally.alerts, 10);
    let tally = alerts(&[0.5; 4], &[2.0; 4], &profile).unwrap();
    assert_eq!(tally.alerts, 4);
}

#[test]
fn below_floor_is_clamped_or_rejected() {
    let mut profile = CalibrationProfile::rtm();
    let v = profile.network_alerts(0.1).unwrap();
    assert_eq!(
        v,
        StepValue {
            alerts: 1,
            clamped: true
        }
    );
    let tally = alerts(&[0.1], &[2.0], &profile).unwrap();
    assert_eq!(tally.clamped_intervals, 1);

    profile.clamp_floor = false;
    assert!(matches!(
        profile.network_alerts(0.1),
        Err(ProfileError::Domain { .. })
    ));
    // Zero service is not a domain error: nothing is processed.
    assert_eq!(profile.network_alerts(0.0).unwrap().alerts, 0);
}

#[test]
fn step_floor_between_anchors() {
    let profile = CalibrationProfile::rtm();
    assert_eq!(profile.network_alerts(4.99).unwrap().alerts, 9);
    assert_eq!(profile.network_alerts(2.0).unwrap().alerts, 4);
    assert_eq!(profile.network_alerts(500.0).unwrap().alerts, 10);
    assert_eq!(profile.compute_alerts(0.75).unwrap().alerts, 5);
    // 5 - 4.75 in floating point still lands on the 0.25 anchor.
    assert_eq!(profile.network_alerts(5.0 - 4.75).unwrap().alerts, 1);
}

#[test]
fn non_monotone_profile_names_the_pair() {
    let mut profile = CalibrationProfile::rtm();
    // Swap the alert values of the 0.5 and 3 Mbps anchors.
    profile.net_anchors[1].1 = 9;
    profile.net_anchors[2].1 = 4;
    let err = profile.check().unwrap_err();
    assert_eq!(
        err,
        ProfileError::NonMonotone {
            curve: Curve::Network,
            lower: Anchor(0.5, 9),
            upper: Anchor(3.0, 4),
        }
    );
    assert!(err.to_string().contains("(0.5, 9)"));
}

#[test]
fn fraction_map_is_single_valued_and_monotone() {
    let profile = CalibrationProfile::rtm();
    let map = profile.fraction_map(5.0, 2.0).unwrap();
    let expected = [
        (0.05, 1),
        (0.1, 4),
        (0.25, 5),
        (0.5, 8),
        (0.6, 9),
        (1.0, 10),
    ];
    assert_eq!(map.len(), expected.len());
    for (got, (f, a)) in map.iter().zip(expected) {
        assert!((got.0 - f).abs() < 1e-12, "{got:?}");
        assert_eq!(got.1, a);
    }

    let mut clash = CalibrationProfile::rtm();
    // Both land on fraction 0.25 with different alert counts.
    clash.cpu_anchors[1] = Anchor(0.5, 6);
    clash.net_anchors[1] = Anchor(1.25, 4);
    assert!(matches!(
        clash.fraction_map(5.0, 2.0),
        Err(ProfileError::Conflict { .. })
    ));
}

/// The coupling law over the 16-point grid, against the two curves read
/// directly off the anchor tables.
#[test]
fn coupling_law_on_grid() {
    let profile = CalibrationProfile::rtm();
    let net_curve = |b: f64| match b {
        b if b >= 5.0 => 10,
        b if b >= 3.0 => 9,
        b if b >= 0.5 => 4,
        _ => 1,
    };
    let cpu_curve = |c: f64| match c {
        c if c >= 2.0 => 10,
        c if c >= 1.0 => 8,
        c if c >= 0.5 => 5,
        _ => 1,
    };
    for b in NET_GRID {
        for c in CPU_GRID {
            let got = profile.point_alerts(b, c).unwrap().alerts;
            assert_eq!(got, net_curve(b).min(cpu_curve(c)), "({b}, {c})");
        }
    }
    assert_eq!(profile.point_alerts(0.25, 2.0).unwrap().alerts, 1);
    assert_eq!(profile.point_alerts(5.0, 0.1).unwrap().alerts, 1);
}

#[test]
fn synthesized_trace_matches_anchors_by_brute_force() {
    let profile = CalibrationProfile::rtm();
    let map = profile.fraction_map(5.0, 2.0).unwrap();
    for seed in 0..20 {
        let trace = FrameTrace::synthesize(&map, 20, 60, seed).unwrap();
        trace.check().unwrap();
        for anchor in &map {
            assert_eq!(
                trace.alerts_at_fraction(anchor.0),
                anchor.1,
                "seed {seed} f {}",
                anchor.0
            );
        }
        assert_eq!(trace.alerts_at_fraction(0.0), 0);
    }
}

#[test]
fn trace_agrees_with_coupling_law_on_grid() {
    let app = rtm_app();
    let model = PipelineModel::rtm(60.0);
    let profile = CalibrationProfile::rtm();
    let map = profile.fraction_map(5.0, 2.0).unwrap();
    let trace = FrameTrace::synthesize(&map, 20, 60, 7).unwrap();
    for b in NET_GRID {
        for c in CPU_GRID {
            let f = model.processed_fraction(&app, b, c * 1000.0);
            assert_eq!(
                trace.alerts_at_fraction(f),
                profile.point_alerts(b, c).unwrap().alerts,
                "({b}, {c})"
            );
        }
    }
}

#[test]
fn trace_needs_enough_frame_resolution() {
    let profile = CalibrationProfile::rtm();
    let map = profile.fraction_map(5.0, 2.0).unwrap();
    // At 4 fps, fractions 0.05 and 0.1 both keep zero frames per second.
    assert!(matches!(
        FrameTrace::synthesize(&map, 4, 60, 0),
        Err(TraceError::Resolution { .. })
    ));
}

#[test]
fn trace_check_counts_people() {
    let profile = CalibrationProfile::rtm();
    let map = profile.fraction_map(5.0, 2.0).unwrap();
    let mut trace = FrameTrace::synthesize(&map, 20, 60, 1).unwrap();
    trace.registered.remove(&0);
    assert!(matches!(trace.check(), Err(TraceError::Registered { .. })));
}

proptest! {
    #[test]
    fn alerts_are_monotone(b1 in 0.0f64..8.0, db in 0.0f64..4.0, c1 in 0.0f64..3.0, dc in 0.0f64..2.0) {
        let profile = CalibrationProfile::rtm();
        let lo = profile.point_alerts(b1, c1).unwrap().alerts;
        prop_assert!(profile.point_alerts(b1 + db, c1).unwrap().alerts >= lo);
        prop_assert!(profile.point_alerts(b1, c1 + dc).unwrap().alerts >= lo);
    }
}
