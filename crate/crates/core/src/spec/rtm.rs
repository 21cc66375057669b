//! Built-in real-time monitoring (RTM) application.
//!
//! Video Sensor -> Face Detection -> Feature Extraction -> Face Matching ->
//! Alerts Manager, with Biometrics Manager feeding the registered gallery into
//! Face Matching.

use std::collections::BTreeMap;

use super::{
    AppLevelSpec, AppSliceSpec, AppSpec, Bytes, ComputeReq, FunctionDef, FunctionSliceSpec,
    GuaranteeDuration, InstanceEdge, Millicpu, NetworkReq, TierChoice,
};

pub const VIDEO_SENSOR: &str = "videoSensor";
pub const FACE_DETECTION: &str = "faceDetection";
pub const FEATURE_EXTRACTION: &str = "featureExtraction";
pub const BIOMETRICS_MANAGER: &str = "biometricsManager";
pub const FACE_MATCHING: &str = "faceMatching";
pub const ALERTS_MANAGER: &str = "alertsManager";

fn instance(name: &str) -> String {
    format!("{name}-0")
}

fn slice(gbr: f64, mbr: f64, cpu: u64, memory: Bytes, tier: TierChoice) -> FunctionSliceSpec {
    FunctionSliceSpec {
        network: NetworkReq {
            latency: 50.0,
            throughput_gbr: gbr,
            throughput_mbr: mbr,
            packet_error_rate: 1e-2,
            duration: GuaranteeDuration::Auto,
        },
        compute: ComputeReq {
            min_cpu: Millicpu(cpu),
            max_cpu: Millicpu(cpu),
            min_memory: memory,
            max_memory: memory,
            tier,
        },
    }
}

/// The RTM application with its baseline slice: 5 Mbps guaranteed into face
/// detection and 2000m of compute for it.
pub fn canonical_rtm_spec() -> (AppSpec, AppSliceSpec) {
    let names = [
        VIDEO_SENSOR,
        FACE_DETECTION,
        FEATURE_EXTRACTION,
        BIOMETRICS_MANAGER,
        FACE_MATCHING,
        ALERTS_MANAGER,
    ];
    let functions = names
        .iter()
        .map(|n| FunctionDef {
            name: n.to_string(),
            instances: vec![instance(n)],
        })
        .collect();
    let edges = [
        (VIDEO_SENSOR, FACE_DETECTION),
        (FACE_DETECTION, FEATURE_EXTRACTION),
        (FEATURE_EXTRACTION, FACE_MATCHING),
        (FACE_MATCHING, ALERTS_MANAGER),
        (BIOMETRICS_MANAGER, FACE_MATCHING),
    ]
    .iter()
    .map(|(a, b)| InstanceEdge::new(&instance(a), &instance(b)))
    .collect();

    let app = AppSpec {
        app_name: "rtm".to_string(),
        functions,
        edges,
    };

    let per_function = BTreeMap::from([
        (
            VIDEO_SENSOR.to_string(),
            slice(5.0, 5.0, 3000, Bytes::gib(1), TierChoice::Device),
        ),
        (
            FACE_DETECTION.to_string(),
            slice(5.0, 5.0, 2000, Bytes::gib(4), TierChoice::Auto),
        ),
        (
            FEATURE_EXTRACTION.to_string(),
            slice(1.0, 2.0, 1000, Bytes::gib(2), TierChoice::Auto),
        ),
        (
            BIOMETRICS_MANAGER.to_string(),
            slice(0.5, 1.0, 500, Bytes::gib(2), TierChoice::Edge),
        ),
        (
            FACE_MATCHING.to_string(),
            slice(0.5, 1.0, 1000, Bytes::gib(2), TierChoice::Auto),
        ),
        (
            ALERTS_MANAGER.to_string(),
            slice(0.1, 0.5, 250, Bytes::mib(512), TierChoice::Auto),
        ),
    ]);

    let app_slice = AppSliceSpec {
        application: AppLevelSpec {
            latency: 100.0,
            bandwidth: 20.0,
            device_count: 1,
            reliability: 0.99,
        },
        per_function,
    };
    (app, app_slice)
}
