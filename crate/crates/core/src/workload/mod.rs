//! Analytic model of a frame-processing pipeline and the alert count it
//! reaches under a given network and compute service.
//!
//! Every function processes frames at the stream rate. A function's compute
//! demand is `fps * millicpuPerFps`; the traffic it emits downstream is
//! `fps * outputBytesPerFrame`. One function is the detector: the service it
//! receives (Mbps delivered into it, cores available to it) determines the
//! alerts through a [`CalibrationProfile`].

mod profile;
mod trace;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spec::rtm::{
    ALERTS_MANAGER, BIOMETRICS_MANAGER, FACE_DETECTION, FACE_MATCHING, FEATURE_EXTRACTION,
    VIDEO_SENSOR,
};
use crate::spec::AppSpec;

pub use profile::{
    alerts, AlertTally, Anchor, Bottleneck, CalibrationProfile, Curve, Interpolation, PointAlerts,
    ProfileError, StepValue,
};
pub use trace::{Appearance, FrameTrace, TraceError, LMTD_PEOPLE, LMTD_REGISTERED};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct StageModel {
    #[serde(default)]
    pub millicpu_per_fps: f64,
    #[serde(default)]
    pub output_bytes_per_frame: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct PipelineModel {
    pub fps: f64,
    /// Length of the input stream in seconds; no demand afterwards.
    pub duration_s: f64,
    pub detector: String,
    /// Per-function costs. Functions not listed cost nothing.
    pub stages: BTreeMap<String, StageModel>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WorkloadError {
    #[error("pipeline fps must be > 0")]
    BadFps,
    #[error("pipeline duration must be > 0")]
    BadDuration,
    #[error("detector {0:?} is not a function of the application")]
    UnknownDetector(String),
    #[error("stage {0:?} is not a function of the application")]
    UnknownStage(String),
    #[error("stage {0:?} has a negative or non-finite cost")]
    BadStage(String),
    #[error("detector {0:?} receives no traffic and uses no compute at full rate")]
    IdleDetector(String),
}

impl PipelineModel {
    /// Pipeline for the built-in RTM application: 20 fps, 31250-byte frames
    /// (5 Mbps into face detection) and 100 millicpu per fps of face
    /// detection (2 cores at full rate).
    pub fn rtm(duration_s: f64) -> Self {
        let stage = |cpu: f64, out: f64| StageModel {
            millicpu_per_fps: cpu,
            output_bytes_per_frame: out,
        };
        PipelineModel {
            fps: 20.0,
            duration_s,
            detector: FACE_DETECTION.to_string(),
            stages: BTreeMap::from([
                (VIDEO_SENSOR.to_string(), stage(150.0, 31_250.0)),
                (FACE_DETECTION.to_string(), stage(100.0, 2_500.0)),
                (FEATURE_EXTRACTION.to_string(), stage(50.0, 512.0)),
                (BIOMETRICS_MANAGER.to_string(), stage(25.0, 256.0)),
                (FACE_MATCHING.to_string(), stage(50.0, 128.0)),
                (ALERTS_MANAGER.to_string(), stage(12.5, 0.0)),
            ]),
        }
    }

    pub fn stage(&self, function: &str) -> StageModel {
        self.stages.get(function).cloned().unwrap_or_default()
    }

    pub fn check(&self, app: &AppSpec) -> Result<(), WorkloadError> {
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(WorkloadError::BadFps);
        }
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return Err(WorkloadError::BadDuration);
        }
        if app.function(&self.detector).is_none() {
            return Err(WorkloadError::UnknownDetector(self.detector.clone()));
        }
        for (name, stage) in &self.stages {
            if app.function(name).is_none() {
                return Err(WorkloadError::UnknownStage(name.clone()));
            }
            let ok = |v: f64| v.is_finite() && v >= 0.0;
            if !ok(stage.millicpu_per_fps) || !ok(stage.output_bytes_per_frame) {
                return Err(WorkloadError::BadStage(name.clone()));
            }
        }
        let (mbps, millicpu) = self.full_rate(app);
        if mbps <= 0.0 && millicpu <= 0.0 {
            return Err(WorkloadError::IdleDetector(self.detector.clone()));
        }
        Ok(())
    }

    /// Traffic (Mbps) a function emits per unit of frame rate.
    pub fn output_mbps_at(&self, function: &str, fps: f64) -> f64 {
        fps * self.stage(function).output_bytes_per_frame * 8.0 / 1e6
    }

    pub fn millicpu_at(&self, function: &str, fps: f64) -> f64 {
        fps * self.stage(function).millicpu_per_fps
    }

    /// Stream rate at `clock`.
    pub fn fps_at(&self, clock: f64) -> f64 {
        if clock >= 0.0 && clock < self.duration_s {
            self.fps
        } else {
            0.0
        }
    }

    /// Detector demand at full stream rate: (Mbps into it, millicpu).
    pub fn full_rate(&self, app: &AppSpec) -> (f64, f64) {
        self.demand_at_fps(app, self.fps)
    }

    fn demand_at_fps(&self, app: &AppSpec, fps: f64) -> (f64, f64) {
        let mbps = app
            .upstream_of(&self.detector)
            .iter()
            .map(|u| self.output_mbps_at(u, fps))
            .sum();
        (mbps, self.millicpu_at(&self.detector, fps))
    }

    /// Detector demand at `clock`: (Mbps, millicpu).
    pub fn demand(&self, app: &AppSpec, clock: f64) -> (f64, f64) {
        self.demand_at_fps(app, self.fps_at(clock))
    }

    /// Share of frames the detector gets through, given the Mbps delivered
    /// into it and the millicpu available to it.
    pub fn processed_fraction(&self, app: &AppSpec, delivered_mbps: f64, millicpu: f64) -> f64 {
        let (full_mbps, full_millicpu) = self.full_rate(app);
        let net = if full_mbps > 0.0 {
            delivered_mbps / full_mbps
        } else {
            1.0
        };
        let cpu = if full_millicpu > 0.0 {
            millicpu / full_millicpu
        } else {
            1.0
        };
        1.0f64.min(net).min(cpu).max(0.0)
    }
}

impl CalibrationProfile {
    /// Measured RTM curves: alerts against available network (with ample
    /// compute) and against available detector cores (with ample network).
    pub fn rtm() -> Self {
        CalibrationProfile {
            net_anchors: vec![
                Anchor(0.25, 1),
                Anchor(0.5, 4),
                Anchor(3.0, 9),
                Anchor(5.0, 10),
            ],
            cpu_anchors: vec![
                Anchor(0.1, 1),
                Anchor(0.5, 5),
                Anchor(1.0, 8),
                Anchor(2.0, 10),
            ],
            interpolation: Interpolation::StepFloor,
            clamp_floor: true,
        }
    }
}

#[cfg(test)]
mod tests;
