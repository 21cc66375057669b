//! Scenario files: everything that determines a run, plus the reports a run
//! produces and the sweeps built on top of it.

mod sweep;

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::fabric::{Fabric, FabricConfig, LoadTarget};
use crate::runtime::{
    self, Adjustment, Allocation, FailureReport, MetricsSample, RunError, RunInput, RuntimeConfig,
};
use crate::spec::{
    from_value_at, pointer_token, syntax_error, validate_against_app, validate_app, validate_slice,
    AppSliceSpec, AppSpec, Diagnostic, TierId,
};
use crate::workload::{CalibrationProfile, Curve, FrameTrace, PipelineModel, ProfileError};

pub use sweep::{sweep, sweep_csv, SweepAxis, SweepError, SweepPoint, SweepRow};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct WorkloadConfig {
    pub pipeline: PipelineModel,
    pub profile: CalibrationProfile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<FrameTrace>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub duration_s: f64,
    /// Root of all randomness; nothing in a run draws from it yet.
    #[serde(default)]
    pub seed: u64,
    /// Deploy without slices: every function takes what external load leaves.
    #[serde(default)]
    pub best_effort: bool,
    pub fabric: FabricConfig,
    pub app: AppSpec,
    pub app_slice: AppSliceSpec,
    pub workload: WorkloadConfig,
    #[serde(default)]
    pub runtime_config: RuntimeConfig,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("scenario is invalid")]
    Invalid(Vec<Diagnostic>),
    #[error(transparent)]
    Allocation(FailureReport),
    #[error(transparent)]
    Run(RunError),
}

impl ScenarioError {
    /// Error diagnostics, if this is a validation failure.
    pub fn diagnostics(&self) -> &[Diagnostic] {
        match self {
            ScenarioError::Invalid(d) => d,
            _ => &[],
        }
    }
}

fn profile_path(err: &ProfileError) -> &'static str {
    let curve = match err {
        ProfileError::Empty { curve }
        | ProfileError::BadKey { curve, .. }
        | ProfileError::NonMonotone { curve, .. }
        | ProfileError::Conflict { curve, .. }
        | ProfileError::Domain { curve, .. } => *curve,
    };
    match curve {
        Curve::Network => "/workload/profile/netAnchors",
        Curve::Compute => "/workload/profile/cpuAnchors",
        Curve::Fraction => "/workload/profile",
    }
}

impl Scenario {
    /// Parse and fully validate a scenario document. Warnings are dropped;
    /// use [`Scenario::parse_with_warnings`] to keep them.
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        Scenario::parse_with_warnings(text).map(|(s, _)| s)
    }

    pub fn parse_with_warnings(text: &str) -> Result<(Self, Vec<Diagnostic>), ScenarioError> {
        let value: Value = serde_json::from_str(text)
            .map_err(|e| ScenarioError::Invalid(vec![syntax_error(&e).to_diagnostic()]))?;
        Scenario::from_value(&value)
    }

    pub fn from_value(value: &Value) -> Result<(Self, Vec<Diagnostic>), ScenarioError> {
        let scenario: Scenario = from_value_at(value, "")
            .map_err(|e| ScenarioError::Invalid(vec![e.to_diagnostic()]))?;
        let diagnostics = scenario.validate();
        if diagnostics.iter().any(Diagnostic::is_error) {
            return Err(ScenarioError::Invalid(
                diagnostics
                    .into_iter()
                    .filter(Diagnostic::is_error)
                    .collect(),
            ));
        }
        Ok((scenario, diagnostics))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Scenario::parse(&text)
    }

    /// Every spec-level and cross-scenario check, without running anything.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = validate_app(&self.app);
        out.extend(validate_slice(&self.app_slice));
        out.extend(validate_against_app(&self.app_slice, &self.app));
        if self.name.trim().is_empty() {
            out.push(Diagnostic::error("/name", "must not be empty"));
        }
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            out.push(Diagnostic::error("/durationS", "must be > 0"));
        }

        match Fabric::new(&self.fabric) {
            Err(err) => out.push(Diagnostic::error("/fabric", err.to_string())),
            Ok(fabric) => {
                if let Err((i, msg)) = self.fabric.load_schedule.check() {
                    out.push(Diagnostic::error(format!("/fabric/loadSchedule/{i}"), msg));
                }
                for (i, ev) in self.fabric.load_schedule.events.iter().enumerate() {
                    let known = match ev.target {
                        LoadTarget::Link(l) => fabric.link(l).is_some(),
                        LoadTarget::Tier(t) => fabric.tier(t).is_some(),
                    };
                    if !known {
                        out.push(Diagnostic::error(
                            format!("/fabric/loadSchedule/{i}/target"),
                            format!("{} is not part of the fabric", ev.target),
                        ));
                    }
                }
                for (name, spec) in &self.app_slice.per_function {
                    if let Some(tier) = spec.compute.tier.pinned() {
                        if fabric.tier(tier).is_none() {
                            out.push(Diagnostic::error(
                                format!(
                                    "/appSlice/perFunction/{}/compute/tier",
                                    pointer_token(name)
                                ),
                                format!("tier {tier} is not part of the fabric"),
                            ));
                        }
                    }
                }
            }
        }

        let wl = &self.workload;
        if let Err(err) = wl.pipeline.check(&self.app) {
            out.push(Diagnostic::error("/workload/pipeline", err.to_string()));
        }
        let profile_ok = match wl.profile.check() {
            Err(err) => {
                out.push(Diagnostic::error(profile_path(&err), err.to_string()));
                false
            }
            Ok(()) => true,
        };
        if profile_ok && wl.pipeline.check(&self.app).is_ok() {
            let (mbps, millicpu) = wl.pipeline.full_rate(&self.app);
            match wl.profile.fraction_map(mbps, millicpu / 1000.0) {
                Err(err) => out.push(Diagnostic::error(profile_path(&err), err.to_string())),
                Ok(map) => {
                    if let Some(trace) = &wl.trace {
                        if let Err(err) = trace.check() {
                            out.push(Diagnostic::error("/workload/trace", err.to_string()));
                        } else if let Some(a) =
                            map.iter().find(|a| trace.alerts_at_fraction(a.0) != a.1)
                        {
                            out.push(Diagnostic::error(
                                "/workload/trace",
                                format!(
                                    "trace yields {} alerts at processed fraction {}, profile says {}",
                                    trace.alerts_at_fraction(a.0),
                                    a.0,
                                    a.1
                                ),
                            ));
                        }
                    }
                }
            }
        }

        for (field, msg) in self.runtime_config.problems() {
            out.push(Diagnostic::error(format!("/runtimeConfig/{field}"), msg));
        }
        out
    }

    /// Apply command-line overrides.
    pub fn with_flags(mut self, best_effort: bool, no_dynamic: bool) -> Self {
        self.best_effort |= best_effort;
        if no_dynamic {
            self.runtime_config.dynamic_adjustment = false;
        }
        self
    }

    fn input(&self) -> RunInput<'_> {
        RunInput {
            app: &self.app,
            slice: &self.app_slice,
            fabric: &self.fabric,
            pipeline: &self.workload.pipeline,
            profile: &self.workload.profile,
            config: &self.runtime_config,
            best_effort: self.best_effort,
            duration_s: self.duration_s,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scenario serializes");
        s.push('\n');
        s
    }
}

/// Outcome of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunReport {
    pub scenario: String,
    pub best_effort: bool,
    pub dynamic_adjustment: bool,
    pub alerts: u32,
    /// Intervals whose service fell below the smallest calibration anchor.
    pub clamped_intervals: u32,
    pub total_cost: f64,
    /// Simulated seconds covered by the run.
    pub wall_clock: f64,
    pub placement: BTreeMap<String, TierId>,
    pub allocation: Option<Allocation>,
    pub admission_notes: Vec<String>,
    pub adjustments: Vec<Adjustment>,
    pub metrics_series: Vec<MetricsSample>,
}

/// Run a validated scenario.
pub fn run(scenario: &Scenario) -> Result<RunReport, ScenarioError> {
    let out = runtime::run(scenario.input()).map_err(|err| match err {
        RunError::Allocation(report) => ScenarioError::Allocation(report),
        other => ScenarioError::Run(other),
    })?;
    Ok(RunReport {
        scenario: scenario.name.clone(),
        best_effort: scenario.best_effort,
        dynamic_adjustment: scenario.runtime_config.dynamic_adjustment,
        alerts: out.alerts,
        clamped_intervals: out.clamped_intervals,
        total_cost: out.total_cost,
        wall_clock: out.simulated_s,
        placement: out.placement,
        allocation: out.allocation,
        admission_notes: out.admission_notes,
        adjustments: out.adjustments,
        metrics_series: out.samples,
    })
}

/// Validate and run the scenario at `path`.
pub fn run_file(path: impl AsRef<Path>) -> Result<RunReport, ScenarioError> {
    run(&Scenario::load(path)?)
}

impl RunReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// One row per function per tick.
    pub fn metrics_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "time_s",
            "function",
            "delivered_mbps",
            "demand_mbps",
            "granted_millicpu",
            "used_millicpu",
            "latency_ms",
            "per",
            "alerts_cum",
        ])
        .expect("in-memory write");
        for s in &self.metrics_series {
            for m in &s.per_function {
                w.write_record([
                    s.time.to_string(),
                    m.function.clone(),
                    m.delivered_mbps.to_string(),
                    m.demand_mbps.to_string(),
                    m.granted_millicpu.to_string(),
                    m.used_millicpu.to_string(),
                    m.latency_ms.to_string(),
                    m.per.to_string(),
                    s.app_alerts_so_far.to_string(),
                ])
                .expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }

    pub fn adjustments_jsonl(&self) -> String {
        let mut out = String::new();
        for a in &self.adjustments {
            out.push_str(&serde_json::to_string(a).expect("adjustment serializes"));
            out.push('\n');
        }
        out
    }

    /// Write report.json, metrics.csv and adjustments.jsonl into `dir`.
    pub fn write_to(&self, dir: impl AsRef<Path>) -> io::Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        fs::write(dir.join("report.json"), self.to_json())?;
        fs::write(dir.join("metrics.csv"), self.metrics_csv())?;
        fs::write(dir.join("adjustments.jsonl"), self.adjustments_jsonl())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests;

/// Names of the shipped scenario presets.
pub const PRESETS: [&str; 6] = [
    "baseline",
    "fig5_net",
    "fig5_cpu",
    "fig7a_appslice",
    "fig7a_besteffort",
    "fig7b",
];

/// External load that leaves an unsliced RTM deployment 0.25 Mbps into the
/// detector and 0.1 cores per edge pod.
fn rtm_contention() -> crate::fabric::LoadSchedule {
    use crate::fabric::{LinkId, LoadEvent, LoadKind, LoadSchedule};
    LoadSchedule::new(vec![
        LoadEvent {
            time: 0.0,
            target: LoadTarget::Link(LinkId::new(TierId::Device, TierId::Edge)),
            kind: LoadKind::TrafficMbps,
            value: 4.75,
        },
        LoadEvent {
            time: 0.0,
            target: LoadTarget::Tier(TierId::Edge),
            kind: LoadKind::CpuBurnMillicpu,
            value: 71_500.0,
        },
    ])
}

/// Build a shipped preset by name.
pub fn preset(name: &str) -> Option<Scenario> {
    let (app, mut app_slice) = crate::spec::canonical_rtm_spec();
    let pipeline = PipelineModel::rtm(60.0);
    let profile = CalibrationProfile::rtm();
    let (mbps, millicpu) = pipeline.full_rate(&app);
    let map = profile
        .fraction_map(mbps, millicpu / 1000.0)
        .expect("built-in profile is consistent");
    let trace = FrameTrace::synthesize(&map, 20, 60, 0).expect("built-in map is realizable");
    let mut fabric = FabricConfig::testbed();
    let mut best_effort = false;
    match name {
        "baseline" => {}
        "fig5_net" | "fig5_cpu" => best_effort = true,
        "fig7a_appslice" => fabric.load_schedule = rtm_contention(),
        "fig7a_besteffort" => {
            fabric.load_schedule = rtm_contention();
            best_effort = true;
        }
        "fig7b" => {
            fabric.load_schedule = rtm_contention();
            let net = &mut app_slice
                .per_function
                .get_mut(crate::spec::rtm::FACE_DETECTION)
                .expect("detector present")
                .network;
            net.throughput_gbr = 0.5;
            net.throughput_mbr = 5.0;
        }
        _ => return None,
    }
    Some(Scenario {
        name: name.to_string(),
        duration_s: 60.0,
        seed: 0,
        best_effort,
        fabric,
        app,
        app_slice,
        workload: WorkloadConfig {
            pipeline,
            profile,
            trace: Some(trace),
        },
        runtime_config: RuntimeConfig::default(),
    })
}
