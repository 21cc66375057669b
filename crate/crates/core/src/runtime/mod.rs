//! Allocation, monitoring and adjustment of an application's slices over a
//! simulated run.
//!
//! A run places every function once (cheapest feasible tier, in topological
//! order), then steps a fixed tick: external load is applied, the monitor
//! samples delivered service, and the resource manager grows or shrinks
//! slices whose usage left the band between the underuse and saturation
//! thresholds.

mod allocate;
mod control;
mod monitor;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fabric::{Fabric, FabricConfig, FabricError, LinkId};
use crate::spec::{AppSliceSpec, AppSpec, TierId};
use crate::workload::{CalibrationProfile, PipelineModel};

pub use allocate::{
    allocate, best_effort_placement, candidate_tiers, choose_tier, inbound_links, match_failures,
    match_resources, requests_for, Allocation, FailureReport, FunctionFailure, Placement,
    ResourceRequest, TierRejection,
};
pub use control::{apply, Action, Adjustment, ResourceManager};
pub use monitor::{Deployment, FunctionMetrics, InboundFlow, MetricsSample, Monitor, SampleError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum GrowthPolicy {
    /// Grow straight to the spec maximum.
    #[default]
    #[serde(rename = "toMBRCap")]
    ToMbrCap,
    /// Double the grant per tick, capped at the spec maximum.
    #[serde(rename = "doubling")]
    Doubling,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct RuntimeConfig {
    /// Seconds between control ticks.
    #[serde(default = "default_interval")]
    pub interval: f64,
    #[serde(default = "default_saturation")]
    pub saturation_threshold: f64,
    #[serde(default = "default_underuse")]
    pub underuse_threshold: f64,
    #[serde(default = "default_underuse_ticks")]
    pub underuse_ticks: u32,
    #[serde(default)]
    pub growth_policy: GrowthPolicy,
    #[serde(default = "default_true")]
    pub dynamic_adjustment: bool,
}

fn default_interval() -> f64 {
    2.0
}
fn default_saturation() -> f64 {
    0.95
}
fn default_underuse() -> f64 {
    0.5
}
fn default_underuse_ticks() -> u32 {
    3
}
fn default_true() -> bool {
    true
}

impl Default for RuntimeConfig {
    fn default() -> Self {
        RuntimeConfig {
            interval: default_interval(),
            saturation_threshold: default_saturation(),
            underuse_threshold: default_underuse(),
            underuse_ticks: default_underuse_ticks(),
            growth_policy: GrowthPolicy::default(),
            dynamic_adjustment: true,
        }
    }
}

impl RuntimeConfig {
    /// Problems as (field, message) pairs.
    pub fn problems(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        if !(self.interval.is_finite() && self.interval > 0.0) {
            out.push(("interval", "must be > 0".to_string()));
        }
        for (field, v) in [
            ("saturationThreshold", self.saturation_threshold),
            ("underuseThreshold", self.underuse_threshold),
        ] {
            if !(v > 0.0 && v < 1.0) {
                out.push((field, "must lie strictly between 0 and 1".to_string()));
            }
        }
        if self.underuse_threshold >= self.saturation_threshold {
            out.push((
                "underuseThreshold",
                "must be below saturationThreshold".to_string(),
            ));
        }
        if self.underuse_ticks == 0 {
            out.push(("underuseTicks", "must be at least 1".to_string()));
        }
        out
    }
}

/// Everything a run needs.
#[derive(Debug, Clone, Copy)]
pub struct RunInput<'a> {
    pub app: &'a AppSpec,
    pub slice: &'a AppSliceSpec,
    pub fabric: &'a FabricConfig,
    pub pipeline: &'a PipelineModel,
    pub profile: &'a CalibrationProfile,
    pub config: &'a RuntimeConfig,
    pub best_effort: bool,
    pub duration_s: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub placement: BTreeMap<String, TierId>,
    /// `None` for an unsliced run.
    pub allocation: Option<Allocation>,
    pub samples: Vec<MetricsSample>,
    pub adjustments: Vec<Adjustment>,
    pub alerts: u32,
    pub clamped_intervals: u32,
    pub total_cost: f64,
    /// Simulated seconds covered by the ticks.
    pub simulated_s: f64,
    pub admission_notes: Vec<String>,
    pub fabric: Fabric,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RunError {
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Allocation(FailureReport),
    #[error(transparent)]
    Fabric(#[from] FabricError),
    #[error(transparent)]
    Sample(#[from] SampleError),
}

/// Number of control ticks covering `duration_s`.
pub fn tick_count(duration_s: f64, interval: f64) -> usize {
    ((duration_s / interval) - 1e-9).ceil().max(0.0) as usize
}

/// Static application-level checks made once at admission: worst path
/// latency against the latency budget, worst link error rate against
/// `1 - reliability`, and the device count.
pub fn admission_notes(
    app: &AppSpec,
    slice: &AppSliceSpec,
    placement: &BTreeMap<String, TierId>,
    fabric: &Fabric,
) -> Vec<String> {
    let link_of = |u: &str, f: &str| -> Option<LinkId> {
        let (a, b) = (*placement.get(u)?, *placement.get(f)?);
        (a != b).then(|| LinkId::new(a, b))
    };
    let mut path_latency: BTreeMap<String, f64> = BTreeMap::new();
    let mut worst_per: f64 = 0.0;
    for f in app.topological_order().unwrap_or_default() {
        let mut best: f64 = 0.0;
        for u in app.upstream_of(&f) {
            let hop = link_of(&u, &f)
                .and_then(|l| fabric.link(l))
                .map_or(0.0, |s| {
                    worst_per = worst_per.max(s.config.base_per);
                    s.config.base_latency_ms
                });
            best = best.max(path_latency.get(&u).copied().unwrap_or(0.0) + hop);
        }
        path_latency.insert(f, best);
    }
    let latency = path_latency.values().copied().fold(0.0, f64::max);
    let app_spec = &slice.application;
    // Rounded so that 1 - 0.99 reads as 0.01.
    let per_budget = ((1.0 - app_spec.reliability) * 1e12).round() / 1e12;
    let verdict = |ok: bool| if ok { "within" } else { "exceeds" };
    vec![
        format!(
            "worst path latency {latency} ms {} the {} ms budget",
            verdict(latency <= app_spec.latency),
            app_spec.latency
        ),
        format!(
            "worst link error rate {worst_per} {} the {per_budget} allowed by reliability {}",
            verdict(worst_per <= per_budget),
            app_spec.reliability
        ),
        format!("device count {} (informational)", app_spec.device_count),
    ]
}

/// Simulate a deployment from admission to the end of the stream.
pub fn run(input: RunInput<'_>) -> Result<RunOutput, RunError> {
    let RunInput {
        app,
        slice,
        pipeline,
        profile,
        config,
        best_effort,
        duration_s,
        ..
    } = input;
    let mut fabric = Fabric::new(input.fabric)?;
    let schedule = &input.fabric.load_schedule;
    fabric.check_schedule(schedule)?;
    let requests = requests_for(app, slice).ok_or_else(|| {
        RunError::Invalid("application graph is cyclic or a function has no slice".into())
    })?;

    let (placement, allocation) = if best_effort {
        (best_effort_placement(&requests, &fabric), None)
    } else {
        let alloc = allocate(&requests, &mut fabric).map_err(RunError::Allocation)?;
        (alloc.placement_map(), Some(alloc))
    };
    if let Some(missing) = requests
        .iter()
        .find(|r| !placement.contains_key(&r.function))
    {
        return Err(RunError::Invalid(format!(
            "no tier available for {}",
            missing.function
        )));
    }
    let notes = admission_notes(app, slice, &placement, &fabric);

    let mut monitor = Monitor::new();
    let mut manager = ResourceManager::new(config.clone(), &requests);
    let mut samples = Vec::new();
    let mut adjustments = Vec::new();
    let mut total_cost = 0.0;
    let ticks = tick_count(duration_s, config.interval);

    for k in 0..ticks {
        let time = k as f64 * config.interval;
        fabric.apply_load(schedule, time)?;
        let dep = Deployment {
            requests: &requests,
            placement: &placement,
            allocation: allocation.as_ref(),
            pipeline,
        };
        let sample = monitor.sample(time, config.interval, &fabric, dep, profile)?;
        for m in &sample.per_function {
            let cost = fabric.tier(m.tier).map_or(0.0, |t| t.cost());
            let charged = if allocation.is_some() {
                m.granted_millicpu
            } else {
                m.used_millicpu
            };
            total_cost += charged * cost * config.interval;
        }
        if let Some(alloc) = allocation.as_ref().filter(|_| config.dynamic_adjustment) {
            let adj = manager.control_tick(alloc, &sample, &fabric);
            apply(&mut fabric, &adj)?;
            adjustments.extend(adj);
        }
        samples.push(sample);
    }

    Ok(RunOutput {
        placement,
        allocation,
        samples,
        adjustments,
        alerts: monitor.alerts_so_far(),
        clamped_intervals: monitor.clamped_intervals(),
        total_cost,
        simulated_s: ticks as f64 * config.interval,
        admission_notes: notes,
        fabric,
    })
}
