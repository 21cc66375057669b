use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::fabric::{Dimension, Fabric, FabricError, Kbps, LinkId, SliceId};
use crate::spec::{Millicpu, TierId};

use super::allocate::{Allocation, ResourceRequest};
use super::monitor::MetricsSample;
use super::{GrowthPolicy, RuntimeConfig};

/// Slack for "demand exceeds delivery" and "backlog grew".
const RATE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    tag = "action",
    rename_all = "camelCase",
    rename_all_fields = "camelCase"
)]
pub enum Action {
    GrowNetwork {
        slice: SliceId,
        link: LinkId,
        from_kbps: u64,
        to_kbps: u64,
    },
    ShrinkNetwork {
        slice: SliceId,
        link: LinkId,
        from_kbps: u64,
        to_kbps: u64,
    },
    GrowCompute {
        slice: SliceId,
        tier: TierId,
        from_millicpu: u64,
        to_millicpu: u64,
    },
    ShrinkCompute {
        slice: SliceId,
        tier: TierId,
        from_millicpu: u64,
        to_millicpu: u64,
    },
    /// A grow could not be granted; the existing grant stands.
    ErrorReport {
        dimension: Dimension,
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Adjustment {
    pub time: f64,
    pub function: String,
    #[serde(flatten)]
    pub action: Action,
}

impl Adjustment {
    pub fn is_network_change(&self) -> bool {
        matches!(
            self.action,
            Action::GrowNetwork { .. } | Action::ShrinkNetwork { .. }
        )
    }

    pub fn is_compute_change(&self) -> bool {
        matches!(
            self.action,
            Action::GrowCompute { .. } | Action::ShrinkCompute { .. }
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Resource {
    Compute,
    Network(LinkId),
}

/// Resource Manager: decides grows and shrinks from each tick's sample.
#[derive(Debug, Clone)]
pub struct ResourceManager {
    config: RuntimeConfig,
    requests: BTreeMap<String, ResourceRequest>,
    underuse: BTreeMap<(String, Resource), u32>,
    last_backlog: BTreeMap<String, f64>,
    /// Grows already reported as unsatisfiable; cleared once the grow
    /// condition stops holding, so one episode yields one report.
    reported: BTreeSet<(String, Resource)>,
}

fn grow_target(policy: GrowthPolicy, current: u64, cap: u64) -> u64 {
    match policy {
        GrowthPolicy::ToMbrCap => cap,
        GrowthPolicy::Doubling => current.saturating_mul(2).max(1).min(cap),
    }
}

impl ResourceManager {
    pub fn new(config: RuntimeConfig, requests: &[ResourceRequest]) -> Self {
        ResourceManager {
            config,
            requests: requests
                .iter()
                .map(|r| (r.function.clone(), r.clone()))
                .collect(),
            underuse: BTreeMap::new(),
            last_backlog: BTreeMap::new(),
            reported: BTreeSet::new(),
        }
    }

    pub fn config(&self) -> &RuntimeConfig {
        &self.config
    }

    /// Shrink target for a grant whose usage sits below the underuse band:
    /// enough to put usage midway between the two thresholds.
    fn shrink_target(&self, usage: f64, floor: u64) -> u64 {
        let mid = (self.config.saturation_threshold + self.config.underuse_threshold) / 2.0;
        ((usage / mid).ceil() as u64).max(floor)
    }

    /// One pass of the adjustment loop. Decisions are planned against a copy
    /// of `fabric` so that grows competing for the same capacity are
    /// admitted in order; `fabric` itself is not touched.
    pub fn control_tick(
        &mut self,
        alloc: &Allocation,
        sample: &MetricsSample,
        fabric: &Fabric,
    ) -> Vec<Adjustment> {
        let cfg = self.config.clone();
        let mut plan = fabric.clone();
        let mut out = Vec::new();
        for m in &sample.per_function {
            let (Some(req), Some(placement)) = (
                self.requests.get(&m.function).cloned(),
                alloc.functions.get(&m.function),
            ) else {
                continue;
            };
            let mut emit = |action| {
                out.push(Adjustment {
                    time: sample.time,
                    function: m.function.clone(),
                    action,
                })
            };

            for flow in &m.inbound {
                let Some(slice_id) = flow.slice else { continue };
                let Some(slice) = plan.network_slice(slice_id).cloned() else {
                    continue;
                };
                let key = (m.function.clone(), Resource::Network(flow.link));
                let floor = Kbps::from_mbps(req.network.throughput_gbr);
                let cap = Kbps::from_mbps(req.network.throughput_mbr).max(floor);
                let gbr = slice.gbr;
                let saturated = flow.delivered_mbps >= cfg.saturation_threshold * gbr.mbps()
                    && flow.demand_mbps > flow.delivered_mbps + RATE_EPS
                    && gbr < cap;
                if saturated {
                    self.underuse.remove(&key);
                    let target = Kbps(grow_target(cfg.growth_policy, gbr.0, cap.0));
                    match plan.resize_network(slice_id, target) {
                        Ok(()) => {
                            self.reported.remove(&key);
                            emit(Action::GrowNetwork {
                                slice: slice_id,
                                link: flow.link,
                                from_kbps: gbr.0,
                                to_kbps: target.0,
                            });
                        }
                        Err(err) => {
                            if self.reported.insert(key) {
                                emit(error_report(&err, Dimension::Bandwidth));
                            }
                        }
                    }
                    continue;
                }
                self.reported.remove(&key);
                let idle = flow.delivered_mbps < cfg.underuse_threshold * gbr.mbps();
                let count = self.underuse.entry(key.clone()).or_insert(0);
                *count = if idle { *count + 1 } else { 0 };
                if *count >= cfg.underuse_ticks && gbr > floor {
                    let target = Kbps(self.shrink_target(flow.delivered_mbps * 1000.0, floor.0));
                    self.underuse.insert(key, 0);
                    if target < gbr && plan.resize_network(slice_id, target).is_ok() {
                        emit(Action::ShrinkNetwork {
                            slice: slice_id,
                            link: flow.link,
                            from_kbps: gbr.0,
                            to_kbps: target.0,
                        });
                    }
                }
            }

            let slice_id = placement.compute.id;
            let Some(slice) = plan.compute_slice(slice_id).cloned() else {
                continue;
            };
            let key = (m.function.clone(), Resource::Compute);
            let floor = req.compute.min_cpu.0;
            let cap = req.compute.max_cpu.0.max(floor);
            let granted = slice.granted_millicpu.0;
            let previous = self
                .last_backlog
                .insert(m.function.clone(), m.backlog_frames);
            let backlog_rising = previous.map_or(m.backlog_frames > RATE_EPS, |p| {
                m.backlog_frames > p + RATE_EPS
            });
            let saturated = m.used_millicpu >= cfg.saturation_threshold * granted as f64
                && backlog_rising
                && granted < cap;
            if saturated {
                self.underuse.remove(&key);
                let target = grow_target(cfg.growth_policy, granted, cap);
                match plan.resize_compute(slice_id, Millicpu(target)) {
                    Ok(()) => {
                        self.reported.remove(&key);
                        emit(Action::GrowCompute {
                            slice: slice_id,
                            tier: slice.tier,
                            from_millicpu: granted,
                            to_millicpu: target,
                        });
                    }
                    Err(err) => {
                        if self.reported.insert(key) {
                            emit(error_report(&err, Dimension::Compute));
                        }
                    }
                }
                continue;
            }
            self.reported.remove(&key);
            let idle = m.used_millicpu < cfg.underuse_threshold * granted as f64;
            let count = self.underuse.entry(key.clone()).or_insert(0);
            *count = if idle { *count + 1 } else { 0 };
            if *count >= cfg.underuse_ticks && granted > floor {
                let target = self.shrink_target(m.used_millicpu, floor);
                self.underuse.insert(key, 0);
                if target < granted && plan.resize_compute(slice_id, Millicpu(target)).is_ok() {
                    emit(Action::ShrinkCompute {
                        slice: slice_id,
                        tier: slice.tier,
                        from_millicpu: granted,
                        to_millicpu: target,
                    });
                }
            }
        }
        out
    }
}

fn error_report(err: &FabricError, fallback: Dimension) -> Action {
    Action::ErrorReport {
        dimension: err.dimension().unwrap_or(fallback),
        reason: err.to_string(),
    }
}

/// App Slice Controller: carries adjustments out as fabric resizes.
pub fn apply(fabric: &mut Fabric, adjustments: &[Adjustment]) -> Result<(), FabricError> {
    for adj in adjustments {
        match &adj.action {
            Action::GrowNetwork { slice, to_kbps, .. }
            | Action::ShrinkNetwork { slice, to_kbps, .. } => {
                fabric.resize_network(*slice, Kbps(*to_kbps))?
            }
            Action::GrowCompute {
                slice, to_millicpu, ..
            }
            | Action::ShrinkCompute {
                slice, to_millicpu, ..
            } => fabric.resize_compute(*slice, Millicpu(*to_millicpu))?,
            Action::ErrorReport { .. } => {}
        }
    }
    Ok(())
}
