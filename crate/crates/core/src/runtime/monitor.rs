use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::fabric::{Fabric, FabricError, Flow, LinkId, SliceId};
use crate::spec::TierId;
use crate::workload::{Bottleneck, CalibrationProfile, PipelineModel, ProfileError};

use super::allocate::{Allocation, ResourceRequest};

/// Traffic into a function over one link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InboundFlow {
    pub link: LinkId,
    pub slice: Option<SliceId>,
    pub delivered_mbps: f64,
    pub demand_mbps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FunctionMetrics {
    pub function: String,
    pub tier: TierId,
    /// All traffic reaching the function, co-located sources included.
    pub delivered_mbps: f64,
    pub demand_mbps: f64,
    /// Worst base latency over the links feeding the function; 0 if none.
    pub latency_ms: f64,
    pub per: f64,
    pub used_millicpu: f64,
    /// Slice grant, or the best-effort share for an unsliced pod.
    pub granted_millicpu: f64,
    pub backlog_frames: f64,
    pub inbound: Vec<InboundFlow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MetricsSample {
    pub time: f64,
    pub per_function: Vec<FunctionMetrics>,
    /// Service seen by the detector in this interval.
    pub detector_mbps: f64,
    pub detector_cores: f64,
    pub interval_alerts: u32,
    pub bottleneck: Bottleneck,
    pub clamped: bool,
    pub app_alerts_so_far: u32,
}

impl MetricsSample {
    pub fn function(&self, name: &str) -> Option<&FunctionMetrics> {
        self.per_function.iter().find(|m| m.function == name)
    }
}

/// What the monitor needs to know about a running deployment.
#[derive(Debug, Clone, Copy)]
pub struct Deployment<'a> {
    /// Placement order.
    pub requests: &'a [ResourceRequest],
    pub placement: &'a BTreeMap<String, TierId>,
    /// `None` for an unsliced run.
    pub allocation: Option<&'a Allocation>,
    pub pipeline: &'a PipelineModel,
}

/// Inbound traffic of `function` grouped by link; co-located sources are
/// keyed `None`.
type Groups = BTreeMap<Option<LinkId>, Vec<String>>;

fn groups_of(req: &ResourceRequest, placement: &BTreeMap<String, TierId>) -> Groups {
    let tier = placement[&req.function];
    let mut groups: Groups = BTreeMap::new();
    for u in &req.upstream {
        let from = placement[u];
        let key = (from != tier).then(|| LinkId::new(from, tier));
        groups.entry(key).or_default().push(u.clone());
    }
    groups
}

/// App Slice Monitor: samples delivered service and usage each tick and
/// keeps per-function backlog between ticks.
#[derive(Debug, Clone, Default)]
pub struct Monitor {
    backlog: BTreeMap<String, f64>,
    alerts_so_far: u32,
    clamped_intervals: u32,
}

const FIXED_POINT_EPS: f64 = 1e-12;

impl Monitor {
    pub fn new() -> Self {
        Monitor::default()
    }

    pub fn alerts_so_far(&self) -> u32 {
        self.alerts_so_far
    }

    pub fn clamped_intervals(&self) -> u32 {
        self.clamped_intervals
    }

    /// Measure the deployment at `time` and account `interval` seconds of
    /// backlog growth.
    pub fn sample(
        &mut self,
        time: f64,
        interval: f64,
        fabric: &Fabric,
        dep: Deployment<'_>,
        profile: &CalibrationProfile,
    ) -> Result<MetricsSample, SampleError> {
        let pipeline = dep.pipeline;
        let fps = pipeline.fps_at(time);
        let slice_of = |f: &str| dep.allocation.and_then(|a| a.functions.get(f));

        let mut available: BTreeMap<&str, f64> = BTreeMap::new();
        let mut tiers: BTreeMap<TierId, Vec<&str>> = BTreeMap::new();
        for req in dep.requests {
            tiers
                .entry(dep.placement[&req.function])
                .or_default()
                .push(&req.function);
        }
        for (tier, pods) in &tiers {
            let ids: Vec<Option<SliceId>> = pods
                .iter()
                .map(|f| slice_of(f).map(|p| p.compute.id))
                .collect();
            let shares = fabric.effective_compute(*tier, &ids)?;
            available.extend(pods.iter().copied().zip(shares));
        }

        let groups: BTreeMap<&str, Groups> = dep
            .requests
            .iter()
            .map(|r| (r.function.as_str(), groups_of(r, dep.placement)))
            .collect();

        let mut out_frac: BTreeMap<&str, f64> = dep
            .requests
            .iter()
            .map(|r| (r.function.as_str(), 1.0))
            .collect();
        let mut in_frac = out_frac.clone();
        let mut delivered: BTreeMap<(&str, LinkId), f64> = BTreeMap::new();

        // Downstream shares of a link depend on upstream rates and vice
        // versa; iterate until the fractions settle.
        for _ in 0..=2 * dep.requests.len() + 2 {
            delivered = self.link_deliveries(fabric, &dep, &groups, &out_frac, fps)?;
            let mut changed = false;
            for req in dep.requests {
                let f = req.function.as_str();
                let mut inf: f64 = if fps > 0.0 { 1.0 } else { 0.0 };
                for (key, members) in &groups[f] {
                    match key {
                        None => {
                            for u in members {
                                inf = inf.min(out_frac[u.as_str()]);
                            }
                        }
                        Some(link) => {
                            let full: f64 = members
                                .iter()
                                .map(|u| pipeline.output_mbps_at(u, fps))
                                .sum();
                            if full > 0.0 {
                                inf = inf.min(delivered[&(f, *link)] / full);
                            } else {
                                for u in members {
                                    inf = inf.min(out_frac[u.as_str()]);
                                }
                            }
                        }
                    }
                }
                let inf = inf.clamp(0.0, 1.0);
                let full_cpu = pipeline.millicpu_at(f, fps);
                let cpu_ratio = if full_cpu > 0.0 {
                    available[f] / full_cpu
                } else {
                    1.0
                };
                let outf = inf.min(cpu_ratio).max(0.0);
                if (outf - out_frac[f]).abs() > FIXED_POINT_EPS
                    || (inf - in_frac[f]).abs() > FIXED_POINT_EPS
                {
                    changed = true;
                }
                out_frac.insert(f, outf);
                in_frac.insert(f, inf);
            }
            if !changed {
                break;
            }
        }

        let mut per_function = Vec::with_capacity(dep.requests.len());
        for req in dep.requests {
            let f = req.function.as_str();
            let mut inbound = Vec::new();
            let mut delivered_total = 0.0;
            let mut demand_total = 0.0;
            let mut latency_ms: f64 = 0.0;
            let mut per: f64 = 0.0;
            for (key, members) in &groups[f] {
                let offered: f64 = members
                    .iter()
                    .map(|u| pipeline.output_mbps_at(u, fps) * out_frac[u.as_str()])
                    .sum();
                demand_total += offered;
                match key {
                    None => delivered_total += offered,
                    Some(link) => {
                        let got = delivered[&(f, *link)];
                        delivered_total += got;
                        if let Some(state) = fabric.link(*link) {
                            latency_ms = latency_ms.max(state.config.base_latency_ms);
                            per = per.max(state.config.base_per);
                        }
                        inbound.push(InboundFlow {
                            link: *link,
                            slice: dep.allocation.and_then(|a| a.network_slice_on(f, *link)),
                            delivered_mbps: got,
                            demand_mbps: offered,
                        });
                    }
                }
            }
            let avail = available[f];
            let used = avail.min(pipeline.millicpu_at(f, fps) * in_frac[f]);
            let granted = match slice_of(f) {
                Some(p) => fabric
                    .compute_slice(p.compute.id)
                    .map_or(0.0, |s| s.granted_millicpu.0 as f64),
                None => avail,
            };
            let backlog = self.backlog.entry(req.function.clone()).or_insert(0.0);
            *backlog += (in_frac[f] - out_frac[f]).max(0.0) * fps * interval;
            per_function.push(FunctionMetrics {
                function: req.function.clone(),
                tier: dep.placement[f],
                delivered_mbps: delivered_total,
                demand_mbps: demand_total,
                latency_ms,
                per,
                used_millicpu: used,
                granted_millicpu: granted,
                backlog_frames: *backlog,
                inbound,
            });
        }

        let detector = per_function
            .iter()
            .find(|m| m.function == pipeline.detector)
            .ok_or_else(|| SampleError::NoDetector(pipeline.detector.clone()))?;
        let detector_mbps = detector.delivered_mbps;
        let detector_cores = available[pipeline.detector.as_str()] / 1000.0;
        let (interval_alerts, bottleneck, clamped) = if fps > 0.0 {
            let p = profile.point_alerts(detector_mbps, detector_cores)?;
            (p.alerts, p.bottleneck, p.clamped)
        } else {
            (0, Bottleneck::None, false)
        };
        self.alerts_so_far = self.alerts_so_far.max(interval_alerts);
        if clamped {
            self.clamped_intervals += 1;
        }
        Ok(MetricsSample {
            time,
            per_function,
            detector_mbps,
            detector_cores,
            interval_alerts,
            bottleneck,
            clamped,
            app_alerts_so_far: self.alerts_so_far,
        })
    }

    fn link_deliveries<'a>(
        &self,
        fabric: &Fabric,
        dep: &Deployment<'_>,
        groups: &BTreeMap<&'a str, Groups>,
        out_frac: &BTreeMap<&str, f64>,
        fps: f64,
    ) -> Result<BTreeMap<(&'a str, LinkId), f64>, FabricError> {
        let mut by_link: BTreeMap<LinkId, Vec<(&'a str, Flow)>> = BTreeMap::new();
        for (&f, g) in groups {
            for (key, members) in g {
                let Some(link) = key else { continue };
                let demand_mbps = members
                    .iter()
                    .map(|u| dep.pipeline.output_mbps_at(u, fps) * out_frac[u.as_str()])
                    .sum();
                let slice = dep.allocation.and_then(|a| a.network_slice_on(f, *link));
                by_link
                    .entry(*link)
                    .or_default()
                    .push((f, Flow { slice, demand_mbps }));
            }
        }
        let mut out = BTreeMap::new();
        for (link, entries) in by_link {
            let flows: Vec<Flow> = entries.iter().map(|(_, flow)| *flow).collect();
            let rates = fabric.effective_network(link, &flows)?;
            for ((f, _), rate) in entries.into_iter().zip(rates) {
                out.insert((f, link), rate);
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SampleError {
    #[error(transparent)]
    Fabric(#[from] FabricError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error("detector {0:?} is not deployed")]
    NoDetector(String),
}
