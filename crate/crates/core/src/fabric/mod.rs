//! Multi-tier compute/network fabric.
//!
//! The fabric keeps a capacity ledger for every tier (millicpu, memory) and
//! every inter-tier link (guaranteed bit rate), admits compute and network
//! slices against it, and computes the service each slice or best-effort
//! consumer receives under the external load currently applied.
//!
//! Accounting is integral: CPU in millicpu, memory in bytes and bandwidth in
//! kbps, so grant/release sequences restore headroom exactly.

mod load;
mod share;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spec::{Bytes, ComputeReq, Millicpu, NetworkReq, TierId};

pub use load::{LoadEvent, LoadKind, LoadSchedule, LoadTarget};
pub use share::max_min_fair;

/// Bandwidth in kilobits per second.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Kbps(pub u64);

impl Kbps {
    pub fn from_mbps(mbps: f64) -> Self {
        Kbps((mbps.max(0.0) * 1000.0).round() as u64)
    }

    pub fn mbps(self) -> f64 {
        self.0 as f64 / 1000.0
    }
}

impl fmt::Display for Kbps {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} Mbps", self.mbps())
    }
}

/// Directed inter-tier link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LinkId {
    pub from: TierId,
    pub to: TierId,
}

impl LinkId {
    pub fn new(from: TierId, to: TierId) -> Self {
        LinkId { from, to }
    }
}

impl fmt::Display for LinkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.from, self.to)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SliceId(pub u64);

impl fmt::Display for SliceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "slice-{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct TierConfig {
    pub tier_id: TierId,
    pub total_millicpu: Millicpu,
    pub total_memory: Bytes,
    pub cost_per_millicpu_second: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct LinkConfig {
    pub from: TierId,
    pub to: TierId,
    pub capacity_mbps: f64,
    pub base_latency_ms: f64,
    pub base_per: f64,
}

impl LinkConfig {
    pub fn id(&self) -> LinkId {
        LinkId::new(self.from, self.to)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct FabricConfig {
    pub tiers: Vec<TierConfig>,
    pub links: Vec<LinkConfig>,
    #[serde(default)]
    pub load_schedule: LoadSchedule,
}

impl FabricConfig {
    /// Device gateway, a pooled three-worker MEC cluster and a cloud region.
    /// The device->edge radio link is the 5 Mbps bottleneck.
    pub fn testbed() -> Self {
        FabricConfig {
            tiers: vec![
                TierConfig {
                    tier_id: TierId::Device,
                    total_millicpu: Millicpu(4_000),
                    total_memory: Bytes::gib(4),
                    cost_per_millicpu_second: 1.0,
                },
                TierConfig {
                    tier_id: TierId::Edge,
                    total_millicpu: Millicpu(3 * 24_000),
                    total_memory: Bytes::gib(3 * 64),
                    cost_per_millicpu_second: 2.0,
                },
                TierConfig {
                    tier_id: TierId::Cloud,
                    total_millicpu: Millicpu(64_000),
                    total_memory: Bytes::gib(256),
                    cost_per_millicpu_second: 4.0,
                },
            ],
            links: vec![
                LinkConfig {
                    from: TierId::Device,
                    to: TierId::Edge,
                    capacity_mbps: 5.0,
                    base_latency_ms: 10.0,
                    base_per: 1e-3,
                },
                LinkConfig {
                    from: TierId::Edge,
                    to: TierId::Cloud,
                    capacity_mbps: 100.0,
                    base_latency_ms: 40.0,
                    base_per: 1e-4,
                },
            ],
            load_schedule: LoadSchedule::default(),
        }
    }
}

/// Live state of one tier: the `tc_r` of the allocation algorithm.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TierCapacity {
    pub config: TierConfig,
    pub granted_millicpu: u64,
    pub granted_memory: u64,
    /// External CPU burn (millicpu). Competes with best-effort pods only.
    pub cpu_burn: u64,
}

impl TierCapacity {
    pub fn new(config: TierConfig) -> Self {
        TierCapacity {
            config,
            granted_millicpu: 0,
            granted_memory: 0,
            cpu_burn: 0,
        }
    }

    pub fn id(&self) -> TierId {
        self.config.tier_id
    }

    pub fn free_millicpu(&self) -> u64 {
        self.config.total_millicpu.0 - self.granted_millicpu
    }

    pub fn free_memory(&self) -> u64 {
        self.config.total_memory.0 - self.granted_memory
    }

    pub fn cost(&self) -> f64 {
        self.config.cost_per_millicpu_second
    }

    /// CPU left for best-effort pods after slices and external burn.
    pub fn best_effort_residual(&self) -> u64 {
        self.config
            .total_millicpu
            .0
            .saturating_sub(self.granted_millicpu)
            .saturating_sub(self.cpu_burn)
    }
}

/// Live state of one link: the `tn_r` of the allocation algorithm.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LinkState {
    pub config: LinkConfig,
    pub capacity: Kbps,
    pub granted_gbr: Kbps,
    pub external_traffic: Kbps,
}

impl LinkState {
    pub fn new(config: LinkConfig) -> Self {
        LinkState {
            capacity: Kbps::from_mbps(config.capacity_mbps),
            config,
            granted_gbr: Kbps(0),
            external_traffic: Kbps(0),
        }
    }

    pub fn id(&self) -> LinkId {
        self.config.id()
    }

    /// Capacity not yet promised to any slice.
    pub fn headroom(&self) -> Kbps {
        Kbps(self.capacity.0 - self.granted_gbr.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ComputeSlice {
    pub id: SliceId,
    pub function: String,
    pub tier: TierId,
    pub granted_millicpu: Millicpu,
    pub granted_memory: Bytes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NetworkSlice {
    pub id: SliceId,
    pub function: String,
    pub link: LinkId,
    pub gbr: Kbps,
    pub mbr: Kbps,
    pub per_bound: f64,
    pub latency_bound_ms: f64,
}

/// Resource dimension named in admission failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Dimension {
    Compute,
    Memory,
    Bandwidth,
    Latency,
    PacketErrorRate,
    /// No link connects the tiers involved.
    Route,
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dimension::Compute => "compute",
            Dimension::Memory => "memory",
            Dimension::Bandwidth => "bandwidth",
            Dimension::Latency => "latency",
            Dimension::PacketErrorRate => "packetErrorRate",
            Dimension::Route => "route",
        })
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum FabricError {
    #[error("insufficient compute on {tier}: requested {requested}, free {free}")]
    InsufficientCompute {
        tier: TierId,
        requested: Millicpu,
        free: Millicpu,
    },
    #[error("insufficient memory on {tier}: requested {requested} bytes, free {free} bytes")]
    InsufficientMemory {
        tier: TierId,
        requested: u64,
        free: u64,
    },
    #[error("insufficient bandwidth on {link}: requested {requested}, headroom {headroom}")]
    InsufficientBandwidth {
        link: LinkId,
        requested: Kbps,
        headroom: Kbps,
    },
    #[error("latency bound {bound_ms} ms unsatisfiable on {link} (base {base_ms} ms)")]
    LatencyUnsatisfiable {
        link: LinkId,
        bound_ms: f64,
        base_ms: f64,
    },
    #[error("packet error rate bound {bound} unsatisfiable on {link} (base {base})")]
    PerUnsatisfiable { link: LinkId, bound: f64, base: f64 },
    #[error("unknown slice {0}")]
    UnknownSlice(SliceId),
    #[error("unknown tier {0}")]
    UnknownTier(TierId),
    #[error("unknown link {0}")]
    UnknownLink(LinkId),
    #[error("load schedule targets unknown {0}")]
    UnknownTarget(LoadTarget),
    #[error("invalid fabric: {0}")]
    InvalidConfig(String),
}

impl FabricError {
    pub fn dimension(&self) -> Option<Dimension> {
        match self {
            FabricError::InsufficientCompute { .. } => Some(Dimension::Compute),
            FabricError::InsufficientMemory { .. } => Some(Dimension::Memory),
            FabricError::InsufficientBandwidth { .. } => Some(Dimension::Bandwidth),
            FabricError::LatencyUnsatisfiable { .. } => Some(Dimension::Latency),
            FabricError::PerUnsatisfiable { .. } => Some(Dimension::PacketErrorRate),
            FabricError::UnknownLink(_) => Some(Dimension::Route),
            _ => None,
        }
    }
}

/// One successful mutation of the capacity ledger. Each entry records the
/// free capacity of the affected resource after the change so an exported log
/// can be checked on its own.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "camelCase")]
pub enum LedgerEvent {
    #[serde(rename_all = "camelCase")]
    GrantCompute {
        slice: SliceId,
        tier: TierId,
        millicpu: u64,
        memory: u64,
        free_millicpu: u64,
        free_memory: u64,
    },
    #[serde(rename_all = "camelCase")]
    GrantNetwork {
        slice: SliceId,
        link: LinkId,
        gbr_kbps: u64,
        headroom_kbps: u64,
    },
    #[serde(rename_all = "camelCase")]
    ResizeCompute {
        slice: SliceId,
        tier: TierId,
        millicpu: u64,
        free_millicpu: u64,
    },
    #[serde(rename_all = "camelCase")]
    ResizeNetwork {
        slice: SliceId,
        link: LinkId,
        gbr_kbps: u64,
        headroom_kbps: u64,
    },
    #[serde(rename_all = "camelCase")]
    ReleaseCompute {
        slice: SliceId,
        tier: TierId,
        free_millicpu: u64,
        free_memory: u64,
    },
    #[serde(rename_all = "camelCase")]
    ReleaseNetwork {
        slice: SliceId,
        link: LinkId,
        headroom_kbps: u64,
    },
    #[serde(rename_all = "camelCase")]
    Load {
        target: LoadTarget,
        kind: LoadKind,
        value: u64,
    },
}

/// A traffic flow offered to a link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Flow {
    /// Slice carrying the flow; `None` for best-effort traffic.
    pub slice: Option<SliceId>,
    pub demand_mbps: f64,
}

#[derive(Debug, Clone)]
pub struct Fabric {
    tiers: BTreeMap<TierId, TierCapacity>,
    links: BTreeMap<LinkId, LinkState>,
    compute: BTreeMap<SliceId, ComputeSlice>,
    network: BTreeMap<SliceId, NetworkSlice>,
    next_id: u64,
    log: Vec<LedgerEvent>,
}

impl Fabric {
    pub fn new(config: &FabricConfig) -> Result<Self, FabricError> {
        let mut tiers = BTreeMap::new();
        for t in &config.tiers {
            if t.total_millicpu.0 == 0 {
                return Err(FabricError::InvalidConfig(format!(
                    "tier {} has no compute",
                    t.tier_id
                )));
            }
            if !t.cost_per_millicpu_second.is_finite() || t.cost_per_millicpu_second < 0.0 {
                return Err(FabricError::InvalidConfig(format!(
                    "tier {} has an invalid cost",
                    t.tier_id
                )));
            }
            if tiers
                .insert(t.tier_id, TierCapacity::new(t.clone()))
                .is_some()
            {
                return Err(FabricError::InvalidConfig(format!(
                    "tier {} declared twice",
                    t.tier_id
                )));
            }
        }
        let mut links = BTreeMap::new();
        for l in &config.links {
            let id = l.id();
            for end in [l.from, l.to] {
                if !tiers.contains_key(&end) {
                    return Err(FabricError::InvalidConfig(format!(
                        "link {id} references undeclared tier {end}"
                    )));
                }
            }
            if l.from == l.to {
                return Err(FabricError::InvalidConfig(format!("link {id} is a loop")));
            }
            let valid = l.capacity_mbps.is_finite()
                && l.capacity_mbps > 0.0
                && l.base_latency_ms.is_finite()
                && l.base_latency_ms >= 0.0
                && (0.0..=1.0).contains(&l.base_per);
            if !valid {
                return Err(FabricError::InvalidConfig(format!(
                    "link {id} needs capacity > 0, latency >= 0 and PER in [0, 1]"
                )));
            }
            if links.insert(id, LinkState::new(l.clone())).is_some() {
                return Err(FabricError::InvalidConfig(format!(
                    "link {id} declared twice"
                )));
            }
        }
        Ok(Fabric {
            tiers,
            links,
            compute: BTreeMap::new(),
            network: BTreeMap::new(),
            next_id: 1,
            log: Vec::new(),
        })
    }

    pub fn tiers(&self) -> impl Iterator<Item = &TierCapacity> {
        self.tiers.values()
    }

    pub fn links(&self) -> impl Iterator<Item = &LinkState> {
        self.links.values()
    }

    pub fn tier(&self, id: TierId) -> Option<&TierCapacity> {
        self.tiers.get(&id)
    }

    pub fn link(&self, id: LinkId) -> Option<&LinkState> {
        self.links.get(&id)
    }

    pub fn compute_slice(&self, id: SliceId) -> Option<&ComputeSlice> {
        self.compute.get(&id)
    }

    pub fn network_slice(&self, id: SliceId) -> Option<&NetworkSlice> {
        self.network.get(&id)
    }

    pub fn compute_slices(&self) -> impl Iterator<Item = &ComputeSlice> {
        self.compute.values()
    }

    pub fn network_slices(&self) -> impl Iterator<Item = &NetworkSlice> {
        self.network.values()
    }

    pub fn log(&self) -> &[LedgerEvent] {
        &self.log
    }

    /// Ledger log as JSON lines.
    pub fn log_jsonl(&self) -> String {
        let mut out = String::new();
        for ev in &self.log {
            out.push_str(&serde_json::to_string(ev).expect("ledger event serializes"));
            out.push('\n');
        }
        out
    }

    fn fresh_id(&mut self) -> SliceId {
        let id = SliceId(self.next_id);
        self.next_id += 1;
        id
    }

    /// Reserve compute on `tier`. The grant is as large as the request's
    /// maximum allows given free capacity, and never below its minimum.
    pub fn grant_compute(
        &mut self,
        function: &str,
        req: &ComputeReq,
        tier: TierId,
    ) -> Result<ComputeSlice, FabricError> {
        let state = self
            .tiers
            .get(&tier)
            .ok_or(FabricError::UnknownTier(tier))?;
        let free = state.free_millicpu();
        if free < req.min_cpu.0 {
            return Err(FabricError::InsufficientCompute {
                tier,
                requested: req.min_cpu,
                free: Millicpu(free),
            });
        }
        let free_mem = state.free_memory();
        if free_mem < req.min_memory.0 {
            return Err(FabricError::InsufficientMemory {
                tier,
                requested: req.min_memory.0,
                free: free_mem,
            });
        }
        let millicpu = req.max_cpu.0.max(req.min_cpu.0).min(free);
        let memory = req.max_memory.0.max(req.min_memory.0).min(free_mem);

        let id = self.fresh_id();
        let state = self.tiers.get_mut(&tier).expect("checked above");
        state.granted_millicpu += millicpu;
        state.granted_memory += memory;
        let (free_millicpu, free_memory) = (state.free_millicpu(), state.free_memory());

        let slice = ComputeSlice {
            id,
            function: function.to_string(),
            tier,
            granted_millicpu: Millicpu(millicpu),
            granted_memory: Bytes(memory),
        };
        self.compute.insert(id, slice.clone());
        self.log.push(LedgerEvent::GrantCompute {
            slice: id,
            tier,
            millicpu,
            memory,
            free_millicpu,
            free_memory,
        });
        Ok(slice)
    }

    /// Admission checks for a network request on a link, without granting.
    pub fn check_network(&self, req: &NetworkReq, link: LinkId) -> Result<(), FabricError> {
        let state = self
            .links
            .get(&link)
            .ok_or(FabricError::UnknownLink(link))?;
        if state.config.base_latency_ms > req.latency {
            return Err(FabricError::LatencyUnsatisfiable {
                link,
                bound_ms: req.latency,
                base_ms: state.config.base_latency_ms,
            });
        }
        if state.config.base_per > req.packet_error_rate {
            return Err(FabricError::PerUnsatisfiable {
                link,
                bound: req.packet_error_rate,
                base: state.config.base_per,
            });
        }
        let gbr = Kbps::from_mbps(req.throughput_gbr);
        if state.headroom() < gbr {
            return Err(FabricError::InsufficientBandwidth {
                link,
                requested: gbr,
                headroom: state.headroom(),
            });
        }
        Ok(())
    }

    /// Admit a network slice on `link`, reserving its guaranteed bit rate.
    pub fn grant_network(
        &mut self,
        function: &str,
        req: &NetworkReq,
        link: LinkId,
    ) -> Result<NetworkSlice, FabricError> {
        self.check_network(req, link)?;
        let gbr = Kbps::from_mbps(req.throughput_gbr);
        let mbr = Kbps::from_mbps(req.throughput_mbr).max(gbr);
        let id = self.fresh_id();
        let state = self.links.get_mut(&link).expect("checked above");
        state.granted_gbr.0 += gbr.0;
        let headroom = state.headroom();

        let slice = NetworkSlice {
            id,
            function: function.to_string(),
            link,
            gbr,
            mbr,
            per_bound: req.packet_error_rate,
            latency_bound_ms: req.latency,
        };
        self.network.insert(id, slice.clone());
        self.log.push(LedgerEvent::GrantNetwork {
            slice: id,
            link,
            gbr_kbps: gbr.0,
            headroom_kbps: headroom.0,
        });
        Ok(slice)
    }

    /// Change the reservation of a compute slice in one step, as if it were
    /// released and granted again at the new size.
    pub fn resize_compute(&mut self, id: SliceId, millicpu: Millicpu) -> Result<(), FabricError> {
        let slice = self.compute.get(&id).ok_or(FabricError::UnknownSlice(id))?;
        let tier = slice.tier;
        let current = slice.granted_millicpu.0;
        let state = self
            .tiers
            .get_mut(&tier)
            .ok_or(FabricError::UnknownTier(tier))?;
        let available = state.free_millicpu() + current;
        if millicpu.0 > available {
            return Err(FabricError::InsufficientCompute {
                tier,
                requested: millicpu,
                free: Millicpu(available),
            });
        }
        state.granted_millicpu = state.granted_millicpu - current + millicpu.0;
        let free_millicpu = state.free_millicpu();
        self.compute.get_mut(&id).expect("present").granted_millicpu = millicpu;
        self.log.push(LedgerEvent::ResizeCompute {
            slice: id,
            tier,
            millicpu: millicpu.0,
            free_millicpu,
        });
        Ok(())
    }

    /// Change the guaranteed rate of a network slice in one step. The maximum
    /// rate is raised if the new guarantee exceeds it.
    pub fn resize_network(&mut self, id: SliceId, gbr: Kbps) -> Result<(), FabricError> {
        let slice = self.network.get(&id).ok_or(FabricError::UnknownSlice(id))?;
        let link = slice.link;
        let current = slice.gbr.0;
        let state = self
            .links
            .get_mut(&link)
            .ok_or(FabricError::UnknownLink(link))?;
        let available = state.headroom().0 + current;
        if gbr.0 > available {
            return Err(FabricError::InsufficientBandwidth {
                link,
                requested: gbr,
                headroom: Kbps(available),
            });
        }
        state.granted_gbr.0 = state.granted_gbr.0 - current + gbr.0;
        let headroom = state.headroom();
        let slice = self.network.get_mut(&id).expect("present");
        slice.gbr = gbr;
        slice.mbr = slice.mbr.max(gbr);
        self.log.push(LedgerEvent::ResizeNetwork {
            slice: id,
            link,
            gbr_kbps: gbr.0,
            headroom_kbps: headroom.0,
        });
        Ok(())
    }

    /// Return a slice's reservation to the ledger.
    pub fn release(&mut self, id: SliceId) -> Result<(), FabricError> {
        if let Some(slice) = self.compute.remove(&id) {
            let state = self.tiers.get_mut(&slice.tier).expect("slice tier exists");
            state.granted_millicpu -= slice.granted_millicpu.0;
            state.granted_memory -= slice.granted_memory.0;
            self.log.push(LedgerEvent::ReleaseCompute {
                slice: id,
                tier: slice.tier,
                free_millicpu: state.free_millicpu(),
                free_memory: state.free_memory(),
            });
            return Ok(());
        }
        if let Some(slice) = self.network.remove(&id) {
            let state = self.links.get_mut(&slice.link).expect("slice link exists");
            state.granted_gbr.0 -= slice.gbr.0;
            self.log.push(LedgerEvent::ReleaseNetwork {
                slice: id,
                link: slice.link,
                headroom_kbps: state.headroom().0,
            });
            return Ok(());
        }
        Err(FabricError::UnknownSlice(id))
    }

    /// Make sure every target of `schedule` exists in this fabric.
    pub fn check_schedule(&self, schedule: &LoadSchedule) -> Result<(), FabricError> {
        for ev in &schedule.events {
            let known = match ev.target {
                LoadTarget::Link(l) => self.links.contains_key(&l),
                LoadTarget::Tier(t) => self.tiers.contains_key(&t),
            };
            if !known {
                return Err(FabricError::UnknownTarget(ev.target));
            }
        }
        Ok(())
    }

    /// Step external load to the values `schedule` prescribes at `clock`.
    pub fn apply_load(&mut self, schedule: &LoadSchedule, clock: f64) -> Result<(), FabricError> {
        self.check_schedule(schedule)?;
        let link_ids: Vec<LinkId> = self.links.keys().copied().collect();
        for id in link_ids {
            let target = LoadTarget::Link(id);
            let value = Kbps::from_mbps(schedule.value_at(target, LoadKind::TrafficMbps, clock));
            let state = self.links.get_mut(&id).expect("listed");
            if state.external_traffic != value {
                state.external_traffic = value;
                self.log.push(LedgerEvent::Load {
                    target,
                    kind: LoadKind::TrafficMbps,
                    value: value.0,
                });
            }
        }
        let tier_ids: Vec<TierId> = self.tiers.keys().copied().collect();
        for id in tier_ids {
            let target = LoadTarget::Tier(id);
            let value = schedule
                .value_at(target, LoadKind::CpuBurnMillicpu, clock)
                .round() as u64;
            let state = self.tiers.get_mut(&id).expect("listed");
            if state.cpu_burn != value {
                state.cpu_burn = value;
                self.log.push(LedgerEvent::Load {
                    target,
                    kind: LoadKind::CpuBurnMillicpu,
                    value,
                });
            }
        }
        Ok(())
    }

    /// Delivered rate (Mbps) for each flow offered to `link`.
    ///
    /// Sliced flows first receive `min(demand, gbr)`. External traffic then
    /// takes what it can of the remaining capacity, and whatever is left is
    /// shared max-min fairly among best-effort flows and the part of each
    /// sliced flow's demand above its guarantee (up to its maximum rate).
    pub fn effective_network(&self, link: LinkId, flows: &[Flow]) -> Result<Vec<f64>, FabricError> {
        let state = self
            .links
            .get(&link)
            .ok_or(FabricError::UnknownLink(link))?;
        let mut guaranteed = Vec::with_capacity(flows.len());
        let mut wants = Vec::with_capacity(flows.len());
        for flow in flows {
            let demand = flow.demand_mbps.max(0.0) * 1000.0;
            match flow.slice {
                Some(id) => {
                    let slice = self.network.get(&id).ok_or(FabricError::UnknownSlice(id))?;
                    let g = demand.min(slice.gbr.0 as f64);
                    guaranteed.push(g);
                    wants.push((demand.min(slice.mbr.0 as f64) - g).max(0.0));
                }
                None => {
                    guaranteed.push(0.0);
                    wants.push(demand);
                }
            }
        }
        let committed: f64 = guaranteed.iter().sum();
        let residual =
            (state.capacity.0 as f64 - committed - state.external_traffic.0 as f64).max(0.0);
        let shares = max_min_fair(&wants, residual);
        Ok(guaranteed
            .iter()
            .zip(shares)
            .map(|(g, s)| (g + s) / 1000.0)
            .collect())
    }

    /// Millicpu available to each consumer on `tier`: a slice gets its full
    /// grant, best-effort pods (`None`) split the residual evenly.
    pub fn effective_compute(
        &self,
        tier: TierId,
        pods: &[Option<SliceId>],
    ) -> Result<Vec<f64>, FabricError> {
        let state = self
            .tiers
            .get(&tier)
            .ok_or(FabricError::UnknownTier(tier))?;
        let best_effort = pods.iter().filter(|p| p.is_none()).count();
        let share = if best_effort == 0 {
            0.0
        } else {
            state.best_effort_residual() as f64 / best_effort as f64
        };
        pods.iter()
            .map(|pod| match pod {
                Some(id) => self
                    .compute
                    .get(id)
                    .map(|s| s.granted_millicpu.0 as f64)
                    .ok_or(FabricError::UnknownSlice(*id)),
                None => Ok(share),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests;
