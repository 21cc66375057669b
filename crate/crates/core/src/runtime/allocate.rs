use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::fabric::Kbps;
use crate::fabric::{
    ComputeSlice, Dimension, Fabric, FabricError, LinkId, LinkState, NetworkSlice, SliceId,
    TierCapacity,
};
use crate::spec::{AppSliceSpec, AppSpec, ComputeReq, NetworkReq, TierId};

/// What one function asks of the fabric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ResourceRequest {
    pub function: String,
    pub compute: ComputeReq,
    pub network: NetworkReq,
    pub pinned_tier: Option<TierId>,
    /// Functions whose output this one consumes.
    pub upstream: Vec<String>,
}

/// Requests for every function of `app`, in placement (topological) order.
/// `None` if the graph has a cycle or a function has no slice entry.
pub fn requests_for(app: &AppSpec, slice: &AppSliceSpec) -> Option<Vec<ResourceRequest>> {
    app.topological_order()?
        .into_iter()
        .map(|name| {
            let spec = slice.per_function.get(&name)?;
            Some(ResourceRequest {
                upstream: app.upstream_of(&name),
                compute: spec.compute.clone(),
                network: spec.network.clone(),
                pinned_tier: spec.compute.tier.pinned(),
                function: name,
            })
        })
        .collect()
}

/// Admission predicate for one function on one tier fed over one link.
pub fn match_resources(c: &ComputeReq, n: &NetworkReq, tc: &TierCapacity, tn: &LinkState) -> bool {
    compute_fits(c, tc) && network_fits(n, tn)
}

fn compute_fits(c: &ComputeReq, tc: &TierCapacity) -> bool {
    tc.free_millicpu() >= c.min_cpu.0 && tc.free_memory() >= c.min_memory.0
}

fn network_fits(n: &NetworkReq, tn: &LinkState) -> bool {
    tn.headroom() >= Kbps::from_mbps(n.throughput_gbr)
        && tn.config.base_latency_ms <= n.latency
        && tn.config.base_per <= n.packet_error_rate
}

/// Why a tier was rejected for a function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TierRejection {
    pub tier: TierId,
    pub dimensions: Vec<Dimension>,
    pub reasons: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FunctionFailure {
    pub function: String,
    pub rejections: Vec<TierRejection>,
}

/// Every function that could not be placed. The fabric is left as it was.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FailureReport {
    pub failures: Vec<FunctionFailure>,
}

impl fmt::Display for FailureReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "allocation failed for")?;
        for (i, failure) in self.failures.iter().enumerate() {
            let sep = if i == 0 { " " } else { ", " };
            let dims: Vec<String> = failure
                .rejections
                .iter()
                .flat_map(|r| r.dimensions.iter().map(|d| format!("{}:{d}", r.tier)))
                .collect();
            write!(f, "{sep}{} [{}]", failure.function, dims.join(" "))?;
        }
        Ok(())
    }
}

impl std::error::Error for FailureReport {}

impl FailureReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("failure report serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Placement {
    pub tier: TierId,
    pub compute: ComputeSlice,
    /// One slice per inbound link; empty when every upstream is co-located.
    pub network: Vec<NetworkSlice>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Allocation {
    pub functions: BTreeMap<String, Placement>,
    /// Cost units per second of the granted compute.
    pub total_cost_rate: f64,
}

impl Allocation {
    pub fn tier_of(&self, function: &str) -> Option<TierId> {
        self.functions.get(function).map(|p| p.tier)
    }

    pub fn placement_map(&self) -> BTreeMap<String, TierId> {
        self.functions
            .iter()
            .map(|(name, p)| (name.clone(), p.tier))
            .collect()
    }

    pub fn network_slice_on(&self, function: &str, link: LinkId) -> Option<SliceId> {
        self.functions
            .get(function)?
            .network
            .iter()
            .find(|s| s.link == link)
            .map(|s| s.id)
    }

    /// Cost rate as currently granted in `fabric`.
    pub fn cost_rate(&self, fabric: &Fabric) -> f64 {
        self.functions
            .values()
            .map(|p| {
                let granted = fabric
                    .compute_slice(p.compute.id)
                    .map_or(0, |s| s.granted_millicpu.0);
                let cost = fabric.tier(p.tier).map_or(0.0, TierCapacity::cost);
                granted as f64 * cost
            })
            .sum()
    }
}

/// Candidate tiers for a request, cheapest first, ties in tier order.
pub fn candidate_tiers(fabric: &Fabric, pinned: Option<TierId>) -> Vec<TierId> {
    let mut tiers: Vec<&TierCapacity> = fabric
        .tiers()
        .filter(|t| pinned.is_none_or(|p| p == t.id()))
        .collect();
    tiers.sort_by(|a, b| a.cost().total_cmp(&b.cost()).then(a.id().cmp(&b.id())));
    tiers.into_iter().map(TierCapacity::id).collect()
}

/// Links a function on `tier` needs, given where its upstream functions run.
/// Unplaced upstream functions impose nothing.
pub fn inbound_links(
    upstream: &[String],
    placed: &BTreeMap<String, TierId>,
    tier: TierId,
) -> Vec<LinkId> {
    let mut links: Vec<LinkId> = upstream
        .iter()
        .filter_map(|u| placed.get(u))
        .filter(|&&t| t != tier)
        .map(|&t| LinkId::new(t, tier))
        .collect();
    links.sort();
    links.dedup();
    links
}

/// Every reason `req` cannot go on `tier` right now; empty if it fits.
pub fn match_failures(
    fabric: &Fabric,
    req: &ResourceRequest,
    tier: TierId,
    placed: &BTreeMap<String, TierId>,
) -> TierRejection {
    let mut dims = Vec::new();
    let mut reasons = Vec::new();
    match fabric.tier(tier) {
        None => {
            dims.push(Dimension::Route);
            reasons.push(FabricError::UnknownTier(tier).to_string());
        }
        Some(tc) => {
            if tc.free_millicpu() < req.compute.min_cpu.0 {
                dims.push(Dimension::Compute);
                reasons.push(format!(
                    "needs {} but {}m are free",
                    req.compute.min_cpu,
                    tc.free_millicpu()
                ));
            }
            if tc.free_memory() < req.compute.min_memory.0 {
                dims.push(Dimension::Memory);
                reasons.push(format!(
                    "needs {} bytes of memory but {} are free",
                    req.compute.min_memory.0,
                    tc.free_memory()
                ));
            }
        }
    }
    for link in inbound_links(&req.upstream, placed, tier) {
        if let Err(err) = fabric.check_network(&req.network, link) {
            if let Some(d) = err.dimension() {
                if !dims.contains(&d) {
                    dims.push(d);
                }
            }
            reasons.push(err.to_string());
        }
    }
    TierRejection {
        tier,
        dimensions: dims,
        reasons,
    }
}

/// Tier the sequential procedure would pick for `req`, without granting.
pub fn choose_tier(
    fabric: &Fabric,
    req: &ResourceRequest,
    placed: &BTreeMap<String, TierId>,
) -> Result<TierId, Vec<TierRejection>> {
    let mut rejections = Vec::new();
    let candidates = match req.pinned_tier {
        Some(pin) if fabric.tier(pin).is_none() => vec![pin],
        pin => candidate_tiers(fabric, pin),
    };
    for tier in candidates {
        let r = match_failures(fabric, req, tier, placed);
        if r.dimensions.is_empty() {
            return Ok(tier);
        }
        rejections.push(r);
    }
    Err(rejections)
}

fn grant(
    fabric: &mut Fabric,
    req: &ResourceRequest,
    tier: TierId,
    placed: &BTreeMap<String, TierId>,
) -> Result<Placement, FabricError> {
    let compute = fabric.grant_compute(&req.function, &req.compute, tier)?;
    let mut network = Vec::new();
    for link in inbound_links(&req.upstream, placed, tier) {
        match fabric.grant_network(&req.function, &req.network, link) {
            Ok(s) => network.push(s),
            Err(err) => {
                for s in network.iter().rev() {
                    fabric.release(s.id).expect("just granted");
                }
                fabric.release(compute.id).expect("just granted");
                return Err(err);
            }
        }
    }
    Ok(Placement {
        tier,
        compute,
        network,
    })
}

/// Place every request in order on the cheapest tier that can take it,
/// granting as it goes. If any function cannot be placed, all grants are
/// returned and the report names each unplaceable function.
pub fn allocate(
    requests: &[ResourceRequest],
    fabric: &mut Fabric,
) -> Result<Allocation, FailureReport> {
    let mut placed: BTreeMap<String, TierId> = BTreeMap::new();
    let mut granted: Vec<(String, Placement)> = Vec::new();
    let mut failures = Vec::new();

    for req in requests {
        let outcome = choose_tier(fabric, req, &placed).and_then(|tier| {
            grant(fabric, req, tier, &placed).map_err(|err| {
                vec![TierRejection {
                    tier,
                    dimensions: err.dimension().into_iter().collect(),
                    reasons: vec![err.to_string()],
                }]
            })
        });
        match outcome {
            Ok(p) => {
                placed.insert(req.function.clone(), p.tier);
                granted.push((req.function.clone(), p));
            }
            Err(rejections) => failures.push(FunctionFailure {
                function: req.function.clone(),
                rejections,
            }),
        }
    }

    if !failures.is_empty() {
        for (_, p) in granted.iter().rev() {
            for s in p.network.iter().rev() {
                fabric.release(s.id).expect("granted in this call");
            }
            fabric.release(p.compute.id).expect("granted in this call");
        }
        return Err(FailureReport { failures });
    }

    let mut alloc = Allocation {
        functions: granted.into_iter().collect(),
        total_cost_rate: 0.0,
    };
    alloc.total_cost_rate = alloc.cost_rate(fabric);
    Ok(alloc)
}

/// Tiers for an unsliced deployment: the tier the sequential procedure
/// would choose on an idle copy of the fabric, else the pinned tier, else an
/// upstream function's tier, else the cheapest tier.
pub fn best_effort_placement(
    requests: &[ResourceRequest],
    fabric: &Fabric,
) -> BTreeMap<String, TierId> {
    let mut scratch = fabric.clone();
    let mut placed = BTreeMap::new();
    let cheapest = candidate_tiers(fabric, None).first().copied();
    for req in requests {
        let tier = match choose_tier(&scratch, req, &placed) {
            Ok(tier) => {
                // Scratch grants only steer later choices; failures are moot.
                let _ = grant(&mut scratch, req, tier, &placed);
                Some(tier)
            }
            Err(_) => req
                .pinned_tier
                .filter(|t| fabric.tier(*t).is_some())
                .or_else(|| req.upstream.iter().find_map(|u| placed.get(u).copied()))
                .or(cheapest),
        };
        if let Some(tier) = tier {
            placed.insert(req.function.clone(), tier);
        }
    }
    placed
}
