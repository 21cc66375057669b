use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fabric::{Fabric, LoadKind, LoadTarget};
use crate::runtime::{best_effort_placement, inbound_links, requests_for};
use crate::workload::Bottleneck;

use super::{run, Scenario, ScenarioError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    Net,
    Cpu,
    Joint,
}

impl FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "net" | "network" => Ok(SweepAxis::Net),
            "cpu" | "compute" => Ok(SweepAxis::Cpu),
            "joint" => Ok(SweepAxis::Joint),
            other => Err(format!(
                "unknown axis {other:?}; expected net, cpu or joint"
            )),
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepAxis::Net => "net",
            SweepAxis::Cpu => "cpu",
            SweepAxis::Joint => "joint",
        })
    }
}

/// Service left to the detector at one sweep point. `None` leaves that
/// side as the base scenario has it.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SweepPoint {
    pub net_mbps: Option<f64>,
    pub cpu_cores: Option<f64>,
}

impl SweepPoint {
    /// Parse one value for `axis`: a number, or `mbps:cores` for joint.
    pub fn parse(axis: SweepAxis, text: &str) -> Result<Self, String> {
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite() && *v >= 0.0)
                .ok_or_else(|| format!("{s:?} is not a non-negative number"))
        };
        match axis {
            SweepAxis::Net => Ok(SweepPoint {
                net_mbps: Some(num(text)?),
                cpu_cores: None,
            }),
            SweepAxis::Cpu => Ok(SweepPoint {
                net_mbps: None,
                cpu_cores: Some(num(text)?),
            }),
            SweepAxis::Joint => {
                let (b, c) = text
                    .split_once(':')
                    .ok_or_else(|| format!("joint value {text:?} must look like mbps:cores"))?;
                Ok(SweepPoint {
                    net_mbps: Some(num(b)?),
                    cpu_cores: Some(num(c)?),
                })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SweepRow {
    pub point: SweepPoint,
    /// Service the detector actually saw.
    pub delivered_mbps: f64,
    pub delivered_cores: f64,
    pub alerts: u32,
    pub bottleneck: Bottleneck,
}

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("detector {0:?} must be fed over exactly one link to sweep the network")]
    DetectorLink(String),
    #[error("{value} Mbps exceeds the {capacity} Mbps capacity of {link}")]
    NetOutOfRange {
        value: f64,
        capacity: f64,
        link: String,
    },
    #[error("{value} cores for each of {pods} pods exceeds tier {tier}")]
    CpuOutOfRange {
        value: f64,
        pods: usize,
        tier: String,
    },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

/// Scenario for one sweep point: the base run unsliced, with external load
/// set so that the detector's residual matches the point.
fn point_scenario(base: &Scenario, point: SweepPoint) -> Result<Scenario, SweepError> {
    let mut s = base.clone();
    s.best_effort = true;
    let fabric = Fabric::new(&s.fabric)
        .map_err(|e| ScenarioError::Run(crate::runtime::RunError::Fabric(e)))?;
    let requests = requests_for(&s.app, &s.app_slice).ok_or_else(|| {
        ScenarioError::Run(crate::runtime::RunError::Invalid(
            "application graph is cyclic or a function has no slice".into(),
        ))
    })?;
    let placement = best_effort_placement(&requests, &fabric);
    let detector = &s.workload.pipeline.detector;
    let req = requests
        .iter()
        .find(|r| &r.function == detector)
        .ok_or_else(|| SweepError::DetectorLink(detector.clone()))?;
    let tier = placement[detector];

    if let Some(v) = point.net_mbps {
        let links = inbound_links(&req.upstream, &placement, tier);
        let [link] = links[..] else {
            return Err(SweepError::DetectorLink(detector.clone()));
        };
        let capacity = fabric
            .link(link)
            .expect("placement uses fabric links")
            .capacity
            .mbps();
        if v > capacity {
            return Err(SweepError::NetOutOfRange {
                value: v,
                capacity,
                link: link.to_string(),
            });
        }
        s.fabric.load_schedule.set_constant(
            LoadTarget::Link(link),
            LoadKind::TrafficMbps,
            capacity - v,
        );
    }
    if let Some(v) = point.cpu_cores {
        let pods = placement.values().filter(|t| **t == tier).count();
        let total = fabric
            .tier(tier)
            .expect("placed on a fabric tier")
            .config
            .total_millicpu
            .0;
        let burn = total as f64 - pods as f64 * v * 1000.0;
        if burn < 0.0 {
            return Err(SweepError::CpuOutOfRange {
                value: v,
                pods,
                tier: tier.to_string(),
            });
        }
        s.fabric.load_schedule.set_constant(
            LoadTarget::Tier(tier),
            LoadKind::CpuBurnMillicpu,
            burn,
        );
    }
    Ok(s)
}

/// Run `base` once per point, in parallel; rows come back in input order.
pub fn sweep(base: &Scenario, points: &[SweepPoint]) -> Result<Vec<SweepRow>, SweepError> {
    points
        .par_iter()
        .map(|&point| {
            let scenario = point_scenario(base, point)?;
            let report = run(&scenario)?;
            let best = report
                .metrics_series
                .iter()
                .max_by_key(|s| s.interval_alerts)
                .cloned();
            let (delivered_mbps, delivered_cores, bottleneck) = best
                .map(|s| (s.detector_mbps, s.detector_cores, s.bottleneck))
                .unwrap_or((0.0, 0.0, Bottleneck::None));
            Ok(SweepRow {
                point,
                delivered_mbps,
                delivered_cores,
                alerts: report.alerts,
                bottleneck,
            })
        })
        .collect()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "net_mbps",
        "cpu_cores",
        "delivered_mbps",
        "delivered_cores",
        "alerts",
        "bottleneck",
    ])
    .expect("in-memory write");
    for r in rows {
        w.write_record([
            opt(r.point.net_mbps),
            opt(r.point.cpu_cores),
            r.delivered_mbps.to_string(),
            r.delivered_cores.to_string(),
            r.alerts.to_string(),
            r.bottleneck.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}
