//! External load injection: pumped background traffic on links and CPU burn
//! on tiers.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::LinkId;
use crate::spec::TierId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LoadTarget {
    Link(LinkId),
    Tier(TierId),
}

impl fmt::Display for LoadTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LoadTarget::Link(l) => write!(f, "{l}"),
            LoadTarget::Tier(t) => write!(f, "{t}"),
        }
    }
}

fn parse_tier(s: &str) -> Result<TierId, String> {
    match s.trim() {
        "device" => Ok(TierId::Device),
        "edge" => Ok(TierId::Edge),
        "cloud" => Ok(TierId::Cloud),
        other => Err(format!("unknown tier {other:?}")),
    }
}

impl FromStr for LoadTarget {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once("->") {
            Some((from, to)) => Ok(LoadTarget::Link(LinkId::new(
                parse_tier(from)?,
                parse_tier(to)?,
            ))),
            None => parse_tier(s).map(LoadTarget::Tier),
        }
    }
}

impl Serialize for LoadTarget {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for LoadTarget {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum LoadKind {
    TrafficMbps,
    CpuBurnMillicpu,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct LoadEvent {
    /// Seconds since the start of the run.
    pub time: f64,
    pub target: LoadTarget,
    pub kind: LoadKind,
    pub value: f64,
}

/// Step schedule: each event sets its target's load to `value` from `time`
/// onward. Targets with no event at or before a given time carry no load.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LoadSchedule {
    pub events: Vec<LoadEvent>,
}

impl LoadSchedule {
    pub fn new(events: Vec<LoadEvent>) -> Self {
        LoadSchedule { events }
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Checks ordering and the kind/target pairing. Returns the index and a
    /// message for the first bad event.
    pub fn check(&self) -> Result<(), (usize, String)> {
        let mut last = 0.0f64;
        for (i, ev) in self.events.iter().enumerate() {
            if !ev.time.is_finite() || ev.time < 0.0 {
                return Err((i, format!("time {} must be a finite value >= 0", ev.time)));
            }
            if ev.time < last {
                return Err((
                    i,
                    format!("time {} is earlier than the previous event", ev.time),
                ));
            }
            last = ev.time;
            if !ev.value.is_finite() || ev.value < 0.0 {
                return Err((i, format!("value {} must be a finite value >= 0", ev.value)));
            }
            match (ev.kind, ev.target) {
                (LoadKind::TrafficMbps, LoadTarget::Link(_))
                | (LoadKind::CpuBurnMillicpu, LoadTarget::Tier(_)) => {}
                (LoadKind::TrafficMbps, LoadTarget::Tier(t)) => {
                    return Err((i, format!("trafficMbps needs a link target, got tier {t}")))
                }
                (LoadKind::CpuBurnMillicpu, LoadTarget::Link(l)) => {
                    return Err((
                        i,
                        format!("cpuBurnMillicpu needs a tier target, got link {l}"),
                    ))
                }
            }
        }
        Ok(())
    }

    /// Value in force for `target`/`kind` at `clock`.
    pub fn value_at(&self, target: LoadTarget, kind: LoadKind, clock: f64) -> f64 {
        self.events
            .iter()
            .rev()
            .find(|e| e.target == target && e.kind == kind && e.time <= clock)
            .map_or(0.0, |e| e.value)
    }

    /// Replace every event for `target`/`kind` by a constant value from t = 0.
    pub fn set_constant(&mut self, target: LoadTarget, kind: LoadKind, value: f64) {
        self.events
            .retain(|e| !(e.target == target && e.kind == kind));
        self.events.insert(
            0,
            LoadEvent {
                time: 0.0,
                target,
                kind,
                value,
            },
        );
    }
}
