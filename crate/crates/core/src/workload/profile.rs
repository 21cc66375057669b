use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative slack when comparing an operating point with an anchor key, so
/// that values such as `5.0 - 4.75` land on the `0.25` anchor.
const KEY_EPS: f64 = 1e-9;

/// One calibration point: at `at` (Mbps or cores) the application produced
/// `alerts` alerts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Anchor(pub f64, pub u32);

impl Anchor {
    pub fn at(&self) -> f64 {
        self.0
    }

    pub fn alerts(&self) -> u32 {
        self.1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Interpolation {
    /// Value of the largest anchor at or below the input.
    #[default]
    StepFloor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Curve {
    Network,
    Compute,
    Fraction,
}

impl fmt::Display for Curve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Curve::Network => "netAnchors",
            Curve::Compute => "cpuAnchors",
            Curve::Fraction => "fraction map",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProfileError {
    #[error("{curve} is empty")]
    Empty { curve: Curve },
    #[error("{curve} anchor {at} must be a finite value > 0")]
    BadKey { curve: Curve, at: f64 },
    #[error("{curve} is not monotone: anchor ({}, {}) is followed by ({}, {})", lower.0, lower.1, upper.0, upper.1)]
    NonMonotone {
        curve: Curve,
        lower: Anchor,
        upper: Anchor,
    },
    #[error("{curve} maps the same point {at} to both {first} and {second} alerts")]
    Conflict {
        curve: Curve,
        at: f64,
        first: u32,
        second: u32,
    },
    #[error("{curve} operating point {value} is below the smallest anchor {floor}")]
    Domain {
        curve: Curve,
        value: f64,
        floor: f64,
    },
}

/// Maps delivered network and compute service to the alert count the
/// application reaches, from measured anchor points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CalibrationProfile {
    /// Delivered Mbps into the detector -> alerts, with ample compute.
    pub net_anchors: Vec<Anchor>,
    /// Available detector cores -> alerts, with ample network.
    pub cpu_anchors: Vec<Anchor>,
    #[serde(default)]
    pub interpolation: Interpolation,
    /// Clamp operating points below the smallest anchor to that anchor's
    /// value (and flag it) instead of failing.
    #[serde(default = "default_true")]
    pub clamp_floor: bool,
}

fn default_true() -> bool {
    true
}

/// Alerts reachable at one operating point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepValue {
    pub alerts: u32,
    /// The input fell below the smallest anchor and was clamped.
    pub clamped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bottleneck {
    Network,
    Compute,
    None,
}

impl fmt::Display for Bottleneck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Bottleneck::Network => "network",
            Bottleneck::Compute => "compute",
            Bottleneck::None => "none",
        })
    }
}

/// Alerts for a constant operating point, with the side that limits them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointAlerts {
    pub alerts: u32,
    pub network_alerts: u32,
    pub compute_alerts: u32,
    pub bottleneck: Bottleneck,
    pub clamped: bool,
}

pub(crate) fn sorted(anchors: &[Anchor]) -> Vec<Anchor> {
    let mut out = anchors.to_vec();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

fn check_curve(anchors: &[Anchor], curve: Curve) -> Result<Vec<Anchor>, ProfileError> {
    if anchors.is_empty() {
        return Err(ProfileError::Empty { curve });
    }
    if let Some(bad) = anchors.iter().find(|a| !a.0.is_finite() || a.0 <= 0.0) {
        return Err(ProfileError::BadKey { curve, at: bad.0 });
    }
    let ordered = sorted(anchors);
    for pair in ordered.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        if (hi.0 - lo.0).abs() <= KEY_EPS * hi.0 {
            if lo.1 != hi.1 {
                return Err(ProfileError::Conflict {
                    curve,
                    at: lo.0,
                    first: lo.1,
                    second: hi.1,
                });
            }
        } else if hi.1 < lo.1 {
            return Err(ProfileError::NonMonotone {
                curve,
                lower: lo,
                upper: hi,
            });
        }
    }
    Ok(ordered)
}

fn step_floor(
    ordered: &[Anchor],
    value: f64,
    curve: Curve,
    clamp: bool,
) -> Result<StepValue, ProfileError> {
    if value <= 0.0 {
        // Nothing delivered: no frame is ever processed.
        return Ok(StepValue {
            alerts: 0,
            clamped: false,
        });
    }
    let hit = ordered
        .iter()
        .rev()
        .find(|a| a.0 <= value * (1.0 + KEY_EPS));
    match hit {
        Some(a) => Ok(StepValue {
            alerts: a.1,
            clamped: false,
        }),
        None if clamp => Ok(StepValue {
            alerts: ordered[0].1,
            clamped: true,
        }),
        None => Err(ProfileError::Domain {
            curve,
            value,
            floor: ordered[0].0,
        }),
    }
}

impl CalibrationProfile {
    pub fn check(&self) -> Result<(), ProfileError> {
        check_curve(&self.net_anchors, Curve::Network)?;
        check_curve(&self.cpu_anchors, Curve::Compute)?;
        Ok(())
    }

    pub fn network_alerts(&self, mbps: f64) -> Result<StepValue, ProfileError> {
        let ordered = check_curve(&self.net_anchors, Curve::Network)?;
        step_floor(&ordered, mbps, Curve::Network, self.clamp_floor)
    }

    pub fn compute_alerts(&self, cores: f64) -> Result<StepValue, ProfileError> {
        let ordered = check_curve(&self.cpu_anchors, Curve::Compute)?;
        step_floor(&ordered, cores, Curve::Compute, self.clamp_floor)
    }

    /// Alerts at a constant operating point: the smaller of what the network
    /// and the compute curves allow.
    pub fn point_alerts(&self, mbps: f64, cores: f64) -> Result<PointAlerts, ProfileError> {
        let net = self.network_alerts(mbps)?;
        let cpu = self.compute_alerts(cores)?;
        let bottleneck = match net.alerts.cmp(&cpu.alerts) {
            std::cmp::Ordering::Less => Bottleneck::Network,
            std::cmp::Ordering::Greater => Bottleneck::Compute,
            std::cmp::Ordering::Equal => Bottleneck::None,
        };
        Ok(PointAlerts {
            alerts: net.alerts.min(cpu.alerts),
            network_alerts: net.alerts,
            compute_alerts: cpu.alerts,
            bottleneck,
            clamped: net.clamped || cpu.clamped,
        })
    }

    /// Both curves expressed over processed fraction (key divided by the
    /// full-rate demand) and merged. Fails if the merged map assigns two
    /// alert counts to one fraction or is not monotone.
    pub fn fraction_map(
        &self,
        full_mbps: f64,
        full_cores: f64,
    ) -> Result<Vec<Anchor>, ProfileError> {
        let net = check_curve(&self.net_anchors, Curve::Network)?;
        let cpu = check_curve(&self.cpu_anchors, Curve::Compute)?;
        let merged: Vec<Anchor> = net
            .iter()
            .map(|a| Anchor(a.0 / full_mbps, a.1))
            .chain(cpu.iter().map(|a| Anchor(a.0 / full_cores, a.1)))
            .collect();
        let ordered = check_curve(&merged, Curve::Fraction)?;
        let mut dedup: Vec<Anchor> = Vec::with_capacity(ordered.len());
        for a in ordered {
            match dedup.last() {
                Some(last) if (a.0 - last.0).abs() <= KEY_EPS * a.0 => {}
                _ => dedup.push(a),
            }
        }
        Ok(dedup)
    }
}

/// Alert total of a run from per-interval delivered network (Mbps into the
/// detector) and compute (detector cores). A person alerted once stays
/// alerted, so the total is the best interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AlertTally {
    pub alerts: u32,
    pub clamped_intervals: u32,
}

pub fn alerts(
    delivered_mbps: &[f64],
    delivered_cores: &[f64],
    profile: &CalibrationProfile,
) -> Result<AlertTally, ProfileError> {
    let mut tally = AlertTally::default();
    for (&b, &c) in delivered_mbps.iter().zip(delivered_cores) {
        let point = profile.point_alerts(b, c)?;
        tally.alerts = tally.alerts.max(point.alerts);
        if point.clamped {
            tally.clamped_intervals += 1;
        }
    }
    Ok(tally)
}
