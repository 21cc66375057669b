//! Frame-level trace of who appears when, used to cross-check the analytic
//! alert model by brute force.
//!
//! Frame dropping is tail-first within each one-second window: at processed
//! fraction `f` the first `floor(f * fps)` frames of every second are
//! processed and the rest are dropped. A registered person produces an alert
//! if any processed frame shows them.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::profile::Anchor;

/// Distinct people in the input sequence.
pub const LMTD_PEOPLE: usize = 22;
/// People registered in the gallery.
pub const LMTD_REGISTERED: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Appearance {
    pub person_id: u32,
    pub first_frame: u64,
    pub last_frame: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct FrameTrace {
    pub fps: u32,
    pub duration_s: u32,
    pub appearances: Vec<Appearance>,
    pub registered: BTreeSet<u32>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TraceError {
    #[error("trace has {found} distinct people, expected {expected}")]
    People { found: usize, expected: usize },
    #[error("trace has {found} registered people, expected {expected}")]
    Registered { found: usize, expected: usize },
    #[error("registered person {0} never appears")]
    Absent(u32),
    #[error("appearance of person {person} ({first}..={last}) lies outside the trace")]
    OutOfRange { person: u32, first: u64, last: u64 },
    #[error("fraction map tops out at {needed} alerts but {available} people are registered")]
    AlertsMismatch { needed: u32, available: usize },
    #[error("{fps} fps cannot separate processed fractions {lower} and {upper}")]
    Resolution { fps: u32, lower: f64, upper: f64 },
    #[error("fraction map must be non-empty and end at fraction 1 or above")]
    BadFractionMap,
}

/// Frames processed per one-second window at fraction `f`.
pub fn processed_per_window(fps: u32, fraction: f64) -> u64 {
    let f = fraction.clamp(0.0, 1.0);
    ((f * fps as f64) + 1e-9).floor() as u64
}

impl FrameTrace {
    pub fn total_frames(&self) -> u64 {
        self.fps as u64 * self.duration_s as u64
    }

    pub fn check(&self) -> Result<(), TraceError> {
        let people: BTreeSet<u32> = self.appearances.iter().map(|a| a.person_id).collect();
        if people.len() != LMTD_PEOPLE {
            return Err(TraceError::People {
                found: people.len(),
                expected: LMTD_PEOPLE,
            });
        }
        if self.registered.len() != LMTD_REGISTERED {
            return Err(TraceError::Registered {
                found: self.registered.len(),
                expected: LMTD_REGISTERED,
            });
        }
        if let Some(p) = self.registered.iter().find(|p| !people.contains(p)) {
            return Err(TraceError::Absent(*p));
        }
        let total = self.total_frames();
        if let Some(a) = self
            .appearances
            .iter()
            .find(|a| a.first_frame > a.last_frame || a.last_frame >= total)
        {
            return Err(TraceError::OutOfRange {
                person: a.person_id,
                first: a.first_frame,
                last: a.last_frame,
            });
        }
        Ok(())
    }

    /// Brute force: walk every frame of every appearance and count the
    /// registered people seen in at least one processed frame.
    pub fn alerts_at_fraction(&self, fraction: f64) -> u32 {
        let kept = processed_per_window(self.fps, fraction);
        let fps = self.fps as u64;
        let mut seen = BTreeSet::new();
        for a in &self.appearances {
            if !self.registered.contains(&a.person_id) {
                continue;
            }
            if (a.first_frame..=a.last_frame).any(|k| k % fps < kept) {
                seen.insert(a.person_id);
            }
        }
        seen.len() as u32
    }

    /// Build a trace whose brute-force alert count matches `fraction_map`
    /// (processed fraction -> alerts, ascending) at every anchor.
    ///
    /// The registered people needed to go from one anchor's alert count to
    /// the next first appear in the frame slots that become processed between
    /// the two fractions, so they are seen exactly from that anchor on.
    pub fn synthesize(
        fraction_map: &[Anchor],
        fps: u32,
        duration_s: u32,
        seed: u64,
    ) -> Result<Self, TraceError> {
        let last = fraction_map.last().ok_or(TraceError::BadFractionMap)?;
        if last.0 < 1.0 - 1e-9 {
            return Err(TraceError::BadFractionMap);
        }
        if last.1 as usize != LMTD_REGISTERED {
            return Err(TraceError::AlertsMismatch {
                needed: last.1,
                available: LMTD_REGISTERED,
            });
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fps64 = fps as u64;
        let windows = duration_s.max(1) as u64;
        let mut appearances = Vec::new();
        let mut registered = BTreeSet::new();
        let mut next_person = 0u32;
        let mut prev_slot = 0u64;
        let mut prev_alerts = 0u32;
        let mut prev_fraction = 0.0f64;

        for anchor in fraction_map {
            let slot = processed_per_window(fps, anchor.0);
            let newcomers = anchor.1.saturating_sub(prev_alerts);
            if newcomers > 0 && slot <= prev_slot {
                return Err(TraceError::Resolution {
                    fps,
                    lower: prev_fraction,
                    upper: anchor.0,
                });
            }
            for _ in 0..newcomers {
                let window = rng.gen_range(0..windows);
                let start = rng.gen_range(prev_slot..slot);
                let end = rng.gen_range(start..fps64);
                appearances.push(Appearance {
                    person_id: next_person,
                    first_frame: window * fps64 + start,
                    last_frame: window * fps64 + end,
                });
                registered.insert(next_person);
                next_person += 1;
            }
            prev_slot = prev_slot.max(slot);
            prev_alerts = prev_alerts.max(anchor.1);
            prev_fraction = anchor.0;
        }

        // Unregistered people can appear anywhere, any number of times.
        let total = fps64 * windows;
        while (next_person as usize) < LMTD_PEOPLE {
            for _ in 0..rng.gen_range(1..=3) {
                let first = rng.gen_range(0..total);
                let last = (first + rng.gen_range(0..fps64 * 3)).min(total - 1);
                appearances.push(Appearance {
                    person_id: next_person,
                    first_frame: first,
                    last_frame: last,
                });
            }
            next_person += 1;
        }

        appearances.sort_by_key(|a| (a.first_frame, a.person_id));
        Ok(FrameTrace {
            fps,
            duration_s,
            appearances,
            registered,
        })
    }
}
