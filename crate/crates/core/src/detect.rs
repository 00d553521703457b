//! Energy detection over a completed sweep.
//!
//! The threshold is the midpoint, in dB, of the weakest and strongest sample
//! in the sweep. A channel is occupied as soon as one of its samples is
//! strictly above the threshold; it is free when every sample is at or below
//! it. A single narrowband carrier is therefore enough to take a whole
//! channel out of the white-space list.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::bandplan::BandPlan;
use crate::error::{Error, Result};
use crate::sweep::SweepRecord;
use crate::units::Hz;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub gamma_db: f64,
    pub min_db: f64,
    pub max_db: f64,
}

impl Threshold {
    pub fn from_powers(powers: impl IntoIterator<Item = f64>) -> Result<Threshold> {
        let mut iter = powers.into_iter();
        let first = iter
            .next()
            .ok_or_else(|| Error::Argument("cannot threshold an empty record".into()))?;
        let (min_db, max_db) = iter.fold((first, first), |(lo, hi), p| (lo.min(p), hi.max(p)));
        Ok(Threshold {
            gamma_db: (min_db + max_db) / 2.0,
            min_db,
            max_db,
        })
    }
}

pub fn compute_threshold(record: &SweepRecord) -> Result<Threshold> {
    Threshold::from_powers(record.powers())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Occupied,
    Free,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Occupied => "occupied",
            Verdict::Free => "free",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Verdict {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "occupied" => Ok(Verdict::Occupied),
            "free" => Ok(Verdict::Free),
            other => Err(Error::Argument(format!("unknown verdict `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelDecision {
    pub channel: usize,
    pub f_start: Hz,
    pub f_end: Hz,
    pub verdict: Verdict,
    /// Strongest sample in the channel.
    pub p_max_db: f64,
    /// Samples strictly above the threshold.
    pub n_exceeding: usize,
}

pub fn classify(
    record: &SweepRecord,
    plan: &BandPlan,
    threshold: &Threshold,
) -> Result<Vec<ChannelDecision>> {
    let config = &record.config;
    if config.f_min != plan.f_min() || config.f_max != plan.f_max() {
        return Err(Error::Argument(format!(
            "sweep range [{}, {}) does not match band plan [{}, {})",
            config.f_min,
            config.f_max,
            plan.f_min(),
            plan.f_max()
        )));
    }
    let per_channel = plan
        .samples_per_channel(config.step)
        .map_err(|e| Error::Argument(e.to_string()))?;
    if record.samples.len() != per_channel * plan.channel_count() {
        return Err(Error::Argument(format!(
            "record holds {} samples, plan expects {}",
            record.samples.len(),
            per_channel * plan.channel_count()
        )));
    }

    let gamma = threshold.gamma_db;
    let decisions = record
        .samples
        .chunks_exact(per_channel)
        .enumerate()
        .map(|(channel, chunk)| {
            let (f_start, f_end) = plan.channel_span(channel).expect("channel in plan");
            let p_max_db = chunk
                .iter()
                .map(|s| s.power_db)
                .fold(f64::NEG_INFINITY, f64::max);
            let n_exceeding = chunk.iter().filter(|s| s.power_db > gamma).count();
            ChannelDecision {
                channel,
                f_start,
                f_end,
                verdict: if n_exceeding > 0 {
                    Verdict::Occupied
                } else {
                    Verdict::Free
                },
                p_max_db,
                n_exceeding,
            }
        })
        .collect();
    Ok(decisions)
}

/// Indices of free channels, ascending.
pub fn white_spaces(decisions: &[ChannelDecision]) -> Vec<usize> {
    let mut free: Vec<usize> = decisions
        .iter()
        .filter(|d| d.verdict == Verdict::Free)
        .map(|d| d.channel)
        .collect();
    free.sort_unstable();
    free
}

/// Threshold and per-channel verdicts for one sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub threshold: Threshold,
    pub decisions: Vec<ChannelDecision>,
}

impl Detection {
    pub fn run(record: &SweepRecord, plan: &BandPlan) -> Result<Detection> {
        let threshold = compute_threshold(record)?;
        let decisions = classify(record, plan, &threshold)?;
        Ok(Detection {
            threshold,
            decisions,
        })
    }

    pub fn white_spaces(&self) -> Vec<usize> {
        white_spaces(&self.decisions)
    }
}

pub fn decisions_to_csv(decisions: &[ChannelDecision]) -> String {
    let mut out = String::from("channel,f_start_hz,f_end_hz,verdict,p_max_db,n_exceeding\n");
    for d in decisions {
        let _ = writeln!(
            out,
            "{},{},{},{},{:.3},{}",
            d.channel, d.f_start.0, d.f_end.0, d.verdict, d.p_max_db, d.n_exceeding
        );
    }
    out
}
