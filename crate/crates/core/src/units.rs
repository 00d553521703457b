//! Exact integer frequencies.

use std::fmt;

use serde::{Deserialize, Serialize};

/// A frequency in whole hertz.
///
/// Every band edge, step and channel width is kept as an integer so that
/// grid and channel arithmetic is exact.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Hz(pub u64);

impl Hz {
    pub const fn khz(v: u64) -> Self {
        Hz(v * 1_000)
    }

    pub const fn mhz(v: u64) -> Self {
        Hz(v * 1_000_000)
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64
    }
}

impl From<u64> for Hz {
    fn from(v: u64) -> Self {
        Hz(v)
    }
}

impl fmt::Display for Hz {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_multiple_of(1_000) && self.0 >= 1_000_000 {
            write!(f, "{} MHz", self.0 as f64 / 1e6)
        } else {
            write!(f, "{} Hz", self.0)
        }
    }
}

/// Linear power to decibels.
pub fn to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Decibels to linear power.
pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
