//! TV channel geometry.
//!
//! Channels are half-open intervals indexed from 0 at the lower band edge:
//! channel `k` covers `[f_min + k * width, f_min + (k + 1) * width)`. A
//! frequency sitting exactly on a boundary belongs to the upper channel.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::Hz;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BandPlan {
    f_min: Hz,
    f_max: Hz,
    channel_width: Hz,
    channel_count: usize,
}

impl BandPlan {
    /// Builds a plan whose range is an exact multiple of `channel_width`.
    pub fn new(f_min: Hz, f_max: Hz, channel_width: Hz) -> Result<Self> {
        if f_max <= f_min {
            return Err(Error::Config(format!(
                "f_max ({f_max}) must exceed f_min ({f_min})"
            )));
        }
        if channel_width.0 == 0 {
            return Err(Error::Config("channel width must be positive".into()));
        }
        let span = f_max.0 - f_min.0;
        let remainder = span % channel_width.0;
        if remainder != 0 {
            return Err(Error::Config(format!(
                "range of {span} Hz is not divisible by channel width {} Hz (remainder {remainder} Hz)",
                channel_width.0
            )));
        }
        Ok(BandPlan {
            f_min,
            f_max,
            channel_width,
            channel_count: (span / channel_width.0) as usize,
        })
    }

    pub fn f_min(&self) -> Hz {
        self.f_min
    }

    pub fn f_max(&self) -> Hz {
        self.f_max
    }

    pub fn channel_width(&self) -> Hz {
        self.channel_width
    }

    pub fn channel_count(&self) -> usize {
        self.channel_count
    }

    /// `[start, end)` of channel `k`, or `None` past the last channel.
    pub fn channel_span(&self, k: usize) -> Option<(Hz, Hz)> {
        if k >= self.channel_count {
            return None;
        }
        let start = self.f_min.0 + k as u64 * self.channel_width.0;
        Some((Hz(start), Hz(start + self.channel_width.0)))
    }

    pub fn channel_of(&self, f: Hz) -> Result<usize> {
        if f < self.f_min || f >= self.f_max {
            return Err(Error::OutOfBand {
                freq: f,
                lo: self.f_min,
                hi: self.f_max,
            });
        }
        Ok(((f.0 - self.f_min.0) / self.channel_width.0) as usize)
    }

    pub fn samples_per_channel(&self, step: Hz) -> Result<usize> {
        if step.0 == 0 {
            return Err(Error::Config("step must be positive".into()));
        }
        let remainder = self.channel_width.0 % step.0;
        if remainder != 0 {
            return Err(Error::Config(format!(
                "channel width {} Hz is not divisible by step {} Hz (remainder {remainder} Hz)",
                self.channel_width.0, step.0
            )));
        }
        Ok((self.channel_width.0 / step.0) as usize)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::{uhf_plan, EU_CHANNEL_WIDTH, UHF_F_MAX, UHF_F_MIN};
    use proptest::prelude::*;

    #[test]
    fn uhf_band_has_49_channels() {
        let plan = BandPlan::new(UHF_F_MIN, UHF_F_MAX, EU_CHANNEL_WIDTH).unwrap();
        assert_eq!(plan.channel_count(), 49);
    }

    #[test]
    fn single_channel_range() {
        let plan = BandPlan::new(Hz(471_250_000), Hz(479_250_000), Hz::mhz(8)).unwrap();
        assert_eq!(plan.channel_count(), 1);
    }

    #[test]
    fn six_mhz_does_not_divide_uhf_band() {
        let err = BandPlan::new(UHF_F_MIN, UHF_F_MAX, Hz::mhz(6)).unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::Config(_)));
        // 392 MHz = 65 * 6 MHz + 2 MHz
        assert!(msg.contains("remainder 2000000 Hz"), "{msg}");
    }

    #[test]
    fn rejects_empty_or_inverted_range() {
        assert!(BandPlan::new(Hz(10), Hz(10), Hz(1)).is_err());
        assert!(BandPlan::new(Hz(10), Hz(5), Hz(1)).is_err());
        assert!(BandPlan::new(Hz(0), Hz(10), Hz(0)).is_err());
    }

    #[test]
    fn channel_of_edges() {
        let plan = uhf_plan();
        assert_eq!(plan.channel_of(Hz(471_250_000)).unwrap(), 0);
        assert_eq!(plan.channel_of(Hz(479_250_000)).unwrap(), 1);
        assert_eq!(plan.channel_of(Hz(863_000_000)).unwrap(), 48);
        assert_eq!(plan.channel_of(Hz(863_249_999)).unwrap(), 48);
    }

    #[test]
    fn channel_of_out_of_band() {
        let plan = uhf_plan();
        assert!(matches!(
            plan.channel_of(Hz(863_250_000)),
            Err(Error::OutOfBand { .. })
        ));
        assert!(matches!(
            plan.channel_of(Hz(471_249_999)),
            Err(Error::OutOfBand { .. })
        ));
    }

    #[test]
    fn samples_per_channel_cases() {
        let plan = uhf_plan();
        assert_eq!(plan.samples_per_channel(Hz::khz(250)).unwrap(), 32);
        assert_eq!(plan.samples_per_channel(Hz::mhz(8)).unwrap(), 1);
        assert!(matches!(
            plan.samples_per_channel(Hz::khz(300)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn uhf_grid_maps_32_samples_per_channel() {
        let plan = uhf_plan();
        for i in 0..1568u64 {
            let f = Hz(UHF_F_MIN.0 + i * 250_000);
            assert_eq!(plan.channel_of(f).unwrap(), (i / 32) as usize, "sample {i}");
        }
    }

    proptest! {
        #[test]
        fn channel_lower_edges_map_to_own_index(
            f_min in 0u64..1_000_000_000,
            width in 1u64..10_000_000,
            count in 1usize..64,
        ) {
            let plan = BandPlan::new(Hz(f_min), Hz(f_min + width * count as u64), Hz(width)).unwrap();
            prop_assert_eq!(plan.channel_count(), count);
            let mut cursor = plan.f_min();
            for k in 0..count {
                prop_assert_eq!(plan.channel_of(Hz(f_min + k as u64 * width)).unwrap(), k);
                let (start, end) = plan.channel_span(k).unwrap();
                prop_assert_eq!(start, cursor);
                cursor = end;
            }
            prop_assert_eq!(cursor, plan.f_max());
            prop_assert!(plan.channel_span(count).is_none());
        }
    }
}
