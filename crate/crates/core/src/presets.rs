//! The UHF survey configuration: 471.25 to 863.25 MHz in 250 kHz steps with
//! a 1 ms dwell, grouped into 8 MHz European TV channels.

use crate::bandplan::BandPlan;
use crate::sweep::SweepConfig;
use crate::units::Hz;

pub const UHF_F_MIN: Hz = Hz(471_250_000);
pub const UHF_F_MAX: Hz = Hz(863_250_000);
pub const SAMPLE_STEP: Hz = Hz::khz(250);
pub const DWELL_S: f64 = 0.001;
pub const EU_CHANNEL_WIDTH: Hz = Hz::mhz(8);

/// Wireless-microphone scale incumbent bandwidth.
pub const NARROWBAND_BANDWIDTH: Hz = Hz::khz(200);

pub fn uhf_sweep() -> SweepConfig {
    SweepConfig {
        f_min: UHF_F_MIN,
        f_max: UHF_F_MAX,
        step: SAMPLE_STEP,
        dwell_s: DWELL_S,
    }
}

pub fn uhf_plan() -> BandPlan {
    BandPlan::new(UHF_F_MIN, UHF_F_MAX, EU_CHANNEL_WIDTH).expect("UHF plan divides exactly")
}
