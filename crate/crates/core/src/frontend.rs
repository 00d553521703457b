//! Radio front-end abstraction: tune, dwell, measure.
//!
//! [`SimulatedFrontEnd`] measures a [`Scene`] either analytically (closed
//! form band power, optional Gaussian jitter) or by synthesizing an IQ
//! capture and estimating in-band mean-square power from it. Both modes
//! report raw per-dwell power with no smoothing across dwells.

use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::{bin_offset, Scene};
use crate::units::{to_db, Hz};

pub const DEFAULT_TUNABLE_MIN: Hz = Hz::mhz(50);
pub const DEFAULT_TUNABLE_MAX: Hz = Hz::mhz(2_200);
pub const DEFAULT_SAMPLE_RATE: Hz = Hz::mhz(4);

/// Largest IQ block a single dwell may capture.
pub const MAX_CAPTURE_SAMPLES: usize = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureMode {
    #[default]
    Analytic,
    Iq,
}

/// One power reading at one tuned frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerSample {
    #[serde(rename = "f_hz")]
    pub f_center: Hz,
    #[serde(rename = "p_db")]
    pub power_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FrontEndConfig {
    pub mode: MeasureMode,
    /// Resolution bandwidth of one measurement. Sweeps set this to their step.
    #[serde(rename = "measurement_bandwidth_hz")]
    pub measurement_bandwidth: Hz,
    #[serde(rename = "sample_rate_hz")]
    pub sample_rate: Hz,
    pub seed: u64,
    pub jitter_sigma_db: f64,
    #[serde(rename = "tunable_min_hz")]
    pub tunable_min: Hz,
    #[serde(rename = "tunable_max_hz")]
    pub tunable_max: Hz,
    /// Sleep for the dwell time on every measurement, like real hardware.
    pub pace_dwell: bool,
}

impl Default for FrontEndConfig {
    fn default() -> Self {
        FrontEndConfig {
            mode: MeasureMode::Analytic,
            measurement_bandwidth: crate::presets::SAMPLE_STEP,
            sample_rate: DEFAULT_SAMPLE_RATE,
            seed: 0,
            jitter_sigma_db: 0.0,
            tunable_min: DEFAULT_TUNABLE_MIN,
            tunable_max: DEFAULT_TUNABLE_MAX,
            pace_dwell: false,
        }
    }
}

impl FrontEndConfig {
    pub fn validate(&self) -> Result<()> {
        if self.measurement_bandwidth.0 == 0 {
            return Err(Error::Config(
                "measurement bandwidth must be positive".into(),
            ));
        }
        if !(self.jitter_sigma_db >= 0.0 && self.jitter_sigma_db.is_finite()) {
            return Err(Error::Config("jitter sigma must be finite and >= 0".into()));
        }
        if self.tunable_max < self.tunable_min {
            return Err(Error::Config("tunable range is inverted".into()));
        }
        if self.mode == MeasureMode::Iq && self.sample_rate < self.measurement_bandwidth {
            return Err(Error::Config(format!(
                "sample rate {} is below measurement bandwidth {}",
                self.sample_rate, self.measurement_bandwidth
            )));
        }
        Ok(())
    }
}

/// A tunable receiver that reports band power at a center frequency.
pub trait FrontEnd: Send {
    /// Inclusive tuning limits.
    fn tunable_range(&self) -> (Hz, Hz);

    fn measurement_bandwidth(&self) -> Hz;

    fn set_measurement_bandwidth(&mut self, bandwidth: Hz) -> Result<()>;

    fn measure(&mut self, f_center: Hz, dwell_s: f64) -> Result<PowerSample>;
}

/// Counts measurements and tracks how many were ever in flight at once.
#[derive(Debug, Default)]
pub struct AccessGuard {
    in_flight: AtomicUsize,
    max_in_flight: AtomicUsize,
    measurements: AtomicU64,
}

impl AccessGuard {
    pub fn max_in_flight(&self) -> usize {
        self.max_in_flight.load(Ordering::SeqCst)
    }

    pub fn measurements(&self) -> u64 {
        self.measurements.load(Ordering::SeqCst)
    }

    fn enter(&self) -> AccessToken<'_> {
        let now = self.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
        self.max_in_flight.fetch_max(now, Ordering::SeqCst);
        self.measurements.fetch_add(1, Ordering::SeqCst);
        AccessToken(self)
    }
}

struct AccessToken<'a>(&'a AccessGuard);

impl Drop for AccessToken<'_> {
    fn drop(&mut self) {
        self.0.in_flight.fetch_sub(1, Ordering::SeqCst);
    }
}

pub struct SimulatedFrontEnd {
    config: FrontEndConfig,
    scene: Arc<Scene>,
    rng: ChaCha8Rng,
    guard: Arc<AccessGuard>,
    planner: FftPlanner<f64>,
}

impl SimulatedFrontEnd {
    pub fn new(scene: Arc<Scene>, config: FrontEndConfig) -> Result<Self> {
        config.validate()?;
        Ok(SimulatedFrontEnd {
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            config,
            scene,
            guard: Arc::new(AccessGuard::default()),
            planner: FftPlanner::new(),
        })
    }

    pub fn config(&self) -> &FrontEndConfig {
        &self.config
    }

    pub fn scene(&self) -> &Scene {
        &self.scene
    }

    pub fn access_guard(&self) -> Arc<AccessGuard> {
        Arc::clone(&self.guard)
    }

    fn measure_analytic(&mut self, f_center: Hz) -> Result<f64> {
        let half = self.config.measurement_bandwidth.as_f64() / 2.0;
        let fc = f_center.as_f64();
        let mut power = self.scene.band_power(fc - half, fc + half)?;
        if self.config.jitter_sigma_db > 0.0 {
            let jitter = Normal::new(0.0, self.config.jitter_sigma_db)
                .map_err(|e| Error::Config(e.to_string()))?;
            power += jitter.sample(&mut self.rng);
        }
        Ok(power)
    }

    fn measure_iq(&mut self, f_center: Hz, dwell_s: f64) -> Result<f64> {
        let fs = self.config.sample_rate;
        let n = (dwell_s * fs.as_f64()).round();
        if !(1.0..=MAX_CAPTURE_SAMPLES as f64).contains(&n) {
            return Err(Error::Argument(format!(
                "dwell {dwell_s} s at {fs} yields {n} samples, outside [1, {MAX_CAPTURE_SAMPLES}]"
            )));
        }
        let n = n as usize;
        let capture_seed = self.rng.next_u64();
        let mut block = self.scene.generate_iq(f_center, fs, n, capture_seed)?;
        self.planner.plan_fft_forward(n).process(&mut block);

        let bin_width = fs.as_f64() / n as f64;
        let rbw = self.config.measurement_bandwidth.as_f64();
        let half = rbw / 2.0;
        let mut in_band = 0.0;
        let mut bins = 0usize;
        for (k, x) in block.iter().enumerate() {
            let offset = bin_offset(k, n) * bin_width;
            if offset >= -half && offset < half {
                in_band += x.norm_sqr();
                bins += 1;
            }
        }
        if bins == 0 {
            // Bandwidth narrower than one bin: fall back to the DC bin.
            in_band = block[0].norm_sqr();
            bins = 1;
        }
        // Parseval for the unnormalized forward transform, then rescale the
        // kept bins to exactly one measurement bandwidth.
        let power = in_band / (n as f64 * n as f64) * rbw / (bins as f64 * bin_width);
        Ok(to_db(power))
    }
}

impl FrontEnd for SimulatedFrontEnd {
    fn tunable_range(&self) -> (Hz, Hz) {
        (self.config.tunable_min, self.config.tunable_max)
    }

    fn measurement_bandwidth(&self) -> Hz {
        self.config.measurement_bandwidth
    }

    fn set_measurement_bandwidth(&mut self, bandwidth: Hz) -> Result<()> {
        let mut next = self.config.clone();
        next.measurement_bandwidth = bandwidth;
        next.validate()?;
        self.config = next;
        Ok(())
    }

    fn measure(&mut self, f_center: Hz, dwell_s: f64) -> Result<PowerSample> {
        let guard = Arc::clone(&self.guard);
        let _token = guard.enter();
        if !(dwell_s > 0.0 && dwell_s.is_finite()) {
            return Err(Error::Argument(format!(
                "dwell must be positive, got {dwell_s}"
            )));
        }
        let (lo, hi) = self.tunable_range();
        if f_center < lo || f_center > hi {
            return Err(Error::Tune {
                freq: f_center,
                lo,
                hi,
            });
        }
        if self.config.pace_dwell {
            std::thread::sleep(Duration::from_secs_f64(dwell_s));
        }
        let power_db = match self.config.mode {
            MeasureMode::Analytic => self.measure_analytic(f_center)?,
            MeasureMode::Iq => self.measure_iq(f_center, dwell_s)?,
        };
        Ok(PowerSample { f_center, power_db })
    }
}
