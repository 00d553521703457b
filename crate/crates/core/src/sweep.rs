//! Stepped frequency sweep.
//!
//! The grid starts at `f_min` and advances by `step` until just below
//! `f_max`, so a sweep over `[f_min, f_max)` yields exactly
//! `(f_max - f_min) / step` samples. Each sample is one raw dwell.

use std::fmt::Write as _;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frontend::{FrontEnd, PowerSample};
use crate::units::Hz;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(rename = "f_min_hz")]
    pub f_min: Hz,
    #[serde(rename = "f_max_hz")]
    pub f_max: Hz,
    #[serde(rename = "step_hz")]
    pub step: Hz,
    pub dwell_s: f64,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.f_max <= self.f_min {
            return Err(Error::Config(format!(
                "f_max ({}) must exceed f_min ({})",
                self.f_max, self.f_min
            )));
        }
        if self.step.0 == 0 {
            return Err(Error::Config("step must be positive".into()));
        }
        if !(self.dwell_s > 0.0 && self.dwell_s.is_finite()) {
            return Err(Error::Config(format!(
                "dwell must be positive, got {}",
                self.dwell_s
            )));
        }
        let span = self.f_max.0 - self.f_min.0;
        let remainder = span % self.step.0;
        if remainder != 0 {
            return Err(Error::Config(format!(
                "range of {span} Hz is not divisible by step {} Hz (remainder {remainder} Hz)",
                self.step.0
            )));
        }
        Ok(())
    }

    /// Number of samples the sweep takes. Only meaningful on a valid config.
    pub fn sample_count(&self) -> usize {
        ((self.f_max.0 - self.f_min.0) / self.step.0) as usize
    }

    pub fn frequency(&self, i: usize) -> Hz {
        Hz(self.f_min.0 + i as u64 * self.step.0)
    }

    pub fn grid(&self) -> impl Iterator<Item = Hz> + '_ {
        (0..self.sample_count()).map(|i| self.frequency(i))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub config: SweepConfig,
    pub samples: Vec<PowerSample>,
    pub started_at: DateTime<Utc>,
    pub sensor_id: String,
}

impl SweepRecord {
    /// Wraps externally obtained powers, one per grid point.
    pub fn from_powers(
        config: SweepConfig,
        powers: &[f64],
        sensor_id: impl Into<String>,
    ) -> Result<SweepRecord> {
        config.validate()?;
        if powers.len() != config.sample_count() {
            return Err(Error::Argument(format!(
                "expected {} powers, got {}",
                config.sample_count(),
                powers.len()
            )));
        }
        Ok(SweepRecord {
            samples: config
                .grid()
                .zip(powers)
                .map(|(f_center, &power_db)| PowerSample { f_center, power_db })
                .collect(),
            config,
            started_at: Utc::now(),
            sensor_id: sensor_id.into(),
        })
    }

    pub fn powers(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.power_db)
    }

    /// Same record with every power shifted by `offset_db`.
    pub fn shifted(&self, offset_db: f64) -> SweepRecord {
        let mut out = self.clone();
        for s in &mut out.samples {
            s.power_db += offset_db;
        }
        out
    }

    /// `f_hz,p_db` CSV, integer frequencies and powers to 3 decimals.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(16 + self.samples.len() * 20);
        out.push_str("f_hz,p_db\n");
        for s in &self.samples {
            let _ = writeln!(out, "{},{:.3}", s.f_center.0, s.power_db);
        }
        out
    }
}

/// Steps the front-end across the configured grid, one dwell per sample.
///
/// The front-end's measurement bandwidth is set to the sweep step before the
/// first measurement. A tune failure aborts the sweep.
pub fn run_sweep(
    frontend: &mut dyn FrontEnd,
    config: &SweepConfig,
    sensor_id: &str,
) -> Result<SweepRecord> {
    config.validate()?;
    frontend.set_measurement_bandwidth(config.step)?;
    let started_at = Utc::now();
    let samples = config
        .grid()
        .map(|f| frontend.measure(f, config.dwell_s))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepRecord {
        config: *config,
        samples,
        started_at,
        sensor_id: sensor_id.to_owned(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{FrontEndConfig, SimulatedFrontEnd};
    use crate::presets::{uhf_plan, uhf_sweep};
    use crate::scene::{Emitter, EmitterKind, Scene};
    use std::sync::Arc;

    fn frontend(scene: Scene) -> SimulatedFrontEnd {
        SimulatedFrontEnd::new(Arc::new(scene), FrontEndConfig::default()).unwrap()
    }

    fn tv_scene() -> Scene {
        Scene::new("tv", -170.0).with_emitter(Emitter::new(
            EmitterKind::WidebandTv,
            Hz(487_250_000),
            Hz(7_600_000),
            -60.0,
        ))
    }

    #[test]
    fn uhf_sweep_takes_1568_samples() {
        let mut fe = frontend(tv_scene());
        let rec = run_sweep(&mut fe, &uhf_sweep(), "s1").unwrap();
        assert_eq!(rec.samples.len(), 1568);
        assert_eq!(rec.sensor_id, "s1");
        let plan = uhf_plan();
        assert_eq!(plan.channel_count(), 49);
        assert_eq!(plan.samples_per_channel(rec.config.step).unwrap(), 32);
        for (i, s) in rec.samples.iter().enumerate() {
            assert_eq!(s.f_center.0 - rec.config.f_min.0, i as u64 * 250_000);
        }
        assert!(rec
            .samples
            .windows(2)
            .all(|w| w[0].f_center < w[1].f_center));
    }

    #[test]
    fn analytic_sweep_equals_band_power_map() {
        let scene = tv_scene();
        let mut fe = frontend(scene.clone());
        let config = uhf_sweep();
        let rec = run_sweep(&mut fe, &config, "s").unwrap();
        for s in &rec.samples {
            let f = s.f_center.as_f64();
            let oracle = scene.band_power(f - 125_000.0, f + 125_000.0).unwrap();
            assert_eq!(s.power_db, oracle);
        }
    }

    #[test]
    fn non_divisible_step_fails_before_measuring() {
        let mut fe = frontend(tv_scene());
        let guard = fe.access_guard();
        let config = SweepConfig {
            step: Hz::khz(300),
            ..uhf_sweep()
        };
        let err = run_sweep(&mut fe, &config, "s").unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        assert!(err.to_string().contains("remainder"), "{err}");
        assert_eq!(guard.measurements(), 0);
    }

    #[test]
    fn tune_error_aborts_with_failing_frequency() {
        let mut fe = frontend(tv_scene());
        let config = SweepConfig {
            f_min: Hz::mhz(2_100),
            f_max: Hz::mhz(2_300),
            step: Hz::mhz(50),
            dwell_s: 0.001,
        };
        match run_sweep(&mut fe, &config, "s") {
            Err(Error::Tune { freq, .. }) => assert_eq!(freq, Hz::mhz(2_250)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn csv_format() {
        let config = SweepConfig {
            f_min: Hz(100),
            f_max: Hz(300),
            step: Hz(100),
            dwell_s: 0.001,
        };
        let rec = SweepRecord::from_powers(config, &[-116.02059991, -70.5], "x").unwrap();
        assert_eq!(rec.to_csv(), "f_hz,p_db\n100,-116.021\n200,-70.500\n");
        assert!(SweepRecord::from_powers(config, &[1.0], "x").is_err());
    }

    #[test]
    fn rejects_invalid_configs() {
        let base = uhf_sweep();
        for bad in [
            SweepConfig {
                f_max: base.f_min,
                ..base
            },
            SweepConfig {
                step: Hz(0),
                ..base
            },
            SweepConfig {
                dwell_s: 0.0,
                ..base
            },
            SweepConfig {
                dwell_s: -1.0,
                ..base
            },
        ] {
            assert!(matches!(bad.validate(), Err(Error::Config(_))), "{bad:?}");
        }
    }
}
