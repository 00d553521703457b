//! Synthetic RF environment standing in for the over-the-air UHF band.
//!
//! A scene is a flat noise floor plus any number of emitters, each with a
//! rectangular power spectral density. Powers are in dB relative to an
//! arbitrary reference that is consistent across the scene; only relative
//! levels matter to the detector.

use std::io::Read;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{from_db, to_db, Hz};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmitterKind {
    WidebandTv,
    NarrowbandIncumbent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Emitter {
    #[serde(rename = "f_center_hz")]
    pub f_center: Hz,
    #[serde(rename = "bandwidth_hz")]
    pub bandwidth: Hz,
    /// Total emitted power in dB.
    pub power_db: f64,
    pub kind: EmitterKind,
}

impl Emitter {
    pub fn new(kind: EmitterKind, f_center: Hz, bandwidth: Hz, power_db: f64) -> Self {
        Emitter {
            f_center,
            bandwidth,
            power_db,
            kind,
        }
    }

    pub fn psd_db_per_hz(&self) -> f64 {
        self.power_db - to_db(self.bandwidth.as_f64())
    }

    fn psd_linear(&self) -> f64 {
        from_db(self.power_db) / self.bandwidth.as_f64()
    }

    /// Lower and upper edge of the occupied band, in hertz.
    pub fn edges(&self) -> (f64, f64) {
        let half = self.bandwidth.as_f64() / 2.0;
        (self.f_center.as_f64() - half, self.f_center.as_f64() + half)
    }

    /// Length in hertz of the intersection with `[f_lo, f_hi]`.
    pub fn overlap(&self, f_lo: f64, f_hi: f64) -> f64 {
        let (lo, hi) = self.edges();
        (hi.min(f_hi) - lo.max(f_lo)).max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    pub label: String,
    pub noise_psd_db_per_hz: f64,
    pub emitters: Vec<Emitter>,
}

impl Scene {
    pub fn new(label: impl Into<String>, noise_psd_db_per_hz: f64) -> Self {
        Scene {
            label: label.into(),
            noise_psd_db_per_hz,
            emitters: Vec::new(),
        }
    }

    pub fn with_emitter(mut self, emitter: Emitter) -> Self {
        self.emitters.push(emitter);
        self
    }

    /// Copy of the scene keeping only emitters of `kind`.
    pub fn only(&self, kind: EmitterKind) -> Scene {
        Scene {
            label: format!("{} ({kind:?} only)", self.label),
            noise_psd_db_per_hz: self.noise_psd_db_per_hz,
            emitters: self
                .emitters
                .iter()
                .filter(|e| e.kind == kind)
                .cloned()
                .collect(),
        }
    }

    pub fn load(source: impl Read) -> Result<Scene> {
        let mut de = serde_json::Deserializer::from_reader(source);
        let scene: Scene = serde_path_to_error::deserialize(&mut de).map_err(|e| Error::Scene {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        de.end().map_err(|e| Error::Scene {
            path: ".".into(),
            message: e.to_string(),
        })?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn from_json_str(s: &str) -> Result<Scene> {
        Scene::load(s.as_bytes())
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if !self.noise_psd_db_per_hz.is_finite() {
            return Err(Error::Scene {
                path: "noise_psd_db_per_hz".into(),
                message: "must be finite".into(),
            });
        }
        for (i, e) in self.emitters.iter().enumerate() {
            if e.bandwidth.0 == 0 {
                return Err(Error::Scene {
                    path: format!("emitters[{i}].bandwidth_hz"),
                    message: "bandwidth must be positive".into(),
                });
            }
            if !e.power_db.is_finite() {
                return Err(Error::Scene {
                    path: format!("emitters[{i}].power_db"),
                    message: "must be finite".into(),
                });
            }
        }
        Ok(())
    }

    /// Linear power integrated over `[f_lo, f_hi]` hertz.
    pub fn band_power_linear(&self, f_lo: f64, f_hi: f64) -> Result<f64> {
        if f_hi.partial_cmp(&f_lo) != Some(std::cmp::Ordering::Greater) {
            return Err(Error::Argument(format!(
                "empty band [{f_lo}, {f_hi}]: upper edge must exceed lower edge"
            )));
        }
        let noise = from_db(self.noise_psd_db_per_hz) * (f_hi - f_lo);
        let emitted: f64 = self
            .emitters
            .iter()
            .map(|e| e.psd_linear() * e.overlap(f_lo, f_hi))
            .sum();
        Ok(noise + emitted)
    }

    /// Power in dB integrated over `[f_lo, f_hi]` hertz.
    pub fn band_power(&self, f_lo: f64, f_hi: f64) -> Result<f64> {
        self.band_power_linear(f_lo, f_hi).map(to_db)
    }

    /// Simulates a complex baseband capture of `n` samples tuned to
    /// `f_center` at `sample_rate`.
    ///
    /// The block is circularly-symmetric white noise plus, for each emitter
    /// that overlaps the captured band, a white Gaussian source masked in the
    /// frequency domain to the emitter's in-band bins. Each emitter component
    /// is scaled so that its expected power equals its integrated PSD over the
    /// overlap, which makes the expected mean-square of the block equal to
    /// [`Scene::band_power_linear`] over `f_center ± sample_rate / 2`.
    pub fn generate_iq(
        &self,
        f_center: Hz,
        sample_rate: Hz,
        n: usize,
        seed: u64,
    ) -> Result<Vec<Complex64>> {
        if n == 0 {
            return Err(Error::Argument("sample count must be positive".into()));
        }
        if sample_rate.0 == 0 {
            return Err(Error::Argument("sample rate must be positive".into()));
        }
        let fs = sample_rate.as_f64();
        let fc = f_center.as_f64();
        let (band_lo, band_hi) = (fc - fs / 2.0, fc + fs / 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let unit = Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).expect("valid sigma");

        let noise_power = from_db(self.noise_psd_db_per_hz) * fs;
        let noise_amp = noise_power.sqrt();
        let mut block: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(unit.sample(&mut rng), unit.sample(&mut rng)) * noise_amp)
            .collect();

        let mut planner = FftPlanner::<f64>::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let bin_width = fs / n as f64;

        for emitter in &self.emitters {
            let overlap = emitter.overlap(band_lo, band_hi);
            if overlap <= 0.0 {
                continue;
            }
            let (e_lo, e_hi) = emitter.edges();
            let (lo, hi) = (e_lo.max(band_lo) - fc, e_hi.min(band_hi) - fc);
            let mut mask: Vec<usize> = (0..n)
                .filter(|&k| {
                    let offset = bin_offset(k, n) * bin_width;
                    offset >= lo && offset < hi
                })
                .collect();
            if mask.is_empty() {
                // Narrower than one bin: put it in the nearest bin.
                let mid = (lo + hi) / 2.0;
                let nearest = (0..n)
                    .min_by(|&a, &b| {
                        let da = (bin_offset(a, n) * bin_width - mid).abs();
                        let db = (bin_offset(b, n) * bin_width - mid).abs();
                        da.total_cmp(&db)
                    })
                    .expect("n > 0");
                mask.push(nearest);
            }

            let mut source: Vec<Complex64> = (0..n)
                .map(|_| Complex64::new(unit.sample(&mut rng), unit.sample(&mut rng)))
                .collect();
            forward.process(&mut source);
            let mut shaped = vec![Complex64::new(0.0, 0.0); n];
            for &k in &mask {
                shaped[k] = source[k];
            }
            inverse.process(&mut shaped);

            // E|W_k|^2 = n after the forward pass, and the unnormalized inverse
            // sums m such bins, so each output sample carries m * n.
            let target = emitter.psd_linear() * overlap;
            let scale = (target / (mask.len() as f64 * n as f64)).sqrt();
            for (x, y) in block.iter_mut().zip(&shaped) {
                *x += y * scale;
            }
        }
        Ok(block)
    }
}

/// Signed frequency index of FFT bin `k`, in `[-n/2, n/2)`.
pub(crate) fn bin_offset(k: usize, n: usize) -> f64 {
    if k < n.div_ceil(2) {
        k as f64
    } else {
        k as f64 - n as f64
    }
}

/// Mean of `|x|^2` over the block.
pub fn mean_power(block: &[Complex64]) -> f64 {
    block.iter().map(|x| x.norm_sqr()).sum::<f64>() / block.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn noise_only() -> Scene {
        Scene::new("noise", -170.0)
    }

    #[test]
    fn loads_minimal_document() {
        let s = Scene::from_json_str(r#"{"label":"x","noise_psd_db_per_hz":-170,"emitters":[]}"#)
            .unwrap();
        assert!(s.emitters.is_empty());
        assert_eq!(s.label, "x");
    }

    #[test]
    fn loads_single_wideband_emitter() {
        let s = Scene::from_json_str(
            r#"{"label":"one","noise_psd_db_per_hz":-170,"emitters":[
                {"f_center_hz":475250000,"bandwidth_hz":7600000,"power_db":-30,"kind":"wideband_tv"}]}"#,
        )
        .unwrap();
        assert_eq!(s.emitters.len(), 1);
        let e = &s.emitters[0];
        assert_eq!(e.kind, EmitterKind::WidebandTv);
        assert!((e.psd_db_per_hz() - (-30.0 - 10.0 * 7.6e6f64.log10())).abs() < 1e-12);
    }

    #[test]
    fn zero_bandwidth_is_rejected_with_path() {
        let err = Scene::from_json_str(
            r#"{"label":"bad","noise_psd_db_per_hz":-170,"emitters":[
                {"f_center_hz":1,"bandwidth_hz":1,"power_db":0,"kind":"wideband_tv"},
                {"f_center_hz":1,"bandwidth_hz":0,"power_db":0,"kind":"wideband_tv"}]}"#,
        )
        .unwrap_err();
        match err {
            Error::Scene { path, .. } => assert_eq!(path, "emitters[1].bandwidth_hz"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_and_missing_fields_are_rejected() {
        let err = Scene::from_json_str(
            r#"{"label":"x","noise_psd_db_per_hz":-170,"emitters":[],"gain":3}"#,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Scene { .. }), "{err}");

        let err = Scene::from_json_str(
            r#"{"label":"x","noise_psd_db_per_hz":-170,"emitters":[
                {"f_center_hz":1,"bandwidth_hz":5,"kind":"wideband_tv"}]}"#,
        )
        .unwrap_err();
        match err {
            Error::Scene { path, message } => {
                assert_eq!(path, "emitters[0]");
                assert!(message.contains("power_db"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }

        let err = Scene::from_json_str(
            r#"{"label":"x","noise_psd_db_per_hz":-170,"emitters":[
                {"f_center_hz":1,"bandwidth_hz":5,"power_db":1,"kind":"fm"}]}"#,
        )
        .unwrap_err();
        match err {
            Error::Scene { path, .. } => assert_eq!(path, "emitters[0].kind"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_json_is_a_scene_error() {
        assert!(matches!(
            Scene::from_json_str("{\"label\": "),
            Err(Error::Scene { .. })
        ));
        assert!(
            Scene::from_json_str(r#"{"label":"x","noise_psd_db_per_hz":-1,"emitters":[]} x"#)
                .is_err()
        );
    }

    #[test]
    fn json_round_trip() {
        let s = Scene::new("rt", -165.5).with_emitter(Emitter::new(
            EmitterKind::NarrowbandIncumbent,
            Hz(500_000_000),
            Hz::khz(200),
            -80.0,
        ));
        assert_eq!(Scene::from_json_str(&s.to_json_pretty()).unwrap(), s);
    }

    #[test]
    fn noise_only_band_power() {
        let p = noise_only().band_power(0.0, 250e3).unwrap();
        assert!((p - (-170.0 + 10.0 * 2.5e5f64.log10())).abs() < 1e-12);
        assert!((p - (-116.0206)).abs() < 1e-4);
    }

    #[test]
    fn band_inside_flat_emitter() {
        let e = Emitter::new(EmitterKind::WidebandTv, Hz(600_000_000), Hz::mhz(8), -40.0);
        let psd = e.psd_db_per_hz();
        let s = Scene::new("tv", -250.0).with_emitter(e);
        let p = s.band_power(599_000_000.0, 599_250_000.0).unwrap();
        assert!((p - (psd + 10.0 * 2.5e5f64.log10())).abs() < 0.1);
    }

    #[test]
    fn half_overlap_matches_riemann_sum() {
        // Emitter covers [500.0, 500.2] MHz; band [500.1, 500.35] MHz holds
        // exactly half of it.
        let e = Emitter::new(
            EmitterKind::NarrowbandIncumbent,
            Hz(500_100_000),
            Hz::khz(200),
            -90.0,
        );
        let s = Scene::new("half", -170.0).with_emitter(e.clone());
        let (lo, hi) = (500_100_000.0, 500_350_000.0);
        assert_eq!(e.overlap(lo, hi), 100_000.0);

        // Independent oracle: midpoint rule on a 1 Hz grid over the
        // piecewise-constant PSD.
        let noise_psd = 10f64.powf(-170.0 / 10.0);
        let e_psd = 10f64.powf(-90.0 / 10.0) / 200_000.0;
        let mut acc = 0.0;
        let mut f = lo + 0.5;
        while f < hi {
            let mut psd = noise_psd;
            if (500_000_000.0..=500_200_000.0).contains(&f) {
                psd += e_psd;
            }
            acc += psd;
            f += 1.0;
        }
        let oracle_db = 10.0 * acc.log10();
        assert!((s.band_power(lo, hi).unwrap() - oracle_db).abs() < 1e-6);
    }

    #[test]
    fn empty_band_is_an_error() {
        assert!(matches!(
            noise_only().band_power(10.0, 10.0),
            Err(Error::Argument(_))
        ));
        assert!(noise_only().band_power(10.0, 5.0).is_err());
    }

    #[test]
    fn iq_is_deterministic_per_seed() {
        let s = noise_only().with_emitter(Emitter::new(
            EmitterKind::WidebandTv,
            Hz(500_000_000),
            Hz::khz(1_000),
            -80.0,
        ));
        let a = s.generate_iq(Hz(500_000_000), Hz::mhz(4), 4096, 7).unwrap();
        let b = s.generate_iq(Hz(500_000_000), Hz::mhz(4), 4096, 7).unwrap();
        let c = s.generate_iq(Hz(500_000_000), Hz::mhz(4), 4096, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn iq_noise_power_matches_band_power() {
        let s = noise_only();
        let block = s
            .generate_iq(Hz(600_000_000), Hz::mhz(4), 65_536, 1)
            .unwrap();
        let expected = s.band_power(598e6, 602e6).unwrap();
        let measured = to_db(mean_power(&block));
        assert!(
            (measured - expected).abs() < 0.2,
            "{measured} vs {expected}"
        );
    }

    #[test]
    fn iq_emitter_power_matches_band_power() {
        let s = noise_only().with_emitter(Emitter::new(
            EmitterKind::WidebandTv,
            Hz(600_500_000),
            Hz::khz(2_000),
            // 30 dB above the 4 MHz integrated noise
            -74.0,
        ));
        let block = s
            .generate_iq(Hz(600_000_000), Hz::mhz(4), 65_536, 3)
            .unwrap();
        let expected = s.band_power(598e6, 602e6).unwrap();
        let measured = to_db(mean_power(&block));
        assert!(
            (measured - expected).abs() < 0.2,
            "{measured} vs {expected}"
        );
    }

    #[test]
    fn iq_rejects_degenerate_requests() {
        assert!(noise_only().generate_iq(Hz(1), Hz(1), 0, 0).is_err());
        assert!(noise_only().generate_iq(Hz(1), Hz(0), 8, 0).is_err());
    }

    fn emitter_strategy() -> impl Strategy<Value = Emitter> {
        (
            400_000_000u64..900_000_000,
            1u64..10_000_000,
            -120.0f64..-20.0,
            prop::bool::ANY,
        )
            .prop_map(|(fc, bw, p, wide)| {
                let kind = if wide {
                    EmitterKind::WidebandTv
                } else {
                    EmitterKind::NarrowbandIncumbent
                };
                Emitter::new(kind, Hz(fc), Hz(bw), p)
            })
    }

    proptest! {
        #[test]
        fn adding_an_emitter_never_lowers_band_power(
            base in prop::collection::vec(emitter_strategy(), 0..5),
            extra in emitter_strategy(),
            lo in 400e6f64..900e6,
            width in 1.0f64..20e6,
        ) {
            let mut scene = Scene::new("p", -170.0);
            scene.emitters = base;
            let before = scene.band_power(lo, lo + width).unwrap();
            let after = scene.clone().with_emitter(extra).band_power(lo, lo + width).unwrap();
            prop_assert!(after >= before);
        }

        #[test]
        fn band_power_is_additive_over_adjacent_bands(
            emitters in prop::collection::vec(emitter_strategy(), 0..5),
            lo in 400e6f64..900e6,
            a in 1.0f64..10e6,
            b in 1.0f64..10e6,
        ) {
            let mut scene = Scene::new("p", -170.0);
            scene.emitters = emitters;
            let whole = scene.band_power_linear(lo, lo + a + b).unwrap();
            let parts = scene.band_power_linear(lo, lo + a).unwrap()
                + scene.band_power_linear(lo + a, lo + a + b).unwrap();
            prop_assert!(((whole - parts) / whole).abs() < 1e-9);
        }
    }
}
