//! Compare IQ-derived power with the closed-form band power of a scene.
//!
//!     cargo run --release --example iq_capture

use std::sync::Arc;

use tvws::scene::mean_power;
use tvws::units::to_db;
use tvws::{
    presets, Emitter, EmitterKind, FrontEnd, FrontEndConfig, Hz, MeasureMode, Scene,
    SimulatedFrontEnd,
};

fn main() -> Result<(), tvws::Error> {
    let scene = Arc::new(
        Scene::new("one multiplex and a microphone", -170.0)
            .with_emitter(Emitter::new(
                EmitterKind::WidebandTv,
                Hz(602_000_000),
                Hz(7_600_000),
                -60.0,
            ))
            .with_emitter(Emitter::new(
                EmitterKind::NarrowbandIncumbent,
                Hz(611_250_000),
                presets::NARROWBAND_BANDWIDTH,
                -84.0,
            )),
    );

    let block = scene.generate_iq(Hz(602_000_000), Hz::mhz(4), 65_536, 1)?;
    println!(
        "65536-sample capture at 602 MHz: {:.3} dB, closed form {:.3} dB",
        to_db(mean_power(&block)),
        scene.band_power(600e6, 604e6)?
    );

    let iq_config = FrontEndConfig {
        mode: MeasureMode::Iq,
        seed: 1,
        ..FrontEndConfig::default()
    };
    let mut iq = SimulatedFrontEnd::new(Arc::clone(&scene), iq_config)?;
    let mut analytic = SimulatedFrontEnd::new(scene, FrontEndConfig::default())?;
    println!("{:>10} {:>10} {:>10}", "MHz", "analytic", "iq");
    for f in [
        597_250_000u64,
        598_250_000,
        602_000_000,
        605_750_000,
        611_250_000,
        611_500_000,
    ] {
        let a = analytic.measure(Hz(f), presets::DWELL_S)?;
        let b = iq.measure(Hz(f), presets::DWELL_S)?;
        println!(
            "{:>10.2} {:>10.3} {:>10.3}",
            f as f64 / 1e6,
            a.power_db,
            b.power_db
        );
    }
    Ok(())
}
