//! A single wireless microphone is enough to take a channel off the
//! white-space list.
//!
//!     cargo run --example narrowband_incumbent

use std::sync::Arc;

use tvws::{
    presets, run_sweep, Detection, Emitter, EmitterKind, FrontEndConfig, Hz, Scene,
    SimulatedFrontEnd,
};

fn detect(scene: &Scene) -> Detection {
    let mut fe =
        SimulatedFrontEnd::new(Arc::new(scene.clone()), FrontEndConfig::default()).unwrap();
    let record = run_sweep(&mut fe, &presets::uhf_sweep(), "mic").unwrap();
    Detection::run(&record, &presets::uhf_plan()).unwrap()
}

fn main() {
    let plan = presets::uhf_plan();
    let tv = |ch: usize, p: f64| {
        let (start, _) = plan.channel_span(ch).unwrap();
        Emitter::new(
            EmitterKind::WidebandTv,
            Hz(start.0 + 4_000_000),
            Hz(7_600_000),
            p,
        )
    };
    let quiet = Scene::new("three multiplexes", -170.0)
        .with_emitter(tv(4, -58.0))
        .with_emitter(tv(21, -63.0))
        .with_emitter(tv(37, -66.0));
    let before = detect(&quiet);
    println!(
        "without microphone: {} white spaces, threshold {:.2} dB",
        before.white_spaces().len(),
        before.threshold.gamma_db
    );

    let (start, _) = plan.channel_span(30).unwrap();
    let mic = Emitter::new(
        EmitterKind::NarrowbandIncumbent,
        Hz(start.0 + 5_250_000),
        presets::NARROWBAND_BANDWIDTH,
        -84.0,
    );
    let after = detect(&quiet.clone().with_emitter(mic));
    let ch30 = &after.decisions[30];
    println!(
        "with microphone:    {} white spaces, channel 30 is {} ({} of 32 samples above threshold)",
        after.white_spaces().len(),
        ch30.verdict,
        ch30.n_exceeding
    );
}
