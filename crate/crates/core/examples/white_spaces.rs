//! Detect white spaces in the bundled scene and score them against a
//! wideband-only survey of the same scene.
//!
//!     cargo run --example white_spaces

use std::fs::File;
use std::io::BufReader;
use std::sync::Arc;

use tvws::{
    compare, presets, run_sweep, Detection, EmitterKind, FrontEndConfig, Scene, SimulatedFrontEnd,
};

fn detect(scene: Scene) -> Result<Detection, tvws::Error> {
    let mut frontend = SimulatedFrontEnd::new(Arc::new(scene), FrontEndConfig::default())?;
    let record = run_sweep(&mut frontend, &presets::uhf_sweep(), "example")?;
    Detection::run(&record, &presets::uhf_plan())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/uhf_survey_scene.json");
    let scene = Scene::load(BufReader::new(File::open(path)?))?;

    let full = detect(scene.clone())?;
    let t = full.threshold;
    println!(
        "threshold {:.3} dB (min {:.3}, max {:.3})",
        t.gamma_db, t.min_db, t.max_db
    );
    for d in full.decisions.iter().filter(|d| d.n_exceeding > 0) {
        println!(
            "  ch {:>2} occupied: {:>2} samples above, peak {:.2} dB",
            d.channel, d.n_exceeding, d.p_max_db
        );
    }

    let reference = detect(scene.only(EmitterKind::WidebandTv))?;
    let detected = full.white_spaces().into_iter().collect();
    let survey = reference.white_spaces().into_iter().collect();
    let report = compare(&detected, &survey, presets::uhf_plan().channel_count())?;
    println!(
        "{} white spaces detected, {} in the wideband-only survey, match ratio {:.4}",
        report.detected_free.len(),
        report.reference_free.len(),
        report.match_ratio
    );
    println!("lost to narrowband incumbents: {:?}", report.only_reference);
    Ok(())
}
