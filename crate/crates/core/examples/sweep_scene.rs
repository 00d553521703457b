//! Sweep the bundled UHF scene and print a per-channel power profile.
//!
//!     cargo run --example sweep_scene [scene.json]

use std::fs::File;
use std::io::BufReader;
use std::sync::Arc;

use tvws::{presets, run_sweep, FrontEndConfig, Scene, SimulatedFrontEnd};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args().nth(1).unwrap_or_else(|| {
        concat!(env!("CARGO_MANIFEST_DIR"), "/data/uhf_survey_scene.json").into()
    });
    let scene = Scene::load(BufReader::new(File::open(&path)?))?;
    println!("scene: {}", scene.label);

    let config = presets::uhf_sweep();
    let plan = presets::uhf_plan();
    let mut frontend = SimulatedFrontEnd::new(Arc::new(scene), FrontEndConfig::default())?;
    let record = run_sweep(&mut frontend, &config, "example")?;
    println!(
        "{} samples, {} per channel",
        record.samples.len(),
        plan.samples_per_channel(config.step)?
    );

    let floor = record.powers().fold(f64::INFINITY, f64::min);
    for (k, chunk) in record.samples.chunks(32).enumerate() {
        let peak = chunk
            .iter()
            .map(|s| s.power_db)
            .fold(f64::NEG_INFINITY, f64::max);
        let bar = "#".repeat(((peak - floor) / 1.5).round() as usize);
        let (start, _) = plan.channel_span(k).unwrap();
        println!(
            "{k:>2} {:>9.2} MHz {peak:>8.2} dB {bar}",
            start.as_f64() / 1e6
        );
    }
    Ok(())
}
