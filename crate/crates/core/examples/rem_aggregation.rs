//! Poll three loopback sensors (one of them offline) into a REM snapshot.
//!
//!     cargo run --example rem_aggregation

use std::fs::File;
use std::io::BufReader;
use std::net::TcpListener;
use std::path::PathBuf;
use std::time::Duration;

use tvws::aggregator::{poll_all, rem_to_csv, PollRequest};
use tvws::service::PlanParams;
use tvws::{
    presets, Emitter, EmitterKind, FrontEndConfig, Hz, Scene, SensorConfig, SensorServer,
    SensorState, ServerHandle,
};

fn sensor(id: &str, scene: Scene, seed: u64) -> Result<ServerHandle, tvws::Error> {
    let config = SensorConfig {
        sensor_id: id.into(),
        listen_address: "127.0.0.1:0".into(),
        frontend: FrontEndConfig {
            seed,
            jitter_sigma_db: 0.5,
            ..FrontEndConfig::default()
        },
        scene_path: PathBuf::new(),
        default_sweep: presets::uhf_sweep(),
        default_plan: PlanParams::default(),
    };
    let state = SensorState::with_scene(&config, scene)?;
    Ok(SensorServer::bind(&config.listen_address, state)?.spawn())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/uhf_survey_scene.json");
    let city = Scene::load(BufReader::new(File::open(path)?))?;
    // A hilltop site that also hears a distant multiplex in channel 12.
    let hill = city.clone().with_emitter(Emitter::new(
        EmitterKind::WidebandTv,
        Hz(471_250_000 + 12 * 8_000_000 + 4_000_000),
        Hz(7_600_000),
        -66.0,
    ));

    let a = sensor("city-centre", city, 1)?;
    let b = sensor("hilltop", hill, 2)?;
    let offline = TcpListener::bind("127.0.0.1:0")?.local_addr()?.to_string();

    let sensors = vec![a.address().to_string(), b.address().to_string(), offline];
    let snapshot = poll_all(&sensors, &PollRequest::default(), Duration::from_secs(5))?;
    for ok in &snapshot.sensors_ok {
        let free = snapshot
            .entries_for(&ok.sensor_id)
            .filter(|e| e.verdict == tvws::Verdict::Free)
            .count();
        println!("{} ({}): {free} white spaces", ok.sensor_id, ok.address);
    }
    for failed in &snapshot.sensors_failed {
        println!("{} failed: {}", failed.address, failed.error);
    }
    let csv = String::from_utf8(rem_to_csv(&snapshot))?;
    println!("\nfirst REM rows:");
    for line in csv.lines().take(6) {
        println!("{line}");
    }
    Ok(())
}
