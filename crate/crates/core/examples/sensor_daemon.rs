//! Run a sensor on loopback and talk to it with raw protocol lines.
//!
//!     cargo run --example sensor_daemon

use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::path::PathBuf;

use tvws::service::PlanParams;
use tvws::{presets, FrontEndConfig, SensorConfig, SensorServer, SensorState};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = SensorConfig {
        sensor_id: "loopback".into(),
        listen_address: "127.0.0.1:0".into(),
        frontend: FrontEndConfig::default(),
        scene_path: PathBuf::from(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/data/uhf_survey_scene.json"
        )),
        default_sweep: presets::uhf_sweep(),
        default_plan: PlanParams::default(),
    };
    let server = SensorServer::bind(&config.listen_address, SensorState::from_config(&config)?)?;
    let handle = server.spawn();
    println!("sensor listening on {}", handle.address());

    let stream = TcpStream::connect(handle.address())?;
    let mut writer = stream.try_clone()?;
    let mut reader = BufReader::new(stream);
    for request in [
        r#"{"cmd":"ping"}"#,
        r#"{"cmd":"frobnicate"}"#,
        r#"{"cmd":"sweep","step_hz":300000}"#,
        r#"{"cmd":"channels","f_min_hz":471250000,"f_max_hz":503250000,"step_hz":250000,"dwell_s":0.001,"channel_width_hz":8000000}"#,
    ] {
        writer.write_all(request.as_bytes())?;
        writer.write_all(b"\n")?;
        let mut response = String::new();
        reader.read_line(&mut response)?;
        println!("> {request}\n< {}", response.trim_end());
    }
    handle.shutdown()?;
    Ok(())
}
