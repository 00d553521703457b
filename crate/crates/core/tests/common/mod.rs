#![allow(dead_code)]

use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;
use std::sync::Arc;

use tvws::service::PlanParams;
use tvws::{presets, FrontEndConfig, Scene, SensorConfig, SensorServer, SensorState, ServerHandle};

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
}

pub fn survey_scene() -> Scene {
    let file = File::open(data_path("uhf_survey_scene.json")).expect("committed scene");
    Scene::load(BufReader::new(file)).expect("valid scene")
}

pub fn sensor_config(sensor_id: &str, frontend: FrontEndConfig) -> SensorConfig {
    SensorConfig {
        sensor_id: sensor_id.into(),
        listen_address: "127.0.0.1:0".into(),
        frontend,
        scene_path: data_path("uhf_survey_scene.json"),
        default_sweep: presets::uhf_sweep(),
        default_plan: PlanParams::default(),
    }
}

/// Starts a loopback sensor over `scene`.
pub fn spawn_sensor(sensor_id: &str, scene: Scene, frontend: FrontEndConfig) -> ServerHandle {
    let state = SensorState::with_scene(&sensor_config(sensor_id, frontend), scene).unwrap();
    SensorServer::bind("127.0.0.1:0", state).unwrap().spawn()
}

pub fn shared(scene: Scene) -> Arc<Scene> {
    Arc::new(scene)
}
