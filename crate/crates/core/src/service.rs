//! Standalone sensor daemon.
//!
//! A sensor owns one front-end and answers protocol requests over TCP. Any
//! number of clients may be connected; `ping` and `info` are answered
//! concurrently, while `sweep` and `channels` need the front-end. The
//! front-end claim is try-acquire: a sweep that arrives while another is in
//! flight is rejected with `busy` instead of being queued.

use std::fs::File;
use std::io::{self, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, MutexGuard, TryLockError};
use std::thread::{self, JoinHandle};

use log::{debug, info, warn};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bandplan::BandPlan;
use crate::detect::Detection;
use crate::error::{Error, Result};
use crate::frontend::{FrontEnd, FrontEndConfig, SimulatedFrontEnd};
use crate::presets;
use crate::protocol::{
    codes, encode_line, error_response, read_line, ChannelsParams, Line, Request, SweepParams,
    PROTOCOL_VERSION,
};
use crate::scene::Scene;
use crate::sweep::{run_sweep, SweepConfig, SweepRecord};
use crate::units::Hz;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanParams {
    pub channel_width_hz: Hz,
}

impl Default for PlanParams {
    fn default() -> Self {
        PlanParams {
            channel_width_hz: presets::EU_CHANNEL_WIDTH,
        }
    }
}

/// Longest sweep a remote client may request.
pub const MAX_SWEEP_SAMPLES: usize = 200_000;

fn default_listen() -> String {
    "127.0.0.1:7355".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorConfig {
    pub sensor_id: String,
    #[serde(default = "default_listen")]
    pub listen_address: String,
    #[serde(default)]
    pub frontend: FrontEndConfig,
    /// Relative paths resolve against the config file's directory.
    pub scene_path: PathBuf,
    #[serde(default = "presets::uhf_sweep")]
    pub default_sweep: SweepConfig,
    #[serde(default)]
    pub default_plan: PlanParams,
}

impl SensorConfig {
    pub fn from_file(path: &Path) -> Result<SensorConfig> {
        let file = File::open(path)?;
        let mut config: SensorConfig = serde_json::from_reader(BufReader::new(file))
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if config.scene_path.is_relative() {
            if let Some(dir) = path.parent() {
                config.scene_path = dir.join(&config.scene_path);
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sensor_id.is_empty() {
            return Err(Error::Config("sensor_id must not be empty".into()));
        }
        self.listen_address
            .parse::<SocketAddr>()
            .map_err(|e| Error::Config(format!("listen address `{}`: {e}", self.listen_address)))?;
        self.frontend.validate()?;
        self.default_sweep.validate()?;
        BandPlan::new(
            self.default_sweep.f_min,
            self.default_sweep.f_max,
            self.default_plan.channel_width_hz,
        )?;
        Ok(())
    }
}

/// Request handling state shared by all connections of one sensor.
pub struct SensorState {
    sensor_id: String,
    scene_label: String,
    frontend: Mutex<Box<dyn FrontEnd>>,
    frontend_config: Option<FrontEndConfig>,
    default_sweep: SweepConfig,
    default_plan: PlanParams,
}

impl SensorState {
    pub fn new(
        sensor_id: impl Into<String>,
        frontend: Box<dyn FrontEnd>,
        default_sweep: SweepConfig,
        default_plan: PlanParams,
    ) -> SensorState {
        SensorState {
            sensor_id: sensor_id.into(),
            scene_label: String::new(),
            frontend: Mutex::new(frontend),
            frontend_config: None,
            default_sweep,
            default_plan,
        }
    }

    /// Loads the scene and builds the simulated front-end described by `config`.
    pub fn from_config(config: &SensorConfig) -> Result<SensorState> {
        config.validate()?;
        let file = File::open(&config.scene_path)
            .map_err(|e| Error::Config(format!("scene {}: {e}", config.scene_path.display())))?;
        let scene = Scene::load(BufReader::new(file))?;
        SensorState::with_scene(config, scene)
    }

    pub fn with_scene(config: &SensorConfig, scene: Scene) -> Result<SensorState> {
        let label = scene.label.clone();
        let frontend = SimulatedFrontEnd::new(Arc::new(scene), config.frontend.clone())?;
        let mut state = SensorState::new(
            config.sensor_id.clone(),
            Box::new(frontend),
            config.default_sweep,
            config.default_plan,
        );
        state.scene_label = label;
        state.frontend_config = Some(config.frontend.clone());
        Ok(state)
    }

    pub fn sensor_id(&self) -> &str {
        &self.sensor_id
    }

    fn claim_frontend(&self) -> Option<MutexGuard<'_, Box<dyn FrontEnd>>> {
        match self.frontend.try_lock() {
            Ok(guard) => Some(guard),
            Err(TryLockError::Poisoned(poisoned)) => Some(poisoned.into_inner()),
            Err(TryLockError::WouldBlock) => None,
        }
    }

    fn sweep_config(&self, p: &SweepParams) -> SweepConfig {
        SweepConfig {
            f_min: p.f_min_hz.unwrap_or(self.default_sweep.f_min),
            f_max: p.f_max_hz.unwrap_or(self.default_sweep.f_max),
            step: p.step_hz.unwrap_or(self.default_sweep.step),
            dwell_s: p.dwell_s.unwrap_or(self.default_sweep.dwell_s),
        }
    }

    /// Maps one request line to its response. Never panics on bad input.
    pub fn handle_request(&self, line: &[u8]) -> Value {
        match Request::parse(line) {
            Ok(request) => self.handle(&request),
            Err(e) => error_response(e.code, e.detail),
        }
    }

    pub fn handle(&self, request: &Request) -> Value {
        match request {
            Request::Ping => json!({
                "ok": true,
                "role": "sensor",
                "sensor_id": self.sensor_id,
                "version": PROTOCOL_VERSION,
            }),
            Request::Info => self.info(),
            Request::Sweep(p) => self.sweep(p).unwrap_or_else(|e| e),
            Request::Channels(p) => self.channels(p).unwrap_or_else(|e| e),
        }
    }

    fn info(&self) -> Value {
        let busy = self.frontend.try_lock().is_err();
        let mut body = json!({
            "ok": true,
            "role": "sensor",
            "sensor_id": self.sensor_id,
            "version": PROTOCOL_VERSION,
            "scene_label": self.scene_label,
            "busy": busy,
            "default_sweep": self.default_sweep,
            "channel_width_hz": self.default_plan.channel_width_hz,
        });
        if let Some(fe) = &self.frontend_config {
            body["frontend"] = json!({
                "mode": fe.mode,
                "sample_rate_hz": fe.sample_rate,
                "jitter_sigma_db": fe.jitter_sigma_db,
                "tunable_range_hz": [fe.tunable_min, fe.tunable_max],
            });
        }
        body
    }

    fn run_claimed(&self, config: &SweepConfig) -> std::result::Result<SweepRecord, Value> {
        config.validate().map_err(to_response)?;
        if config.sample_count() > MAX_SWEEP_SAMPLES {
            return Err(error_response(
                codes::BAD_REQUEST,
                Some(format!(
                    "sweep of {} samples exceeds the limit of {MAX_SWEEP_SAMPLES}",
                    config.sample_count()
                )),
            ));
        }
        let Some(mut frontend) = self.claim_frontend() else {
            return Err(error_response(codes::BUSY, None));
        };
        run_sweep(frontend.as_mut(), config, &self.sensor_id).map_err(to_response)
    }

    fn sweep(&self, p: &SweepParams) -> std::result::Result<Value, Value> {
        let config = self.sweep_config(p);
        let record = self.run_claimed(&config)?;
        let samples: Vec<Value> = record
            .samples
            .iter()
            .map(|s| json!([s.f_center, s.power_db]))
            .collect();
        Ok(json!({
            "ok": true,
            "sensor_id": record.sensor_id,
            "started_at": record.started_at,
            "samples": samples,
        }))
    }

    fn channels(&self, p: &ChannelsParams) -> std::result::Result<Value, Value> {
        let config = self.sweep_config(&p.sweep());
        config.validate().map_err(to_response)?;
        let width = p
            .channel_width_hz
            .unwrap_or(self.default_plan.channel_width_hz);
        let plan = BandPlan::new(config.f_min, config.f_max, width).map_err(to_response)?;
        plan.samples_per_channel(config.step).map_err(to_response)?;

        let record = self.run_claimed(&config)?;
        let detection = Detection::run(&record, &plan).map_err(to_response)?;
        let decisions: Vec<Value> = detection
            .decisions
            .iter()
            .map(|d| json!([d.channel, d.verdict, d.p_max_db]))
            .collect();
        Ok(json!({
            "ok": true,
            "sensor_id": record.sensor_id,
            "started_at": record.started_at,
            "gamma_db": detection.threshold.gamma_db,
            "min_db": detection.threshold.min_db,
            "max_db": detection.threshold.max_db,
            "decisions": decisions,
        }))
    }
}

fn to_response(err: Error) -> Value {
    let code = match err {
        Error::Config(_) | Error::Argument(_) | Error::OutOfBand { .. } => codes::BAD_REQUEST,
        Error::Tune { .. } => codes::TUNE_ERROR,
        _ => codes::INTERNAL,
    };
    error_response(code, Some(err.to_string()))
}

/// A bound sensor daemon, ready to accept connections.
pub struct SensorServer {
    listener: TcpListener,
    state: Arc<SensorState>,
    shutdown: Arc<AtomicBool>,
}

impl SensorServer {
    pub fn bind(address: &str, state: SensorState) -> Result<SensorServer> {
        let listener = TcpListener::bind(address)
            .map_err(|e| Error::Config(format!("cannot bind {address}: {e}")))?;
        Ok(SensorServer {
            listener,
            state: Arc::new(state),
            shutdown: Arc::new(AtomicBool::new(false)),
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.listener
            .local_addr()
            .expect("bound listener has an address")
    }

    pub fn state(&self) -> Arc<SensorState> {
        Arc::clone(&self.state)
    }

    /// Accepts connections until shut down via a [`ServerHandle`].
    pub fn run(self) -> Result<()> {
        info!(
            "sensor {} listening on {}",
            self.state.sensor_id,
            self.local_addr()
        );
        for stream in self.listener.incoming() {
            if self.shutdown.load(Ordering::SeqCst) {
                break;
            }
            match stream {
                Ok(stream) => {
                    let state = Arc::clone(&self.state);
                    thread::spawn(move || {
                        let peer = stream.peer_addr().ok();
                        if let Err(e) = serve_connection(&state, stream) {
                            debug!("connection {peer:?} ended: {e}");
                        }
                    });
                }
                Err(e) => warn!("accept failed: {e}"),
            }
        }
        Ok(())
    }

    /// Runs the accept loop on a background thread.
    pub fn spawn(self) -> ServerHandle {
        let address = self.local_addr();
        let shutdown = Arc::clone(&self.shutdown);
        let join = thread::spawn(move || self.run());
        ServerHandle {
            address,
            shutdown,
            join: Some(join),
        }
    }
}

pub struct ServerHandle {
    address: SocketAddr,
    shutdown: Arc<AtomicBool>,
    join: Option<JoinHandle<Result<()>>>,
}

impl ServerHandle {
    pub fn address(&self) -> SocketAddr {
        self.address
    }

    pub fn is_running(&self) -> bool {
        self.join.as_ref().is_some_and(|j| !j.is_finished())
    }

    /// Stops accepting new connections and waits for the accept loop.
    pub fn shutdown(mut self) -> Result<()> {
        self.stop()
    }

    fn stop(&mut self) -> Result<()> {
        let Some(join) = self.join.take() else {
            return Ok(());
        };
        self.shutdown.store(true, Ordering::SeqCst);
        // Wake the blocking accept.
        let _ = TcpStream::connect(self.address);
        join.join()
            .map_err(|_| Error::Io(io::Error::other("sensor accept loop panicked")))?
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        let _ = self.stop();
    }
}

fn serve_connection(state: &SensorState, stream: TcpStream) -> io::Result<()> {
    stream.set_nodelay(true)?;
    let mut writer = stream.try_clone()?;
    let mut reader = BufReader::new(stream);
    loop {
        let response = match read_line(&mut reader)? {
            Line::Eof => return Ok(()),
            Line::TooLong => {
                error_response(codes::BAD_REQUEST, Some("request line too long".into()))
            }
            Line::Complete(line) => state.handle_request(&line),
        };
        writer.write_all(&encode_line(&response))?;
        writer.flush()?;
    }
}

/// Loads the scene, binds, and serves until the process is stopped.
pub fn serve(config: &SensorConfig) -> Result<()> {
    let state = SensorState::from_config(config)?;
    SensorServer::bind(&config.listen_address, state)?.run()
}
