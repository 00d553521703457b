//! Command-line front end: `sweep`, `channels`, `serve`, `poll`, `compare`.
//!
//! Defaults reproduce the UHF survey configuration. CSV outputs begin with a
//! `# config: {...}` line echoing the effective configuration as JSON.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::aggregator::{compare, poll_all, rem_to_csv, ChannelSetFile, PollRequest};
use crate::bandplan::BandPlan;
use crate::detect::{decisions_to_csv, Detection};
use crate::error::{Error, Result};
use crate::frontend::{FrontEndConfig, MeasureMode, SimulatedFrontEnd, DEFAULT_SAMPLE_RATE};
use crate::presets;
use crate::scene::Scene;
use crate::service::{SensorConfig, SensorServer, SensorState};
use crate::sweep::{run_sweep, SweepConfig, SweepRecord};
use crate::units::Hz;

#[derive(Debug, Parser)]
#[command(name = "tvws", version, about = "TV white space energy detector")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sweep a scene and write the raw power samples as CSV.
    Sweep(SweepArgs),
    /// Sweep, threshold and classify every channel.
    Channels(ChannelsArgs),
    /// Run a sensor daemon.
    Serve(ServeArgs),
    /// Poll sensors and write a REM snapshot as CSV.
    Poll(PollArgs),
    /// Compare a detected white-space set with a reference set.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    #[arg(long, default_value_t = presets::UHF_F_MIN.0)]
    pub f_min: u64,
    #[arg(long, default_value_t = presets::UHF_F_MAX.0)]
    pub f_max: u64,
    #[arg(long, default_value_t = presets::SAMPLE_STEP.0)]
    pub step: u64,
    #[arg(long, default_value_t = presets::DWELL_S)]
    pub dwell: f64,
}

impl GridArgs {
    fn sweep_config(&self) -> SweepConfig {
        SweepConfig {
            f_min: Hz(self.f_min),
            f_max: Hz(self.f_max),
            step: Hz(self.step),
            dwell_s: self.dwell,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Analytic,
    Iq,
}

#[derive(Debug, Clone, Args)]
pub struct FrontEndArgs {
    #[arg(long, value_enum, default_value_t = ModeArg::Analytic)]
    pub mode: ModeArg,
    #[arg(long, default_value_t = DEFAULT_SAMPLE_RATE.0)]
    pub sample_rate: u64,
    #[arg(long, default_value_t = 0.0)]
    pub jitter_db: f64,
    #[arg(long, env = "WS_SEED", default_value_t = 0)]
    pub seed: u64,
}

impl FrontEndArgs {
    fn config(&self, step: Hz) -> FrontEndConfig {
        FrontEndConfig {
            mode: match self.mode {
                ModeArg::Analytic => MeasureMode::Analytic,
                ModeArg::Iq => MeasureMode::Iq,
            },
            measurement_bandwidth: step,
            sample_rate: Hz(self.sample_rate),
            seed: self.seed,
            jitter_sigma_db: self.jitter_db,
            ..FrontEndConfig::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value = "local")]
    pub sensor_id: String,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub frontend: FrontEndArgs,
}

#[derive(Debug, Args)]
pub struct ChannelsArgs {
    #[command(flatten)]
    pub sweep: SweepArgs,
    #[arg(long, default_value_t = presets::EU_CHANNEL_WIDTH.0)]
    pub channel_width: u64,
    /// Also write the free channels as `{"free_channels": [...]}`.
    #[arg(long)]
    pub white_spaces_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub listen: Option<String>,
    #[arg(long, env = "WS_SEED")]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct PollArgs {
    /// Comma-separated `host:port` list.
    #[arg(long, value_delimiter = ',', required = true)]
    pub sensors: Vec<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, default_value_t = presets::EU_CHANNEL_WIDTH.0)]
    pub channel_width: u64,
    #[arg(long, default_value_t = 30.0)]
    pub timeout_s: f64,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub detected: PathBuf,
    #[arg(long)]
    pub reference: PathBuf,
    #[arg(long, default_value_t = 49)]
    pub total_channels: usize,
}

/// Parses `argv` and runs the selected subcommand. Returns the process exit
/// code: 0 on success, 1 on runtime failure, 2 on usage errors.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Sweep(args) => sweep(&args),
        Command::Channels(args) => channels(&args),
        Command::Serve(args) => serve(&args),
        Command::Poll(args) => poll(&args),
        Command::Compare(args) => compare_sets(&args),
    }
}

fn load_scene(path: &Path) -> Result<Scene> {
    let file =
        File::open(path).map_err(|e| Error::Config(format!("scene {}: {e}", path.display())))?;
    Scene::load(BufReader::new(file))
}

fn write_output(out: Option<&Path>, config: &Value, body: &[u8]) -> Result<()> {
    let mut bytes = format!("# config: {config}\n").into_bytes();
    bytes.extend_from_slice(body);
    match out {
        Some(path) => fs::write(path, bytes)?,
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(&bytes)?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn sweep_echo(command: &str, args: &SweepArgs, config: &SweepConfig, fe: &FrontEndConfig) -> Value {
    json!({
        "command": command,
        "scene": args.scene.display().to_string(),
        "sensor_id": args.sensor_id,
        "sweep": config,
        "frontend": fe,
    })
}

fn run_local_sweep(args: &SweepArgs) -> Result<(SweepRecord, FrontEndConfig)> {
    let config = args.grid.sweep_config();
    config.validate()?;
    let fe_config = args.frontend.config(config.step);
    let scene = load_scene(&args.scene)?;
    let mut frontend = SimulatedFrontEnd::new(Arc::new(scene), fe_config.clone())?;
    let record = run_sweep(&mut frontend, &config, &args.sensor_id)?;
    Ok((record, fe_config))
}

fn sweep(args: &SweepArgs) -> Result<()> {
    let (record, fe_config) = run_local_sweep(args)?;
    let echo = sweep_echo("sweep", args, &record.config, &fe_config);
    write_output(args.out.as_deref(), &echo, record.to_csv().as_bytes())
}

fn channels(args: &ChannelsArgs) -> Result<()> {
    let config = args.sweep.grid.sweep_config();
    config.validate()?;
    let plan = BandPlan::new(config.f_min, config.f_max, Hz(args.channel_width))?;
    plan.samples_per_channel(config.step)?;

    let (record, fe_config) = run_local_sweep(&args.sweep)?;
    let detection = Detection::run(&record, &plan)?;
    let mut echo = sweep_echo("channels", &args.sweep, &record.config, &fe_config);
    echo["channel_width_hz"] = json!(args.channel_width);
    write_output(
        args.sweep.out.as_deref(),
        &echo,
        decisions_to_csv(&detection.decisions).as_bytes(),
    )?;

    let free = detection.white_spaces();
    if let Some(path) = &args.white_spaces_out {
        let file = ChannelSetFile {
            free_channels: free.clone(),
        };
        fs::write(path, file.to_json() + "\n")?;
    }
    let summary = format!(
        "white_spaces={} gamma_db={:.3}",
        free.len(),
        detection.threshold.gamma_db
    );
    if args.sweep.out.is_some() {
        println!("{summary}");
    } else {
        eprintln!("{summary}");
    }
    Ok(())
}

fn serve(args: &ServeArgs) -> Result<()> {
    let mut config = SensorConfig::from_file(&args.config)?;
    if let Some(listen) = &args.listen {
        config.listen_address = listen.clone();
    }
    if let Some(seed) = args.seed {
        config.frontend.seed = seed;
    }
    config.validate()?;
    let state = SensorState::from_config(&config)?;
    let server = SensorServer::bind(&config.listen_address, state)?;
    eprintln!(
        "sensor {} listening on {}",
        config.sensor_id,
        server.local_addr()
    );
    server.run()
}

fn poll(args: &PollArgs) -> Result<()> {
    if !(args.timeout_s > 0.0 && args.timeout_s.is_finite()) {
        return Err(Error::Config("timeout must be positive".into()));
    }
    let request = PollRequest {
        sweep: args.grid.sweep_config(),
        channel_width: Hz(args.channel_width),
    };
    let snapshot = poll_all(
        &args.sensors,
        &request,
        Duration::from_secs_f64(args.timeout_s),
    )?;
    for failure in &snapshot.sensors_failed {
        eprintln!("failed {}: {}", failure.address, failure.error);
    }
    let echo = json!({
        "command": "poll",
        "sensors": args.sensors,
        "sweep": request.sweep,
        "channel_width_hz": request.channel_width,
        "timeout_s": args.timeout_s,
    });
    write_output(args.out.as_deref(), &echo, &rem_to_csv(&snapshot))?;
    if snapshot.sensors_ok.is_empty() {
        return Err(Error::Protocol("no sensor responded".into()));
    }
    Ok(())
}

fn compare_sets(args: &CompareArgs) -> Result<()> {
    let detected = ChannelSetFile::load(&args.detected)?;
    let reference = ChannelSetFile::load(&args.reference)?;
    let report = compare(&detected, &reference, args.total_channels)?;
    println!("match_ratio={:.4}", report.match_ratio);
    println!(
        "agreeing={} detected={} reference={}",
        report.agreeing.len(),
        report.detected_free.len(),
        report.reference_free.len()
    );
    println!("only_detected={:?}", report.only_detected);
    println!("only_reference={:?}", report.only_reference);
    Ok(())
}
