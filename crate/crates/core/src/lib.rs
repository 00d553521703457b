//! Energy-detection TV white space sensing.
//!
//! A sweep steps a front-end across a band, taking one raw power reading per
//! step. Post-processing sets a single threshold at the midpoint (in dB) of
//! the weakest and strongest reading and marks a channel occupied as soon as
//! any of its readings exceeds it. Sensors expose this pipeline over a
//! newline-delimited JSON protocol, and an aggregator polls many sensors into
//! a Radio Environment Map snapshot.
//!
//! Hardware is replaced by [`frontend::SimulatedFrontEnd`], which measures a
//! synthetic [`scene::Scene`] either analytically or from generated IQ.
//!
//! ```
//! use std::sync::Arc;
//! use tvws::{presets, run_sweep, Detection, Emitter, EmitterKind, FrontEndConfig, Hz, Scene,
//!     SimulatedFrontEnd};
//!
//! let scene = Scene::new("demo", -170.0).with_emitter(Emitter::new(
//!     EmitterKind::WidebandTv,
//!     Hz(475_250_000),
//!     Hz(7_600_000),
//!     -60.0,
//! ));
//! let mut fe = SimulatedFrontEnd::new(Arc::new(scene), FrontEndConfig::default()).unwrap();
//! let record = run_sweep(&mut fe, &presets::uhf_sweep(), "demo").unwrap();
//! let detection = Detection::run(&record, &presets::uhf_plan()).unwrap();
//! assert_eq!(detection.white_spaces().len(), 48);
//! ```

pub mod aggregator;
pub mod bandplan;
pub mod cli;
pub mod detect;
pub mod error;
pub mod frontend;
pub mod presets;
pub mod protocol;
pub mod scene;
pub mod service;
pub mod sweep;
pub mod units;

pub use aggregator::{compare, poll_all, ComparisonReport, PollRequest, RemEntry, RemSnapshot};
pub use bandplan::BandPlan;
pub use detect::{
    classify, compute_threshold, white_spaces, ChannelDecision, Detection, Threshold, Verdict,
};
pub use error::{Error, Result};
pub use frontend::{FrontEnd, FrontEndConfig, MeasureMode, PowerSample, SimulatedFrontEnd};
pub use scene::{Emitter, EmitterKind, Scene};
pub use service::{SensorConfig, SensorServer, SensorState, ServerHandle};
pub use sweep::{run_sweep, SweepConfig, SweepRecord};
pub use units::Hz;
