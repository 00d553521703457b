//! Central Radio Environment Map builder.
//!
//! The aggregator issues one `channels` request to every registered sensor
//! in parallel and collects the verdicts into a [`RemSnapshot`]. Sensors that
//! time out, refuse, or answer `busy` are recorded as failures; the snapshot
//! is still assembled from the sensors that did respond. No cross-sensor
//! fusion is performed.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;
use std::thread;
use std::time::Duration;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use crate::bandplan::BandPlan;
use crate::detect::Verdict;
use crate::error::{Error, Result};
use crate::presets;
use crate::protocol::{ChannelsParams, ChannelsResponse, Request, SensorClient};
use crate::sweep::SweepConfig;
use crate::units::Hz;

pub const DEFAULT_POLL_TIMEOUT: Duration = Duration::from_secs(30);

/// What every sensor is asked to sweep and classify.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PollRequest {
    pub sweep: SweepConfig,
    #[serde(rename = "channel_width_hz")]
    pub channel_width: Hz,
}

impl Default for PollRequest {
    fn default() -> Self {
        PollRequest {
            sweep: presets::uhf_sweep(),
            channel_width: presets::EU_CHANNEL_WIDTH,
        }
    }
}

impl PollRequest {
    pub fn plan(&self) -> Result<BandPlan> {
        self.sweep.validate()?;
        let plan = BandPlan::new(self.sweep.f_min, self.sweep.f_max, self.channel_width)?;
        plan.samples_per_channel(self.sweep.step)?;
        Ok(plan)
    }

    pub fn to_request(&self) -> Request {
        Request::Channels(ChannelsParams {
            f_min_hz: Some(self.sweep.f_min),
            f_max_hz: Some(self.sweep.f_max),
            step_hz: Some(self.sweep.step),
            dwell_s: Some(self.sweep.dwell_s),
            channel_width_hz: Some(self.channel_width),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemEntry {
    pub sensor_id: String,
    pub channel: usize,
    #[serde(rename = "f_start_hz")]
    pub f_start: Hz,
    pub verdict: Verdict,
    pub p_max_db: f64,
    pub gamma_db: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolledSensor {
    pub address: String,
    pub sensor_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SensorFailure {
    pub address: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemSnapshot {
    pub taken_at: DateTime<Utc>,
    pub entries: Vec<RemEntry>,
    pub sensors_ok: Vec<PolledSensor>,
    pub sensors_failed: Vec<SensorFailure>,
}

impl RemSnapshot {
    pub fn entries_for<'a>(&'a self, sensor_id: &'a str) -> impl Iterator<Item = &'a RemEntry> {
        self.entries
            .iter()
            .filter(move |e| e.sensor_id == sensor_id)
    }
}

fn poll_one(
    address: &str,
    request: &Request,
    plan: &BandPlan,
    timeout: Duration,
) -> std::result::Result<(String, Vec<RemEntry>), String> {
    let mut client = SensorClient::connect_with_timeout(address, timeout)
        .map_err(|e| format!("unreachable: {e}"))?;
    let response: ChannelsResponse = client.call(request).map_err(|e| e.to_string())?;
    if response.decisions.len() != plan.channel_count() {
        return Err(format!(
            "bad_response: {} decisions for {} channels",
            response.decisions.len(),
            plan.channel_count()
        ));
    }
    let mut entries = Vec::with_capacity(response.decisions.len());
    for (channel, verdict, p_max_db) in response.decisions {
        let (f_start, _) = plan
            .channel_span(channel)
            .ok_or_else(|| format!("bad_response: channel {channel} outside plan"))?;
        entries.push(RemEntry {
            sensor_id: response.sensor_id.clone(),
            channel,
            f_start,
            verdict,
            p_max_db,
            gamma_db: response.gamma_db,
        });
    }
    Ok((response.sensor_id, entries))
}

/// Polls every sensor concurrently, each bounded by `timeout`.
pub fn poll_all(
    sensors: &[String],
    request: &PollRequest,
    timeout: Duration,
) -> Result<RemSnapshot> {
    if sensors.is_empty() {
        return Err(Error::Argument("no sensors registered".into()));
    }
    let plan = request.plan()?;
    let wire = request.to_request();

    let outcomes: Vec<_> = thread::scope(|scope| {
        let handles: Vec<_> = sensors
            .iter()
            .map(|address| {
                let (wire, plan) = (&wire, &plan);
                scope.spawn(move || poll_one(address, wire, plan, timeout))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|_| Err("poll thread panicked".into()))
            })
            .collect()
    });

    let mut snapshot = RemSnapshot {
        taken_at: Utc::now(),
        entries: Vec::new(),
        sensors_ok: Vec::new(),
        sensors_failed: Vec::new(),
    };
    for (address, outcome) in sensors.iter().zip(outcomes) {
        match outcome {
            Ok((sensor_id, entries)) => {
                snapshot.entries.extend(entries);
                snapshot.sensors_ok.push(PolledSensor {
                    address: address.clone(),
                    sensor_id,
                });
            }
            Err(error) => snapshot.sensors_failed.push(SensorFailure {
                address: address.clone(),
                error,
            }),
        }
    }
    Ok(snapshot)
}

const REM_HEADER: [&str; 7] = [
    "sensor_id",
    "channel",
    "f_start_hz",
    "verdict",
    "p_max_db",
    "gamma_db",
    "taken_at",
];

fn csv_error(e: csv::Error) -> Error {
    Error::Protocol(format!("REM CSV: {e}"))
}

/// REM rows sorted by sensor then channel. Powers use the shortest decimal
/// that round-trips.
pub fn rem_to_csv(snapshot: &RemSnapshot) -> Vec<u8> {
    let mut rows: Vec<&RemEntry> = snapshot.entries.iter().collect();
    rows.sort_by(|a, b| (&a.sensor_id, a.channel).cmp(&(&b.sensor_id, b.channel)));
    let taken_at = snapshot
        .taken_at
        .to_rfc3339_opts(SecondsFormat::AutoSi, true);

    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    writer.write_record(REM_HEADER).expect("in-memory write");
    for e in rows {
        writer
            .write_record([
                e.sensor_id.as_str(),
                &e.channel.to_string(),
                &e.f_start.0.to_string(),
                e.verdict.as_str(),
                &e.p_max_db.to_string(),
                &e.gamma_db.to_string(),
                &taken_at,
            ])
            .expect("in-memory write");
    }
    writer.into_inner().expect("in-memory flush")
}

/// Parses a REM CSV back into its entries and the snapshot timestamp
/// (`None` for a header-only file).
pub fn rem_from_csv(source: impl Read) -> Result<(Vec<RemEntry>, Option<DateTime<Utc>>)> {
    let mut reader = csv::ReaderBuilder::new().from_reader(source);
    let header = reader.headers().map_err(csv_error)?;
    if header.iter().ne(REM_HEADER) {
        return Err(Error::Protocol(format!("unexpected REM header {header:?}")));
    }
    let mut entries = Vec::new();
    let mut taken_at = None;
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let field = |i: usize| record.get(i).unwrap_or_default();
        let bad = |what: &str| {
            Error::Protocol(format!("REM CSV row {:?}: bad {what}", record.position()))
        };
        entries.push(RemEntry {
            sensor_id: field(0).to_owned(),
            channel: field(1).parse().map_err(|_| bad("channel"))?,
            f_start: Hz(field(2).parse().map_err(|_| bad("f_start_hz"))?),
            verdict: field(3).parse()?,
            p_max_db: field(4).parse().map_err(|_| bad("p_max_db"))?,
            gamma_db: field(5).parse().map_err(|_| bad("gamma_db"))?,
        });
        let ts = DateTime::parse_from_rfc3339(field(6))
            .map_err(|_| bad("taken_at"))?
            .with_timezone(&Utc);
        taken_at = Some(ts);
    }
    Ok((entries, taken_at))
}

/// Channel-index list file: `{"free_channels": [..]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSetFile {
    pub free_channels: Vec<usize>,
}

impl ChannelSetFile {
    pub fn load(path: &Path) -> Result<BTreeSet<usize>> {
        let file = File::open(path)?;
        let parsed: ChannelSetFile = serde_json::from_reader(BufReader::new(file))
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Ok(parsed.free_channels.into_iter().collect())
    }

    pub fn from_set(set: &BTreeSet<usize>) -> ChannelSetFile {
        ChannelSetFile {
            free_channels: set.iter().copied().collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("serializable")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub detected_free: BTreeSet<usize>,
    pub reference_free: BTreeSet<usize>,
    pub agreeing: BTreeSet<usize>,
    /// `|agreeing| / |reference_free|`.
    pub match_ratio: f64,
    pub only_detected: BTreeSet<usize>,
    pub only_reference: BTreeSet<usize>,
}

/// Scores a detected white-space set against a reference survey.
pub fn compare(
    detected: &BTreeSet<usize>,
    reference: &BTreeSet<usize>,
    total_channels: usize,
) -> Result<ComparisonReport> {
    if reference.is_empty() {
        return Err(Error::Argument(
            "reference set is empty: match ratio undefined".into(),
        ));
    }
    for (name, set) in [("detected", detected), ("reference", reference)] {
        if let Some(&c) = set.iter().find(|&&c| c >= total_channels) {
            return Err(Error::Argument(format!(
                "{name} channel {c} outside [0, {total_channels})"
            )));
        }
    }
    let agreeing: BTreeSet<usize> = detected.intersection(reference).copied().collect();
    Ok(ComparisonReport {
        match_ratio: agreeing.len() as f64 / reference.len() as f64,
        only_detected: detected.difference(reference).copied().collect(),
        only_reference: reference.difference(detected).copied().collect(),
        agreeing,
        detected_free: detected.clone(),
        reference_free: reference.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(v: &[usize]) -> BTreeSet<usize> {
        v.iter().copied().collect()
    }

    #[test]
    fn identical_sets_match_fully() {
        let r = compare(&set(&[1, 2, 3]), &set(&[1, 2, 3]), 49).unwrap();
        assert_eq!(r.match_ratio, 1.0);
        assert!(r.only_detected.is_empty() && r.only_reference.is_empty());
    }

    #[test]
    fn subset_ratio() {
        let reference: BTreeSet<usize> = (0..35).collect();
        let detected: BTreeSet<usize> = (0..29).collect();
        let r = compare(&detected, &reference, 49).unwrap();
        assert!((r.match_ratio - 29.0 / 35.0).abs() < 1e-12);
        assert_eq!(r.only_reference, (29..35).collect());
        assert!(r.only_detected.is_empty());
    }

    #[test]
    fn disjoint_sets_score_zero() {
        let r = compare(&set(&[0, 1]), &set(&[2, 3]), 4).unwrap();
        assert_eq!(r.match_ratio, 0.0);
        assert!(r.agreeing.is_empty());
    }

    #[test]
    fn compare_rejects_bad_inputs() {
        assert!(compare(&set(&[1]), &set(&[]), 4).is_err());
        assert!(compare(&set(&[9]), &set(&[1]), 4).is_err());
        assert!(compare(&set(&[1]), &set(&[4]), 4).is_err());
    }

    fn entry(sensor: &str, channel: usize, verdict: Verdict, p: f64) -> RemEntry {
        RemEntry {
            sensor_id: sensor.into(),
            channel,
            f_start: Hz(471_250_000 + channel as u64 * 8_000_000),
            verdict,
            p_max_db: p,
            gamma_db: -92.927_312_5,
        }
    }

    #[test]
    fn empty_snapshot_is_header_only() {
        let snap = RemSnapshot {
            taken_at: Utc::now(),
            entries: vec![],
            sensors_ok: vec![],
            sensors_failed: vec![],
        };
        let csv = rem_to_csv(&snap);
        assert_eq!(
            String::from_utf8(csv.clone()).unwrap(),
            "sensor_id,channel,f_start_hz,verdict,p_max_db,gamma_db,taken_at\n"
        );
        assert_eq!(rem_from_csv(&csv[..]).unwrap(), (vec![], None));
    }

    #[test]
    fn csv_rows_are_sorted_and_lf_terminated() {
        let snap = RemSnapshot {
            taken_at: "2026-01-02T03:04:05Z".parse().unwrap(),
            entries: vec![
                entry("b", 0, Verdict::Free, -116.0),
                entry("a", 1, Verdict::Occupied, -70.5),
                entry("a", 0, Verdict::Free, -116.0),
            ],
            sensors_ok: vec![],
            sensors_failed: vec![],
        };
        let text = String::from_utf8(rem_to_csv(&snap)).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(!text.contains('\r'));
        assert_eq!(
            lines[1],
            "a,0,471250000,free,-116,-92.9273125,2026-01-02T03:04:05Z"
        );
        assert!(lines[2].starts_with("a,1,479250000,occupied,-70.5,"));
        assert!(lines[3].starts_with("b,0,"));
    }

    #[test]
    fn channel_set_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ref.json");
        std::fs::write(&path, ChannelSetFile::from_set(&set(&[4, 1])).to_json()).unwrap();
        assert_eq!(ChannelSetFile::load(&path).unwrap(), set(&[1, 4]));
        std::fs::write(&path, r#"{"free":[1]}"#).unwrap();
        assert!(ChannelSetFile::load(&path).is_err());
    }

    #[test]
    fn polling_nobody_is_an_error() {
        assert!(poll_all(&[], &PollRequest::default(), DEFAULT_POLL_TIMEOUT).is_err());
    }

    proptest! {
        #[test]
        fn rem_csv_parse_emit_fixpoint(
            rows in prop::collection::vec(
                ("[a-z ,\"]{1,8}", 0usize..49, prop::bool::ANY, -200.0f64..0.0),
                0..30,
            )
        ) {
            let entries: Vec<RemEntry> = rows
                .iter()
                .map(|(s, c, occ, p)| {
                    entry(s, *c, if *occ { Verdict::Occupied } else { Verdict::Free }, *p)
                })
                .collect();
            let snap = RemSnapshot {
                taken_at: Utc::now(),
                entries,
                sensors_ok: vec![],
                sensors_failed: vec![],
            };
            let bytes = rem_to_csv(&snap);
            let (parsed, _) = rem_from_csv(&bytes[..]).unwrap();
            let mut expected = snap.entries.clone();
            expected.sort_by(|a, b| (&a.sensor_id, a.channel).cmp(&(&b.sensor_id, b.channel)));
            prop_assert_eq!(&parsed, &expected);
            let again = RemSnapshot { entries: parsed, ..snap };
            prop_assert_eq!(rem_to_csv(&again), bytes);
        }

        #[test]
        fn compare_swaps_differences(
            a in prop::collection::btree_set(0usize..20, 0..20),
            b in prop::collection::btree_set(0usize..20, 1..20),
        ) {
            prop_assume!(!a.is_empty());
            let ab = compare(&a, &b, 20).unwrap();
            let ba = compare(&b, &a, 20).unwrap();
            prop_assert_eq!(&ab.only_detected, &ba.only_reference);
            prop_assert_eq!(&ab.only_reference, &ba.only_detected);
            prop_assert_eq!(&ab.agreeing, &ba.agreeing);
            prop_assert!(ab.agreeing.is_subset(&a) && ab.agreeing.is_subset(&b));
            prop_assert!((0.0..=1.0).contains(&ab.match_ratio));
        }
    }
}
