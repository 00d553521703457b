//! Newline-delimited JSON wire protocol shared by sensors and the aggregator.
//!
//! Every message is a single UTF-8 JSON object followed by one LF byte.
//! Requests carry a `cmd` field; responses carry `ok` and, on failure, an
//! `error` code plus optional `detail`.

use std::io::{self, BufRead, Read, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::time::{Duration, Instant};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::detect::Verdict;
use crate::error::{Error, Result};
use crate::units::Hz;

pub const PROTOCOL_VERSION: u32 = 1;

/// Longest request or response line accepted, excluding the LF.
pub const MAX_LINE_BYTES: usize = 1 << 20;

pub mod codes {
    pub const BAD_REQUEST: &str = "bad_request";
    pub const UNKNOWN_CMD: &str = "unknown_cmd";
    pub const BUSY: &str = "busy";
    pub const TUNE_ERROR: &str = "tune_error";
    pub const INTERNAL: &str = "internal";
}

/// Sweep parameters of a request. Missing fields fall back to the sensor's
/// configured defaults.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_min_hz: Option<Hz>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_max_hz: Option<Hz>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step_hz: Option<Hz>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dwell_s: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelsParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_min_hz: Option<Hz>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_max_hz: Option<Hz>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step_hz: Option<Hz>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dwell_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub channel_width_hz: Option<Hz>,
}

impl ChannelsParams {
    pub fn sweep(&self) -> SweepParams {
        SweepParams {
            f_min_hz: self.f_min_hz,
            f_max_hz: self.f_max_hz,
            step_hz: self.step_hz,
            dwell_s: self.dwell_s,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Request {
    Ping,
    Info,
    Sweep(SweepParams),
    Channels(ChannelsParams),
}

/// A request that could not be decoded, already mapped to its wire code.
#[derive(Debug, Clone, PartialEq)]
pub struct RequestError {
    pub code: &'static str,
    pub detail: Option<String>,
}

impl RequestError {
    fn bad(detail: impl Into<String>) -> Self {
        RequestError {
            code: codes::BAD_REQUEST,
            detail: Some(detail.into()),
        }
    }
}

impl Request {
    pub fn parse(line: &[u8]) -> std::result::Result<Request, RequestError> {
        let text = std::str::from_utf8(line).map_err(|e| RequestError::bad(e.to_string()))?;
        let value: Value =
            serde_json::from_str(text).map_err(|e| RequestError::bad(e.to_string()))?;
        let Value::Object(mut fields) = value else {
            return Err(RequestError::bad("request must be a JSON object"));
        };
        let cmd = match fields.remove("cmd") {
            Some(Value::String(cmd)) => cmd,
            Some(_) => return Err(RequestError::bad("`cmd` must be a string")),
            None => return Err(RequestError::bad("missing `cmd`")),
        };
        let params = Value::Object(fields);
        match cmd.as_str() {
            "ping" => Ok(Request::Ping),
            "info" => Ok(Request::Info),
            "sweep" => serde_json::from_value(params)
                .map(Request::Sweep)
                .map_err(|e| RequestError::bad(e.to_string())),
            "channels" => serde_json::from_value(params)
                .map(Request::Channels)
                .map_err(|e| RequestError::bad(e.to_string())),
            _ => Err(RequestError {
                code: codes::UNKNOWN_CMD,
                detail: None,
            }),
        }
    }

    pub fn to_value(&self) -> Value {
        let (cmd, params) = match self {
            Request::Ping => ("ping", Value::Object(Map::new())),
            Request::Info => ("info", Value::Object(Map::new())),
            Request::Sweep(p) => ("sweep", serde_json::to_value(p).expect("serializable")),
            Request::Channels(p) => ("channels", serde_json::to_value(p).expect("serializable")),
        };
        let mut map = Map::new();
        map.insert("cmd".into(), Value::String(cmd.into()));
        if let Value::Object(rest) = params {
            map.extend(rest);
        }
        Value::Object(map)
    }
}

pub fn error_response(code: &str, detail: Option<String>) -> Value {
    match detail {
        Some(detail) => json!({"ok": false, "error": code, "detail": detail}),
        None => json!({"ok": false, "error": code}),
    }
}

/// Serializes one message as a JSON line.
pub fn encode_line(message: &Value) -> Vec<u8> {
    let mut bytes = serde_json::to_vec(message).expect("JSON values serialize");
    bytes.push(b'\n');
    bytes
}

/// Outcome of reading one line with [`read_line`].
#[derive(Debug, PartialEq, Eq)]
pub enum Line {
    /// A line, without its terminating LF.
    Complete(Vec<u8>),
    /// The line exceeded [`MAX_LINE_BYTES`] and was discarded up to its LF.
    TooLong,
    Eof,
}

/// Reads one LF-terminated line, never buffering more than
/// [`MAX_LINE_BYTES`] of it. A final line without LF is still returned.
pub fn read_line(reader: &mut impl BufRead) -> io::Result<Line> {
    let mut buf = Vec::new();
    let read = reader
        .by_ref()
        .take(MAX_LINE_BYTES as u64 + 1)
        .read_until(b'\n', &mut buf)?;
    if read == 0 {
        return Ok(Line::Eof);
    }
    if buf.last() == Some(&b'\n') {
        buf.pop();
        return Ok(Line::Complete(buf));
    }
    if buf.len() <= MAX_LINE_BYTES {
        return Ok(Line::Complete(buf));
    }
    // Drain the rest of the oversized line.
    loop {
        let chunk = reader.fill_buf()?;
        if chunk.is_empty() {
            return Ok(Line::TooLong);
        }
        match chunk.iter().position(|&b| b == b'\n') {
            Some(pos) => {
                reader.consume(pos + 1);
                return Ok(Line::TooLong);
            }
            None => {
                let len = chunk.len();
                reader.consume(len);
            }
        }
    }
}

/// Decoded `channels` response.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ChannelsResponse {
    pub sensor_id: String,
    pub started_at: DateTime<Utc>,
    pub gamma_db: f64,
    pub min_db: f64,
    pub max_db: f64,
    pub decisions: Vec<(usize, Verdict, f64)>,
}

/// Decoded `sweep` response.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct SweepResponse {
    pub sensor_id: String,
    pub started_at: DateTime<Utc>,
    pub samples: Vec<(Hz, f64)>,
}

/// Failure reported by a sensor, or a transport failure reaching it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RemoteError {
    pub code: String,
    pub detail: Option<String>,
}

impl std::fmt::Display for RemoteError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.detail {
            Some(d) => write!(f, "{}: {d}", self.code),
            None => f.write_str(&self.code),
        }
    }
}

impl std::error::Error for RemoteError {}

impl RemoteError {
    fn transport(detail: impl Into<String>) -> Self {
        RemoteError {
            code: "unreachable".into(),
            detail: Some(detail.into()),
        }
    }
}

/// Blocking client for one sensor connection.
pub struct SensorClient {
    reader: io::BufReader<TcpStream>,
    writer: TcpStream,
    deadline: Option<Instant>,
}

impl SensorClient {
    pub fn connect(address: impl ToSocketAddrs) -> Result<SensorClient> {
        let stream = TcpStream::connect(address)?;
        SensorClient::from_stream(stream, None)
    }

    /// Connects with every later read and write bounded by `timeout` in total.
    pub fn connect_with_timeout(address: &str, timeout: Duration) -> Result<SensorClient> {
        let deadline = Instant::now() + timeout;
        let mut last_err = None;
        for addr in address.to_socket_addrs()? {
            let remaining = deadline.saturating_duration_since(Instant::now());
            if remaining.is_zero() {
                break;
            }
            match TcpStream::connect_timeout(&addr, remaining) {
                Ok(stream) => return SensorClient::from_stream(stream, Some(deadline)),
                Err(e) => last_err = Some(e),
            }
        }
        Err(last_err
            .unwrap_or_else(|| io::Error::new(io::ErrorKind::TimedOut, "no address reachable"))
            .into())
    }

    fn from_stream(stream: TcpStream, deadline: Option<Instant>) -> Result<SensorClient> {
        stream.set_nodelay(true)?;
        let writer = stream.try_clone()?;
        Ok(SensorClient {
            reader: io::BufReader::new(stream),
            writer,
            deadline,
        })
    }

    fn arm_timeouts(&self) -> io::Result<()> {
        if let Some(deadline) = self.deadline {
            let remaining = deadline.saturating_duration_since(Instant::now());
            if remaining.is_zero() {
                return Err(io::Error::new(io::ErrorKind::TimedOut, "deadline elapsed"));
            }
            self.writer.set_write_timeout(Some(remaining))?;
            self.reader.get_ref().set_read_timeout(Some(remaining))?;
        }
        Ok(())
    }

    /// Sends raw bytes followed by LF and returns the decoded response line.
    pub fn exchange_raw(&mut self, payload: &[u8]) -> Result<Value> {
        self.arm_timeouts()?;
        let mut bytes = payload.to_vec();
        bytes.push(b'\n');
        self.writer.write_all(&bytes)?;
        self.writer.flush()?;
        self.arm_timeouts()?;
        match read_line(&mut self.reader)? {
            Line::Complete(line) => serde_json::from_slice(&line)
                .map_err(|e| Error::Protocol(format!("undecodable response: {e}"))),
            Line::TooLong => Err(Error::Protocol("response line too long".into())),
            Line::Eof => Err(Error::Protocol("connection closed by sensor".into())),
        }
    }

    pub fn request(&mut self, request: &Request) -> Result<Value> {
        let line = serde_json::to_vec(&request.to_value()).expect("serializable");
        self.exchange_raw(&line)
    }

    /// Sends a request and decodes a successful response body into `T`.
    pub fn call<T: serde::de::DeserializeOwned>(
        &mut self,
        request: &Request,
    ) -> std::result::Result<T, RemoteError> {
        let response = self
            .request(request)
            .map_err(|e| RemoteError::transport(e.to_string()))?;
        decode_response(response)
    }
}

/// Splits a response into its success body or the sensor's error.
pub fn decode_response<T: serde::de::DeserializeOwned>(
    response: Value,
) -> std::result::Result<T, RemoteError> {
    match response.get("ok") {
        Some(Value::Bool(true)) => serde_json::from_value(response).map_err(|e| RemoteError {
            code: "bad_response".into(),
            detail: Some(e.to_string()),
        }),
        Some(Value::Bool(false)) => Err(RemoteError {
            code: response
                .get("error")
                .and_then(Value::as_str)
                .unwrap_or("unknown")
                .to_owned(),
            detail: response
                .get("detail")
                .and_then(Value::as_str)
                .map(str::to_owned),
        }),
        _ => Err(RemoteError {
            code: "bad_response".into(),
            detail: Some("missing `ok`".into()),
        }),
    }
}
