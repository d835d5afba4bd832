use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, Write};
use std::net::IpAddr;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use super::LinkError;
use crate::time::{serde_millis, Timestamp};

/// One HTTP request seen by the tracker, stored as a single JSON line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessLogEntry {
    pub ip: IpAddr,
    pub port: u16,
    pub method: String,
    pub path: String,
    pub headers: Vec<(String, String)>,
    #[serde(rename = "ts", with = "serde_millis")]
    pub received_at: Timestamp,
    pub token: Option<String>,
}

impl AccessLogEntry {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("log entry serializes")
    }

    pub fn from_line(line: &str) -> Result<Self, LinkError> {
        serde_json::from_str(line).map_err(|e| LinkError::BadLogLine(e.to_string()))
    }

    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers.iter().find(|(n, _)| n.eq_ignore_ascii_case(name)).map(|(_, v)| v.as_str())
    }
}

/// Destination for serialized log lines. Each call receives one complete
/// line without its trailing newline.
pub trait LogSink: Send {
    fn write_line(&mut self, line: &str) -> io::Result<()>;
}

/// Append-only file sink; every line is written with one `write_all`.
pub struct FileSink {
    file: File,
}

impl FileSink {
    pub fn open(path: &Path) -> io::Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(FileSink { file })
    }
}

impl LogSink for FileSink {
    fn write_line(&mut self, line: &str) -> io::Result<()> {
        let mut buf = Vec::with_capacity(line.len() + 1);
        buf.extend_from_slice(line.as_bytes());
        buf.push(b'\n');
        self.file.write_all(&buf)
    }
}

/// In-memory sink, mostly for tests and in-process replay.
#[derive(Clone, Default)]
pub struct MemorySink {
    lines: Arc<Mutex<Vec<String>>>,
}

impl MemorySink {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn lines(&self) -> Vec<String> {
        self.lines.lock().unwrap().clone()
    }
}

impl LogSink for MemorySink {
    fn write_line(&mut self, line: &str) -> io::Result<()> {
        self.lines.lock().unwrap().push(line.to_string());
        Ok(())
    }
}

struct WriterState {
    sink: Box<dyn LogSink>,
    last: Option<Timestamp>,
}

/// Single serialized writer in front of a [`LogSink`].
///
/// Timestamps are clamped so they never go backwards within one log, even
/// when concurrent requests reach the lock out of order.
pub struct AccessLog {
    state: Mutex<WriterState>,
    written: AtomicU64,
    failures: AtomicU64,
}

impl AccessLog {
    pub fn new(sink: impl LogSink + 'static) -> Self {
        AccessLog {
            state: Mutex::new(WriterState { sink: Box::new(sink), last: None }),
            written: AtomicU64::new(0),
            failures: AtomicU64::new(0),
        }
    }

    pub fn record(&self, mut entry: AccessLogEntry) -> io::Result<AccessLogEntry> {
        let mut state = self.state.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(last) = state.last {
            entry.received_at = entry.received_at.max(last);
        }
        match state.sink.write_line(&entry.to_line()) {
            Ok(()) => {
                state.last = Some(entry.received_at);
                self.written.fetch_add(1, Ordering::Relaxed);
                Ok(entry)
            }
            Err(e) => {
                self.failures.fetch_add(1, Ordering::Relaxed);
                Err(e)
            }
        }
    }

    pub fn written(&self) -> u64 {
        self.written.load(Ordering::Relaxed)
    }

    pub fn failures(&self) -> u64 {
        self.failures.load(Ordering::Relaxed)
    }
}

#[derive(Debug, Default)]
pub struct LogParse {
    pub entries: Vec<AccessLogEntry>,
    /// 1-based line numbers that did not parse.
    pub malformed: Vec<usize>,
}

/// Parses a JSON-lines access log, skipping blank lines and collecting the
/// numbers of lines that fail to parse.
pub fn parse_log(reader: impl BufRead) -> Result<LogParse, LinkError> {
    let mut out = LogParse::default();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match AccessLogEntry::from_line(&line) {
            Ok(entry) => out.entries.push(entry),
            Err(_) => out.malformed.push(i + 1),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{Duration, TimeZone, Utc};
    use proptest::prelude::*;

    fn entry(ts: Timestamp) -> AccessLogEntry {
        AccessLogEntry {
            ip: "203.0.113.5".parse().unwrap(),
            port: 51000,
            method: "GET".into(),
            path: "/t/aB3xYz".into(),
            headers: vec![("host".into(), "pay.example.net".into()), ("user-agent".into(), "curl/8".into())],
            received_at: ts,
            token: Some("aB3xYz".into()),
        }
    }

    #[test]
    fn writer_clamps_time() {
        let sink = MemorySink::new();
        let log = AccessLog::new(sink.clone());
        let t = Utc.with_ymd_and_hms(2016, 2, 1, 12, 0, 0).unwrap();
        log.record(entry(t)).unwrap();
        let late = log.record(entry(t - Duration::seconds(5))).unwrap();
        assert_eq!(late.received_at, t);
        assert_eq!(log.written(), 2);
        let parsed = parse_log(sink.lines().join("\n").as_bytes()).unwrap();
        assert_eq!(parsed.entries.len(), 2);
        assert_eq!(parsed.entries[0].header("User-Agent"), Some("curl/8"));
    }

    struct Broken;
    impl LogSink for Broken {
        fn write_line(&mut self, _: &str) -> io::Result<()> {
            Err(io::Error::other("disk full"))
        }
    }

    #[test]
    fn failures_are_counted() {
        let log = AccessLog::new(Broken);
        assert!(log.record(entry(Utc::now())).is_err());
        assert_eq!((log.written(), log.failures()), (0, 1));
    }

    #[test]
    fn malformed_lines_reported() {
        let good = entry(Utc.with_ymd_and_hms(2016, 2, 1, 12, 0, 0).unwrap()).to_line();
        let text = format!("{good}\n{{\"ip\":\n\n{good}\n");
        let parsed = parse_log(text.as_bytes()).unwrap();
        assert_eq!(parsed.entries.len(), 2);
        assert_eq!(parsed.malformed, vec![2]);
    }

    proptest! {
        #[test]
        fn lines_reserialize_identically(
            a in any::<[u8; 4]>(),
            port in any::<u16>(),
            path in "/[ -~]{0,30}",
            headers in prop::collection::vec(("[A-Za-z-]{1,12}", "[ -~]{0,40}"), 0..6),
            ms in 0i64..4_000_000_000_000,
            token in prop::option::of("[a-zA-Z0-9]{6}"),
        ) {
            let e = AccessLogEntry {
                ip: IpAddr::from(a),
                port,
                method: "GET".into(),
                path,
                headers,
                received_at: Utc.timestamp_millis_opt(ms).unwrap(),
                token,
            };
            let line = e.to_line();
            let back = AccessLogEntry::from_line(&line).unwrap();
            prop_assert_eq!(&back, &e);
            prop_assert_eq!(back.to_line(), line);
        }
    }
}
