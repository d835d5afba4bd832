//! Event notifications as email-style messages in a directory mailbox.
//!
//! Each [`SheetEvent`] becomes one file: `Header: value` lines, a blank
//! line, then the change set as compact JSON (empty for opens). Ingestion
//! parses every `*.msg` file back into an [`EventTimeline`] and moves
//! anything unparseable into `bad/`.

use std::collections::BTreeSet;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sheetstore::{ChangeSet, EventKind, ModificationClass, SheetEvent, SheetId};
use crate::time::{self, Timestamp};

pub const QUARANTINE_DIR: &str = "bad";
const TMP_DIR: &str = ".tmp";
const EXTENSION: &str = "msg";

#[derive(Debug, Error)]
pub enum NotifyError {
    #[error("mailbox {path}: {source}")]
    Mailbox { path: PathBuf, source: io::Error },
    #[error("malformed notification: {0}")]
    Malformed(String),
}

fn mailbox_err(path: &Path) -> impl FnOnce(io::Error) -> NotifyError + '_ {
    move |source| NotifyError::Mailbox { path: path.to_path_buf(), source }
}

fn malformed(msg: impl Into<String>) -> NotifyError {
    NotifyError::Malformed(msg.into())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Notification {
    pub sheet_id: SheetId,
    pub event_type: EventKind,
    pub occurred_at: Timestamp,
    pub modification_class: Option<ModificationClass>,
    /// When the snapshot that revealed a modification was taken, if known.
    pub snapshot_at: Option<Timestamp>,
    /// Serialized change set; empty for open events.
    pub body: String,
}

impl Notification {
    pub fn from_event(event: &SheetEvent, snapshot_at: Option<Timestamp>) -> Self {
        Notification {
            sheet_id: event.sheet_id().clone(),
            event_type: event.kind(),
            occurred_at: event.occurred_at(),
            modification_class: event.modification_class(),
            snapshot_at: snapshot_at.map(time::millis),
            body: event.changeset().map(ChangeSet::to_canonical_json).unwrap_or_default(),
        }
    }

    pub fn render(&self) -> String {
        let mut out = format!(
            "Sheet-ID: {}\nEvent-Type: {}\nOccurred-At: {}\n",
            self.sheet_id,
            self.event_type,
            time::format(&self.occurred_at)
        );
        if let Some(class) = self.modification_class {
            out.push_str(&format!("Modification-Class: {class}\n"));
        }
        if let Some(at) = &self.snapshot_at {
            out.push_str(&format!("Snapshot-At: {}\n", time::format(at)));
        }
        out.push('\n');
        if !self.body.is_empty() {
            out.push_str(&self.body);
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, NotifyError> {
        let text = text.replace("\r\n", "\n");
        let (head, body) = text.split_once("\n\n").ok_or_else(|| malformed("no header/body separator"))?;
        let (mut sheet_id, mut event_type, mut occurred_at, mut class, mut snapshot_at) = (None, None, None, None, None);
        for line in head.lines() {
            let (name, value) = line.split_once(':').ok_or_else(|| malformed(format!("bad header line {line:?}")))?;
            let value = value.trim();
            let bad_time = |e: chrono::ParseError| malformed(format!("{name}: {e}"));
            match name.trim().to_ascii_lowercase().as_str() {
                "sheet-id" => sheet_id = Some(SheetId::new(value).map_err(|e| malformed(e.to_string()))?),
                "event-type" => {
                    event_type = Some(EventKind::parse(value).ok_or_else(|| malformed(format!("event type {value:?}")))?)
                }
                "occurred-at" => occurred_at = Some(time::parse(value).map_err(bad_time)?),
                "modification-class" => {
                    class = Some(
                        ModificationClass::parse(value).ok_or_else(|| malformed(format!("class {value:?}")))?,
                    )
                }
                "snapshot-at" => snapshot_at = Some(time::parse(value).map_err(bad_time)?),
                _ => {}
            }
        }
        Ok(Notification {
            sheet_id: sheet_id.ok_or_else(|| malformed("missing Sheet-ID"))?,
            event_type: event_type.ok_or_else(|| malformed("missing Event-Type"))?,
            occurred_at: occurred_at.ok_or_else(|| malformed("missing Occurred-At"))?,
            modification_class: class,
            snapshot_at,
            body: body.trim_end_matches('\n').to_string(),
        })
    }

    pub fn to_event(&self) -> Result<SheetEvent, NotifyError> {
        let changeset = if self.body.trim().is_empty() {
            None
        } else {
            Some(serde_json::from_str::<ChangeSet>(&self.body).map_err(|e| malformed(format!("body: {e}")))?)
        };
        SheetEvent::from_parts(
            self.sheet_id.clone(),
            self.event_type,
            self.modification_class,
            self.occurred_at,
            changeset,
        )
        .map_err(|e| malformed(e.to_string()))
    }
}

/// Parses one message straight into its event.
pub fn parse_notification(text: &str) -> Result<SheetEvent, NotifyError> {
    Notification::parse(text)?.to_event()
}

/// Directory mailbox, one message per file.
#[derive(Debug, Clone)]
pub struct Mailbox {
    dir: PathBuf,
}

impl Mailbox {
    /// Opens (creating if needed) the mailbox directory.
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, NotifyError> {
        let dir = dir.into();
        fs::create_dir_all(dir.join(TMP_DIR)).map_err(mailbox_err(&dir))?;
        Ok(Mailbox { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Writes the message under `.tmp/` and links it into place, so readers
    /// never see a partial file. Returns the file name.
    pub fn deliver(&self, notification: &Notification) -> Result<String, NotifyError> {
        let text = notification.render();
        let stamp = notification.occurred_at.format("%Y%m%dT%H%M%S%.3fZ");
        loop {
            let name = format!("{stamp}-{:08x}.{EXTENSION}", rand::random::<u32>());
            let tmp = self.dir.join(TMP_DIR).join(&name);
            let dest = self.dir.join(&name);
            fs::write(&tmp, &text).map_err(mailbox_err(&tmp))?;
            let linked = fs::hard_link(&tmp, &dest);
            let _ = fs::remove_file(&tmp);
            match linked {
                Ok(()) => return Ok(name),
                Err(e) if e.kind() == io::ErrorKind::AlreadyExists => continue,
                Err(e) => return Err(NotifyError::Mailbox { path: dest, source: e }),
            }
        }
    }

    pub fn emit(&self, event: &SheetEvent) -> Result<String, NotifyError> {
        self.deliver(&Notification::from_event(event, None))
    }

    /// Paths of all deliverable messages, in directory order.
    pub fn message_paths(&self) -> Result<Vec<PathBuf>, NotifyError> {
        let mut out = Vec::new();
        for entry in fs::read_dir(&self.dir).map_err(mailbox_err(&self.dir))? {
            let path = entry.map_err(mailbox_err(&self.dir))?.path();
            if path.is_file() && path.extension().is_some_and(|e| e == EXTENSION) {
                out.push(path);
            }
        }
        Ok(out)
    }

    /// Parses the given messages. Unparseable ones are moved to `bad/`.
    pub fn ingest_paths(&self, paths: &[PathBuf]) -> Result<Ingested, NotifyError> {
        let mut events = Vec::with_capacity(paths.len());
        let mut quarantined = 0;
        for path in paths {
            let parsed = fs::read(path)
                .map_err(mailbox_err(path))
                .and_then(|bytes| String::from_utf8(bytes).map_err(|_| malformed("not UTF-8")))
                .and_then(|text| parse_notification(&text));
            match parsed {
                Ok(event) => events.push(event),
                Err(NotifyError::Mailbox { source, .. }) if source.kind() == io::ErrorKind::NotFound => {}
                Err(_) => {
                    self.quarantine(path)?;
                    quarantined += 1;
                }
            }
        }
        let total = events.len();
        let timeline = EventTimeline::from_events(events);
        Ok(Ingested { duplicates: total - timeline.len(), timeline, quarantined })
    }

    pub fn ingest(&self) -> Result<Ingested, NotifyError> {
        self.ingest_paths(&self.message_paths()?)
    }

    fn quarantine(&self, path: &Path) -> Result<(), NotifyError> {
        let bad = self.dir.join(QUARANTINE_DIR);
        fs::create_dir_all(&bad).map_err(mailbox_err(&bad))?;
        let name = path.file_name().expect("message paths have names").to_string_lossy().into_owned();
        let mut dest = bad.join(&name);
        let mut n = 1;
        while dest.exists() {
            dest = bad.join(format!("{name}.{n}"));
            n += 1;
        }
        fs::rename(path, &dest).map_err(mailbox_err(path))
    }
}

/// Writes `event` into the mailbox at `mailbox_dir`, returning the file name.
pub fn emit_notification(event: &SheetEvent, mailbox_dir: &Path) -> Result<String, NotifyError> {
    Mailbox::open(mailbox_dir)?.emit(event)
}

/// Reads every message in `mailbox_dir` into a timeline.
pub fn ingest_mailbox(mailbox_dir: &Path) -> Result<Ingested, NotifyError> {
    Mailbox::open(mailbox_dir)?.ingest()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ingested {
    pub timeline: EventTimeline,
    pub quarantined: usize,
    /// Messages dropped because an identical event was already present.
    pub duplicates: usize,
}

/// Events ordered by time, then sheet id, then kind (opens first), with
/// exact duplicates removed.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(from = "RawTimeline")]
pub struct EventTimeline {
    events: Vec<SheetEvent>,
}

#[derive(Deserialize)]
struct RawTimeline {
    events: Vec<SheetEvent>,
}

impl From<RawTimeline> for EventTimeline {
    fn from(raw: RawTimeline) -> Self {
        EventTimeline::from_events(raw.events)
    }
}

type EventKey = (Timestamp, SheetId, EventKind, String);

fn key(event: &SheetEvent) -> EventKey {
    (
        event.occurred_at(),
        event.sheet_id().clone(),
        event.kind(),
        event.changeset().map(ChangeSet::content_hash).unwrap_or_default(),
    )
}

impl EventTimeline {
    pub fn from_events(events: impl IntoIterator<Item = SheetEvent>) -> Self {
        let mut keyed: Vec<(EventKey, SheetEvent)> = events.into_iter().map(|e| (key(&e), e)).collect();
        keyed.sort_by(|a, b| a.0.cmp(&b.0));
        let mut seen = BTreeSet::new();
        let events = keyed.into_iter().filter(|(k, _)| seen.insert(k.clone())).map(|(_, e)| e).collect();
        EventTimeline { events }
    }

    pub fn events(&self) -> &[SheetEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn count(&self, kind: EventKind) -> usize {
        self.events.iter().filter(|e| e.kind() == kind).count()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("timeline serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sheetstore::{CellChange, Cell};
    use chrono::{Duration, TimeZone, Utc};

    fn t0() -> Timestamp {
        Utc.with_ymd_and_hms(2016, 1, 23, 9, 0, 0).unwrap()
    }

    fn sid() -> SheetId {
        SheetId::new("hs-1").unwrap()
    }

    fn deletion() -> ChangeSet {
        ChangeSet {
            cell_changes: vec![CellChange {
                row: 3,
                col: 2,
                old: Cell::text("GB82WEST12345698765432"),
                new: Cell::text(""),
            }],
            ..Default::default()
        }
    }

    #[test]
    fn open_message_shape() {
        let dir = tempfile::tempdir().unwrap();
        let name = emit_notification(&SheetEvent::open(sid(), t0()), dir.path()).unwrap();
        assert!(name.starts_with("20160123T090000.000Z-") && name.ends_with(".msg"), "{name}");
        let text = fs::read_to_string(dir.path().join(&name)).unwrap();
        assert!(text.contains("Event-Type: open\n"));
        assert!(text.ends_with("\n\n"));
        assert_eq!(Notification::parse(&text).unwrap().body, "");
    }

    #[test]
    fn modification_body_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let event = SheetEvent::modification(sid(), t0(), deletion()).unwrap();
        let name = emit_notification(&event, dir.path()).unwrap();
        let text = fs::read_to_string(dir.path().join(name)).unwrap();
        assert!(text.contains("Modification-Class: content\n"));
        let back = parse_notification(&text).unwrap();
        assert_eq!(back.changeset(), Some(&deletion()));
        assert_eq!(back, event);
    }

    #[test]
    fn distinct_events_distinct_files() {
        let dir = tempfile::tempdir().unwrap();
        let a = emit_notification(&SheetEvent::open(sid(), t0()), dir.path()).unwrap();
        let b = emit_notification(&SheetEvent::open(sid(), t0() + Duration::seconds(1)), dir.path()).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn empty_mailbox() {
        let dir = tempfile::tempdir().unwrap();
        let got = ingest_mailbox(dir.path()).unwrap();
        assert!(got.timeline.is_empty());
        assert_eq!(got.quarantined, 0);
    }

    #[test]
    fn truncated_message_is_quarantined() {
        let dir = tempfile::tempdir().unwrap();
        let mb = Mailbox::open(dir.path()).unwrap();
        for i in 0..9 {
            mb.emit(&SheetEvent::open(sid(), t0() + Duration::minutes(i))).unwrap();
        }
        let name = mb.emit(&SheetEvent::modification(sid(), t0(), deletion()).unwrap()).unwrap();
        let path = dir.path().join(&name);
        let text = fs::read_to_string(&path).unwrap();
        fs::write(&path, &text[..text.len() - 20]).unwrap();

        let got = mb.ingest().unwrap();
        assert_eq!((got.timeline.len(), got.quarantined), (9, 1));
        assert!(dir.path().join(QUARANTINE_DIR).join(&name).exists());
        let again = mb.ingest().unwrap();
        assert_eq!(again.timeline, got.timeline);
        assert_eq!(again.quarantined, 0);
    }

    #[test]
    fn header_problems_rejected() {
        for text in [
            "",
            "Sheet-ID: a\nEvent-Type: open\n",
            "Sheet-ID: a\nEvent-Type: opened\nOccurred-At: 2016-01-23T09:00:00.000Z\n\n",
            "Event-Type: open\nOccurred-At: 2016-01-23T09:00:00.000Z\n\n",
            "Sheet-ID: a\nEvent-Type: modification\nOccurred-At: 2016-01-23T09:00:00.000Z\n\n",
            "Sheet-ID: a\nEvent-Type: open\nOccurred-At: yesterday\n\n",
        ] {
            assert!(parse_notification(text).is_err(), "{text:?}");
        }
        let crlf = "Sheet-ID: a\r\nEvent-Type: open\r\nOccurred-At: 2016-01-23T09:00:00.000Z\r\n\r\n";
        assert_eq!(parse_notification(crlf).unwrap().kind(), EventKind::Open);
    }

    #[test]
    fn stated_class_must_match_body() {
        let event = SheetEvent::modification(sid(), t0(), deletion()).unwrap();
        let text = Notification::from_event(&event, None).render().replace("Class: content", "Class: mixed");
        assert!(parse_notification(&text).is_err());
    }

    #[test]
    fn timeline_order_and_dedupe() {
        let open = SheetEvent::open(sid(), t0());
        let other_sheet = SheetEvent::open(SheetId::new("hs-0").unwrap(), t0());
        let modif = SheetEvent::modification(sid(), t0(), deletion()).unwrap();
        let tl = EventTimeline::from_events(vec![modif.clone(), open.clone(), other_sheet.clone(), open.clone()]);
        assert_eq!(tl.events(), &[other_sheet, open, modif]);
        let json = tl.to_json();
        assert_eq!(serde_json::from_str::<EventTimeline>(&json).unwrap(), tl);
    }
}
