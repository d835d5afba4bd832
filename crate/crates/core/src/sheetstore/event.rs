use std::fmt;

use chrono::Duration;
use serde::{Deserialize, Serialize};

use super::diff::{classify, diff, take_snapshot, ChangeSet, ModificationClass, Snapshot};
use super::model::{EditCommand, HoneySheet, SheetId};
use super::SheetError;
use crate::time::{serde_millis, Timestamp};

pub const DEFAULT_SNAPSHOT_CADENCE_HOURS: i64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Open,
    Modification,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Open => "open",
            EventKind::Modification => "modification",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "open" => Some(EventKind::Open),
            "modification" => Some(EventKind::Modification),
            _ => None,
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An observed open or modification of one sheet.
///
/// Modification events always carry their non-empty change set and the
/// class derived from it; open events carry neither.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawEvent")]
pub struct SheetEvent {
    sheet_id: SheetId,
    kind: EventKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    modification_class: Option<ModificationClass>,
    #[serde(with = "serde_millis")]
    occurred_at: Timestamp,
    #[serde(skip_serializing_if = "Option::is_none")]
    changeset: Option<ChangeSet>,
}

#[derive(Deserialize)]
struct RawEvent {
    sheet_id: SheetId,
    kind: EventKind,
    #[serde(default)]
    modification_class: Option<ModificationClass>,
    #[serde(with = "serde_millis")]
    occurred_at: Timestamp,
    #[serde(default)]
    changeset: Option<ChangeSet>,
}

impl TryFrom<RawEvent> for SheetEvent {
    type Error = SheetError;

    fn try_from(raw: RawEvent) -> Result<Self, SheetError> {
        SheetEvent::from_parts(raw.sheet_id, raw.kind, raw.modification_class, raw.occurred_at, raw.changeset)
    }
}

impl SheetEvent {
    pub fn open(sheet_id: SheetId, at: Timestamp) -> Self {
        SheetEvent {
            sheet_id,
            kind: EventKind::Open,
            modification_class: None,
            occurred_at: crate::time::millis(at),
            changeset: None,
        }
    }

    pub fn modification(sheet_id: SheetId, at: Timestamp, changeset: ChangeSet) -> Result<Self, SheetError> {
        let class = classify(&changeset)?;
        Ok(SheetEvent {
            sheet_id,
            kind: EventKind::Modification,
            modification_class: Some(class),
            occurred_at: crate::time::millis(at),
            changeset: Some(changeset),
        })
    }

    /// Rebuilds an event from its serialized parts. A stated class must agree
    /// with the change set.
    pub fn from_parts(
        sheet_id: SheetId,
        kind: EventKind,
        class: Option<ModificationClass>,
        at: Timestamp,
        changeset: Option<ChangeSet>,
    ) -> Result<Self, SheetError> {
        match (kind, changeset) {
            (EventKind::Open, None) if class.is_none() => Ok(SheetEvent::open(sheet_id, at)),
            (EventKind::Open, _) => Err(SheetError::Conflict("open event with modification data".into())),
            (EventKind::Modification, None) => Err(SheetError::EmptyChangeSet),
            (EventKind::Modification, Some(cs)) => {
                let event = SheetEvent::modification(sheet_id, at, cs)?;
                match class {
                    Some(c) if Some(c) != event.modification_class => Err(SheetError::Conflict(format!(
                        "stated class {c} disagrees with change set"
                    ))),
                    _ => Ok(event),
                }
            }
        }
    }

    pub fn sheet_id(&self) -> &SheetId {
        &self.sheet_id
    }

    pub fn kind(&self) -> EventKind {
        self.kind
    }

    pub fn modification_class(&self) -> Option<ModificationClass> {
        self.modification_class
    }

    pub fn occurred_at(&self) -> Timestamp {
        self.occurred_at
    }

    pub fn changeset(&self) -> Option<&ChangeSet> {
        self.changeset.as_ref()
    }
}

/// Stand-in for the document host's triggers: owns one sheet, remembers the
/// last snapshot and turns edits into modification events.
#[derive(Debug, Clone)]
pub struct SheetMonitor {
    sheet: HoneySheet,
    last: Snapshot,
    cadence: Duration,
}

impl SheetMonitor {
    pub fn new(sheet: HoneySheet, at: Timestamp) -> Self {
        let last = take_snapshot(&sheet, at);
        SheetMonitor { sheet, last, cadence: Duration::hours(DEFAULT_SNAPSHOT_CADENCE_HOURS) }
    }

    pub fn with_cadence(mut self, cadence: Duration) -> Self {
        self.cadence = cadence;
        self
    }

    pub fn sheet(&self) -> &HoneySheet {
        &self.sheet
    }

    pub fn into_sheet(self) -> HoneySheet {
        self.sheet
    }

    pub fn last_snapshot(&self) -> &Snapshot {
        &self.last
    }

    pub fn record_open(&self, at: Timestamp) -> SheetEvent {
        SheetEvent::open(self.sheet.sheet_id().clone(), at)
    }

    /// Applies edits without snapshotting; the next [`poll`](Self::poll)
    /// picks them up.
    pub fn edit(&mut self, command: &EditCommand) -> Result<(), SheetError> {
        self.sheet.apply_edit(command)
    }

    /// True once a full cadence interval has passed since the last snapshot.
    pub fn due(&self, at: Timestamp) -> bool {
        at - self.last.taken_at() >= self.cadence
    }

    /// Snapshots the sheet and reports what changed since the last snapshot.
    pub fn poll(&mut self, at: Timestamp) -> Option<SheetEvent> {
        let now = take_snapshot(&self.sheet, at);
        let changes = diff(&self.last, &now).expect("monitor snapshots share a sheet id");
        self.last = now;
        if changes.is_empty() {
            None
        } else {
            Some(SheetEvent::modification(self.sheet.sheet_id().clone(), at, changes).expect("non-empty"))
        }
    }

    /// Applies one editing session atomically and reports it as a single
    /// modification event. Nothing changes if any command is rejected.
    pub fn apply(&mut self, edits: &[EditCommand], at: Timestamp) -> Result<Option<SheetEvent>, SheetError> {
        let mut next = self.sheet.clone();
        for command in edits {
            next.apply_edit(command)?;
        }
        self.sheet = next;
        Ok(self.poll(at))
    }
}
