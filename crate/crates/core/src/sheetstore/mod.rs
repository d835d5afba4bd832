//! Spreadsheet document model, snapshots, diffs and event classification.
//!
//! A [`HoneySheet`] is a rectangular grid of [`Cell`]s plus per-column
//! widths. Edits go through [`HoneySheet::apply_edit`]; changes are detected
//! by diffing two [`Snapshot`]s into a [`ChangeSet`] and classifying it.

mod diff;
mod event;
mod model;

pub use diff::{
    classify, diff, diff_batch, take_snapshot, CellChange, ChangeSet, LayoutChange,
    ModificationClass, Snapshot, StructuralChange, StructuralKind,
};
pub use event::{EventKind, SheetEvent, SheetMonitor, DEFAULT_SNAPSHOT_CADENCE_HOURS};
pub use model::{Cell, CellFormat, EditCommand, HoneySheet, Rgb, SheetId, DEFAULT_COLUMN_WIDTH};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SheetError {
    #[error("index {index} out of bounds for {axis} of length {len}")]
    BadIndex { axis: &'static str, index: usize, len: usize },
    #[error("column width must be positive")]
    BadWidth,
    #[error("ragged grid: row {row} has {found} cells, expected {expected}")]
    Ragged { row: usize, found: usize, expected: usize },
    #[error("snapshots belong to different sheets ({0} vs {1})")]
    SheetMismatch(SheetId, SheetId),
    #[error("change set is empty")]
    EmptyChangeSet,
    #[error("change set does not match the grid it is applied to: {0}")]
    Conflict(String),
    #[error("invalid sheet id {0:?}")]
    BadSheetId(String),
}
