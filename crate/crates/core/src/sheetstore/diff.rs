use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::model::{check_grid, Cell, HoneySheet, SheetId, DEFAULT_COLUMN_WIDTH};
use super::SheetError;
use crate::time::{serde_millis, Timestamp};
use crate::Exec;

/// Immutable deep copy of a sheet's grid and widths at one instant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    sheet_id: SheetId,
    #[serde(with = "serde_millis")]
    taken_at: Timestamp,
    grid: Vec<Vec<Cell>>,
    column_widths: Vec<u32>,
}

impl Snapshot {
    pub fn new(
        sheet_id: SheetId,
        taken_at: Timestamp,
        grid: Vec<Vec<Cell>>,
        column_widths: Vec<u32>,
    ) -> Result<Self, SheetError> {
        check_grid(&grid, &column_widths)?;
        Ok(Snapshot { sheet_id, taken_at, grid, column_widths })
    }

    pub fn sheet_id(&self) -> &SheetId {
        &self.sheet_id
    }

    pub fn taken_at(&self) -> Timestamp {
        self.taken_at
    }

    pub fn grid(&self) -> &[Vec<Cell>] {
        &self.grid
    }

    pub fn column_widths(&self) -> &[u32] {
        &self.column_widths
    }
}

pub fn take_snapshot(sheet: &HoneySheet, at: Timestamp) -> Snapshot {
    Snapshot {
        sheet_id: sheet.sheet_id().clone(),
        taken_at: at,
        grid: sheet.grid().to_vec(),
        column_widths: sheet.column_widths().to_vec(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellChange {
    pub row: usize,
    pub col: usize,
    pub old: Cell,
    pub new: Cell,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StructuralKind {
    RowInserted,
    RowDeleted,
    ColInserted,
    ColDeleted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuralChange {
    pub kind: StructuralKind,
    pub index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutChange {
    pub col: usize,
    pub old_width: u32,
    pub new_width: u32,
}

/// Difference between two snapshots of the same sheet.
///
/// Applying it to the older grid means: structural changes in list order,
/// then cell changes, then width changes.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ChangeSet {
    pub cell_changes: Vec<CellChange>,
    pub structural_changes: Vec<StructuralChange>,
    pub layout_changes: Vec<LayoutChange>,
}

impl ChangeSet {
    pub fn is_empty(&self) -> bool {
        self.cell_changes.is_empty()
            && self.structural_changes.is_empty()
            && self.layout_changes.is_empty()
    }

    /// Compact canonical JSON, the form used in notification bodies.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string(self).expect("change set serializes")
    }

    /// Hex SHA-256 of the canonical JSON.
    pub fn content_hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_canonical_json().as_bytes()))
    }

    /// Replays this change set on top of `grid`/`widths`, checking that every
    /// recorded old value matches what is there.
    pub fn apply(
        &self,
        grid: &[Vec<Cell>],
        widths: &[u32],
    ) -> Result<(Vec<Vec<Cell>>, Vec<u32>), SheetError> {
        check_grid(grid, widths)?;
        let mut grid = grid.to_vec();
        let mut widths = widths.to_vec();
        for change in &self.structural_changes {
            let (rows, cols) = (grid.len(), widths.len());
            let idx = change.index;
            let oob = |axis, len| SheetError::BadIndex { axis, index: idx, len };
            match change.kind {
                StructuralKind::RowInserted if idx <= rows => {
                    grid.insert(idx, vec![Cell::default(); cols])
                }
                StructuralKind::RowDeleted if idx < rows => {
                    grid.remove(idx);
                }
                StructuralKind::ColInserted if idx <= cols => {
                    grid.iter_mut().for_each(|r| r.insert(idx, Cell::default()));
                    widths.insert(idx, DEFAULT_COLUMN_WIDTH);
                }
                StructuralKind::ColDeleted if idx < cols => {
                    grid.iter_mut().for_each(|r| {
                        r.remove(idx);
                    });
                    widths.remove(idx);
                }
                StructuralKind::RowInserted => return Err(oob("rows", rows + 1)),
                StructuralKind::RowDeleted => return Err(oob("rows", rows)),
                StructuralKind::ColInserted => return Err(oob("columns", cols + 1)),
                StructuralKind::ColDeleted => return Err(oob("columns", cols)),
            }
        }
        for change in &self.cell_changes {
            let slot = grid
                .get_mut(change.row)
                .and_then(|r| r.get_mut(change.col))
                .ok_or_else(|| {
                    SheetError::Conflict(format!("no cell at ({}, {})", change.row, change.col))
                })?;
            if *slot != change.old {
                return Err(SheetError::Conflict(format!(
                    "cell ({}, {}) does not hold the recorded old value",
                    change.row, change.col
                )));
            }
            *slot = change.new.clone();
        }
        for change in &self.layout_changes {
            let slot = widths.get_mut(change.col).ok_or_else(|| {
                SheetError::Conflict(format!("no column {}", change.col))
            })?;
            if *slot != change.old_width {
                return Err(SheetError::Conflict(format!(
                    "column {} width is {}, expected {}",
                    change.col, slot, change.old_width
                )));
            }
            if change.new_width == 0 {
                return Err(SheetError::BadWidth);
            }
            *slot = change.new_width;
        }
        Ok((grid, widths))
    }
}

/// Compares two snapshots of one sheet.
///
/// When dimensions differ the grids are aligned on their common index
/// prefix: surplus rows/columns are reported as inserted or deleted at the
/// tail, and cells of inserted rows/columns are compared against empty
/// default cells.
pub fn diff(before: &Snapshot, after: &Snapshot) -> Result<ChangeSet, SheetError> {
    if before.sheet_id != after.sheet_id {
        return Err(SheetError::SheetMismatch(before.sheet_id.clone(), after.sheet_id.clone()));
    }
    let (r1, c1) = (before.grid.len(), before.column_widths.len());
    let (r2, c2) = (after.grid.len(), after.column_widths.len());

    let mut structural = Vec::new();
    if r2 > r1 {
        structural.extend((r1..r2).map(|index| StructuralChange { kind: StructuralKind::RowInserted, index }));
    } else {
        structural.extend((r2..r1).rev().map(|index| StructuralChange { kind: StructuralKind::RowDeleted, index }));
    }
    if c2 > c1 {
        structural.extend((c1..c2).map(|index| StructuralChange { kind: StructuralKind::ColInserted, index }));
    } else {
        structural.extend((c2..c1).rev().map(|index| StructuralChange { kind: StructuralKind::ColDeleted, index }));
    }

    let blank = Cell::default();
    let mut cells = Vec::new();
    for (row, new_row) in after.grid.iter().enumerate() {
        for (col, new) in new_row.iter().enumerate() {
            let old = before.grid.get(row).and_then(|r| r.get(col)).unwrap_or(&blank);
            if old != new {
                cells.push(CellChange { row, col, old: old.clone(), new: new.clone() });
            }
        }
    }

    let layout = after
        .column_widths
        .iter()
        .enumerate()
        .filter_map(|(col, &new_width)| {
            let old_width = before.column_widths.get(col).copied().unwrap_or(DEFAULT_COLUMN_WIDTH);
            (old_width != new_width).then_some(LayoutChange { col, old_width, new_width })
        })
        .collect();

    Ok(ChangeSet { cell_changes: cells, structural_changes: structural, layout_changes: layout })
}

/// Diffs many snapshot pairs, in parallel when `exec` allows.
pub fn diff_batch(pairs: &[(Snapshot, Snapshot)], exec: Exec) -> Vec<Result<ChangeSet, SheetError>> {
    exec.map(pairs, |(a, b)| diff(a, b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModificationClass {
    Content,
    FormattingOnly,
    LayoutOnly,
    Structural,
    Mixed,
}

impl ModificationClass {
    pub const ALL: [ModificationClass; 5] = [
        ModificationClass::Content,
        ModificationClass::FormattingOnly,
        ModificationClass::LayoutOnly,
        ModificationClass::Structural,
        ModificationClass::Mixed,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModificationClass::Content => "content",
            ModificationClass::FormattingOnly => "formatting_only",
            ModificationClass::LayoutOnly => "layout_only",
            ModificationClass::Structural => "structural",
            ModificationClass::Mixed => "mixed",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.as_str() == s)
    }
}

impl fmt::Display for ModificationClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Assigns exactly one class to a non-empty change set.
///
/// A cell change counts towards `content` when its value differs and towards
/// `formatting_only` when its format differs; a single cell doing both already
/// makes the set `mixed`. Cell changes that alter nothing are ignored.
pub fn classify(changes: &ChangeSet) -> Result<ModificationClass, SheetError> {
    let values = changes.cell_changes.iter().any(|c| c.old.value != c.new.value);
    let formats = changes.cell_changes.iter().any(|c| c.old.format != c.new.format);
    let structure = !changes.structural_changes.is_empty();
    let layout = !changes.layout_changes.is_empty();

    match (values, formats, structure, layout) {
        (false, false, false, false) => Err(SheetError::EmptyChangeSet),
        (true, false, false, false) => Ok(ModificationClass::Content),
        (false, true, false, false) => Ok(ModificationClass::FormattingOnly),
        (false, false, true, false) => Ok(ModificationClass::Structural),
        (false, false, false, true) => Ok(ModificationClass::LayoutOnly),
        _ => Ok(ModificationClass::Mixed),
    }
}
