use std::fmt;
use std::num::NonZeroU16;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::SheetError;

pub const DEFAULT_COLUMN_WIDTH: u32 = 100;
const DEFAULT_FONT_SIZE: u16 = 10;

/// Opaque sheet identifier. Restricted to `[A-Za-z0-9_-]` so it can be used
/// verbatim in file names and message headers.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct SheetId(String);

impl SheetId {
    pub fn new(id: impl Into<String>) -> Result<Self, SheetError> {
        let id = id.into();
        let ok = !id.is_empty()
            && id.len() <= 128
            && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_');
        if ok {
            Ok(SheetId(id))
        } else {
            Err(SheetError::BadSheetId(id))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SheetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for SheetId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        SheetId::new(String::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

/// RGB colour, serialized as `#rrggbb`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rgb(pub u8, pub u8, pub u8);

impl Rgb {
    pub const BLACK: Rgb = Rgb(0, 0, 0);
    pub const WHITE: Rgb = Rgb(0xff, 0xff, 0xff);
}

impl fmt::Display for Rgb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{:02x}{:02x}{:02x}", self.0, self.1, self.2)
    }
}

impl Serialize for Rgb {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rgb {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        let hex = raw
            .strip_prefix('#')
            .filter(|h| h.len() == 6 && h.is_ascii())
            .ok_or_else(|| serde::de::Error::custom(format!("bad colour {raw:?}")))?;
        let channel = |i: usize| {
            u8::from_str_radix(&hex[i..i + 2], 16)
                .map_err(|_| serde::de::Error::custom(format!("bad colour {raw:?}")))
        };
        Ok(Rgb(channel(0)?, channel(2)?, channel(4)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CellFormat {
    pub font_size: NonZeroU16,
    pub text_color: Rgb,
    pub background_color: Rgb,
}

impl CellFormat {
    pub fn new(font_size: u16, text_color: Rgb, background_color: Rgb) -> Option<Self> {
        Some(CellFormat { font_size: NonZeroU16::new(font_size)?, text_color, background_color })
    }
}

impl Default for CellFormat {
    fn default() -> Self {
        CellFormat {
            font_size: NonZeroU16::new(DEFAULT_FONT_SIZE).unwrap(),
            text_color: Rgb::BLACK,
            background_color: Rgb::WHITE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Cell {
    pub value: String,
    pub format: CellFormat,
}

impl Cell {
    pub fn text(value: impl Into<String>) -> Self {
        Cell { value: value.into(), format: CellFormat::default() }
    }

    pub fn styled(value: impl Into<String>, format: CellFormat) -> Self {
        Cell { value: value.into(), format }
    }
}

/// One user edit. Indices are zero-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum EditCommand {
    SetValue { row: usize, col: usize, value: String },
    SetFormat { row: usize, col: usize, format: CellFormat },
    SetColumnWidth { col: usize, width: u32 },
    InsertRow { index: usize },
    DeleteRow { index: usize },
    InsertCol { index: usize },
    DeleteCol { index: usize },
}

/// The decoy document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSheet")]
pub struct HoneySheet {
    sheet_id: SheetId,
    grid: Vec<Vec<Cell>>,
    column_widths: Vec<u32>,
    share_link: String,
}

#[derive(Deserialize)]
struct RawSheet {
    sheet_id: SheetId,
    grid: Vec<Vec<Cell>>,
    column_widths: Vec<u32>,
    share_link: String,
}

impl TryFrom<RawSheet> for HoneySheet {
    type Error = SheetError;

    fn try_from(raw: RawSheet) -> Result<Self, SheetError> {
        HoneySheet::new(raw.sheet_id, raw.grid, raw.column_widths, raw.share_link)
    }
}

pub(crate) fn check_grid(grid: &[Vec<Cell>], widths: &[u32]) -> Result<(), SheetError> {
    if widths.contains(&0) {
        return Err(SheetError::BadWidth);
    }
    for (row, cells) in grid.iter().enumerate() {
        if cells.len() != widths.len() {
            return Err(SheetError::Ragged { row, found: cells.len(), expected: widths.len() });
        }
    }
    Ok(())
}

fn bound(axis: &'static str, index: usize, len: usize) -> Result<(), SheetError> {
    if index < len {
        Ok(())
    } else {
        Err(SheetError::BadIndex { axis, index, len })
    }
}

impl HoneySheet {
    pub fn new(
        sheet_id: SheetId,
        grid: Vec<Vec<Cell>>,
        column_widths: Vec<u32>,
        share_link: impl Into<String>,
    ) -> Result<Self, SheetError> {
        check_grid(&grid, &column_widths)?;
        Ok(HoneySheet { sheet_id, grid, column_widths, share_link: share_link.into() })
    }

    pub fn sheet_id(&self) -> &SheetId {
        &self.sheet_id
    }

    pub fn grid(&self) -> &[Vec<Cell>] {
        &self.grid
    }

    pub fn column_widths(&self) -> &[u32] {
        &self.column_widths
    }

    pub fn share_link(&self) -> &str {
        &self.share_link
    }

    pub fn rows(&self) -> usize {
        self.grid.len()
    }

    pub fn cols(&self) -> usize {
        self.column_widths.len()
    }

    pub fn cell(&self, row: usize, col: usize) -> Option<&Cell> {
        self.grid.get(row)?.get(col)
    }

    pub fn apply_edit(&mut self, command: &EditCommand) -> Result<(), SheetError> {
        let (rows, cols) = (self.rows(), self.cols());
        match command {
            EditCommand::SetValue { row, col, value } => {
                bound("rows", *row, rows)?;
                bound("columns", *col, cols)?;
                self.grid[*row][*col].value = value.clone();
            }
            EditCommand::SetFormat { row, col, format } => {
                bound("rows", *row, rows)?;
                bound("columns", *col, cols)?;
                self.grid[*row][*col].format = *format;
            }
            EditCommand::SetColumnWidth { col, width } => {
                bound("columns", *col, cols)?;
                if *width == 0 {
                    return Err(SheetError::BadWidth);
                }
                self.column_widths[*col] = *width;
            }
            EditCommand::InsertRow { index } => {
                bound("rows", *index, rows + 1)?;
                self.grid.insert(*index, vec![Cell::default(); cols]);
            }
            EditCommand::DeleteRow { index } => {
                bound("rows", *index, rows)?;
                self.grid.remove(*index);
            }
            EditCommand::InsertCol { index } => {
                bound("columns", *index, cols + 1)?;
                for row in &mut self.grid {
                    row.insert(*index, Cell::default());
                }
                self.column_widths.insert(*index, DEFAULT_COLUMN_WIDTH);
            }
            EditCommand::DeleteCol { index } => {
                bound("columns", *index, cols)?;
                for row in &mut self.grid {
                    row.remove(*index);
                }
                self.column_widths.remove(*index);
            }
        }
        Ok(())
    }

    /// Canonical serialized form. Field order is fixed by the type, so equal
    /// sheets always serialize to identical bytes.
    pub fn to_canonical_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("sheet serializes");
        out.push('\n');
        out
    }
}
