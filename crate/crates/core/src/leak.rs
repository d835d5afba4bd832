//! Themed leak posts and their schedule.
//!
//! Publishing goes through a [`LeakSink`]; the bundled [`FileSink`] just
//! writes each post to disk.

use std::fmt;
use std::fs;
use std::path::PathBuf;
use std::str::FromStr;

use chrono::{Duration, NaiveDate, TimeZone, Utc};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sheetstore::{HoneySheet, SheetId};
use crate::time::{serde_millis, Timestamp};

const PLACEHOLDER: &str = "{link}";
/// First post of the day; further posts are spread evenly over 24 hours.
const FIRST_POST_HOUR: i64 = 9;

#[derive(Debug, Error)]
pub enum LeakError {
    #[error("template {0:?} must contain {{link}} exactly once")]
    BadTemplate(String),
    #[error("theme has no templates")]
    NoTemplates,
    #[error("unknown theme {0:?}")]
    UnknownTheme(String),
    #[error("nothing to leak: no sheets given")]
    NoSheets,
    #[error("sink: {0}")]
    Sink(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThemeName {
    /// Bragging criminal.
    Hacker,
    /// Owner accidentally sharing with a colleague.
    Naive,
}

impl fmt::Display for ThemeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ThemeName::Hacker => "hacker",
            ThemeName::Naive => "naive",
        })
    }
}

impl FromStr for ThemeName {
    type Err = LeakError;

    fn from_str(s: &str) -> Result<Self, LeakError> {
        match s {
            "hacker" => Ok(ThemeName::Hacker),
            "naive" => Ok(ThemeName::Naive),
            other => Err(LeakError::UnknownTheme(other.to_string())),
        }
    }
}

const HACKER_TEMPLATES: &[&str] = &[
    "leaked corporate payments {link}",
    "st0len payrolls {link}",
    "corp payroll dump, IBANs + sort codes inside {link}",
    "fresh leak: company payroll with bank details {link}",
    "got into their finance drive lol. payments sheet here {link}",
    "more st0len payroll data, enjoy {link}",
];

const NAIVE_TEMPLATES: &[&str] = &[
    "Bob, here is the spreadsheet with payrolls for September {link}",
    "Hi Bob, as discussed, this month's payroll sheet: {link}",
    "Bob, updated payments spreadsheet, please check the bank details before Friday {link}",
    "Here is the payroll file for the team, let me know if anything looks off {link}",
    "Bob, can you double check the transfer links in this one? {link}",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Theme {
    name: ThemeName,
    templates: Vec<String>,
}

impl Theme {
    pub fn new(name: ThemeName, templates: Vec<String>) -> Result<Self, LeakError> {
        if templates.is_empty() {
            return Err(LeakError::NoTemplates);
        }
        if let Some(bad) = templates.iter().find(|t| t.matches(PLACEHOLDER).count() != 1) {
            return Err(LeakError::BadTemplate(bad.clone()));
        }
        Ok(Theme { name, templates })
    }

    pub fn builtin(name: ThemeName) -> Self {
        let templates = match name {
            ThemeName::Hacker => HACKER_TEMPLATES,
            ThemeName::Naive => NAIVE_TEMPLATES,
        };
        Theme::new(name, templates.iter().map(|t| t.to_string()).collect()).expect("builtin templates are valid")
    }

    pub fn name(&self) -> ThemeName {
        self.name
    }

    pub fn templates(&self) -> &[String] {
        &self.templates
    }
}

/// Picks one template with `rng` and fills in the link.
pub fn render_post<R: Rng + ?Sized>(theme: &Theme, share_link: &str, rng: &mut R) -> String {
    let template = match theme.templates.as_slice() {
        [only] => only,
        many => &many[rng.random_range(0..many.len())],
    };
    template.replacen(PLACEHOLDER, share_link, 1)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeakPost {
    pub theme: ThemeName,
    pub rendered_text: String,
    pub sheet_id: SheetId,
    #[serde(with = "serde_millis")]
    pub scheduled_at: Timestamp,
}

/// What a leak run needs to know about each sheet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SheetRef {
    pub sheet_id: SheetId,
    pub share_link: String,
}

impl From<&HoneySheet> for SheetRef {
    fn from(sheet: &HoneySheet) -> Self {
        SheetRef { sheet_id: sheet.sheet_id().clone(), share_link: sheet.share_link().to_string() }
    }
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub theme: Theme,
    pub start_date: NaiveDate,
    pub days: u32,
    pub posts_per_day: u32,
}

/// Offset of post `k` of `n` from midnight UTC. For two posts a day this is
/// 09:00 and 21:00.
fn intra_day_offset(k: u32, n: u32) -> Duration {
    Duration::hours(FIRST_POST_HOUR) + Duration::seconds(i64::from(k) * (86_400 / i64::from(n)))
}

/// Lays out `days × posts_per_day` posts, assigning sheets round-robin.
/// Output is sorted by `scheduled_at`.
pub fn schedule<R: Rng + ?Sized>(
    experiment: &Experiment,
    sheets: &[SheetRef],
    rng: &mut R,
) -> Result<Vec<LeakPost>, LeakError> {
    let total = experiment.days as usize * experiment.posts_per_day as usize;
    if total == 0 {
        return Ok(Vec::new());
    }
    if sheets.is_empty() {
        return Err(LeakError::NoSheets);
    }
    let midnight = Utc.from_utc_datetime(&experiment.start_date.and_hms_opt(0, 0, 0).expect("midnight"));
    let mut posts = Vec::with_capacity(total);
    for day in 0..experiment.days {
        for k in 0..experiment.posts_per_day {
            let sheet = &sheets[posts.len() % sheets.len()];
            posts.push(LeakPost {
                theme: experiment.theme.name,
                rendered_text: render_post(&experiment.theme, &sheet.share_link, rng),
                sheet_id: sheet.sheet_id.clone(),
                scheduled_at: midnight + Duration::days(i64::from(day)) + intra_day_offset(k, experiment.posts_per_day),
            });
        }
    }
    Ok(posts)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Receipt {
    pub id: String,
    pub location: String,
}

pub trait LeakSink {
    fn post(&mut self, post: &LeakPost) -> Result<Receipt, LeakError>;
}

/// Writes each post to `<dir>/<scheduled>-<sheet>.txt`.
pub struct FileSink {
    dir: PathBuf,
}

impl FileSink {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self, LeakError> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(FileSink { dir })
    }
}

impl LeakSink for FileSink {
    fn post(&mut self, post: &LeakPost) -> Result<Receipt, LeakError> {
        let id = format!("{}-{}", post.scheduled_at.format("%Y%m%dT%H%M%SZ"), post.sheet_id);
        let path = self.dir.join(format!("{id}.txt"));
        fs::write(&path, format!("{}\n", post.rendered_text))?;
        Ok(Receipt { id, location: path.display().to_string() })
    }
}
