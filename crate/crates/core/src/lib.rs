//! Decoy spreadsheet honeytokens.
//!
//! The crate fabricates payroll-style honey spreadsheets seeded with
//! checksum-valid fake IBANs and tracked short links, detects opens and
//! modifications through snapshot diffing, logs link clicks through a
//! redirecting HTTP tracker, schedules themed leak posts, and folds every
//! signal into per-experiment activity reports.
//!
//! Module map:
//!
//! * [`honeygen`]: fake people, IBANs, sort codes and the honey sheet builder.
//! * [`sheetstore`]: sheet model, edits, snapshots, diffs and classification.
//! * [`honeylink`]: token minting, the redirect-and-log server, UA parsing.
//! * [`notify`]: notification messages and the directory mailbox.
//! * [`leak`]: leak themes, post rendering and scheduling.
//! * [`analytics`]: geolocation and report aggregation/export.
//! * [`simharness`]: visitor simulation and replay against the pipeline.
//! * [`cli`]: the `honeysheets` command line.

pub mod analytics;
pub mod cli;
pub mod exec;
pub mod honeygen;
pub mod honeylink;
pub mod leak;
pub mod notify;
pub mod sheetstore;
pub mod simharness;
pub mod time;

pub use exec::Exec;
