//! Headline statistics from the event timeline and the access log.

mod geo;
mod report;

pub use geo::{geolocate, geolocate_batch, GeoTable, UNKNOWN_COUNTRY};
pub use report::{aggregate, export_report, ExperimentBounds, GroundTruth, NamedSection, Report, ReportSection};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error("geo table line {line}: {reason}")]
    BadGeoRow { line: usize, reason: String },
    #[error("bad experiment boundaries: {0}")]
    BadBoundaries(String),
    #[error("export failed: {0}")]
    Export(#[source] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
