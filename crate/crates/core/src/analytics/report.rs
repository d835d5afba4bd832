use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::net::IpAddr;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::geo::GeoTable;
use super::AnalyticsError;
use crate::honeylink::{parse_user_agent, AccessLogEntry, Browser, LinkRegistry, Os, TargetClass};
use crate::notify::EventTimeline;
use crate::sheetstore::{EventKind, ModificationClass};
use crate::time::{serde_millis, Timestamp};
use crate::Exec;

/// Half-open interval `[start, end)` naming one experiment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentBounds {
    pub name: String,
    #[serde(with = "serde_millis")]
    pub start: Timestamp,
    #[serde(with = "serde_millis")]
    pub end: Timestamp,
}

impl ExperimentBounds {
    fn contains(&self, t: Timestamp) -> bool {
        self.start <= t && t < self.end
    }
}

/// Counts for one experiment or for the whole run.
///
/// Clicks are requests that hit `/t/<minted token>`; visits are the subset on
/// controlled links. Country, browser and OS histograms are over clicks; the
/// country histogram plus `unknown_country_count` sums to `click_count`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportSection {
    pub open_count: u64,
    pub modification_count: u64,
    pub modification_class_histogram: BTreeMap<ModificationClass, u64>,
    pub click_count: u64,
    pub controlled_link_visit_count: u64,
    pub unique_ip_count: u64,
    pub controlled_unique_ip_count: u64,
    pub distinct_country_count: u64,
    pub country_histogram: BTreeMap<String, u64>,
    pub unknown_country_count: u64,
    pub browser_histogram: BTreeMap<Browser, u64>,
    pub os_histogram: BTreeMap<Os, u64>,
    /// Logged requests that were not clicks (scanners, unknown tokens).
    pub other_request_count: u64,
}

impl Default for ReportSection {
    fn default() -> Self {
        ReportSection {
            open_count: 0,
            modification_count: 0,
            modification_class_histogram: ModificationClass::ALL.into_iter().map(|c| (c, 0)).collect(),
            click_count: 0,
            controlled_link_visit_count: 0,
            unique_ip_count: 0,
            controlled_unique_ip_count: 0,
            distinct_country_count: 0,
            country_histogram: BTreeMap::new(),
            unknown_country_count: 0,
            browser_histogram: [Browser::Chrome, Browser::Firefox, Browser::Safari, Browser::Samsung, Browser::Other]
                .into_iter()
                .map(|b| (b, 0))
                .collect(),
            os_histogram: [Os::Windows, Os::Linux, Os::Macintosh, Os::Android, Os::Other]
                .into_iter()
                .map(|o| (o, 0))
                .collect(),
            other_request_count: 0,
        }
    }
}

impl ReportSection {
    /// Checks the histogram/total invariants.
    pub fn is_consistent(&self) -> bool {
        let sum = |h: &mut dyn Iterator<Item = u64>| h.sum::<u64>();
        sum(&mut self.modification_class_histogram.values().copied()) == self.modification_count
            && sum(&mut self.country_histogram.values().copied()) + self.unknown_country_count == self.click_count
            && sum(&mut self.browser_histogram.values().copied()) == self.click_count
            && sum(&mut self.os_histogram.values().copied()) == self.click_count
            && self.unique_ip_count <= self.click_count
            && self.controlled_unique_ip_count <= self.controlled_link_visit_count
            && self.distinct_country_count == self.country_histogram.len() as u64
    }
}

/// What the simulator knows but the monitoring cannot observe.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GroundTruth {
    pub visits: u64,
    pub distinct_visitors: u64,
    pub modifying_visitors: u64,
    pub clicking_visitors: u64,
    pub clicks_all_channels: u64,
    pub clicks_controlled_channel: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NamedSection {
    pub name: String,
    #[serde(with = "serde_millis")]
    pub start: Timestamp,
    #[serde(with = "serde_millis")]
    pub end: Timestamp,
    #[serde(flatten)]
    pub section: ReportSection,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub experiments: Vec<NamedSection>,
    pub total: ReportSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<GroundTruth>,
}

impl Report {
    pub fn experiment(&self, name: &str) -> Option<&ReportSection> {
        self.experiments.iter().find(|e| e.name == name).map(|e| &e.section)
    }
}

struct Classified {
    bound: Option<usize>,
    click: Option<Click>,
}

struct Click {
    ip: IpAddr,
    controlled: bool,
    country: Option<String>,
    browser: Browser,
    os: Os,
}

#[derive(Default)]
struct Accumulator {
    section: ReportSection,
    ips: HashSet<IpAddr>,
    controlled_ips: HashSet<IpAddr>,
}

impl Accumulator {
    fn add_click(&mut self, click: &Click) {
        let s = &mut self.section;
        s.click_count += 1;
        self.ips.insert(click.ip);
        if click.controlled {
            s.controlled_link_visit_count += 1;
            self.controlled_ips.insert(click.ip);
        }
        match &click.country {
            Some(c) => *s.country_histogram.entry(c.clone()).or_default() += 1,
            None => s.unknown_country_count += 1,
        }
        *s.browser_histogram.entry(click.browser).or_default() += 1;
        *s.os_histogram.entry(click.os).or_default() += 1;
    }

    fn finish(mut self) -> ReportSection {
        self.section.unique_ip_count = self.ips.len() as u64;
        self.section.controlled_unique_ip_count = self.controlled_ips.len() as u64;
        self.section.distinct_country_count = self.section.country_histogram.len() as u64;
        self.section
    }
}

fn check_bounds(bounds: &[ExperimentBounds]) -> Result<(), AnalyticsError> {
    for b in bounds {
        if b.start >= b.end {
            return Err(AnalyticsError::BadBoundaries(format!("{} ends before it starts", b.name)));
        }
    }
    for (i, a) in bounds.iter().enumerate() {
        for b in &bounds[i + 1..] {
            if a.start < b.end && b.start < a.end {
                return Err(AnalyticsError::BadBoundaries(format!("{} overlaps {}", a.name, b.name)));
            }
            if a.name == b.name {
                return Err(AnalyticsError::BadBoundaries(format!("duplicate name {}", a.name)));
            }
        }
    }
    Ok(())
}

/// Joins events and log entries into per-experiment and overall counts.
///
/// Log entries are classified (token channel, geolocation, user agent) with
/// `exec`; the result does not depend on input order.
pub fn aggregate(
    timeline: &EventTimeline,
    logs: &[AccessLogEntry],
    geo: &GeoTable,
    registry: &LinkRegistry,
    bounds: &[ExperimentBounds],
    exec: Exec,
) -> Result<Report, AnalyticsError> {
    check_bounds(bounds)?;
    let locate = |t: Timestamp| bounds.iter().position(|b| b.contains(t));

    let classified = exec.map(logs, |entry| {
        let click = entry.token.as_deref().map(|token| {
            let controlled = registry.resolve(token).is_some_and(|l| l.target_class == TargetClass::Controlled);
            let (browser, os) = parse_user_agent(entry.header("user-agent").unwrap_or(""));
            Click { ip: entry.ip, controlled, country: geo.lookup(entry.ip).map(str::to_string), browser, os }
        });
        Classified { bound: locate(entry.received_at), click }
    });

    let mut parts: Vec<Accumulator> = (0..bounds.len()).map(|_| Accumulator::default()).collect();
    let mut total = Accumulator::default();

    for event in timeline.events() {
        let bound = locate(event.occurred_at());
        for acc in std::iter::once(&mut total).chain(bound.map(|i| &mut parts[i])) {
            match event.kind() {
                EventKind::Open => acc.section.open_count += 1,
                EventKind::Modification => {
                    acc.section.modification_count += 1;
                    let class = event.modification_class().expect("modification events are classified");
                    *acc.section.modification_class_histogram.entry(class).or_default() += 1;
                }
            }
        }
    }

    for item in &classified {
        for acc in std::iter::once(&mut total).chain(item.bound.map(|i| &mut parts[i])) {
            match &item.click {
                Some(click) => acc.add_click(click),
                None => acc.section.other_request_count += 1,
            }
        }
    }

    Ok(Report {
        experiments: bounds
            .iter()
            .zip(parts)
            .map(|(b, acc)| NamedSection { name: b.name.clone(), start: b.start, end: b.end, section: acc.finish() })
            .collect(),
        total: total.finish(),
        ground_truth: None,
    })
}

/// Writes `report.json` and `countries.csv` (overall clicks per country,
/// most clicks first) into `out_dir`.
pub fn export_report(report: &Report, out_dir: &Path) -> Result<Vec<PathBuf>, AnalyticsError> {
    fs::create_dir_all(out_dir).map_err(AnalyticsError::Export)?;
    let json_path = out_dir.join("report.json");
    let mut json = serde_json::to_string_pretty(report).expect("report serializes");
    json.push('\n');
    fs::write(&json_path, json).map_err(AnalyticsError::Export)?;

    let mut rows: Vec<(&String, &u64)> = report.total.country_histogram.iter().collect();
    rows.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
    let csv_path = out_dir.join("countries.csv");
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(["country", "count"])?;
    for (country, count) in rows {
        wtr.write_record([country.as_str(), &count.to_string()])?;
    }
    let bytes = wtr.into_inner().map_err(|e| AnalyticsError::Export(e.into_error()))?;
    fs::write(&csv_path, bytes).map_err(AnalyticsError::Export)?;
    Ok(vec![json_path, csv_path])
}
