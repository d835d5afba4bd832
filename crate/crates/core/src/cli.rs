//! Command-line front end.
//!
//! Every subcommand reads and writes plain files so an experiment can be
//! scripted end to end. Exit codes: 0 success, 1 usage error, 2 data or I/O
//! error. Diagnostics go to stderr; stdout only carries documented data.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufReader};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{Duration, NaiveDate, TimeZone, Utc};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::analytics::{aggregate, export_report, ExperimentBounds, GeoTable, GroundTruth};
use crate::honeygen::{build_honey_sheet, mint_links, SheetConfig, DEFAULT_BANK_HOSTS};
use crate::honeylink::{self, parse_log, run_http, AccessLog, LinkRegistry, LinkServer};
use crate::leak::{schedule, Experiment, FileSink, LeakSink, SheetRef, Theme, ThemeName};
use crate::notify::{EventTimeline, Mailbox};
use crate::sheetstore::{classify, diff, take_snapshot, HoneySheet, SheetMonitor, DEFAULT_SNAPSHOT_CADENCE_HOURS};
use crate::simharness::{default_profiles, ground_truth, replay, simulate, ActionTrace, SimParams, TargetCounts, VisitorProfile};
use crate::time::Timestamp;
use crate::Exec;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

/// Shared settings, loaded from `--config` (JSON). Every field is optional.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub controlled_domain: String,
    /// Defaults to `https://<controlled_domain>`.
    pub link_base: Option<String>,
    pub redirect_target: String,
    pub share_base: String,
    pub mailbox_dir: Option<PathBuf>,
    pub log_path: Option<PathBuf>,
    pub geo_table_path: Option<PathBuf>,
    pub seed: u64,
    pub snapshot_cadence_hours: i64,
    pub posts_per_day: u32,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            controlled_domain: "links.example.net".into(),
            link_base: None,
            redirect_target: "https://www.google.com".into(),
            share_base: SheetConfig::default().share_base,
            mailbox_dir: None,
            log_path: None,
            geo_table_path: None,
            seed: 0,
            snapshot_cadence_hours: DEFAULT_SNAPSHOT_CADENCE_HOURS,
            posts_per_day: 2,
        }
    }
}

impl Config {
    /// Reads a config file and checks that every path in it can be used:
    /// input files must exist, output locations must have an existing parent.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let config: Config = read_json(path)?;
        if let Some(geo) = &config.geo_table_path {
            if !geo.is_file() {
                return Err(CliError::Data(format!("config: geo table {} not found", geo.display())));
            }
        }
        for out in [&config.mailbox_dir, &config.log_path].into_iter().flatten() {
            let parent = out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
            if !parent.is_dir() {
                return Err(CliError::Data(format!("config: directory for {} does not exist", out.display())));
            }
        }
        if config.snapshot_cadence_hours <= 0 {
            return Err(CliError::Data("config: snapshot_cadence_hours must be positive".into()));
        }
        Ok(config)
    }

    fn link_base(&self) -> String {
        self.link_base.clone().unwrap_or_else(|| format!("https://{}", self.controlled_domain))
    }

    fn new_registry(&self) -> Result<LinkRegistry, CliError> {
        LinkRegistry::new(&self.controlled_domain, self.link_base(), &self.redirect_target).map_err(data)
    }
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
}

fn data(e: impl std::fmt::Display) -> CliError {
    CliError::Data(e.to_string())
}

fn io_at(path: &Path) -> impl Fn(io::Error) -> CliError + '_ {
    move |e| CliError::Data(format!("{}: {e}", path.display()))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let file = File::open(path).map_err(io_at(path))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io_at(parent))?;
    }
    fs::write(path, text).map_err(io_at(path))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(data)?;
    text.push('\n');
    write_text(path, &text)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

/// Loads a sheet file holding one sheet or an array of sheets.
fn read_sheets(path: &Path) -> Result<Vec<HoneySheet>, CliError> {
    Ok(match read_json::<OneOrMany<HoneySheet>>(path)? {
        OneOrMany::One(s) => vec![s],
        OneOrMany::Many(v) => v,
    })
}

fn read_geo(path: Option<&Path>) -> Result<GeoTable, CliError> {
    match path {
        Some(p) => GeoTable::from_csv(File::open(p).map_err(io_at(p))?).map_err(|e| CliError::Data(format!("{}: {e}", p.display()))),
        None => Ok(GeoTable::default()),
    }
}

/// Accepts `YYYY-MM-DD` (midnight UTC) or an RFC 3339 timestamp.
fn parse_instant(s: &str) -> Result<Timestamp, String> {
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Ok(Utc.from_utc_datetime(&d.and_hms_opt(0, 0, 0).expect("midnight")));
    }
    crate::time::parse(s).map_err(|e| format!("{s:?}: {e}"))
}

#[derive(Parser)]
#[command(name = "honeysheets", version, about = "Decoy spreadsheets with click tracking and change monitoring")]
struct Cli {
    /// JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run batch work on the calling thread only.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate honey sheets and mint their links.
    Gen(GenArgs),
    /// Diff two sheet files and print the modification class.
    Diff(DiffArgs),
    /// Run the redirect-and-log server.
    Serve(ServeArgs),
    /// Read the mailbox into an event timeline.
    Ingest(IngestArgs),
    /// Schedule and write themed leak posts.
    Leak(LeakArgs),
    /// Generate a visitor trace.
    Simulate(SimulateArgs),
    /// Drive a trace through the monitors, mailbox and link server.
    Replay(ReplayArgs),
    /// Aggregate a timeline and an access log into a report.
    Report(ReportArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 20)]
    rows: usize,
    #[arg(long, default_value_t = 9)]
    links: usize,
    #[arg(long, default_value_t = 3)]
    controlled: usize,
    /// Base seed; sheet `i` uses `seed + i`. Defaults to the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// IBAN country: GB, DE or FR.
    #[arg(long, default_value = "GB")]
    country: String,
    /// Number of sheets. More than one writes a JSON array.
    #[arg(long, default_value_t = 1)]
    count: usize,
    /// Link registry; extended in place if it exists.
    #[arg(long, default_value = "registry.json")]
    registry: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DiffArgs {
    #[arg(long)]
    before: PathBuf,
    #[arg(long)]
    after: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long)]
    registry: PathBuf,
    #[arg(long)]
    log: Option<PathBuf>,
    /// Overrides the registry's redirect target.
    #[arg(long)]
    redirect: Option<String>,
    #[arg(long, default_value = "127.0.0.1:8080")]
    bind: SocketAddr,
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    mailbox: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct LeakArgs {
    #[arg(long)]
    theme: ThemeName,
    #[arg(long)]
    days: u32,
    #[arg(long)]
    per_day: Option<u32>,
    /// First day, `YYYY-MM-DD`.
    #[arg(long, default_value = "2016-01-23")]
    start: NaiveDate,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    sheets: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    /// Visitor profiles (JSON array). Defaults to the bundled typologies.
    #[arg(long)]
    profiles: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    days: u32,
    #[arg(long, default_value = "2016-01-23", value_parser = parse_instant)]
    start: Timestamp,
    #[arg(long)]
    targets: Option<PathBuf>,
    #[arg(long)]
    sheets: PathBuf,
    #[arg(long)]
    registry: PathBuf,
    #[arg(long)]
    geo: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Also write simulator-only ground truth here.
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct ReplayArgs {
    #[arg(long)]
    trace: PathBuf,
    #[arg(long)]
    sheets: PathBuf,
    #[arg(long)]
    registry: PathBuf,
    #[arg(long)]
    mailbox: Option<PathBuf>,
    #[arg(long)]
    log: Option<PathBuf>,
    /// Write the sheets as they stand after the replay.
    #[arg(long)]
    sheets_out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    timeline: PathBuf,
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long)]
    geo: Option<PathBuf>,
    /// JSON array of `{name, start, end}`.
    #[arg(long)]
    bounds: PathBuf,
    /// Tells controlled links from decoys.
    #[arg(long)]
    registry: PathBuf,
    /// Ground truth from `simulate --truth`, copied into the report.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

/// Runs one command. `args` excludes the program name.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let argv = std::iter::once(OsString::from("honeysheets")).chain(args.into_iter().map(Into::into));
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(CliError::Data(msg)) => {
            eprintln!("error: {msg}");
            EXIT_DATA
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    let exec = if cli.sequential { Exec::Sequential } else { Exec::Parallel };
    match cli.command {
        Command::Gen(a) => cmd_gen(&config, a),
        Command::Diff(a) => cmd_diff(a),
        Command::Serve(a) => cmd_serve(&config, a),
        Command::Ingest(a) => cmd_ingest(&config, a),
        Command::Leak(a) => cmd_leak(&config, a),
        Command::Simulate(a) => cmd_simulate(&config, a),
        Command::Replay(a) => cmd_replay(&config, a),
        Command::Report(a) => cmd_report(&config, a, exec),
    }
}

fn need(path: Option<PathBuf>, fallback: &Option<PathBuf>, flag: &str) -> Result<PathBuf, CliError> {
    path.or_else(|| fallback.clone()).ok_or_else(|| CliError::Usage(format!("--{flag} is required (or set it in the config)")))
}

fn cmd_gen(config: &Config, a: GenArgs) -> Result<(), CliError> {
    if a.count == 0 {
        return Err(CliError::Usage("--count must be at least 1".into()));
    }
    let mut registry = if a.registry.exists() { read_json(&a.registry)? } else { config.new_registry()? };
    let base = a.seed.unwrap_or(config.seed);
    let mut sheets = Vec::with_capacity(a.count);
    for i in 0..a.count as u64 {
        let sheet_config = SheetConfig {
            rows: a.rows,
            link_slots: a.links,
            controlled_slots: a.controlled,
            rng_seed: base.wrapping_add(i),
            country: a.country.clone(),
            share_base: config.share_base.clone(),
            ..Default::default()
        };
        sheet_config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        let links = mint_links(&mut registry, &sheet_config, DEFAULT_BANK_HOSTS).map_err(data)?;
        sheets.push(build_honey_sheet(&sheet_config, &links).map_err(data)?);
    }
    if let [only] = sheets.as_slice() {
        write_text(&a.out, &only.to_canonical_json())?;
    } else {
        write_json(&a.out, &sheets)?;
    }
    write_text(&a.registry, &registry.to_json())?;
    eprintln!("wrote {} sheet(s) to {}, {} link(s) in {}", sheets.len(), a.out.display(), registry.len(), a.registry.display());
    Ok(())
}

fn cmd_diff(a: DiffArgs) -> Result<(), CliError> {
    let before: HoneySheet = read_json(&a.before)?;
    let after: HoneySheet = read_json(&a.after)?;
    let t = crate::time::now();
    let changes = diff(&take_snapshot(&before, t), &take_snapshot(&after, t)).map_err(data)?;
    write_text(&a.out, &format!("{}\n", changes.to_canonical_json()))?;
    match classify(&changes) {
        Ok(class) => println!("{class}"),
        Err(_) => println!("unchanged"),
    }
    Ok(())
}

fn cmd_serve(config: &Config, a: ServeArgs) -> Result<(), CliError> {
    let mut registry: LinkRegistry = read_json(&a.registry)?;
    if let Some(target) = a.redirect {
        registry.set_redirect_target(target).map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let log_path = need(a.log, &config.log_path, "log")?;
    let sink = honeylink::FileSink::open(&log_path).map_err(io_at(&log_path))?;
    let server = LinkServer::new(Arc::new(registry), Arc::new(AccessLog::new(sink)));
    let runtime = tokio::runtime::Runtime::new().map_err(data)?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(a.bind).await.map_err(|e| CliError::Data(format!("{}: {e}", a.bind)))?;
        eprintln!("listening on {}", listener.local_addr().map_err(data)?);
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        run_http(server, listener, shutdown).await.map_err(data)
    })
}

fn cmd_ingest(config: &Config, a: IngestArgs) -> Result<(), CliError> {
    let dir = need(a.mailbox, &config.mailbox_dir, "mailbox")?;
    let ingested = Mailbox::open(&dir).map_err(data)?.ingest().map_err(data)?;
    write_text(&a.out, &ingested.timeline.to_json())?;
    eprintln!(
        "{} event(s), {} duplicate(s), {} quarantined",
        ingested.timeline.len(),
        ingested.duplicates,
        ingested.quarantined
    );
    Ok(())
}

fn cmd_leak(config: &Config, a: LeakArgs) -> Result<(), CliError> {
    let sheets: Vec<SheetRef> = read_sheets(&a.sheets)?.iter().map(SheetRef::from).collect();
    let experiment = Experiment {
        theme: Theme::builtin(a.theme),
        start_date: a.start,
        days: a.days,
        posts_per_day: a.per_day.unwrap_or(config.posts_per_day),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed.unwrap_or(config.seed));
    let posts = schedule(&experiment, &sheets, &mut rng).map_err(data)?;
    let mut sink = FileSink::new(&a.out).map_err(data)?;
    for post in &posts {
        sink.post(post).map_err(data)?;
    }
    write_json(&a.out.join("schedule.json"), &posts)?;
    eprintln!("wrote {} post(s) to {}", posts.len(), a.out.display());
    Ok(())
}

fn cmd_simulate(config: &Config, a: SimulateArgs) -> Result<(), CliError> {
    let profiles: Vec<VisitorProfile> = match &a.profiles {
        Some(p) => read_json(p)?,
        None => default_profiles(),
    };
    let targets: Option<TargetCounts> = a.targets.as_deref().map(read_json).transpose()?;
    let sheets = read_sheets(&a.sheets)?;
    let registry: LinkRegistry = read_json(&a.registry)?;
    let geo = read_geo(a.geo.as_deref().or(config.geo_table_path.as_deref()))?;
    let params = SimParams { seed: a.seed.unwrap_or(config.seed), start: a.start, duration_days: a.days };
    let trace = simulate(&profiles, &sheets, &registry, &geo, &params, targets.as_ref()).map_err(data)?;
    write_text(&a.out, &trace.to_json())?;
    if let Some(path) = &a.truth {
        write_json(path, &ground_truth(&trace))?;
    }
    eprintln!("wrote {} action(s) to {}", trace.actions.len(), a.out.display());
    Ok(())
}

fn cmd_replay(config: &Config, a: ReplayArgs) -> Result<(), CliError> {
    let trace: ActionTrace = read_json(&a.trace)?;
    let sheets = read_sheets(&a.sheets)?;
    let registry: LinkRegistry = read_json(&a.registry)?;
    let mailbox = Mailbox::open(need(a.mailbox, &config.mailbox_dir, "mailbox")?).map_err(data)?;
    let log_path = need(a.log, &config.log_path, "log")?;
    let sink = honeylink::FileSink::open(&log_path).map_err(io_at(&log_path))?;
    let server = LinkServer::new(Arc::new(registry), Arc::new(AccessLog::new(sink)));
    let baseline = trace.actions.first().map_or_else(crate::time::now, |s| s.at - Duration::seconds(1));
    let cadence = Duration::hours(config.snapshot_cadence_hours);
    let mut monitors: Vec<SheetMonitor> =
        sheets.into_iter().map(|s| SheetMonitor::new(s, baseline).with_cadence(cadence)).collect();
    let stats = replay(&trace, &mut monitors, &mailbox, &server).map_err(data)?;
    if server.log().failures() > 0 {
        return Err(CliError::Data(format!("{} access log write(s) failed", server.log().failures())));
    }
    if let Some(out) = &a.sheets_out {
        let after: Vec<HoneySheet> = monitors.into_iter().map(SheetMonitor::into_sheet).collect();
        write_json(out, &after)?;
    }
    eprintln!("replayed {} open(s), {} modification(s), {} click(s)", stats.opens, stats.modifications, stats.clicks);
    Ok(())
}

fn cmd_report(config: &Config, a: ReportArgs, exec: Exec) -> Result<(), CliError> {
    let timeline: EventTimeline = read_json(&a.timeline)?;
    let log_path = need(a.log, &config.log_path, "log")?;
    let parsed = parse_log(BufReader::new(File::open(&log_path).map_err(io_at(&log_path))?)).map_err(data)?;
    if !parsed.malformed.is_empty() {
        eprintln!("warning: skipped {} malformed log line(s)", parsed.malformed.len());
    }
    let geo = read_geo(a.geo.as_deref().or(config.geo_table_path.as_deref()))?;
    let bounds: Vec<ExperimentBounds> = read_json(&a.bounds)?;
    let registry: LinkRegistry = read_json(&a.registry)?;
    let mut report = aggregate(&timeline, &parsed.entries, &geo, &registry, &bounds, exec).map_err(data)?;
    report.ground_truth = a.truth.as_deref().map(read_json::<GroundTruth>).transpose()?;
    for path in export_report(&report, &a.out).map_err(data)? {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}
