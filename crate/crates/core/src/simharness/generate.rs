use std::collections::{BTreeSet, HashMap, HashSet};
use std::net::{IpAddr, Ipv4Addr, Ipv6Addr};

use chrono::Duration;
use ipnet::IpNet;
use rand::seq::{index, IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::profile::{VisitorProfile, DEFAULT_USER_AGENTS};
use super::{Action, ActionTrace, EditBehavior, SimError, TimedAction};
use crate::analytics::GeoTable;
use crate::honeylink::{LinkRegistry, TargetClass};
use crate::sheetstore::{CellFormat, EditCommand, HoneySheet, Rgb};
use crate::time::{serde_millis, Timestamp};

/// Visits start at least this long before their phase ends, so every
/// follow-up action stays inside the phase.
const VISIT_SPAN_MINUTES: i64 = 60;
const REVISIT_PROBABILITY: f64 = 0.25;
/// Unconstrained mode: daily visits are Binomial(8, 0.3).
const DAILY_VISIT_TRIALS: u32 = 8;
const DAILY_VISIT_P: f64 = 0.3;
const INSULTS: &[&str] = &["nice try", "FAKE", "honeypot lol", "we know", "not real money"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimParams {
    pub seed: u64,
    #[serde(with = "serde_millis")]
    pub start: Timestamp,
    pub duration_days: u32,
}

impl SimParams {
    pub fn end(&self) -> Timestamp {
        self.start + Duration::days(self.duration_days.into())
    }
}

/// Opens and modifications that must fall inside `[start, end)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseTarget {
    pub name: String,
    #[serde(with = "serde_millis")]
    pub start: Timestamp,
    #[serde(with = "serde_millis")]
    pub end: Timestamp,
    pub opens: u64,
    pub modifications: u64,
}

/// Exact totals for a constrained run.
///
/// `controlled_visits` fixes how many clicks hit controlled links (the rest
/// hit decoys). `unique_ips` fixes the click source addresses; every one of
/// them shows up on the controlled channel when `controlled_visits` is set.
/// `countries` spreads those addresses over that many geolocation countries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetCounts {
    pub opens: u64,
    pub modifications: u64,
    pub clicks: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub controlled_visits: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unique_ips: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub countries: Option<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub phases: Vec<PhaseTarget>,
}

struct Visitor {
    id: String,
    ip: IpAddr,
    user_agent: String,
}

enum Step {
    Open,
    Edit(EditBehavior),
    Click { channel: Option<TargetClass>, ip: Option<IpAddr> },
}

struct Planned {
    at: Timestamp,
    visitor: usize,
    sheet: usize,
    step: Step,
}

struct Visit {
    at: Timestamp,
    visitor: usize,
    sheet: usize,
    profile: usize,
}

struct Planner<'a> {
    profiles: &'a [VisitorProfile],
    geo: &'a GeoTable,
    rng: ChaCha8Rng,
    visitors: Vec<Visitor>,
    by_profile: Vec<Vec<usize>>,
    plan: Vec<Planned>,
}

fn infeasible(msg: impl Into<String>) -> SimError {
    SimError::InfeasibleTargets(msg.into())
}

fn random_in(net: &IpNet, rng: &mut impl Rng) -> IpAddr {
    match net {
        IpNet::V4(n) => {
            let host = rng.random::<u32>() & u32::from(n.hostmask());
            IpAddr::V4(Ipv4Addr::from(u32::from(n.network()) | host))
        }
        IpNet::V6(n) => {
            let host = rng.random::<u128>() & u128::from(n.hostmask());
            IpAddr::V6(Ipv6Addr::from(u128::from(n.network()) | host))
        }
    }
}

fn minutes(rng: &mut impl Rng, lo: i64, hi: i64) -> Duration {
    Duration::milliseconds(rng.random_range(lo * 60_000..=hi * 60_000))
}

impl<'a> Planner<'a> {
    fn new(profiles: &'a [VisitorProfile], geo: &'a GeoTable, seed: u64) -> Self {
        Planner {
            profiles,
            geo,
            rng: ChaCha8Rng::seed_from_u64(seed),
            visitors: Vec::new(),
            by_profile: vec![Vec::new(); profiles.len()],
            plan: Vec::new(),
        }
    }

    fn fresh_ip(&mut self, profile: usize) -> IpAddr {
        let pool = &self.profiles[profile].source_ip_pool;
        if let Some(ip) = pool.choose(&mut self.rng) {
            return *ip;
        }
        match self.geo.entries().choose(&mut self.rng) {
            Some((net, _)) => random_in(net, &mut self.rng),
            None => random_in(&"198.18.0.0/15".parse().expect("valid net"), &mut self.rng),
        }
    }

    fn visitor(&mut self, profile: usize) -> usize {
        let known = &self.by_profile[profile];
        if !known.is_empty() && self.rng.random_bool(REVISIT_PROBABILITY) {
            return known[self.rng.random_range(0..known.len())];
        }
        let p = &self.profiles[profile];
        let user_agent = match p.user_agent_pool.choose(&mut self.rng) {
            Some(ua) => ua.clone(),
            None => DEFAULT_USER_AGENTS.choose(&mut self.rng).expect("non-empty").to_string(),
        };
        let ip = self.fresh_ip(profile);
        let id = format!("{}-{}", p.name, self.by_profile[profile].len() + 1);
        self.visitors.push(Visitor { id, ip, user_agent });
        let idx = self.visitors.len() - 1;
        self.by_profile[profile].push(idx);
        idx
    }

    fn pick_profile(&mut self, weight: impl Fn(&VisitorProfile) -> f64) -> Option<usize> {
        let idx: Vec<usize> = (0..self.profiles.len()).collect();
        if self.profiles.iter().map(&weight).sum::<f64>() > 0.0 {
            idx.choose_weighted(&mut self.rng, |&i| weight(&self.profiles[i])).ok().copied()
        } else {
            None
        }
    }

    fn edit_behavior(&mut self, profile: usize) -> EditBehavior {
        let weights = self.profiles[profile].action_mix.edit_weights();
        weights.choose_weighted(&mut self.rng, |w| w.1).expect("profile has edit mass").0
    }

    fn push(&mut self, at: Timestamp, visitor: usize, sheet: usize, step: Step) {
        self.plan.push(Planned { at, visitor, sheet, step });
    }
}

/// Generates a visitor trace against `sheets` and the links in `registry`.
///
/// With `targets` the trace has exactly the requested totals; otherwise each
/// day gets a random number of visits whose actions follow the profile mixes.
/// The same inputs always give the same trace. Timestamps are strictly
/// increasing.
pub fn simulate(
    profiles: &[VisitorProfile],
    sheets: &[HoneySheet],
    registry: &LinkRegistry,
    geo: &GeoTable,
    params: &SimParams,
    targets: Option<&TargetCounts>,
) -> Result<ActionTrace, SimError> {
    if profiles.is_empty() {
        return Err(infeasible("no visitor profiles"));
    }
    for p in profiles {
        p.validate()?;
    }
    let mut planner = Planner::new(profiles, geo, params.seed);
    match targets {
        Some(t) => plan_constrained(&mut planner, sheets, registry, params, t)?,
        None => plan_free(&mut planner, sheets, registry, params),
    }
    let actions = materialize(planner, sheets, registry, params, targets.is_some())?;
    Ok(ActionTrace { seed: params.seed, actions })
}

fn plan_free(planner: &mut Planner, sheets: &[HoneySheet], registry: &LinkRegistry, params: &SimParams) {
    if sheets.is_empty() {
        return;
    }
    let span = Duration::minutes(VISIT_SPAN_MINUTES);
    for day in 0..i64::from(params.duration_days) {
        let day_start = params.start + Duration::days(day);
        let visits = (0..DAILY_VISIT_TRIALS).filter(|_| planner.rng.random_bool(DAILY_VISIT_P)).count();
        for _ in 0..visits {
            let at = day_start + Duration::milliseconds(planner.rng.random_range(0..(Duration::days(1) - span).num_milliseconds()));
            let profile = planner.rng.random_range(0..planner.profiles.len());
            let visitor = planner.visitor(profile);
            let sheet = planner.rng.random_range(0..sheets.len());
            planner.push(at, visitor, sheet, Step::Open);
            let mix = planner.profiles[profile].action_mix;
            let roll: f64 = planner.rng.random();
            if roll < mix.edit_mass() {
                let behavior = planner.edit_behavior(profile);
                let dt = minutes(&mut planner.rng, 1, 40);
                planner.push(at + dt, visitor, sheet, Step::Edit(behavior));
            } else if roll < mix.edit_mass() + mix.click_links && !registry.is_empty() {
                let c = planner.profiles[profile].clicks_per_visit;
                for _ in 0..planner.rng.random_range(c.min..=c.max) {
                    let dt = minutes(&mut planner.rng, 0, 50) + Duration::seconds(10);
                    planner.push(at + dt, visitor, sheet, Step::Click { channel: None, ip: None });
                }
            }
        }
    }
}

fn check_targets(t: &TargetCounts, params: &SimParams) -> Result<Vec<PhaseTarget>, SimError> {
    let phases = if t.phases.is_empty() {
        vec![PhaseTarget {
            name: "all".into(),
            start: params.start,
            end: params.end(),
            opens: t.opens,
            modifications: t.modifications,
        }]
    } else {
        t.phases.clone()
    };
    let opens: u64 = phases.iter().map(|p| p.opens).sum();
    let mods: u64 = phases.iter().map(|p| p.modifications).sum();
    if opens != t.opens || mods != t.modifications {
        return Err(infeasible(format!("phases sum to {opens} opens and {mods} modifications")));
    }
    for (i, p) in phases.iter().enumerate() {
        if p.modifications > p.opens {
            return Err(infeasible(format!("phase {}: {} modifications exceed {} opens", p.name, p.modifications, p.opens)));
        }
        if p.start < params.start || p.end > params.end() {
            return Err(infeasible(format!("phase {} lies outside the simulated window", p.name)));
        }
        if p.opens > 0 && p.end - p.start <= Duration::minutes(VISIT_SPAN_MINUTES) {
            return Err(infeasible(format!("phase {} is too short for any visit", p.name)));
        }
        if phases[..i].iter().any(|q| q.start < p.end && p.start < q.end) {
            return Err(infeasible(format!("phase {} overlaps another phase", p.name)));
        }
    }
    if t.clicks > 0 && t.opens == 0 {
        return Err(infeasible("clicks need at least one visit"));
    }
    if let Some(v) = t.controlled_visits {
        if v > t.clicks {
            return Err(infeasible(format!("{v} controlled visits exceed {} clicks", t.clicks)));
        }
    }
    if let Some(u) = t.unique_ips {
        let carriers = t.controlled_visits.unwrap_or(t.clicks);
        if u > carriers || (u == 0) != (carriers == 0) {
            return Err(infeasible(format!("{u} unique addresses cannot cover {carriers} clicks")));
        }
    }
    match (t.countries, t.unique_ips) {
        (Some(_), None) => return Err(infeasible("a country target needs a unique address target")),
        (Some(k), Some(u)) if k > u || (k == 0) != (u == 0) => {
            return Err(infeasible(format!("{k} countries cannot be spread over {u} addresses")))
        }
        _ => {}
    }
    Ok(phases)
}

fn address_pool(planner: &mut Planner, unique: usize, countries: Option<usize>) -> Result<Vec<IpAddr>, SimError> {
    let geo = planner.geo;
    if geo.is_empty() {
        if countries.is_some_and(|k| k > 0) {
            return Err(infeasible("country target with an empty geolocation table"));
        }
        let net: IpNet = "198.18.0.0/15".parse().expect("valid net");
        let mut seen = HashSet::new();
        while seen.len() < unique {
            seen.insert(random_in(&net, &mut planner.rng));
        }
        let mut pool: Vec<IpAddr> = seen.into_iter().collect();
        pool.sort();
        return Ok(pool);
    }
    let available: BTreeSet<&str> = geo.entries().iter().map(|(_, c)| c.as_str()).collect();
    let k = countries.unwrap_or(unique.min(available.len()));
    if k > available.len() {
        return Err(infeasible(format!("{k} countries requested, geolocation table has {}", available.len())));
    }
    let mut chosen: Vec<&str> = available.into_iter().collect();
    chosen.shuffle(&mut planner.rng);
    chosen.truncate(k);
    let mut nets: HashMap<&str, Vec<&IpNet>> = HashMap::new();
    for (net, c) in geo.entries() {
        nets.entry(c.as_str()).or_default().push(net);
    }
    let mut seen = HashSet::new();
    let mut pool = Vec::with_capacity(unique);
    for i in 0..unique {
        let country = chosen[i % k];
        let found = (0..1000).find_map(|_| {
            let net = nets[country].choose(&mut planner.rng).expect("country has a prefix");
            let ip = random_in(net, &mut planner.rng);
            (geo.lookup(ip) == Some(country) && !seen.contains(&ip)).then_some(ip)
        });
        let ip = found.ok_or_else(|| infeasible(format!("no free address geolocates to {country}")))?;
        seen.insert(ip);
        pool.push(ip);
    }
    Ok(pool)
}

fn plan_constrained(
    planner: &mut Planner,
    sheets: &[HoneySheet],
    registry: &LinkRegistry,
    params: &SimParams,
    t: &TargetCounts,
) -> Result<(), SimError> {
    let phases = check_targets(t, params)?;
    if t.opens > 0 && sheets.is_empty() {
        return Err(infeasible("visits need at least one sheet"));
    }
    if t.clicks > 0 && registry.is_empty() {
        return Err(infeasible("clicks need at least one minted link"));
    }
    let span = Duration::minutes(VISIT_SPAN_MINUTES);
    let mut visits = Vec::new();
    for phase in &phases {
        let n = phase.opens as usize;
        let window = (phase.end - span - phase.start).num_milliseconds();
        let mut times: Vec<Timestamp> = (0..n)
            .map(|_| phase.start + Duration::milliseconds(planner.rng.random_range(0..window)))
            .collect();
        times.sort();
        let editing: HashSet<usize> = index::sample(&mut planner.rng, n, phase.modifications as usize).into_iter().collect();
        for (i, at) in times.into_iter().enumerate() {
            let sheet = planner.rng.random_range(0..sheets.len());
            let profile = if editing.contains(&i) {
                let p = planner
                    .pick_profile(|p| p.action_mix.edit_mass())
                    .ok_or_else(|| infeasible("modifications requested but no profile edits"))?;
                let behavior = planner.edit_behavior(p);
                let visitor = planner.visitor(p);
                planner.push(at, visitor, sheet, Step::Open);
                let dt = minutes(&mut planner.rng, 1, 40);
                planner.push(at + dt, visitor, sheet, Step::Edit(behavior));
                p
            } else {
                let p = match planner.pick_profile(|p| p.action_mix.open_only + p.action_mix.click_links) {
                    Some(p) => p,
                    None => planner.rng.random_range(0..planner.profiles.len()),
                };
                let visitor = planner.visitor(p);
                planner.push(at, visitor, sheet, Step::Open);
                p
            };
            let visitor = planner.plan.last().expect("just pushed").visitor;
            visits.push(Visit { at, visitor, sheet, profile });
        }
    }

    let clicks = t.clicks as usize;
    let weights: Vec<f64> = visits.iter().map(|v| planner.profiles[v.profile].action_mix.click_links).collect();
    let weighted = weights.iter().sum::<f64>() > 0.0;
    let hosts: Vec<usize> = (0..clicks)
        .map(|_| {
            if weighted {
                *(0..visits.len()).collect::<Vec<_>>().choose_weighted(&mut planner.rng, |&i| weights[i]).expect("positive")
            } else {
                planner.rng.random_range(0..visits.len())
            }
        })
        .collect();

    let mut channels: Vec<Option<TargetClass>> = vec![None; clicks];
    if let Some(v) = t.controlled_visits {
        channels = vec![Some(TargetClass::DecoyBank); clicks];
        for i in index::sample(&mut planner.rng, clicks, v as usize) {
            channels[i] = Some(TargetClass::Controlled);
        }
    }

    let mut ips: Vec<Option<IpAddr>> = vec![None; clicks];
    if let Some(u) = t.unique_ips {
        let pool = address_pool(planner, u as usize, t.countries.map(|k| k as usize))?;
        let mut carriers: Vec<usize> = (0..clicks)
            .filter(|&i| t.controlled_visits.is_none() || channels[i] == Some(TargetClass::Controlled))
            .collect();
        carriers.shuffle(&mut planner.rng);
        for (n, &i) in carriers.iter().enumerate() {
            ips[i] = Some(if n < pool.len() { pool[n] } else { *pool.choose(&mut planner.rng).expect("non-empty") });
        }
        for ip in ips.iter_mut().filter(|ip| ip.is_none()) {
            *ip = pool.choose(&mut planner.rng).copied();
        }
    }

    for i in 0..clicks {
        let v = &visits[hosts[i]];
        let dt = minutes(&mut planner.rng, 0, 50) + Duration::seconds(10);
        let (at, visitor, sheet) = (v.at + dt, v.visitor, v.sheet);
        planner.push(at, visitor, sheet, Step::Click { channel: channels[i], ip: ips[i] });
    }
    Ok(())
}

fn materialize(
    mut planner: Planner,
    sheets: &[HoneySheet],
    registry: &LinkRegistry,
    params: &SimParams,
    constrained: bool,
) -> Result<Vec<TimedAction>, SimError> {
    let mut plan = std::mem::take(&mut planner.plan);
    plan.sort_by_key(|p| p.at);
    let mut shadows: Vec<HoneySheet> = sheets.to_vec();
    let mut actions = Vec::with_capacity(plan.len());
    let mut last: Option<Timestamp> = None;
    for p in plan {
        let at = match last {
            Some(prev) if p.at <= prev => prev + Duration::milliseconds(1),
            _ => p.at,
        };
        if constrained && at >= params.end() {
            return Err(infeasible("too many actions to keep timestamps inside the window"));
        }
        last = Some(at);
        let action = match p.step {
            Step::Open => Action::Open,
            Step::Edit(behavior) => {
                let edits = make_edits(&mut shadows[p.sheet], behavior, &mut planner.rng);
                Action::Edit { behavior, edits }
            }
            Step::Click { channel, ip } => {
                let sheet_id = shadows[p.sheet].sheet_id();
                let fits = |class: TargetClass| channel.is_none_or(|c| c == class);
                let mut candidates: Vec<_> = registry.links_for_sheet(sheet_id).filter(|l| fits(l.target_class)).collect();
                if candidates.is_empty() {
                    candidates = registry.links().iter().filter(|l| fits(l.target_class)).collect();
                }
                let link = candidates
                    .choose(&mut planner.rng)
                    .ok_or_else(|| infeasible(format!("no {channel:?} link to click")))?;
                let visitor = &planner.visitors[p.visitor];
                Action::Click {
                    token: link.token.to_string(),
                    channel: link.target_class,
                    ip: ip.unwrap_or(visitor.ip),
                    port: planner.rng.random_range(1024..=65535),
                    user_agent: visitor.user_agent.clone(),
                }
            }
        };
        actions.push(TimedAction {
            at,
            visitor: planner.visitors[p.visitor].id.clone(),
            sheet_id: shadows[p.sheet].sheet_id().clone(),
            action,
        });
    }
    Ok(actions)
}

/// Builds one editing session against the current state of `sheet` and
/// applies it, so the next session sees the result. Every session changes
/// something.
pub(crate) fn make_edits(sheet: &mut HoneySheet, behavior: EditBehavior, rng: &mut impl Rng) -> Vec<EditCommand> {
    let mut out = Vec::new();
    let mut push = |sheet: &mut HoneySheet, cmd: EditCommand| {
        sheet.apply_edit(&cmd).expect("generated edits fit the sheet");
        out.push(cmd);
    };
    match behavior {
        EditBehavior::ExpandColumns => {
            if sheet.cols() == 0 {
                push(sheet, EditCommand::InsertCol { index: 0 });
            } else {
                let k = rng.random_range(1..=sheet.cols().min(3));
                for col in index::sample(rng, sheet.cols(), k) {
                    let width = sheet.column_widths()[col] + rng.random_range(40..=200);
                    push(sheet, EditCommand::SetColumnWidth { col, width });
                }
            }
        }
        EditBehavior::DeleteContent => {
            let filled = |sheet: &HoneySheet, col: Option<usize>| -> Vec<(usize, usize)> {
                let mut cells = Vec::new();
                for (r, row) in sheet.grid().iter().enumerate() {
                    for (c, cell) in row.iter().enumerate() {
                        let in_col = col.is_none_or(|want| want == c);
                        if in_col && !cell.value.is_empty() && (col.is_none() || r > 0) {
                            cells.push((r, c));
                        }
                    }
                }
                cells
            };
            let iban_col = sheet.grid().first().and_then(|h| h.iter().position(|c| c.value == "IBAN"));
            let mut targets = iban_col.map(|c| filled(sheet, Some(c))).unwrap_or_default();
            if targets.is_empty() {
                targets = filled(sheet, None);
            }
            if targets.is_empty() {
                if sheet.rows() == 0 || sheet.cols() == 0 {
                    push(sheet, EditCommand::InsertRow { index: 0 });
                } else {
                    push(sheet, EditCommand::SetValue { row: 0, col: 0, value: "-".into() });
                }
            } else {
                let k = rng.random_range(1..=targets.len());
                for i in index::sample(rng, targets.len(), k) {
                    let (row, col) = targets[i];
                    push(sheet, EditCommand::SetValue { row, col, value: String::new() });
                }
            }
        }
        EditBehavior::Deface => {
            if sheet.cols() == 0 {
                push(sheet, EditCommand::InsertCol { index: 0 });
            }
            let cells = sheet.rows() * sheet.cols();
            if cells > 0 {
                for i in index::sample(rng, cells, cells.min(4)) {
                    let (row, col) = (i / sheet.cols(), i % sheet.cols());
                    let old = sheet.cell(row, col).expect("in range").format.font_size.get();
                    let size = if old < 60 { old + 8 } else { 8 };
                    let format = CellFormat::new(size, Rgb(255, 0, 0), Rgb(0, 0, 0)).expect("non-zero");
                    push(sheet, EditCommand::SetFormat { row, col, format });
                }
            }
            let links: Vec<(usize, usize)> = sheet
                .grid()
                .iter()
                .enumerate()
                .flat_map(|(r, row)| row.iter().enumerate().filter(|(_, c)| c.value.starts_with("http")).map(move |(c, _)| (r, c)))
                .collect();
            if let Some(&(row, col)) = links.choose(rng) {
                let value = format!("https://paste.example.org/{:08x}", rng.random::<u32>());
                push(sheet, EditCommand::SetValue { row, col, value });
            }
            let row = sheet.rows();
            push(sheet, EditCommand::InsertRow { index: row });
            let value = INSULTS.choose(rng).expect("non-empty").to_string();
            push(sheet, EditCommand::SetValue { row, col: 0, value });
        }
    }
    out
}
