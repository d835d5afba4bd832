use std::collections::{HashMap, HashSet};
use std::net::SocketAddr;

use super::{Action, ActionTrace, SimError};
use crate::analytics::GroundTruth;
use crate::honeylink::{ClickRequest, LinkServer, TargetClass};
use crate::notify::{Mailbox, Notification};
use crate::sheetstore::{SheetId, SheetMonitor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ReplayStats {
    pub opens: usize,
    pub modifications: usize,
    pub clicks: usize,
}

/// Drives `trace` through the monitors, the mailbox and the link server.
///
/// Opens and edit sessions become notifications; clicks become requests to
/// `server`. Virtual timestamps are kept, so the run takes as long as the
/// work does. The first action that is rejected (unknown sheet, an edit the
/// sheet refuses or that changes nothing, a click that is not redirected)
/// stops the replay.
pub fn replay(
    trace: &ActionTrace,
    monitors: &mut [SheetMonitor],
    mailbox: &Mailbox,
    server: &LinkServer,
) -> Result<ReplayStats, SimError> {
    if let Some(i) = trace.first_unordered() {
        return Err(SimError::Unordered(i));
    }
    let by_id: HashMap<SheetId, usize> =
        monitors.iter().enumerate().map(|(i, m)| (m.sheet().sheet_id().clone(), i)).collect();
    let mut stats = ReplayStats::default();
    for (index, step) in trace.actions.iter().enumerate() {
        let reject = |reason: String| SimError::Rejected { index, reason };
        let &m = by_id.get(&step.sheet_id).ok_or_else(|| reject(format!("unknown sheet {}", step.sheet_id)))?;
        let monitor = &mut monitors[m];
        match &step.action {
            Action::Open => {
                mailbox.emit(&monitor.record_open(step.at)).map_err(|e| reject(e.to_string()))?;
                stats.opens += 1;
            }
            Action::Edit { edits, .. } => {
                let since = monitor.last_snapshot().taken_at();
                let event = monitor
                    .apply(edits, step.at)
                    .map_err(|e| reject(e.to_string()))?
                    .ok_or_else(|| reject("edit session changed nothing".into()))?;
                mailbox
                    .deliver(&Notification::from_event(&event, Some(since)))
                    .map_err(|e| reject(e.to_string()))?;
                stats.modifications += 1;
            }
            Action::Click { token, ip, port, user_agent, .. } => {
                let response = server.handle(ClickRequest {
                    peer: SocketAddr::new(*ip, *port),
                    method: "GET".into(),
                    path: format!("/t/{token}"),
                    headers: vec![("user-agent".into(), user_agent.clone())],
                    received_at: step.at,
                });
                if response.status != 302 {
                    return Err(reject(format!("token {token} answered {}", response.status)));
                }
                stats.clicks += 1;
            }
        }
    }
    Ok(stats)
}

/// Counts only the simulator can know, such as how many distinct visitors
/// were behind the opens.
pub fn ground_truth(trace: &ActionTrace) -> GroundTruth {
    let mut visitors = HashSet::new();
    let mut modifying = HashSet::new();
    let mut clicking = HashSet::new();
    let mut truth = GroundTruth::default();
    for a in &trace.actions {
        visitors.insert(a.visitor.as_str());
        match &a.action {
            Action::Open => truth.visits += 1,
            Action::Edit { .. } => {
                modifying.insert(a.visitor.as_str());
            }
            Action::Click { channel, .. } => {
                clicking.insert(a.visitor.as_str());
                truth.clicks_all_channels += 1;
                if *channel == TargetClass::Controlled {
                    truth.clicks_controlled_channel += 1;
                }
            }
        }
    }
    truth.distinct_visitors = visitors.len() as u64;
    truth.modifying_visitors = modifying.len() as u64;
    truth.clicking_visitors = clicking.len() as u64;
    truth
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::GeoTable;
    use crate::honeylink::{AccessLog, MemorySink};
    use crate::simharness::fixtures::world;
    use crate::simharness::{default_profiles, simulate, EditBehavior, SimParams, TargetCounts, TimedAction};
    use crate::sheetstore::{EditCommand, EventKind, HoneySheet, ModificationClass};
    use crate::simharness::generate::make_edits;
    use chrono::{Duration, TimeZone, Utc};
    use rand::SeedableRng;
    use std::sync::Arc;

    struct Rig {
        _dir: tempfile::TempDir,
        monitors: Vec<SheetMonitor>,
        mailbox: Mailbox,
        server: LinkServer,
        sink: MemorySink,
    }

    fn rig(sheets: &[HoneySheet], registry: crate::honeylink::LinkRegistry) -> Rig {
        let dir = tempfile::tempdir().unwrap();
        let t0 = Utc.with_ymd_and_hms(2016, 1, 1, 0, 0, 0).unwrap();
        let sink = MemorySink::new();
        Rig {
            monitors: sheets.iter().map(|s| SheetMonitor::new(s.clone(), t0)).collect(),
            mailbox: Mailbox::open(dir.path()).unwrap(),
            server: LinkServer::new(Arc::new(registry), Arc::new(AccessLog::new(sink.clone()))),
            sink,
            _dir: dir,
        }
    }

    fn params() -> SimParams {
        SimParams { seed: 11, start: Utc.with_ymd_and_hms(2016, 1, 23, 0, 0, 0).unwrap(), duration_days: 30 }
    }

    #[test]
    fn empty_trace_does_nothing() {
        let (sheets, reg) = world(1);
        let mut r = rig(&sheets, reg);
        let stats = replay(&ActionTrace::default(), &mut r.monitors, &r.mailbox, &r.server).unwrap();
        assert_eq!(stats, ReplayStats::default());
        assert!(r.mailbox.message_paths().unwrap().is_empty());
        assert!(r.sink.lines().is_empty());
    }

    #[test]
    fn replay_is_lossless() {
        let (sheets, reg) = world(3);
        let targets = TargetCounts {
            opens: 40,
            modifications: 12,
            clicks: 30,
            controlled_visits: Some(10),
            unique_ips: None,
            countries: None,
            phases: vec![],
        };
        let trace = simulate(&default_profiles(), &sheets, &reg, &GeoTable::default(), &params(), Some(&targets)).unwrap();
        let mut r = rig(&sheets, reg);
        let stats = replay(&trace, &mut r.monitors, &r.mailbox, &r.server).unwrap();
        assert_eq!((stats.opens, stats.modifications, stats.clicks), (40, 12, 30));
        let ingested = r.mailbox.ingest().unwrap();
        assert_eq!(ingested.quarantined, 0);
        assert_eq!(ingested.timeline.count(EventKind::Open), 40);
        assert_eq!(ingested.timeline.count(EventKind::Modification), 12);
        assert_eq!(r.sink.lines().len(), 30);
        let truth = ground_truth(&trace);
        assert_eq!((truth.visits, truth.clicks_all_channels, truth.clicks_controlled_channel), (40, 30, 10));
        assert!(truth.distinct_visitors <= 40);
    }

    #[test]
    fn lurkers_only_expand_columns() {
        let (sheets, reg) = world(2);
        let lurker = vec![default_profiles().remove(1)];
        let trace = simulate(&lurker, &sheets, &reg, &GeoTable::default(), &params(), None).unwrap();
        assert!(trace.count_edits() > 0);
        let mut r = rig(&sheets, reg);
        replay(&trace, &mut r.monitors, &r.mailbox, &r.server).unwrap();
        let timeline = r.mailbox.ingest().unwrap().timeline;
        let classes: Vec<_> = timeline.events().iter().filter_map(|e| e.modification_class()).collect();
        assert_eq!(classes.len(), trace.count_edits());
        assert!(classes.iter().all(|c| *c == ModificationClass::LayoutOnly));
    }

    #[test]
    fn one_deface_is_one_mixed_event() {
        let (sheets, reg) = world(1);
        let mut shadow = sheets[0].clone();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let edits = make_edits(&mut shadow, EditBehavior::Deface, &mut rng);
        let at = Utc.with_ymd_and_hms(2016, 2, 1, 0, 0, 0).unwrap();
        let trace = ActionTrace {
            seed: 0,
            actions: vec![TimedAction {
                at,
                visitor: "v".into(),
                sheet_id: sheets[0].sheet_id().clone(),
                action: Action::Edit { behavior: EditBehavior::Deface, edits },
            }],
        };
        let mut r = rig(&sheets, reg);
        replay(&trace, &mut r.monitors, &r.mailbox, &r.server).unwrap();
        let timeline = r.mailbox.ingest().unwrap().timeline;
        assert_eq!(timeline.len(), 1);
        assert_eq!(timeline.events()[0].modification_class(), Some(ModificationClass::Mixed));
    }

    #[test]
    fn rejected_action_reports_index() {
        let (sheets, reg) = world(1);
        let at = Utc.with_ymd_and_hms(2016, 2, 1, 0, 0, 0).unwrap();
        let id = sheets[0].sheet_id().clone();
        let step = |i: i64, action| TimedAction { at: at + Duration::minutes(i), visitor: "v".into(), sheet_id: id.clone(), action };
        let trace = ActionTrace {
            seed: 0,
            actions: vec![
                step(0, Action::Open),
                step(1, Action::Edit { behavior: EditBehavior::ExpandColumns, edits: vec![EditCommand::DeleteRow { index: 999 }] }),
            ],
        };
        let mut r = rig(&sheets, reg);
        assert!(matches!(replay(&trace, &mut r.monitors, &r.mailbox, &r.server), Err(SimError::Rejected { index: 1, .. })));
        let unchanged = ActionTrace {
            seed: 0,
            actions: vec![step(0, Action::Edit { behavior: EditBehavior::ExpandColumns, edits: vec![] })],
        };
        assert!(matches!(replay(&unchanged, &mut r.monitors, &r.mailbox, &r.server), Err(SimError::Rejected { index: 0, .. })));
        let click = ActionTrace {
            seed: 0,
            actions: vec![step(0, Action::Click {
                token: "nosuch".into(),
                channel: TargetClass::Controlled,
                ip: "192.0.2.1".parse().unwrap(),
                port: 5000,
                user_agent: String::new(),
            })],
        };
        assert!(matches!(replay(&click, &mut r.monitors, &r.mailbox, &r.server), Err(SimError::Rejected { index: 0, .. })));
        let backwards = ActionTrace { seed: 0, actions: vec![step(1, Action::Open), step(0, Action::Open)] };
        assert!(matches!(replay(&backwards, &mut r.monitors, &r.mailbox, &r.server), Err(SimError::Unordered(1))));
    }
}
