use chrono::{Duration, TimeZone, Utc};
use honeysheets::analytics::{aggregate, ExperimentBounds, GeoTable};
use honeysheets::honeylink::{AccessLogEntry, LinkRegistry, TargetClass};
use honeysheets::notify::EventTimeline;
use honeysheets::sheetstore::{Cell, CellChange, ChangeSet, LayoutChange, SheetEvent, SheetId};
use honeysheets::time::Timestamp;
use honeysheets::Exec;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const UAS: &[&str] = &[
    "Mozilla/5.0 (Windows NT 10.0) AppleWebKit/537.36 Chrome/48.0 Safari/537.36",
    "Mozilla/5.0 (X11; Linux x86_64; rv:44.0) Gecko/20100101 Firefox/44.0",
    "curl/7.47.0",
];

fn epoch() -> Timestamp {
    Utc.with_ymd_and_hms(2016, 1, 23, 0, 0, 0).unwrap()
}

fn registry() -> (LinkRegistry, Vec<String>) {
    let mut reg = LinkRegistry::new("pay.example.net", "https://pay.example.net", "https://www.google.com").unwrap();
    let sid = SheetId::new("s").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut tokens = Vec::new();
    for i in 0..6 {
        let (class, dest) = if i < 2 {
            (TargetClass::Controlled, format!("https://pay.example.net/{i}"))
        } else {
            (TargetClass::DecoyBank, format!("https://bank.example/{i}"))
        };
        tokens.push(reg.mint_token(class, &dest, &sid, &mut rng).unwrap().token.to_string());
    }
    (reg, tokens)
}

fn geo() -> GeoTable {
    GeoTable::from_csv("cidr,country\n10.0.0.0/8,XA\n10.1.0.0/16,XB\n10.1.2.0/24,XC\n".as_bytes()).unwrap()
}

proptest! {
    #[test]
    fn totals_and_order_independence(
        hits in proptest::collection::vec((0u32..0x0200_0000, 0usize..8, 0usize..3, 0i64..80), 0..120),
        events in proptest::collection::vec((any::<bool>(), 0i64..80, 0u8..3), 0..60),
        seed in any::<u64>(),
    ) {
        let (reg, tokens) = registry();
        let logs: Vec<AccessLogEntry> = hits
            .iter()
            .map(|&(ip, tok, ua, day)| {
                let token = tokens.get(tok).cloned();
                AccessLogEntry {
                    ip: std::net::Ipv4Addr::from(0x0a00_0000 | ip).into(),
                    port: 1234,
                    method: "GET".into(),
                    path: format!("/t/{}", token.clone().unwrap_or_else(|| "zzz".into())),
                    headers: vec![("User-Agent".into(), UAS[ua].into())],
                    received_at: epoch() + Duration::days(day),
                    token,
                }
            })
            .collect();
        let sid = SheetId::new("s").unwrap();
        let timeline = EventTimeline::from_events(events.iter().map(|&(open, day, k)| {
            let at = epoch() + Duration::days(day);
            if open {
                return SheetEvent::open(sid.clone(), at);
            }
            let mut cs = ChangeSet::default();
            if k != 1 {
                cs.cell_changes.push(CellChange { row: 1, col: 1, old: Cell::text("a"), new: Cell::text("") });
            }
            if k != 0 {
                cs.layout_changes.push(LayoutChange { col: 0, old_width: 100, new_width: 200 });
            }
            SheetEvent::modification(sid.clone(), at, cs).unwrap()
        }));
        let bounds = vec![
            ExperimentBounds { name: "a".into(), start: epoch(), end: epoch() + Duration::days(46) },
            ExperimentBounds { name: "b".into(), start: epoch() + Duration::days(46), end: epoch() + Duration::days(72) },
        ];
        let geo = geo();
        let report = aggregate(&timeline, &logs, &geo, &reg, &bounds, Exec::Parallel).unwrap();
        prop_assert!(report.total.is_consistent());
        for e in &report.experiments {
            prop_assert!(e.section.is_consistent());
        }
        prop_assert_eq!(report.total.open_count + report.total.modification_count, timeline.len() as u64);
        prop_assert_eq!(report.total.click_count + report.total.other_request_count, logs.len() as u64);
        let in_bounds: u64 = report.experiments.iter().map(|e| e.section.click_count).sum();
        prop_assert!(in_bounds <= report.total.click_count);

        let mut shuffled = logs.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(&aggregate(&timeline, &shuffled, &geo, &reg, &bounds, Exec::Sequential).unwrap(), &report);
    }
}
