use chrono::{Duration, TimeZone, Utc};
use honeysheets::notify::{parse_notification, EventTimeline, Mailbox, Notification};
use honeysheets::sheetstore::{
    Cell, CellChange, CellFormat, ChangeSet, LayoutChange, Rgb, SheetEvent, SheetId, StructuralChange, StructuralKind,
};
use proptest::prelude::*;

fn cell() -> impl Strategy<Value = Cell> {
    (".{0,12}", 1u16..40, any::<(u8, u8, u8)>()).prop_map(|(value, size, (r, g, b))| Cell {
        value,
        format: CellFormat::new(size, Rgb(r, g, b), Rgb(255, 255, 255)).unwrap(),
    })
}

fn changeset() -> impl Strategy<Value = ChangeSet> {
    let cells = proptest::collection::vec((0usize..60, 0usize..20, cell(), cell()), 0..4)
        .prop_map(|v| v.into_iter().map(|(row, col, old, new)| CellChange { row, col, old, new }).collect::<Vec<_>>());
    let kinds = prop_oneof![
        Just(StructuralKind::RowInserted),
        Just(StructuralKind::RowDeleted),
        Just(StructuralKind::ColInserted),
        Just(StructuralKind::ColDeleted),
    ];
    let structural = proptest::collection::vec((kinds, 0usize..60), 0..3)
        .prop_map(|v| v.into_iter().map(|(kind, index)| StructuralChange { kind, index }).collect::<Vec<_>>());
    let layout = proptest::collection::vec((0usize..20, 1u32..500, 1u32..500), 0..3).prop_map(|v| {
        v.into_iter().map(|(col, old_width, new_width)| LayoutChange { col, old_width, new_width }).collect::<Vec<_>>()
    });
    (cells, structural, layout)
        .prop_map(|(cell_changes, structural_changes, layout_changes)| ChangeSet { cell_changes, structural_changes, layout_changes })
        .prop_filter("non-empty", |cs| !cs.is_empty())
}

fn event() -> impl Strategy<Value = SheetEvent> {
    let id = "[A-Za-z0-9_-]{1,24}".prop_map(|s| SheetId::new(s).unwrap());
    let at = (0i64..10_000_000_000).prop_map(|ms| Utc.with_ymd_and_hms(2016, 1, 1, 0, 0, 0).unwrap() + Duration::milliseconds(ms));
    prop_oneof![
        (id.clone(), at.clone()).prop_map(|(id, at)| SheetEvent::open(id, at)),
        (id, at, changeset()).prop_map(|(id, at, cs)| SheetEvent::modification(id, at, cs).unwrap()),
    ]
}

proptest! {
    #[test]
    fn render_then_parse_is_identity(e in event()) {
        let text = Notification::from_event(&e, None).render();
        prop_assert_eq!(parse_notification(&text).unwrap(), e.clone());
        let crlf = text.replace('\n', "\r\n");
        prop_assert_eq!(parse_notification(&crlf).unwrap(), e);
    }

    #[test]
    fn mailbox_ingest_ignores_delivery_order(events in proptest::collection::vec(event(), 0..30), reverse in any::<bool>()) {
        let dir = tempfile::tempdir().unwrap();
        let mailbox = Mailbox::open(dir.path()).unwrap();
        let ordered: Vec<&SheetEvent> = if reverse { events.iter().rev().collect() } else { events.iter().collect() };
        for e in ordered {
            mailbox.emit(e).unwrap();
        }
        let ingested = mailbox.ingest().unwrap();
        prop_assert_eq!(ingested.quarantined, 0);
        prop_assert_eq!(ingested.timeline, EventTimeline::from_events(events));
    }
}
