mod common;

use std::io::Cursor;

use proptest::prelude::*;

use crossbench::containers::ContainerKind;
use crossbench::event::{generate_event, Event, Folder, EVENT_SCHEMAS};
use crossbench::store::keys::{KeysReader, KeysWriter};
use crossbench::store::tree::{TreeLayout, TreeReader, TreeWriter};
use crossbench::store::{ManagerKind, StoreOptions, StoreReader, StoreWriter};

const SAMPLE_SEED: u64 = 20;
const SAMPLE_REDUCTION: u32 = 400;

fn sample_events() -> Vec<Event> {
    (0..3)
        .map(|i| generate_event(SAMPLE_SEED, i, SAMPLE_REDUCTION, ContainerKind::ValueSeq).unwrap())
        .collect()
}

fn keys_bytes(events: &[Event], level: u8) -> Vec<u8> {
    let mut w = KeysWriter::new(Vec::new(), level).unwrap();
    for (i, e) in events.iter().enumerate() {
        w.write_folder("minbias", i as u64, e).unwrap();
    }
    w.finish().unwrap().0
}

fn tree_bytes(events: &[Event], layout: TreeLayout) -> Vec<u8> {
    let mut w = TreeWriter::new(Cursor::new(Vec::new()), &EVENT_SCHEMAS, layout).unwrap();
    for e in events {
        w.append(e).unwrap();
    }
    w.finish().unwrap().0.into_inner()
}

fn split_layout() -> TreeLayout {
    TreeLayout::split(1, 256)
}

#[test]
fn golden_keys_file() {
    let events = sample_events();
    common::check_golden("sample_keys.rtbk", &keys_bytes(&events, 1));
    let bytes = std::fs::read(common::data_path("sample_keys.rtbk")).unwrap();
    let mut r = KeysReader::open(Cursor::new(bytes)).unwrap();
    let mut out = Event::new(ContainerKind::SlotArray);
    for (i, e) in events.iter().enumerate() {
        r.read_named(&format!("minbias{i}"), &mut out).unwrap();
        assert!(out.same_content(e));
    }
}

#[test]
fn golden_tree_file() {
    let events = sample_events();
    common::check_golden("sample_split.rtbt", &tree_bytes(&events, split_layout()));
    common::check_golden("sample_matrix.rtbt", &tree_bytes(&events, TreeLayout::matrix(0, 8000)));
    for name in ["sample_split.rtbt", "sample_matrix.rtbt"] {
        let bytes = std::fs::read(common::data_path(name)).unwrap();
        let mut r = TreeReader::open(Cursor::new(bytes)).unwrap();
        let mut out = Event::new(ContainerKind::IndirectArray);
        for (i, e) in events.iter().enumerate().rev() {
            r.read_entry(i as u64, &mut out).unwrap();
            assert!(out.same_content(e), "{name} entry {i}");
        }
    }
}

#[test]
fn documented_header_layout() {
    let bytes = tree_bytes(&sample_events(), split_layout());
    assert_eq!(&bytes[0..4], b"RTBT");
    assert_eq!(u16::from_le_bytes([bytes[4], bytes[5]]), 1);
    assert_eq!(bytes[6], 0, "widen");
    assert_eq!(bytes[7], 99, "split");
    assert_eq!(bytes[8], 1, "level");
    assert_eq!(u16::from_le_bytes([bytes[10], bytes[11]]), 5, "classes");
    assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 256, "basket size");
    assert_eq!(u64::from_le_bytes(bytes[16..24].try_into().unwrap()), 3, "entries");
    let n = bytes.len();
    assert_eq!(&bytes[n - 4..], b"RTBT");
    let index_offset = u64::from_le_bytes(bytes[n - 12..n - 4].try_into().unwrap()) as usize;
    let branches = u32::from_le_bytes(bytes[index_offset..index_offset + 4].try_into().unwrap());
    assert_eq!(branches, 45);

    let keys = keys_bytes(&sample_events(), 0);
    assert_eq!(&keys[0..6], b"RTBK\x01\x00");
    // First record: name "minbias0" right after the 8-byte header.
    assert_eq!(u16::from_le_bytes([keys[8], keys[9]]), 8);
    assert_eq!(&keys[10..18], b"minbias0");
    let payload_len = u64::from_le_bytes(keys[18..26].try_into().unwrap());
    let e = &sample_events()[0];
    assert_eq!(payload_len as usize, 9 + 20 + e.raw_bytes());
    assert_eq!(keys[26], 0, "stored block level");
}

fn strategy_round_trip(events: &[Event], manager: ManagerKind, container: ContainerKind, level: u8, split: u8) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f");
    let opts = StoreOptions {
        compression: level,
        split,
        basket_size: 2000,
    };
    let mut w = StoreWriter::create::<Event>(manager, &path, "minbias", opts).unwrap();
    for e in events {
        w.write(e).unwrap();
    }
    assert_eq!(w.finish().unwrap().entries, events.len() as u64);
    let mut r = StoreReader::open(manager, &path, "minbias").unwrap();
    let mut out = Event::new(container);
    let n = events.len() as u64;
    // Forward, then a stride permutation.
    let order = (0..n).chain((0..n).map(|i| (i * 7 + 3) % n));
    for i in order {
        r.read_entry(i, &mut out).unwrap();
        assert!(
            out.same_content(&events[i as usize]),
            "{manager}/{container} level {level} split {split} entry {i}"
        );
    }
}

#[test]
fn every_strategy_round_trips() {
    let events: Vec<Event> = (0..9)
        .map(|i| generate_event(77, i, 60, ContainerKind::ValueSeq).unwrap())
        .collect();
    for manager in ManagerKind::ALL {
        for container in ContainerKind::ALL {
            for level in [0, 1, 9] {
                for split in [0, 99] {
                    strategy_round_trip(&events, manager, container, level, split);
                }
            }
        }
    }
}

fn arb_events() -> impl Strategy<Value = Vec<Event>> {
    (any::<u64>(), 1u64..6, 20u32..400).prop_map(|(seed, n, reduction)| {
        (0..n)
            .map(|i| {
                let mut e = generate_event(seed, i, reduction, ContainerKind::ValueSeq).unwrap();
                e.set_id(i);
                e
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_events_round_trip(
        events in arb_events(),
        m in 0usize..3,
        c in 0usize..4,
        level in prop::sample::select(vec![0u8, 1, 9]),
        split in prop::sample::select(vec![0u8, 99]),
    ) {
        strategy_round_trip(&events, ManagerKind::ALL[m], ContainerKind::ALL[c], level, split);
    }
}

#[test]
fn flipped_bytes_never_panic() {
    let events = sample_events();
    let files = [
        keys_bytes(&events, 1),
        tree_bytes(&events, split_layout()),
        tree_bytes(&events, TreeLayout::matrix(1, 300)),
    ];
    for (k, file) in files.iter().enumerate() {
        for pos in (0..file.len()).step_by(7) {
            let mut bad = file.clone();
            bad[pos] ^= 0xA5;
            let mut out = Event::new(ContainerKind::SlotArray);
            if k == 0 {
                if let Ok(mut r) = KeysReader::open(Cursor::new(bad)) {
                    for i in 0..r.len() {
                        let _ = r.read_index(i, &mut out);
                    }
                }
            } else if let Ok(mut r) = TreeReader::open(Cursor::new(bad)) {
                for i in 0..r.entry_count() {
                    let _ = r.read_entry(i, &mut out);
                }
            }
        }
    }
}
