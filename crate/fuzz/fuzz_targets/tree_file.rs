#![no_main]

use std::io::Cursor;

use crossbench::containers::ContainerKind;
use crossbench::event::{Digis, Event, Folder};
use crossbench::store::TreeReader;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(mut r) = TreeReader::open(Cursor::new(data)) else { return };
    let mut event = Event::new(ContainerKind::ValueSeq);
    let mut digis = Digis::new(ContainerKind::SlotArray);
    let n = r.entry_count().min(64);
    for i in (0..n).rev() {
        let _ = r.read_entry(i, &mut event);
        let _ = r.read_entry(i, &mut digis);
    }
});
