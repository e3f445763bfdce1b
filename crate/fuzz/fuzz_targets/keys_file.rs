#![no_main]

use std::io::Cursor;

use crossbench::containers::ContainerKind;
use crossbench::event::{Digis, Event, Folder};
use crossbench::store::KeysReader;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(mut r) = KeysReader::open(Cursor::new(data)) else { return };
    let mut event = Event::new(ContainerKind::SlotArray);
    let mut digis = Digis::new(ContainerKind::IndirectArray);
    for i in 0..r.len().min(64) {
        let _ = r.read_index(i, &mut event);
        let _ = r.read_index(i, &mut digis);
    }
    if let Some(name) = r.directory().first().map(|e| e.name.clone()) {
        let _ = r.read_named(&name, &mut event);
    }
});
