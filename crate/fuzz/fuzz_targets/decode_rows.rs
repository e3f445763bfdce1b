#![no_main]

use crossbench::codec::ErasedSequence;
use crossbench::containers::{Collection, ContainerKind};
use crossbench::event::{CaloDigi, CaloHit, GenParticle, SimTrack, SimVertex, TrackDigi, TrackHit};
use libfuzzer_sys::fuzz_target;

fn sequence(class: u8, kind: ContainerKind) -> Box<dyn ErasedSequence> {
    match class % 7 {
        0 => Box::new(Collection::<GenParticle>::new(kind)),
        1 => Box::new(Collection::<SimVertex>::new(kind)),
        2 => Box::new(Collection::<SimTrack>::new(kind)),
        3 => Box::new(Collection::<CaloHit>::new(kind)),
        4 => Box::new(Collection::<TrackHit>::new(kind)),
        5 => Box::new(Collection::<CaloDigi>::new(kind)),
        _ => Box::new(Collection::<TrackDigi>::new(kind)),
    }
}

fuzz_target!(|data: &[u8]| {
    let Some((&sel, rows)) = data.split_first() else { return };
    let widen = sel & 0x80 != 0;
    let kind = ContainerKind::ALL[(sel as usize >> 3) & 3];
    let mut seq = sequence(sel, kind);
    if seq.read_rows(rows, widen).is_ok() {
        let mut again = Vec::new();
        seq.write_rows(widen, &mut again);
        if !widen {
            assert_eq!(again, rows);
        }
    }
});
