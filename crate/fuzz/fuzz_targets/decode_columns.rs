#![no_main]

use crossbench::codec::ErasedSequence;
use crossbench::containers::{Collection, ContainerKind};
use crossbench::event::{CaloHit, GenParticle, SimTrack, SimVertex, TrackHit};
use libfuzzer_sys::fuzz_target;

fn sequence(class: u8, kind: ContainerKind) -> Box<dyn ErasedSequence> {
    match class % 5 {
        0 => Box::new(Collection::<GenParticle>::new(kind)),
        1 => Box::new(Collection::<SimVertex>::new(kind)),
        2 => Box::new(Collection::<SimTrack>::new(kind)),
        3 => Box::new(Collection::<CaloHit>::new(kind)),
        _ => Box::new(Collection::<TrackHit>::new(kind)),
    }
}

fuzz_target!(|data: &[u8]| {
    if data.len() < 2 {
        return;
    }
    let kind = ContainerKind::ALL[(data[0] as usize >> 3) & 3];
    let mut seq = sequence(data[0], kind);
    let count = data[1] as usize;
    // Cut the rest into one column per attribute, at the schema widths when
    // possible so that valid inputs are reachable.
    let mut rest = &data[2..];
    let mut columns = Vec::new();
    for spec in seq.schema().attributes {
        let want = (count * spec.width as usize).min(rest.len());
        let (col, tail) = rest.split_at(want);
        columns.push(col);
        rest = tail;
    }
    if seq.read_columns(count, &columns).is_ok() {
        assert_eq!(seq.len(), count);
        for (attr, col) in columns.iter().enumerate() {
            let mut again = Vec::new();
            seq.write_column(attr, &mut again).unwrap();
            assert_eq!(&again, col);
        }
    }
});
