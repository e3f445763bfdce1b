//! Stand-in for the front-end electronics: groups hits by readout unit and
//! sums them.

use super::classes::{CaloDigi, TrackDigi};
use super::{Digis, Event, Folder};
use crate::containers::TypedSequence;

/// Cells at or below this summed energy (GeV) produce no digi.
pub const DEFAULT_THRESHOLD: f32 = 0.05;

/// Sums contributions per id. Contributions are summed in a canonical order
/// (by id, then by value) so the result does not depend on input order.
fn group_sum(mut hits: Vec<(i32, f64)>) -> Vec<(i32, u32, f64)> {
    hits.sort_unstable_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut out: Vec<(i32, u32, f64)> = Vec::new();
    for (id, v) in hits {
        match out.last_mut() {
            Some(last) if last.0 == id => {
                last.1 += 1;
                last.2 += v;
            }
            _ => out.push((id, 1, v)),
        }
    }
    out
}

/// Digitizes a crossing made of `signal` plus `pileups`.
///
/// Calorimeter digis sum `energy * weight` per cell and keep cells above
/// `threshold`; tracker digis count hits and sum energy loss per detector.
/// Both come out in ascending id order.
pub fn digitize_into<'a, I>(signal: &'a Event, pileups: I, threshold: f32, out: &mut Digis)
where
    I: IntoIterator<Item = &'a Event>,
{
    let mut calo: Vec<(i32, f64)> = Vec::new();
    let mut track: Vec<(i32, f64)> = Vec::new();
    for event in std::iter::once(signal).chain(pileups) {
        calo.extend(
            event
                .calo_hits
                .iter()
                .map(|h| (h.cell_id, h.energy as f64 * h.weight as f64)),
        );
        track.extend(
            event
                .track_hits
                .iter()
                .map(|h| (h.detector_id as i32, h.energy_loss)),
        );
    }

    out.clear();
    for (cell_id, _, amplitude) in group_sum(calo) {
        let amplitude = amplitude as f32;
        if amplitude > threshold {
            out.calo_digis.add(CaloDigi { cell_id, amplitude });
        }
    }
    for (detector_id, hit_count, charge) in group_sum(track) {
        out.track_digis.add(TrackDigi {
            detector_id,
            hit_count: hit_count as i32,
            charge: charge as f32,
        });
    }
}

/// Allocating form of [`digitize_into`]; the output uses the signal's container kind.
pub fn digitize<'a, I>(signal: &'a Event, pileups: I, threshold: f32) -> Digis
where
    I: IntoIterator<Item = &'a Event>,
{
    let mut out = Digis::new(signal.container_kind());
    digitize_into(signal, pileups, threshold, &mut out);
    out
}
