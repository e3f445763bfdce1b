//! Seeded synthetic event generator.
//!
//! Element counts are Poisson around the reference means divided by the
//! reduction factor. Every attribute value is a pure function of
//! `(seed, event_id, class, element index, attribute)`, obtained by hashing
//! that key, so events can be regenerated in any order.
//!
//! Measured quantities are modelled as digitized readings: an integer count
//! from a peaked distribution times a per-attribute step, rounded to three
//! significant digits. Each column therefore draws from a small skewed set
//! of values while whole rows rarely repeat. Hits come in groups (tracks,
//! showers) that share the group's kinematics, most generated particles
//! share the primary vertex, and ids come from small correlated ranges.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use super::classes::*;
use super::Event;
use super::Folder;
use crate::containers::{ContainerKind, TypedSequence};
use crate::error::{Error, Result};

/// Mean element counts per minimum-bias event, in folder order
/// (gen particles, sim vertices, sim tracks, calo hits, track hits).
pub const PAPER_MEANS: [f64; 5] = [351.0, 584.0, 169.0, 3282.0, 1871.0];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SizeMode {
    Raw,
    AllDouble,
}

/// Expected event size in bytes for the given per-class mean counts.
pub fn expected_event_bytes(multiplicities: &[f64; 5], mode: SizeMode) -> f64 {
    EVENT_SCHEMAS
        .iter()
        .zip(multiplicities)
        .map(|(schema, &count)| {
            let per_element = match mode {
                SizeMode::Raw => schema.raw_size(),
                SizeMode::AllDouble => schema.all_double_size(),
            };
            count * per_element as f64
        })
        .sum()
}

/// Rounds to three significant decimal digits.
pub fn quantize3(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let exponent = x.abs().log10().floor() as i32;
    let scale = 10f64.powi(2 - exponent);
    (x * scale).round() / scale
}

const TAG_COUNT: u64 = 0xC0;

pub(crate) fn mix(a: u64, b: u64) -> u64 {
    // splitmix64 finalizer over a combined word
    let mut z = a ^ b.wrapping_mul(0x9E37_79B9_7F4A_7C15).rotate_left(17);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-element value source keyed by `(seed, event, class, index)`.
struct Cell {
    key: u64,
}

impl Cell {
    fn new(seed: u64, event_id: u64, class: u64, index: u64) -> Self {
        Cell {
            key: mix(mix(mix(seed, event_id), class), index),
        }
    }

    fn bits(&self, attr: u64) -> u64 {
        mix(self.key, attr)
    }

    /// Uniform in [0, 1).
    fn uniform(&self, attr: u64) -> f64 {
        (self.bits(attr) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Integer in [0, n).
    fn below(&self, attr: u64, n: u64) -> u64 {
        ((self.bits(attr) as u128 * n as u128) >> 64) as u64
    }

    fn gauss(&self, attr: u64) -> f64 {
        let u1 = 1.0 - self.uniform(attr);
        let u2 = self.uniform(attr | 0x100);
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Exponentially distributed count with the given mean.
    fn counts_expo(&self, attr: u64, mean: f64) -> f64 {
        (-(1.0 - self.uniform(attr)).ln() * mean).floor()
    }

    /// Gaussian count centred on zero.
    fn counts_gauss(&self, attr: u64, sigma: f64) -> f64 {
        (self.gauss(attr) * sigma).round()
    }

    /// Uniform count in [-half, half].
    fn counts_flat(&self, attr: u64, half: u64) -> f64 {
        self.below(attr, 2 * half + 1) as f64 - half as f64
    }
}

fn q64(x: f64) -> f64 {
    quantize3(x)
}

fn q32(x: f64) -> f32 {
    quantize3(x) as f32
}

/// Particle species with their charges; pions dominate.
const SPECIES: [(i16, f32); 10] = [
    (211, 1.0),
    (-211, -1.0),
    (211, 1.0),
    (-211, -1.0),
    (22, 0.0),
    (111, 0.0),
    (321, 1.0),
    (-321, -1.0),
    (2212, 1.0),
    (11, -1.0),
];

/// Per-class element counts of event `event_id`.
pub fn multiplicities(seed: u64, event_id: u64, reduction: u32) -> Result<[usize; 5]> {
    if reduction == 0 {
        return Err(Error::InvalidArgument("reduction must be at least 1".into()));
    }
    let mut counts = [0usize; 5];
    for (class, count) in counts.iter_mut().enumerate() {
        let mean = PAPER_MEANS[class] / reduction as f64;
        let poisson = Poisson::new(mean)
            .map_err(|e| Error::InvalidArgument(format!("multiplicity mean {mean}: {e}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(mix(mix(mix(seed, event_id), class as u64), TAG_COUNT));
        *count = poisson.sample(&mut rng) as usize;
    }
    Ok(counts)
}

/// Hits per simulated track in the tracker, and per shower in the calorimeter.
const HITS_PER_TRACK: u64 = 11;
const HITS_PER_SHOWER: u64 = 20;

/// Barrel layer radii, mm.
const LAYER_RADII: [f64; 11] = [
    44.0, 73.0, 102.0, 255.0, 340.0, 430.0, 520.0, 610.0, 696.0, 782.0, 868.0,
];

fn gen_particle(cell: &Cell, vertex: &Cell) -> GenParticle {
    let (pdg_code, charge) = SPECIES[cell.below(10, SPECIES.len() as u64) as usize];
    // Most particles come straight from the event's primary vertex.
    let primary = cell.below(11, 5) != 0;
    let origin = if primary { vertex } else { cell };
    GenParticle {
        energy: q64(0.05 * (3.0 + cell.counts_expo(0, 60.0))),
        px: q32(0.02 * cell.counts_gauss(1, 50.0)),
        py: q32(0.02 * cell.counts_gauss(2, 50.0)),
        pz: q32(0.02 * cell.counts_gauss(3, 100.0)),
        x: q32(0.001 * origin.counts_gauss(4, 10.0)),
        y: q32(0.001 * origin.counts_gauss(5, 10.0)),
        z: q32(origin.counts_gauss(6, 50.0)),
        time: if primary { 0.0 } else { q32(0.01 * cell.counts_expo(7, 50.0)) },
        charge,
        weight: 1.0,
        pdg_code,
    }
}

fn sim_vertex(cell: &Cell, index: u64) -> SimVertex {
    let region = cell.below(7, 4);
    SimVertex {
        x: q32(0.5 * cell.counts_gauss(0, 40.0)),
        y: q32(0.5 * cell.counts_gauss(1, 40.0)),
        z: q32(2.0 * cell.counts_gauss(2, 50.0)),
        time: q32(0.05 * cell.counts_expo(3, 20.0)),
        energy_loss: if cell.below(4, 4) == 0 {
            q32(1.0e-5 * cell.counts_expo(4, 100.0))
        } else {
            0.0
        },
        quality: if cell.below(5, 8) == 0 { 0.5 } else { 1.0 },
        parent_index: (index / 2).min(i16::MAX as u64) as i16,
        process_type: cell.below(6, 8) as i16,
        region: region as i16,
        detector_id: (1 + 2 * region + cell.below(8, 2)) as i16,
        flags: if cell.below(9, 10) == 0 { 1 + cell.below(10, 3) as i16 } else { 0 },
    }
}

fn sim_track(cell: &Cell) -> SimTrack {
    let px = q64(0.02 * cell.counts_gauss(0, 50.0));
    let py = q64(0.02 * cell.counts_gauss(1, 50.0));
    let pz = q64(0.02 * cell.counts_gauss(2, 100.0));
    SimTrack {
        px,
        py,
        pz,
        energy: q64((px * px + py * py + pz * pz + 0.0196).sqrt()),
        time: if cell.below(5, 4) == 0 { q32(0.01 * cell.counts_expo(3, 50.0)) } else { 0.0 },
        pdg_code: SPECIES[cell.below(4, SPECIES.len() as u64) as usize].0,
    }
}

/// Consecutive calorimeter hits belong to one shower, which fixes the
/// neighbourhood of cells, the arrival time and the originating track.
fn calo_hit(cell: &Cell, shower: &Cell, index: u64, track_count: usize) -> CaloHit {
    let base = (index / HITS_PER_SHOWER) * HITS_PER_SHOWER * 6;
    CaloHit {
        energy: q32(0.001 * (1.0 + cell.counts_expo(0, 20.0))),
        time: q32(0.1 * (50.0 + shower.counts_gauss(1, 10.0))),
        cell_id: (base + (index % HITS_PER_SHOWER) * 6 + cell.below(2, 6)).min(i32::MAX as u64) as i32,
        track_index: shower.below(3, track_count.max(1) as u64) as i32,
        weight: if cell.below(4, 16) == 0 { 0.5 } else { 1.0 },
    }
}

/// Consecutive tracker hits belong to one track crossing the barrel layers
/// outwards: momentum and direction are the track's. Entry and exit points
/// are in the sensor's local frame, so their z is minus/plus half the sensor
/// thickness and the exit is displaced from the entry by the track slope.
fn track_hit(cell: &Cell, track: &Cell, index: u64) -> TrackHit {
    let layer = (index % HITS_PER_TRACK) as usize;
    let radius = LAYER_RADII[layer];
    let thickness = if layer < 3 { 0.285 } else if layer < 7 { 0.32 } else { 0.5 };
    let theta = q64(0.01 * (30.0 + track.below(9, 255) as f64));
    let phi = q64(0.01 * track.counts_flat(10, 314));
    let z = radius / theta.tan();
    // Local positions on a 0.1 mm by 1 mm readout grid.
    let u = 0.1 * cell.counts_flat(2, 300);
    let v = cell.counts_flat(3, 50);
    let exit_u = u + 0.1 * cell.counts_gauss(4, 3.0);
    let exit_v = v + (thickness / theta.tan()).round();
    TrackHit {
        tof: q64((radius * radius + z * z).sqrt() / 299.8),
        // Landau-like: most-probable deposit scaled by thickness plus a tail.
        energy_loss: q64(1.0e-6 * ((80.0 * thickness / 0.3).round() + cell.counts_expo(1, 15.0))),
        entry_x: q32(u),
        entry_y: q32(v),
        entry_z: (-thickness / 2.0) as f32,
        exit_x: q32(exit_u),
        exit_y: q32(exit_v),
        exit_z: (thickness / 2.0) as f32,
        momentum: q32(0.01 * (10.0 + track.counts_expo(8, 100.0))),
        theta: theta as f32,
        phi: phi as f32,
        detector_id: (layer * 16) as f32 + track.below(11, 16) as f32,
    }
}

/// Fills `out` with event `event_id`, reusing its containers.
pub fn generate_into(out: &mut Event, seed: u64, event_id: u64, reduction: u32) -> Result<()> {
    let counts = multiplicities(seed, event_id, reduction)?;
    out.clear();
    out.event_id = event_id;
    let cell = |class: u64, i: usize| Cell::new(seed, event_id, class, i as u64);
    // Per-event and per-group sources live on their own class tags.
    let group = |class: u64, g: u64| Cell::new(seed, event_id, class + 8, g);
    let vertex = group(0, 0);
    for i in 0..counts[0] {
        out.gen_particles.add(gen_particle(&cell(0, i), &vertex));
    }
    for i in 0..counts[1] {
        out.sim_vertices.add(sim_vertex(&cell(1, i), i as u64));
    }
    for i in 0..counts[2] {
        out.sim_tracks.add(sim_track(&cell(2, i)));
    }
    for i in 0..counts[3] {
        let shower = group(3, i as u64 / HITS_PER_SHOWER);
        out.calo_hits.add(calo_hit(&cell(3, i), &shower, i as u64, counts[2]));
    }
    for i in 0..counts[4] {
        let track = group(4, i as u64 / HITS_PER_TRACK);
        out.track_hits.add(track_hit(&cell(4, i), &track, i as u64));
    }
    Ok(())
}

/// Generates event `event_id` into containers of the given kind.
pub fn generate_event(seed: u64, event_id: u64, reduction: u32, kind: ContainerKind) -> Result<Event> {
    let mut event = Event::new(kind);
    generate_into(&mut event, seed, event_id, reduction)?;
    Ok(event)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_event_sizes() {
        assert_eq!(expected_event_bytes(&PAPER_MEANS, SizeMode::Raw), 212_840.0);
        assert_eq!(expected_event_bytes(&PAPER_MEANS, SizeMode::AllDouble), 401_288.0);
        assert_eq!((212_840.0f64 / 1024.0).round(), 208.0);
        assert_eq!((401_288.0f64 / 1024.0).round(), 392.0);
        assert_eq!(expected_event_bytes(&[0.0; 5], SizeMode::Raw), 0.0);
    }

    #[test]
    fn quantization() {
        assert_eq!(quantize3(1.23456), 1.23);
        assert_eq!(quantize3(-0.000123456), -0.000123);
        assert_eq!(quantize3(98765.0), 98800.0);
        assert_eq!(quantize3(0.0), 0.0);
    }

    #[test]
    fn zero_reduction_rejected() {
        assert!(matches!(
            generate_event(1, 0, 0, ContainerKind::ValueSeq),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn deterministic() {
        let a = generate_event(9, 4, 10, ContainerKind::ValueSeq).unwrap();
        let b = generate_event(9, 4, 10, ContainerKind::SlotArray).unwrap();
        assert!(a.same_content(&b));
        let c = generate_event(9, 5, 10, ContainerKind::ValueSeq).unwrap();
        assert!(!a.same_content(&c));
    }

    #[test]
    fn mean_calo_hits_full_scale() {
        let n = 10_000;
        let total: usize = (0..n).map(|e| multiplicities(3, e, 1).unwrap()[3]).sum();
        let mean = total as f64 / n as f64;
        assert!((mean - 3282.0).abs() < 0.02 * 3282.0, "mean {mean}");
    }

    #[test]
    fn mean_counts_reduced() {
        let n = 10_000;
        let mut sums = [0usize; 5];
        for e in 0..n {
            for (s, c) in sums.iter_mut().zip(multiplicities(3, e, 10).unwrap()) {
                *s += c;
            }
        }
        for (class, sum) in sums.iter().enumerate() {
            let mean = *sum as f64 / n as f64;
            let target = PAPER_MEANS[class] / 10.0;
            assert!((mean - target).abs() < 0.05 * target, "class {class}: {mean} vs {target}");
        }
    }

    #[test]
    fn generated_floats_are_quantized() {
        let e = generate_event(11, 0, 10, ContainerKind::ValueSeq).unwrap();
        for h in e.calo_hits.iter() {
            assert_eq!(quantize3(h.energy as f64) as f32, h.energy);
        }
        for p in e.gen_particles.iter() {
            assert_eq!(quantize3(p.energy), p.energy);
        }
    }
}
