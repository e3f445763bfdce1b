//! Event data model: class schemas, event and digi folders, the synthetic
//! generator and the stand-in digitizer.

mod classes;
mod digitize;
pub(crate) mod generator;
mod schema;

pub use classes::*;
pub use digitize::{digitize, digitize_into, DEFAULT_THRESHOLD};
pub use generator::{
    expected_event_bytes, generate_event, generate_into, multiplicities, quantize3, SizeMode, PAPER_MEANS,
};
pub use schema::{
    schema_all_double_size, schema_raw_size, AttributeSpec, ClassSchema, Record, Scalar, Value,
    ValueKind,
};

use crate::codec::ErasedSequence;
use crate::containers::{Collection, ContainerKind, TypedSequence};

/// A named slot's content as seen by the persistency layer: an id plus a
/// fixed list of typed collections.
pub trait Folder {
    fn schemas() -> &'static [&'static ClassSchema];
    fn new(kind: ContainerKind) -> Self;
    fn id(&self) -> u64;
    fn set_id(&mut self, id: u64);
    fn container_kind(&self) -> ContainerKind;
    fn collection(&self, class: usize) -> &dyn ErasedSequence;
    fn collection_mut(&mut self, class: usize) -> &mut dyn ErasedSequence;

    fn clear(&mut self) {
        for c in 0..Self::schemas().len() {
            self.collection_mut(c).clear();
        }
    }

    /// Sum of the native row sizes of all elements.
    fn raw_bytes(&self) -> usize {
        (0..Self::schemas().len())
            .map(|c| self.collection(c).len() * Self::schemas()[c].raw_size())
            .sum()
    }

    fn all_double_bytes(&self) -> usize {
        (0..Self::schemas().len())
            .map(|c| self.collection(c).len() * Self::schemas()[c].all_double_size())
            .sum()
    }
}

/// One signal or minimum-bias event.
#[derive(Clone, Debug)]
pub struct Event {
    pub event_id: u64,
    pub gen_particles: Collection<GenParticle>,
    pub sim_vertices: Collection<SimVertex>,
    pub sim_tracks: Collection<SimTrack>,
    pub calo_hits: Collection<CaloHit>,
    pub track_hits: Collection<TrackHit>,
}

impl Event {
    pub fn counts(&self) -> [usize; 5] {
        [
            self.gen_particles.size(),
            self.sim_vertices.size(),
            self.sim_tracks.size(),
            self.calo_hits.size(),
            self.track_hits.size(),
        ]
    }

    /// Field-exact comparison of contents, ignoring container kinds.
    pub fn same_content(&self, other: &Event) -> bool {
        self.event_id == other.event_id
            && (0..5).all(|c| self.collection(c).same_content(other.collection(c)))
    }
}

impl Folder for Event {
    fn schemas() -> &'static [&'static ClassSchema] {
        &EVENT_SCHEMAS
    }

    fn new(kind: ContainerKind) -> Self {
        Event {
            event_id: 0,
            gen_particles: Collection::new(kind),
            sim_vertices: Collection::new(kind),
            sim_tracks: Collection::new(kind),
            calo_hits: Collection::new(kind),
            track_hits: Collection::new(kind),
        }
    }

    fn id(&self) -> u64 {
        self.event_id
    }

    fn set_id(&mut self, id: u64) {
        self.event_id = id;
    }

    fn container_kind(&self) -> ContainerKind {
        self.gen_particles.kind()
    }

    fn collection(&self, class: usize) -> &dyn ErasedSequence {
        match class {
            0 => &self.gen_particles,
            1 => &self.sim_vertices,
            2 => &self.sim_tracks,
            3 => &self.calo_hits,
            4 => &self.track_hits,
            _ => panic!("event has 5 classes, asked for {class}"),
        }
    }

    fn collection_mut(&mut self, class: usize) -> &mut dyn ErasedSequence {
        match class {
            0 => &mut self.gen_particles,
            1 => &mut self.sim_vertices,
            2 => &mut self.sim_tracks,
            3 => &mut self.calo_hits,
            4 => &mut self.track_hits,
            _ => panic!("event has 5 classes, asked for {class}"),
        }
    }
}

/// Digitizer output of one crossing.
#[derive(Clone, Debug)]
pub struct Digis {
    pub crossing_id: u64,
    pub calo_digis: Collection<CaloDigi>,
    pub track_digis: Collection<TrackDigi>,
}

impl Digis {
    pub fn same_content(&self, other: &Digis) -> bool {
        self.crossing_id == other.crossing_id
            && (0..2).all(|c| self.collection(c).same_content(other.collection(c)))
    }
}

impl PartialEq for Digis {
    fn eq(&self, other: &Self) -> bool {
        self.same_content(other)
    }
}

impl Folder for Digis {
    fn schemas() -> &'static [&'static ClassSchema] {
        &DIGIS_SCHEMAS
    }

    fn new(kind: ContainerKind) -> Self {
        Digis {
            crossing_id: 0,
            calo_digis: Collection::new(kind),
            track_digis: Collection::new(kind),
        }
    }

    fn id(&self) -> u64 {
        self.crossing_id
    }

    fn set_id(&mut self, id: u64) {
        self.crossing_id = id;
    }

    fn container_kind(&self) -> ContainerKind {
        self.calo_digis.kind()
    }

    fn collection(&self, class: usize) -> &dyn ErasedSequence {
        match class {
            0 => &self.calo_digis,
            1 => &self.track_digis,
            _ => panic!("digis have 2 classes, asked for {class}"),
        }
    }

    fn collection_mut(&mut self, class: usize) -> &mut dyn ErasedSequence {
        match class {
            0 => &mut self.calo_digis,
            1 => &mut self.track_digis,
            _ => panic!("digis have 2 classes, asked for {class}"),
        }
    }
}
