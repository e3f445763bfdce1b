//! The five event classes and the two digi classes.

use super::schema::{record, AttributeSpec, ClassSchema, Record, Scalar, Value};

record! {
    /// Generator-level particle. 46 bytes raw.
    GenParticle, GEN_PARTICLE {
        /// GeV
        energy: f64,
        px: f32,
        py: f32,
        pz: f32,
        /// Production vertex, mm.
        x: f32,
        y: f32,
        z: f32,
        /// ns
        time: f32,
        charge: f32,
        weight: f32,
        pdg_code: i16,
    }
}

record! {
    /// Simulated vertex. 34 bytes raw.
    SimVertex, SIM_VERTEX {
        x: f32,
        y: f32,
        z: f32,
        time: f32,
        energy_loss: f32,
        quality: f32,
        parent_index: i16,
        process_type: i16,
        region: i16,
        detector_id: i16,
        flags: i16,
    }
}

record! {
    /// Simulated track. 38 bytes raw.
    SimTrack, SIM_TRACK {
        px: f64,
        py: f64,
        pz: f64,
        energy: f64,
        time: f32,
        pdg_code: i16,
    }
}

record! {
    /// Calorimeter hit. 20 bytes raw.
    CaloHit, CALO_HIT {
        /// GeV
        energy: f32,
        /// ns
        time: f32,
        cell_id: i32,
        track_index: i32,
        weight: f32,
    }
}

record! {
    /// Tracker hit. 56 bytes raw.
    TrackHit, TRACK_HIT {
        tof: f64,
        energy_loss: f64,
        entry_x: f32,
        entry_y: f32,
        entry_z: f32,
        exit_x: f32,
        exit_y: f32,
        exit_z: f32,
        momentum: f32,
        theta: f32,
        phi: f32,
        /// Integer-valued; kept as a float attribute like the rest of the hit.
        detector_id: f32,
    }
}

record! {
    /// Summed calorimeter response of one cell.
    CaloDigi, CALO_DIGI {
        cell_id: i32,
        amplitude: f32,
    }
}

record! {
    /// Summed tracker response of one detector unit.
    TrackDigi, TRACK_DIGI {
        detector_id: i32,
        hit_count: i32,
        charge: f32,
    }
}

/// Schemas of the event classes, in folder order.
pub static EVENT_SCHEMAS: [&ClassSchema; 5] =
    [&GEN_PARTICLE, &SIM_VERTEX, &SIM_TRACK, &CALO_HIT, &TRACK_HIT];

pub static DIGIS_SCHEMAS: [&ClassSchema; 2] = [&CALO_DIGI, &TRACK_DIGI];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn raw_sizes_match_reference() {
        assert_eq!(GEN_PARTICLE.raw_size(), 46);
        assert_eq!(SIM_VERTEX.raw_size(), 34);
        assert_eq!(SIM_TRACK.raw_size(), 38);
        assert_eq!(CALO_HIT.raw_size(), 20);
        assert_eq!(TRACK_HIT.raw_size(), 56);
    }

    #[test]
    fn attribute_counts() {
        let counts: Vec<usize> = EVENT_SCHEMAS.iter().map(|s| s.attribute_count()).collect();
        assert_eq!(counts, [11, 11, 6, 5, 12]);
        assert_eq!(GEN_PARTICLE.all_double_size(), 88);
        assert_eq!(TRACK_HIT.all_double_size(), 96);
    }

    #[test]
    fn schemas_well_formed() {
        for s in EVENT_SCHEMAS.iter().chain(DIGIS_SCHEMAS.iter()) {
            assert!(s.is_well_formed(), "{}", s.class_name);
        }
        assert_eq!(ClassSchema::new("Empty", &[]).raw_size(), 0);
        assert_eq!(ClassSchema::new("Empty", &[]).all_double_size(), 0);
    }

    #[test]
    fn row_bytes_round_trip() {
        let hit = TrackHit {
            tof: 1.5,
            energy_loss: 2.5e-4,
            entry_x: -3.0,
            detector_id: 12.0,
            ..Default::default()
        };
        let mut buf = Vec::new();
        hit.put_row_le(&mut buf);
        assert_eq!(buf.len(), 56);
        assert_eq!(&buf[..8], &1.5f64.to_le_bytes());
        assert_eq!(TrackHit::get_row_le(&buf), hit);
    }

    #[test]
    fn attribute_access() {
        let mut p = GenParticle::default();
        assert!(p.set_attr_f64(10, -211.0));
        assert_eq!(p.pdg_code, -211);
        assert!(!p.set_attr_f64(10, 40000.0));
        assert!(!p.set_attr_f64(10, 0.5));
        assert!(!p.set_attr_f64(1, 0.1));
        assert!(p.set_attr_f64(1, 0.25));
        assert_eq!(p.value(1), Some(Value::F32(0.25)));
        assert_eq!(p.value(11), None);
        let mut out = Vec::new();
        assert!(!p.put_attr_le(11, &mut out));
        assert!(out.is_empty());
    }
}
