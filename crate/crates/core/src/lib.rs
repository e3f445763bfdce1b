//! Benchmark library for building pileup crossings.
//!
//! Events made of five typed collections are stored through one of three
//! persistency managers (a keyed blob store, an all-`f64` matrix tree and a
//! columnar tree), held in one of four container disciplines, and read back
//! under a burst/jump pileup selection pattern. The [`bench`] module runs the
//! resulting 3x4 strategy grid and reports file size per event and read time
//! per crossing.

pub mod bench;
pub mod codec;
pub mod containers;
pub mod error;
pub mod event;
pub mod pipeline;
pub mod selection;
pub mod store;

pub use error::{Error, Result};
