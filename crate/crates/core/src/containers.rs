//! The four container disciplines an event's collections can be held in.
//!
//! Every discipline sits behind [`TypedSequence`], which is deliberately
//! narrow: `clear` and `add` to write, `size` and `get` to read. What differs
//! between them is where elements live and what a growth or a reuse costs:
//!
//! | kind              | storage                                   | CLI name |
//! |-------------------|-------------------------------------------|----------|
//! | [`ValueSeq`]      | `Vec<T>`, standard growth policy          | `stl`    |
//! | [`DoublingArray`] | boxed slice, capacity doubled when full   | `c`      |
//! | [`IndirectArray`] | one heap allocation per element           | `obj`    |
//! | [`SlotArray`]     | slab of slots reused across `clear`s      | `clones` |

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event::{Record, Value};

/// Read/write interface shared by all container kinds.
pub trait TypedSequence<T> {
    fn clear(&mut self);
    fn add(&mut self, element: T);
    fn size(&self) -> usize;
    fn get(&self, index: usize) -> Result<&T>;
}

fn out_of_range(index: usize, size: usize) -> Error {
    Error::OutOfRange {
        index: index as u64,
        size: size as u64,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ContainerKind {
    #[serde(rename = "stl")]
    ValueSeq,
    #[serde(rename = "c")]
    DoublingArray,
    #[serde(rename = "obj")]
    IndirectArray,
    #[serde(rename = "clones")]
    SlotArray,
}

impl ContainerKind {
    pub const ALL: [ContainerKind; 4] = [
        ContainerKind::ValueSeq,
        ContainerKind::DoublingArray,
        ContainerKind::IndirectArray,
        ContainerKind::SlotArray,
    ];

    /// Short column label used in result tables.
    pub fn label(self) -> &'static str {
        match self {
            ContainerKind::ValueSeq => "stl",
            ContainerKind::DoublingArray => "c",
            ContainerKind::IndirectArray => "obj",
            ContainerKind::SlotArray => "clones",
        }
    }
}

impl fmt::Display for ContainerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ContainerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "stl" | "valueseq" | "value-seq" => Ok(ContainerKind::ValueSeq),
            "c" | "doublingarray" | "doubling-array" => Ok(ContainerKind::DoublingArray),
            "obj" | "indirectarray" | "indirect-array" => Ok(ContainerKind::IndirectArray),
            "clones" | "slotarray" | "slot-array" => Ok(ContainerKind::SlotArray),
            other => Err(Error::InvalidArgument(format!("unknown container kind {other:?}"))),
        }
    }
}

/// Contiguous by-value storage using the standard `Vec` growth policy.
#[derive(Clone, Debug, Default)]
pub struct ValueSeq<T> {
    items: Vec<T>,
}

impl<T> ValueSeq<T> {
    pub fn new() -> Self {
        ValueSeq { items: Vec::new() }
    }

    pub fn as_slice(&self) -> &[T] {
        &self.items
    }
}

impl<T> TypedSequence<T> for ValueSeq<T> {
    fn clear(&mut self) {
        self.items.clear();
    }

    fn add(&mut self, element: T) {
        self.items.push(element);
    }

    fn size(&self) -> usize {
        self.items.len()
    }

    fn get(&self, index: usize) -> Result<&T> {
        self.items
            .get(index)
            .ok_or_else(|| out_of_range(index, self.items.len()))
    }
}

/// Hand-managed array: starts at [`DoublingArray::INITIAL_CAPACITY`] and
/// doubles whenever an `add` finds it full.
#[derive(Clone, Debug)]
pub struct DoublingArray<T> {
    storage: Box<[T]>,
    len: usize,
}

impl<T: Copy + Default> DoublingArray<T> {
    pub const INITIAL_CAPACITY: usize = 16;

    pub fn new() -> Self {
        DoublingArray {
            storage: Box::default(),
            len: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.storage.len()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.storage[..self.len]
    }

    fn grow(&mut self) {
        let new_capacity = match self.storage.len() {
            0 => Self::INITIAL_CAPACITY,
            n => n * 2,
        };
        let mut fresh = vec![T::default(); new_capacity].into_boxed_slice();
        fresh[..self.len].copy_from_slice(&self.storage[..self.len]);
        self.storage = fresh;
    }
}

impl<T: Copy + Default> Default for DoublingArray<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Copy + Default> TypedSequence<T> for DoublingArray<T> {
    fn clear(&mut self) {
        self.len = 0;
    }

    fn add(&mut self, element: T) {
        if self.len == self.storage.len() {
            self.grow();
        }
        self.storage[self.len] = element;
        self.len += 1;
    }

    fn size(&self) -> usize {
        self.len
    }

    fn get(&self, index: usize) -> Result<&T> {
        self.as_slice()
            .get(index)
            .ok_or_else(|| out_of_range(index, self.len))
    }
}

/// Sequence of handles; each element is a separate heap allocation.
#[derive(Clone, Debug, Default)]
pub struct IndirectArray<T> {
    handles: Vec<Box<T>>,
}

impl<T> IndirectArray<T> {
    pub fn new() -> Self {
        IndirectArray {
            handles: Vec::new(),
        }
    }
}

impl<T> TypedSequence<T> for IndirectArray<T> {
    fn clear(&mut self) {
        self.handles.clear();
    }

    fn add(&mut self, element: T) {
        self.handles.push(Box::new(element));
    }

    fn size(&self) -> usize {
        self.handles.len()
    }

    fn get(&self, index: usize) -> Result<&T> {
        self.handles
            .get(index)
            .map(|b| &**b)
            .ok_or_else(|| out_of_range(index, self.handles.len()))
    }
}

/// A slab of fixed-size slots. `clear` only resets the logical size, so the
/// slots constructed for one event are overwritten in place by the next.
#[derive(Clone, Debug, Default)]
pub struct SlotArray<T> {
    slots: Vec<T>,
    len: usize,
    constructed: u64,
}

impl<T: Copy + Default> SlotArray<T> {
    pub fn new() -> Self {
        SlotArray {
            slots: Vec::new(),
            len: 0,
            constructed: 0,
        }
    }

    /// Number of slots ever constructed. Stays flat while the slab is reused.
    pub fn slot_allocations(&self) -> u64 {
        self.constructed
    }

    /// Slots currently held, live or not.
    pub fn slot_count(&self) -> usize {
        self.slots.len()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.slots[..self.len]
    }

    /// Sets the logical size to `n` and hands out the live slots for in-place
    /// filling. Slots beyond the previous high-water mark are default-built.
    pub fn fill(&mut self, n: usize) -> &mut [T] {
        if n > self.slots.len() {
            self.constructed += (n - self.slots.len()) as u64;
            self.slots.resize(n, T::default());
        }
        self.len = n;
        &mut self.slots[..n]
    }
}

impl<T: Copy + Default> TypedSequence<T> for SlotArray<T> {
    fn clear(&mut self) {
        self.len = 0;
    }

    fn add(&mut self, element: T) {
        if self.len < self.slots.len() {
            self.slots[self.len] = element;
        } else {
            self.slots.push(element);
            self.constructed += 1;
        }
        self.len += 1;
    }

    fn size(&self) -> usize {
        self.len
    }

    fn get(&self, index: usize) -> Result<&T> {
        self.as_slice()
            .get(index)
            .ok_or_else(|| out_of_range(index, self.len))
    }
}

/// A sequence whose discipline is picked at run time.
#[derive(Clone, Debug)]
pub enum Collection<T> {
    ValueSeq(ValueSeq<T>),
    DoublingArray(DoublingArray<T>),
    IndirectArray(IndirectArray<T>),
    SlotArray(SlotArray<T>),
}

impl<T: Copy + Default> Collection<T> {
    pub fn new(kind: ContainerKind) -> Self {
        match kind {
            ContainerKind::ValueSeq => Collection::ValueSeq(ValueSeq::new()),
            ContainerKind::DoublingArray => Collection::DoublingArray(DoublingArray::new()),
            ContainerKind::IndirectArray => Collection::IndirectArray(IndirectArray::new()),
            ContainerKind::SlotArray => Collection::SlotArray(SlotArray::new()),
        }
    }

    pub fn kind(&self) -> ContainerKind {
        match self {
            Collection::ValueSeq(_) => ContainerKind::ValueSeq,
            Collection::DoublingArray(_) => ContainerKind::DoublingArray,
            Collection::IndirectArray(_) => ContainerKind::IndirectArray,
            Collection::SlotArray(_) => ContainerKind::SlotArray,
        }
    }

    /// The live elements as one slice, for the contiguous kinds.
    pub fn contiguous(&self) -> Option<&[T]> {
        match self {
            Collection::ValueSeq(s) => Some(s.as_slice()),
            Collection::DoublingArray(s) => Some(s.as_slice()),
            Collection::IndirectArray(_) => None,
            Collection::SlotArray(s) => Some(s.as_slice()),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> + '_ {
        (0..self.size()).map(move |i| match self.get(i) {
            Ok(e) => e,
            Err(_) => unreachable!("index below size"),
        })
    }

    pub fn to_vec(&self) -> Vec<T> {
        self.iter().copied().collect()
    }
}

impl<T: Record> Collection<T> {
    /// Attribute `attr` of every element, in order.
    pub fn extract_column(&self, attr: usize) -> Result<Vec<Value>> {
        if attr >= T::schema().attribute_count() {
            return Err(Error::BadAttribute {
                class: T::schema().class_name,
                index: attr,
            });
        }
        let pick = |e: &T| e.value(attr).expect("attribute index checked");
        Ok(match self {
            // Slots are read in place; nothing is copied out first.
            Collection::SlotArray(s) => s.as_slice().iter().map(pick).collect(),
            _ => self.iter().map(pick).collect(),
        })
    }
}

impl<T: Copy + Default> TypedSequence<T> for Collection<T> {
    fn clear(&mut self) {
        match self {
            Collection::ValueSeq(s) => s.clear(),
            Collection::DoublingArray(s) => s.clear(),
            Collection::IndirectArray(s) => s.clear(),
            Collection::SlotArray(s) => s.clear(),
        }
    }

    fn add(&mut self, element: T) {
        match self {
            Collection::ValueSeq(s) => s.add(element),
            Collection::DoublingArray(s) => s.add(element),
            Collection::IndirectArray(s) => s.add(element),
            Collection::SlotArray(s) => s.add(element),
        }
    }

    fn size(&self) -> usize {
        match self {
            Collection::ValueSeq(s) => s.size(),
            Collection::DoublingArray(s) => s.size(),
            Collection::IndirectArray(s) => s.size(),
            Collection::SlotArray(s) => s.size(),
        }
    }

    fn get(&self, index: usize) -> Result<&T> {
        match self {
            Collection::ValueSeq(s) => s.get(index),
            Collection::DoublingArray(s) => s.get(index),
            Collection::IndirectArray(s) => s.get(index),
            Collection::SlotArray(s) => s.get(index),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_kinds() -> Vec<Collection<u32>> {
        ContainerKind::ALL.iter().map(|&k| Collection::new(k)).collect()
    }

    #[test]
    fn add_then_clear() {
        for mut seq in all_kinds() {
            for i in 0..5 {
                seq.add(i);
            }
            assert_eq!(seq.size(), 5);
            seq.clear();
            assert_eq!(seq.size(), 0, "{:?}", seq.kind());
            seq.clear();
            assert_eq!(seq.size(), 0);
        }
    }

    #[test]
    fn get_returns_last_added() {
        for mut seq in all_kinds() {
            seq.add(7);
            seq.add(42);
            assert_eq!(*seq.get(seq.size() - 1).unwrap(), 42);
            assert_eq!(*seq.get(0).unwrap(), 7);
            assert_eq!(*seq.get(0).unwrap(), 7);
        }
    }

    #[test]
    fn get_out_of_range() {
        for mut seq in all_kinds() {
            assert!(matches!(seq.get(0), Err(Error::OutOfRange { index: 0, size: 0 })));
            seq.add(1);
            seq.add(2);
            seq.clear();
            seq.add(3);
            assert!(seq.get(1).is_err(), "{:?} leaked a stale slot", seq.kind());
        }
    }

    #[test]
    fn doubling_capacity() {
        let mut arr = DoublingArray::<u32>::new();
        assert_eq!(arr.capacity(), 0);
        arr.add(0);
        assert_eq!(arr.capacity(), 16);
        for i in 1..16 {
            arr.add(i);
        }
        assert_eq!(arr.capacity(), 16);
        arr.add(16);
        assert_eq!(arr.capacity(), 32);
        assert_eq!(arr.size(), 17);
    }

    #[test]
    fn doubling_capacity_formula() {
        let mut arr = DoublingArray::<u16>::new();
        for n in 1..=3000usize {
            arr.add(n as u16);
            let ratio = n.max(16) as f64 / 16.0;
            let expected = 16 * 2usize.pow(ratio.log2().ceil() as u32);
            assert_eq!(arr.capacity(), expected, "n={n}");
        }
    }

    #[test]
    fn slot_reuse_after_clear() {
        let mut arr = SlotArray::<u64>::new();
        for i in 0..100 {
            arr.add(i);
        }
        assert_eq!(arr.slot_allocations(), 100);
        arr.clear();
        for i in 0..100 {
            arr.add(i * 3);
        }
        assert_eq!(arr.slot_allocations(), 100);
        assert_eq!(arr.slot_count(), 100);
        assert_eq!(*arr.get(99).unwrap(), 297);
    }

    #[test]
    fn slot_fill_reuses() {
        let mut arr = SlotArray::<u32>::new();
        arr.fill(10).iter_mut().enumerate().for_each(|(i, s)| *s = i as u32);
        arr.clear();
        let live = arr.fill(4);
        assert_eq!(live.len(), 4);
        assert_eq!(arr.slot_allocations(), 10);
        assert_eq!(arr.size(), 4);
    }

    #[test]
    fn large_workload() {
        for mut seq in all_kinds() {
            for i in 0..3282 {
                seq.add(i);
            }
            assert_eq!(seq.size(), 3282);
        }
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in ContainerKind::ALL {
            assert_eq!(kind.label().parse::<ContainerKind>().unwrap(), kind);
        }
        assert!("vector".parse::<ContainerKind>().is_err());
    }
}
