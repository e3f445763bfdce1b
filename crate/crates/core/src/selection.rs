//! Pileup selection over a chain of event files: bursts of consecutive
//! entries separated by random jumps, plus random rank assignment.
//!
//! The random stream is ChaCha8 (`rand_chacha`) with integers drawn by
//! rejection sampling on raw 64-bit outputs, so sequences depend only on
//! the ChaCha8 keystream and stay stable across `rand` releases.

use std::path::{Path, PathBuf};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::event::generator::mix;

const TAG_SELECT: u64 = 0x5E1E;
const TAG_RANKS: u64 = 0x4A4B;

/// Uniform integer in `[0, n)` by rejection; `n == 0` means the full range.
fn below(rng: &mut ChaCha8Rng, n: u64) -> u64 {
    if n == 0 {
        return rng.next_u64();
    }
    // Largest multiple of n that fits, minus one.
    let zone = u64::MAX - (u64::MAX - n + 1) % n;
    loop {
        let x = rng.next_u64();
        if x <= zone {
            return x % n;
        }
    }
}

/// Ordered files with their entry counts, addressed by a global entry.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FileChain {
    files: Vec<(PathBuf, u64)>,
    starts: Vec<u64>,
    total: u64,
}

impl FileChain {
    pub fn new(files: impl IntoIterator<Item = (PathBuf, u64)>) -> Self {
        let files: Vec<_> = files.into_iter().collect();
        let mut starts = Vec::with_capacity(files.len());
        let mut total = 0u64;
        for (_, n) in &files {
            starts.push(total);
            total += n;
        }
        FileChain { files, starts, total }
    }

    /// `count` files of `per_file` entries each, with placeholder names.
    pub fn uniform(count: usize, per_file: u64) -> Self {
        Self::new((0..count).map(|i| (PathBuf::from(format!("file{i}")), per_file)))
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.files.len()
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn path(&self, file: usize) -> &Path {
        &self.files[file].0
    }

    pub fn files(&self) -> &[(PathBuf, u64)] {
        &self.files
    }

    /// Maps global entry `g` to (file index, local entry).
    pub fn locate(&self, g: u64) -> Result<(usize, u64)> {
        if g >= self.total {
            return Err(Error::OutOfRange {
                index: g,
                size: self.total,
            });
        }
        let file = self.starts.partition_point(|&s| s <= g) - 1;
        Ok((file, g - self.starts[file]))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SelectorParams {
    /// Consecutive entries per group (X).
    pub burst: u64,
    /// Largest extra skip between groups (Y).
    pub jump: u64,
    pub seed: u64,
}

impl Default for SelectorParams {
    fn default() -> Self {
        SelectorParams {
            burst: 3,
            jump: 10,
            seed: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Selection {
    pub entries: Vec<u64>,
    /// Where the next call should start its first burst.
    pub cursor: u64,
    /// Adjacent emitted entries that live in different files.
    pub file_switches: u64,
}

/// Emits `count` global entries starting with a burst at `cursor`. After
/// each group of `burst` entries the next group starts `1 + U` entries past
/// the last one, `U` uniform on `[0, jump]`. Positions wrap at the chain
/// end. The output depends only on the arguments.
pub fn next_indices(chain: &FileChain, params: &SelectorParams, cursor: u64, count: usize) -> Result<Selection> {
    if chain.is_empty() {
        return Err(Error::InvalidArgument("selection over an empty chain".into()));
    }
    if params.burst == 0 {
        return Err(Error::InvalidArgument("burst must be positive".into()));
    }
    let total = chain.total();
    let mut rng = ChaCha8Rng::seed_from_u64(mix(mix(params.seed, cursor), TAG_SELECT));
    let mut pos = cursor % total;
    let mut entries = Vec::with_capacity(count);
    let mut in_group = 0;
    let mut next_start = pos;
    for _ in 0..count {
        entries.push(pos);
        in_group += 1;
        if in_group == params.burst {
            in_group = 0;
            let skip = 1 + below(&mut rng, params.jump.wrapping_add(1));
            pos = ((pos as u128 + skip as u128) % total as u128) as u64;
            next_start = pos;
        } else {
            pos = (pos + 1) % total;
        }
    }
    if in_group != 0 {
        // A partial group ends the call; the next one starts after a jump.
        let last = *entries.last().unwrap_or(&pos);
        let skip = 1 + below(&mut rng, params.jump.wrapping_add(1));
        next_start = ((last as u128 + skip as u128) % total as u128) as u64;
    }
    let mut file_switches = 0;
    let mut prev = None;
    for &g in &entries {
        let (file, _) = chain.locate(g)?;
        if prev.is_some_and(|p| p != file) {
            file_switches += 1;
        }
        prev = Some(file);
    }
    Ok(Selection {
        entries,
        cursor: next_start,
        file_switches,
    })
}

/// Uniform random permutation of `[0, count)` by Fisher-Yates.
pub fn assign_ranks(seed: u64, count: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, TAG_RANKS));
    let mut ranks: Vec<usize> = (0..count).collect();
    for i in (1..count).rev() {
        let j = below(&mut rng, i as u64 + 1) as usize;
        ranks.swap(i, j);
    }
    ranks
}
