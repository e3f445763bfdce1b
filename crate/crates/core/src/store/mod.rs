//! The three persistency managers over the two file formats.
//!
//! | manager | file      | payload per entry                         |
//! |---------|-----------|-------------------------------------------|
//! | keys    | keys file | one compressed record, native rows        |
//! | matrix  | tree file | one `f64` row matrix per class (split 0)  |
//! | tree    | tree file | rows per class (split 0) or one column per attribute |

pub mod keys;
pub mod tree;
mod wire;

use std::fmt;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event::{ClassSchema, Folder};

pub use keys::{KeyEntry, KeysReader, KeysWriter};
pub use tree::{TreeHeader, TreeLayout, TreeReader, TreeWriter, DEFAULT_BASKET_SIZE};
pub use wire::{CountingReader, IoCounters};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ManagerKind {
    Keys,
    Matrix,
    Tree,
}

impl ManagerKind {
    pub const ALL: [ManagerKind; 3] = [ManagerKind::Keys, ManagerKind::Matrix, ManagerKind::Tree];

    pub fn label(self) -> &'static str {
        match self {
            ManagerKind::Keys => "keys",
            ManagerKind::Matrix => "matrix",
            ManagerKind::Tree => "tree",
        }
    }
}

impl fmt::Display for ManagerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ManagerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "keys" => Ok(ManagerKind::Keys),
            "matrix" => Ok(ManagerKind::Matrix),
            "tree" => Ok(ManagerKind::Tree),
            other => Err(Error::InvalidArgument(format!("unknown manager kind {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoreOptions {
    pub compression: u8,
    /// Ignored by keys; forced to 0 by matrix.
    pub split: u8,
    pub basket_size: u32,
}

impl Default for StoreOptions {
    fn default() -> Self {
        StoreOptions {
            compression: 1,
            split: 99,
            basket_size: DEFAULT_BASKET_SIZE,
        }
    }
}

impl StoreOptions {
    pub fn tree_layout(&self, kind: ManagerKind) -> Option<TreeLayout> {
        match kind {
            ManagerKind::Keys => None,
            ManagerKind::Matrix => Some(TreeLayout::matrix(self.compression, self.basket_size)),
            ManagerKind::Tree => Some(TreeLayout {
                widen: false,
                split: self.split,
                level: self.compression,
                basket_size: self.basket_size,
            }),
        }
    }
}

/// What a finished file holds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileStats {
    pub manager: ManagerKind,
    pub total_bytes: u64,
    pub entries: u64,
    /// Zero for keys files.
    pub branches: usize,
    /// Records for keys files.
    pub baskets: usize,
}

impl FileStats {
    pub fn bytes_per_entry(&self) -> f64 {
        if self.entries == 0 {
            return 0.0;
        }
        self.total_bytes as f64 / self.entries as f64
    }

    pub fn kb_per_entry(&self) -> f64 {
        self.bytes_per_entry() / 1024.0
    }
}

enum WriterInner {
    Keys { w: KeysWriter<BufWriter<File>>, rank: u64 },
    Tree(TreeWriter<BufWriter<File>>),
}

/// Writes folders of one type to one file with one manager.
pub struct StoreWriter {
    kind: ManagerKind,
    folder_name: String,
    inner: WriterInner,
}

impl StoreWriter {
    pub fn create<F: Folder>(kind: ManagerKind, path: &Path, folder_name: &str, opts: StoreOptions) -> Result<Self> {
        Self::create_with(kind, path, folder_name, F::schemas(), opts)
    }

    pub fn create_with(
        kind: ManagerKind,
        path: &Path,
        folder_name: &str,
        schemas: &'static [&'static ClassSchema],
        opts: StoreOptions,
    ) -> Result<Self> {
        let file = BufWriter::with_capacity(1 << 16, File::create(path)?);
        let inner = match opts.tree_layout(kind) {
            None => WriterInner::Keys {
                w: KeysWriter::new(file, opts.compression)?,
                rank: 0,
            },
            Some(layout) => WriterInner::Tree(TreeWriter::new(file, schemas, layout)?),
        };
        Ok(StoreWriter {
            kind,
            folder_name: folder_name.to_owned(),
            inner,
        })
    }

    pub fn kind(&self) -> ManagerKind {
        self.kind
    }

    /// Appends `folder` as the next entry (keys: record `<folder_name><rank>`).
    pub fn write<F: Folder>(&mut self, folder: &F) -> Result<()> {
        match &mut self.inner {
            WriterInner::Keys { w, rank } => {
                w.write_folder(&self.folder_name, *rank, folder)?;
                *rank += 1;
                Ok(())
            }
            WriterInner::Tree(w) => w.append(folder),
        }
    }

    pub fn finish(self) -> Result<FileStats> {
        match self.inner {
            WriterInner::Keys { w, .. } => {
                let entries = w.len();
                let (_, total_bytes) = w.finish()?;
                Ok(FileStats {
                    manager: self.kind,
                    total_bytes,
                    entries: entries as u64,
                    branches: 0,
                    baskets: entries,
                })
            }
            WriterInner::Tree(w) => {
                let (_, t) = w.finish()?;
                Ok(FileStats {
                    manager: self.kind,
                    total_bytes: t.file_len,
                    entries: t.entries,
                    branches: t.branches,
                    baskets: t.baskets,
                })
            }
        }
    }
}

enum Source {
    Keys(KeysReader<File>),
    Tree(TreeReader<File>),
}

/// Connection bookkeeping of a [`StoreReader`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ConnectStats {
    pub connects: u64,
    /// Connects that had to open a file and load its header and index.
    pub file_opens: u64,
}

/// One manager instance reading entries of one file at a time. Switching
/// files goes through [`StoreReader::connect`].
pub struct StoreReader {
    kind: ManagerKind,
    record_prefix: String,
    path: Option<PathBuf>,
    slot: String,
    source: Option<Source>,
    stats: ConnectStats,
    closed_io: IoCounters,
}

impl StoreReader {
    /// `record_prefix` is the folder name keys records were written under.
    pub fn new(kind: ManagerKind, record_prefix: &str) -> Self {
        StoreReader {
            kind,
            record_prefix: record_prefix.to_owned(),
            path: None,
            slot: String::new(),
            source: None,
            stats: ConnectStats::default(),
            closed_io: IoCounters::default(),
        }
    }

    /// Opens `path` directly.
    pub fn open(kind: ManagerKind, path: &Path, record_prefix: &str) -> Result<Self> {
        let mut r = Self::new(kind, record_prefix);
        r.connect(path, "")?;
        Ok(r)
    }

    pub fn kind(&self) -> ManagerKind {
        self.kind
    }

    /// Binds subsequent reads to the folder slot `slot` and the file `path`.
    /// Staying on the same file only rebinds the slot; a new file drops the
    /// basket caches and reloads header and index. Returns the wall time.
    pub fn connect(&mut self, path: &Path, slot: &str) -> Result<Duration> {
        let start = Instant::now();
        self.stats.connects += 1;
        self.slot.clear();
        self.slot.push_str(slot);
        if self.source.is_some() && self.path.as_deref() == Some(path) {
            return Ok(start.elapsed());
        }
        if let Some(old) = self.source.take() {
            let io = Self::io_of(&old);
            self.closed_io.read_calls += io.read_calls;
            self.closed_io.bytes_read += io.bytes_read;
            self.closed_io.seeks += io.seeks;
        }
        self.path = None;
        let file = File::open(path)?;
        let source = match self.kind {
            ManagerKind::Keys => Source::Keys(KeysReader::open(file)?),
            ManagerKind::Matrix | ManagerKind::Tree => {
                let r = TreeReader::open(file)?;
                let widen = r.header().layout.widen;
                if widen != (self.kind == ManagerKind::Matrix) {
                    return Err(Error::InvalidArgument(format!(
                        "{} is not a {} file",
                        path.display(),
                        self.kind
                    )));
                }
                Source::Tree(r)
            }
        };
        self.source = Some(source);
        self.path = Some(path.to_owned());
        self.stats.file_opens += 1;
        Ok(start.elapsed())
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn slot(&self) -> &str {
        &self.slot
    }

    pub fn connect_stats(&self) -> ConnectStats {
        self.stats
    }

    fn io_of(source: &Source) -> IoCounters {
        match source {
            Source::Keys(r) => r.io_counters(),
            Source::Tree(r) => r.io_counters(),
        }
    }

    /// I/O tally over every file this manager has had open.
    pub fn io_counters(&self) -> IoCounters {
        let mut io = self.closed_io;
        if let Some(s) = &self.source {
            let cur = Self::io_of(s);
            io.read_calls += cur.read_calls;
            io.bytes_read += cur.bytes_read;
            io.seeks += cur.seeks;
        }
        io
    }

    fn source(&mut self) -> Result<&mut Source> {
        self.source
            .as_mut()
            .ok_or_else(|| Error::InvalidArgument("manager is not connected to a file".into()))
    }

    pub fn entry_count(&mut self) -> Result<u64> {
        Ok(match self.source()? {
            Source::Keys(r) => r.len() as u64,
            Source::Tree(r) => r.entry_count(),
        })
    }

    /// Reads entry `entry` of the connected file into `out`.
    pub fn read_entry<F: Folder>(&mut self, entry: u64, out: &mut F) -> Result<()> {
        let prefix_len = self.record_prefix.len();
        match self.source.as_mut() {
            None => Err(Error::InvalidArgument("manager is not connected to a file".into())),
            Some(Source::Tree(r)) => r.read_entry(entry, out),
            Some(Source::Keys(r)) => {
                use std::fmt::Write;
                self.record_prefix.truncate(prefix_len);
                let _ = write!(self.record_prefix, "{entry}");
                let result = r.read_named(&self.record_prefix, out);
                self.record_prefix.truncate(prefix_len);
                result
            }
        }
    }
}
