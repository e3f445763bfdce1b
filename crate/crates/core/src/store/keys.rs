//! Append-only named-record file with a trailing directory.
//!
//! Each record holds one folder, serialized row-wise at native width and
//! compressed as a single unit. See `docs/file-formats.md` for the layout.

use std::collections::HashMap;
use std::io::{Read, Seek, SeekFrom, Write};

use crate::codec::{compress_bytes, decompress_into, ByteBlock};
use crate::error::{Error, Result};
use crate::event::Folder;

use super::wire::{put_name, read_at, CountingReader, Fields, IoCounters, Tally};

pub const KEYS_MAGIC: [u8; 4] = *b"RTBK";
pub const KEYS_VERSION: u16 = 1;
pub(crate) const KEYS_HEADER_LEN: u64 = 8;
pub(crate) const KEYS_TRAILER_LEN: u64 = 12;

/// Directory entry of one record.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeyEntry {
    pub name: String,
    /// Offset of the record start (its name length field).
    pub offset: u64,
    /// Length of the serialized payload block, header included.
    pub payload_len: u64,
}

impl KeyEntry {
    fn record_len(&self) -> u64 {
        2 + self.name.len() as u64 + 8 + self.payload_len
    }
}

/// Appends the uncompressed payload of `folder`: for each class an element
/// count (u32) then that many native rows.
pub fn encode_folder<F: Folder>(folder: &F, out: &mut Vec<u8>) -> Result<()> {
    for c in 0..F::schemas().len() {
        let seq = folder.collection(c);
        let n = u32::try_from(seq.len())
            .map_err(|_| Error::InvalidArgument(format!("{} elements do not fit a record", seq.len())))?;
        out.extend_from_slice(&n.to_le_bytes());
        seq.write_rows(false, out);
    }
    Ok(())
}

/// Inverse of [`encode_folder`]; the whole buffer must be consumed.
pub fn decode_folder<F: Folder>(bytes: &[u8], out: &mut F) -> Result<()> {
    let mut f = Fields::new(bytes, "keys payload");
    for (c, schema) in F::schemas().iter().enumerate() {
        let n = f.u32()? as u64;
        let n = f.check_count(n, schema.raw_size())?;
        let rows = f.bytes(n * schema.raw_size())?;
        out.collection_mut(c).read_rows(rows, false)?;
    }
    if f.remaining() != 0 {
        return Err(Error::corrupt(format!("keys payload: {} trailing bytes", f.remaining())));
    }
    Ok(())
}

pub struct KeysWriter<W: Write> {
    out: Tally<W>,
    level: u8,
    directory: Vec<KeyEntry>,
    seen: HashMap<String, usize>,
    payload: Vec<u8>,
    record: Vec<u8>,
}

impl<W: Write> KeysWriter<W> {
    pub fn new(inner: W, level: u8) -> Result<Self> {
        if level > crate::codec::MAX_LEVEL {
            return Err(Error::InvalidArgument(format!("compression level {level}")));
        }
        let mut out = Tally { inner, pos: 0 };
        let mut header = Vec::with_capacity(KEYS_HEADER_LEN as usize);
        header.extend_from_slice(&KEYS_MAGIC);
        header.extend_from_slice(&KEYS_VERSION.to_le_bytes());
        header.extend_from_slice(&0u16.to_le_bytes());
        out.put(&header)?;
        Ok(KeysWriter {
            out,
            level,
            directory: Vec::new(),
            seen: HashMap::new(),
            payload: Vec::new(),
            record: Vec::new(),
        })
    }

    /// Stores `folder` under `<folder_name><rank>`.
    pub fn write_folder<F: Folder>(&mut self, folder_name: &str, rank: u64, folder: &F) -> Result<()> {
        let name = format!("{folder_name}{rank}");
        if self.seen.contains_key(&name) {
            return Err(Error::DuplicateRecord(name));
        }
        self.payload.clear();
        encode_folder(folder, &mut self.payload)?;
        let block = compress_bytes(&self.payload, self.level)?;

        self.record.clear();
        put_name(&mut self.record, &name)?;
        self.record.extend_from_slice(&(block.serialized_len() as u64).to_le_bytes());
        block.write_to(&mut self.record);

        let entry = KeyEntry {
            name: name.clone(),
            offset: self.out.pos,
            payload_len: block.serialized_len() as u64,
        };
        self.out.put(&self.record)?;
        self.seen.insert(name, self.directory.len());
        self.directory.push(entry);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.directory.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directory.is_empty()
    }

    /// Writes directory and trailer; returns the sink and the file length.
    pub fn finish(mut self) -> Result<(W, u64)> {
        let dir_offset = self.out.pos;
        let mut dir = Vec::new();
        dir.extend_from_slice(&(self.directory.len() as u64).to_le_bytes());
        for e in &self.directory {
            put_name(&mut dir, &e.name)?;
            dir.extend_from_slice(&e.offset.to_le_bytes());
            dir.extend_from_slice(&e.payload_len.to_le_bytes());
        }
        dir.extend_from_slice(&dir_offset.to_le_bytes());
        dir.extend_from_slice(&KEYS_MAGIC);
        self.out.put(&dir)?;
        self.out.inner.flush()?;
        Ok((self.out.inner, self.out.pos))
    }
}

pub struct KeysReader<R> {
    src: CountingReader<R>,
    directory: Vec<KeyEntry>,
    by_name: HashMap<String, usize>,
    file_len: u64,
    record: Vec<u8>,
    payload: Vec<u8>,
}

impl<R: Read + Seek> KeysReader<R> {
    /// Loads header, trailer and directory; records are read on demand.
    pub fn open(src: R) -> Result<Self> {
        let mut src = CountingReader::new(src);
        let file_len = src.seek(SeekFrom::End(0))?;
        if file_len < KEYS_HEADER_LEN + KEYS_TRAILER_LEN {
            return Err(Error::corrupt(format!("keys file of {file_len} bytes is too short")));
        }
        let mut buf = Vec::new();
        read_at(&mut src, 0, KEYS_HEADER_LEN as usize, &mut buf)?;
        let mut h = Fields::new(&buf, "keys header");
        if h.bytes(4)? != KEYS_MAGIC {
            return Err(Error::corrupt("keys file: bad magic"));
        }
        let version = h.u16()?;
        if version != KEYS_VERSION {
            return Err(Error::corrupt(format!("keys file: unsupported version {version}")));
        }

        read_at(&mut src, file_len - KEYS_TRAILER_LEN, KEYS_TRAILER_LEN as usize, &mut buf)?;
        let mut t = Fields::new(&buf, "keys trailer");
        let dir_offset = t.u64()?;
        if t.bytes(4)? != KEYS_MAGIC {
            return Err(Error::corrupt("keys file: bad trailer magic"));
        }
        let dir_end = file_len - KEYS_TRAILER_LEN;
        if dir_offset < KEYS_HEADER_LEN || dir_offset > dir_end {
            return Err(Error::corrupt(format!("keys file: directory offset {dir_offset}")));
        }

        read_at(&mut src, dir_offset, (dir_end - dir_offset) as usize, &mut buf)?;
        let mut d = Fields::new(&buf, "keys directory");
        let count = d.u64()?;
        let count = d.check_count(count, 18)?;
        let mut directory = Vec::with_capacity(count);
        let mut by_name = HashMap::with_capacity(count);
        for i in 0..count {
            let entry = KeyEntry {
                name: d.name()?.to_owned(),
                offset: d.u64()?,
                payload_len: d.u64()?,
            };
            let end = entry.offset.checked_add(entry.record_len());
            if entry.offset < KEYS_HEADER_LEN || end.is_none_or(|e| e > dir_offset) {
                return Err(Error::corrupt(format!("keys directory: record {:?} out of bounds", entry.name)));
            }
            if by_name.insert(entry.name.clone(), i).is_some() {
                return Err(Error::corrupt(format!("keys directory: duplicate name {:?}", entry.name)));
            }
            directory.push(entry);
        }
        if d.remaining() != 0 {
            return Err(Error::corrupt("keys directory: trailing bytes"));
        }
        Ok(KeysReader {
            src,
            directory,
            by_name,
            file_len,
            record: Vec::new(),
            payload: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.directory.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directory.is_empty()
    }

    pub fn file_len(&self) -> u64 {
        self.file_len
    }

    pub fn directory(&self) -> &[KeyEntry] {
        &self.directory
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    pub fn io_counters(&self) -> IoCounters {
        self.src.counters()
    }

    /// Reads the record named `name` into `out`. The folder id becomes the
    /// record's directory position.
    pub fn read_named<F: Folder>(&mut self, name: &str, out: &mut F) -> Result<()> {
        let index = self
            .position(name)
            .ok_or_else(|| Error::UnknownRecord(name.to_owned()))?;
        self.read_index(index, out)
    }

    pub fn read_index<F: Folder>(&mut self, index: usize, out: &mut F) -> Result<()> {
        let entry = self.directory.get(index).ok_or(Error::OutOfRange {
            index: index as u64,
            size: self.directory.len() as u64,
        })?;
        read_at(&mut self.src, entry.offset, entry.record_len() as usize, &mut self.record)?;
        let mut r = Fields::new(&self.record, "keys record");
        if r.name()? != entry.name || r.u64()? != entry.payload_len {
            return Err(Error::corrupt(format!(
                "keys record {:?} disagrees with the directory",
                entry.name
            )));
        }
        let block = r.bytes(entry.payload_len as usize)?;
        if block.len() < ByteBlock::HEADER_LEN {
            return Err(Error::corrupt(format!("keys record {:?}: short block", entry.name)));
        }
        let level = block[0];
        let len = u64::from_le_bytes(block[1..9].try_into().unwrap_or_default());
        decompress_into(&block[ByteBlock::HEADER_LEN..], level, len, &mut self.payload)
            .and_then(|_| decode_folder(&self.payload, out))
            .map_err(|e| match e {
                Error::Corrupt(m) => Error::corrupt(format!("keys record {:?}: {m}", entry.name)),
                other => other,
            })?;
        out.set_id(index as u64);
        Ok(())
    }
}
