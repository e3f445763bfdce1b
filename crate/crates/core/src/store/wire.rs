//! Little-endian field readers shared by the two file formats.

use std::io::{self, Read, Seek, SeekFrom};

use crate::error::{Error, Result};

/// Bounds-checked cursor over an in-memory byte region.
pub(crate) struct Fields<'a> {
    buf: &'a [u8],
    pos: usize,
    what: &'static str,
}

impl<'a> Fields<'a> {
    pub fn new(buf: &'a [u8], what: &'static str) -> Self {
        Fields { buf, pos: 0, what }
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub fn bytes(&mut self, n: usize) -> Result<&'a [u8]> {
        if n > self.remaining() {
            return Err(Error::corrupt(format!(
                "{}: wanted {n} bytes at offset {}, {} left",
                self.what,
                self.pos,
                self.remaining()
            )));
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.bytes(1)?[0])
    }

    pub fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.bytes(2)?.try_into().unwrap_or_default()))
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes(4)?.try_into().unwrap_or_default()))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes(8)?.try_into().unwrap_or_default()))
    }

    /// A `u16`-length-prefixed UTF-8 string.
    pub fn name(&mut self) -> Result<&'a str> {
        let len = self.u16()? as usize;
        std::str::from_utf8(self.bytes(len)?)
            .map_err(|_| Error::corrupt(format!("{}: name is not UTF-8", self.what)))
    }

    /// Rejects a count whose elements (of at least `min_size` bytes each)
    /// cannot fit in what is left.
    pub fn check_count(&self, count: u64, min_size: usize) -> Result<usize> {
        match count.checked_mul(min_size as u64) {
            Some(total) if total <= self.remaining() as u64 => Ok(count as usize),
            _ => Err(Error::corrupt(format!(
                "{}: count {count} exceeds the {} remaining bytes",
                self.what,
                self.remaining()
            ))),
        }
    }
}

pub(crate) fn put_name(out: &mut Vec<u8>, name: &str) -> Result<()> {
    let len = u16::try_from(name.len())
        .map_err(|_| Error::InvalidArgument(format!("name of {} bytes is too long", name.len())))?;
    out.extend_from_slice(&len.to_le_bytes());
    out.extend_from_slice(name.as_bytes());
    Ok(())
}

/// Reads exactly `len` bytes at `offset`.
pub(crate) fn read_at<R: Read + Seek>(src: &mut R, offset: u64, len: usize, out: &mut Vec<u8>) -> Result<()> {
    src.seek(SeekFrom::Start(offset))?;
    out.clear();
    out.resize(len, 0);
    src.read_exact(out).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => Error::corrupt(format!("file truncated reading {len} bytes at {offset}")),
        _ => Error::Io(e),
    })
}

/// Read-side I/O tally of a [`CountingReader`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct IoCounters {
    pub read_calls: u64,
    pub bytes_read: u64,
    pub seeks: u64,
}

/// Wraps a reader and counts every call that reaches it.
#[derive(Debug)]
pub struct CountingReader<R> {
    inner: R,
    counters: IoCounters,
}

impl<R> CountingReader<R> {
    pub fn new(inner: R) -> Self {
        CountingReader {
            inner,
            counters: IoCounters::default(),
        }
    }

    pub fn counters(&self) -> IoCounters {
        self.counters
    }
}

impl<R: Read> Read for CountingReader<R> {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        let n = self.inner.read(buf)?;
        self.counters.read_calls += 1;
        self.counters.bytes_read += n as u64;
        Ok(n)
    }
}

impl<R: Seek> Seek for CountingReader<R> {
    fn seek(&mut self, pos: SeekFrom) -> io::Result<u64> {
        self.counters.seeks += 1;
        self.inner.seek(pos)
    }
}

/// Tracks the write offset of a sequential writer.
pub(crate) struct Tally<W> {
    pub inner: W,
    pub pos: u64,
}

impl<W: io::Write> Tally<W> {
    pub fn put(&mut self, bytes: &[u8]) -> Result<()> {
        self.inner.write_all(bytes)?;
        self.pos += bytes.len() as u64;
        Ok(())
    }
}
