//! Row-wise and column-wise byte encodings of typed sequences, and the
//! deflate wrapper used for every stored block.
//!
//! All encodings are little-endian. A row encoding is element-major with
//! attributes in schema order, either at native width or with every
//! attribute widened to `f64`. A column encoding holds one attribute of
//! every element at native width.

use std::io::{Read, Write};

use flate2::read::ZlibDecoder;
use flate2::write::ZlibEncoder;
use flate2::Compression;

use crate::containers::{Collection, ContainerKind, TypedSequence};
use crate::error::{Error, Result};
use crate::event::{ClassSchema, Record, Value};

pub const MAX_LEVEL: u8 = 9;

/// A byte payload plus what is needed to restore it. `level == 0` means the
/// bytes are stored verbatim.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ByteBlock {
    pub data: Vec<u8>,
    pub uncompressed_len: u64,
    pub level: u8,
}

impl ByteBlock {
    /// Serialized header: level (u8) then uncompressed length (u64).
    pub const HEADER_LEN: usize = 9;

    pub fn raw(data: Vec<u8>) -> Self {
        let uncompressed_len = data.len() as u64;
        ByteBlock {
            data,
            uncompressed_len,
            level: 0,
        }
    }

    pub fn is_compressed(&self) -> bool {
        self.level != 0
    }

    pub fn serialized_len(&self) -> usize {
        Self::HEADER_LEN + self.data.len()
    }

    pub fn write_to(&self, out: &mut Vec<u8>) {
        out.push(self.level);
        out.extend_from_slice(&self.uncompressed_len.to_le_bytes());
        out.extend_from_slice(&self.data);
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < Self::HEADER_LEN {
            return Err(Error::corrupt("byte block shorter than its header"));
        }
        let level = bytes[0];
        if level > MAX_LEVEL {
            return Err(Error::corrupt(format!("byte block level {level}")));
        }
        let uncompressed_len = u64::from_le_bytes(bytes[1..9].try_into().unwrap_or_default());
        let data = bytes[Self::HEADER_LEN..].to_vec();
        if level == 0 && uncompressed_len != data.len() as u64 {
            return Err(Error::corrupt("stored block length mismatch"));
        }
        Ok(ByteBlock {
            data,
            uncompressed_len,
            level,
        })
    }
}

fn check_level(level: u8) -> Result<()> {
    if level > MAX_LEVEL {
        return Err(Error::InvalidArgument(format!(
            "compression level {level} outside 0..={MAX_LEVEL}"
        )));
    }
    Ok(())
}

/// Deflates `bytes` into a zlib stream; level 0 stores them as-is.
pub fn compress_bytes(bytes: &[u8], level: u8) -> Result<ByteBlock> {
    check_level(level)?;
    if level == 0 {
        return Ok(ByteBlock::raw(bytes.to_vec()));
    }
    let mut enc = ZlibEncoder::new(
        Vec::with_capacity(bytes.len() / 2 + 64),
        Compression::new(level as u32),
    );
    enc.write_all(bytes)?;
    Ok(ByteBlock {
        data: enc.finish()?,
        uncompressed_len: bytes.len() as u64,
        level,
    })
}

pub fn compress(block: &ByteBlock, level: u8) -> Result<ByteBlock> {
    if block.is_compressed() {
        return Err(Error::InvalidArgument("block is already compressed".into()));
    }
    compress_bytes(&block.data, level)
}

/// Restores the payload of `data` into `out` (cleared first).
pub fn decompress_into(data: &[u8], level: u8, uncompressed_len: u64, out: &mut Vec<u8>) -> Result<()> {
    out.clear();
    if level > MAX_LEVEL {
        return Err(Error::corrupt(format!("compression level {level}")));
    }
    if level == 0 {
        if data.len() as u64 != uncompressed_len {
            return Err(Error::corrupt(format!(
                "stored block holds {} bytes, header says {uncompressed_len}",
                data.len()
            )));
        }
        out.extend_from_slice(data);
        return Ok(());
    }
    // The declared length is untrusted; never reserve more than a modest
    // amount up front and never read past it.
    out.reserve(uncompressed_len.min(1 << 22) as usize);
    ZlibDecoder::new(data)
        .take(uncompressed_len.saturating_add(1))
        .read_to_end(out)
        .map_err(|e| Error::corrupt(format!("deflate stream: {e}")))?;
    if out.len() as u64 != uncompressed_len {
        return Err(Error::corrupt(format!(
            "inflated to {} bytes, header says {uncompressed_len}",
            out.len()
        )));
    }
    Ok(())
}

pub fn decompress(block: &ByteBlock) -> Result<ByteBlock> {
    let mut out = Vec::new();
    decompress_into(&block.data, block.level, block.uncompressed_len, &mut out)?;
    Ok(ByteBlock::raw(out))
}

/// Type-erased view of one collection, as the stores see it.
pub trait ErasedSequence {
    fn schema(&self) -> &'static ClassSchema;
    fn kind(&self) -> ContainerKind;
    fn len(&self) -> usize;
    fn clear(&mut self);
    fn value_at(&self, index: usize, attr: usize) -> Result<Value>;

    /// Appends the row encoding of the whole collection.
    fn write_rows(&self, widen: bool, out: &mut Vec<u8>);
    /// Replaces the contents with the rows in `bytes`.
    fn read_rows(&mut self, bytes: &[u8], widen: bool) -> Result<()>;
    /// Appends the column encoding of attribute `attr`.
    fn write_column(&self, attr: usize, out: &mut Vec<u8>) -> Result<()>;
    /// Replaces the contents with `count` elements rebuilt from one byte
    /// column per attribute.
    fn read_columns(&mut self, count: usize, columns: &[&[u8]]) -> Result<()>;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn same_content(&self, other: &dyn ErasedSequence) -> bool {
        if self.schema() != other.schema() || self.len() != other.len() {
            return false;
        }
        let attrs = self.schema().attribute_count();
        (0..self.len()).all(|i| {
            (0..attrs).all(|a| match (self.value_at(i, a), other.value_at(i, a)) {
                (Ok(x), Ok(y)) => x.same_bits(y),
                _ => false,
            })
        })
    }
}

fn row_stride(schema: &ClassSchema, widen: bool) -> usize {
    if widen {
        schema.all_double_size()
    } else {
        schema.raw_size()
    }
}

impl<T: Record> ErasedSequence for Collection<T> {
    fn schema(&self) -> &'static ClassSchema {
        T::schema()
    }

    fn kind(&self) -> ContainerKind {
        Collection::kind(self)
    }

    fn len(&self) -> usize {
        self.size()
    }

    fn clear(&mut self) {
        TypedSequence::clear(self);
    }

    fn value_at(&self, index: usize, attr: usize) -> Result<Value> {
        self.get(index)?.value(attr).ok_or(Error::BadAttribute {
            class: T::schema().class_name,
            index: attr,
        })
    }

    fn write_rows(&self, widen: bool, out: &mut Vec<u8>) {
        out.reserve(self.size() * row_stride(T::schema(), widen));
        match (self.contiguous(), widen) {
            (Some(items), false) => items.iter().for_each(|e| e.put_row_le(out)),
            (Some(items), true) => items.iter().for_each(|e| e.put_row_f64(out)),
            // Handles are chased one element at a time.
            (None, false) => self.iter().for_each(|e| e.put_row_le(out)),
            (None, true) => self.iter().for_each(|e| e.put_row_f64(out)),
        }
    }

    fn read_rows(&mut self, bytes: &[u8], widen: bool) -> Result<()> {
        let schema = T::schema();
        let stride = row_stride(schema, widen);
        if stride == 0 {
            TypedSequence::clear(self);
            return if bytes.is_empty() {
                Ok(())
            } else {
                Err(Error::corrupt(format!("{}: bytes for an empty schema", schema.class_name)))
            };
        }
        if !bytes.len().is_multiple_of(stride) {
            return Err(Error::corrupt(format!(
                "{}: {} bytes is not a multiple of the {stride}-byte row",
                schema.class_name,
                bytes.len()
            )));
        }
        let decode = |chunk: &[u8]| -> Result<T> {
            if widen {
                T::get_row_f64(chunk).map_err(|attr| {
                    Error::corrupt(format!(
                        "{}.{}: widened value does not narrow exactly",
                        schema.class_name, schema.attributes[attr].name
                    ))
                })
            } else {
                Ok(T::get_row_le(chunk))
            }
        };
        let n = bytes.len() / stride;
        match self {
            Collection::SlotArray(slots) => {
                for (slot, chunk) in slots.fill(n).iter_mut().zip(bytes.chunks_exact(stride)) {
                    *slot = decode(chunk)?;
                }
            }
            _ => {
                TypedSequence::clear(self);
                for chunk in bytes.chunks_exact(stride) {
                    self.add(decode(chunk)?);
                }
            }
        }
        Ok(())
    }

    fn write_column(&self, attr: usize, out: &mut Vec<u8>) -> Result<()> {
        let schema = T::schema();
        let spec = schema.attributes.get(attr).ok_or(Error::BadAttribute {
            class: schema.class_name,
            index: attr,
        })?;
        out.reserve(self.size() * spec.width as usize);
        match self.contiguous() {
            Some(items) => items.iter().for_each(|e| {
                e.put_attr_le(attr, out);
            }),
            None => self.iter().for_each(|e| {
                e.put_attr_le(attr, out);
            }),
        }
        Ok(())
    }

    fn read_columns(&mut self, count: usize, columns: &[&[u8]]) -> Result<()> {
        let schema = T::schema();
        if columns.len() != schema.attribute_count() {
            return Err(Error::corrupt(format!(
                "{}: {} columns for {} attributes",
                schema.class_name,
                columns.len(),
                schema.attribute_count()
            )));
        }
        for (spec, col) in schema.attributes.iter().zip(columns) {
            if Some(col.len()) != count.checked_mul(spec.width as usize) {
                return Err(Error::corrupt(format!(
                    "{}.{}: column of {} bytes for {count} elements",
                    schema.class_name,
                    spec.name,
                    col.len()
                )));
            }
        }
        let fill_from = |items: &mut [T]| {
            for (attr, (spec, col)) in schema.attributes.iter().zip(columns).enumerate() {
                let w = spec.width as usize;
                for (item, bytes) in items.iter_mut().zip(col.chunks_exact(w)) {
                    item.set_attr_le(attr, bytes);
                }
            }
        };
        match self {
            Collection::SlotArray(slots) => fill_from(slots.fill(count)),
            _ => {
                let mut items = vec![T::default(); count];
                fill_from(&mut items);
                TypedSequence::clear(self);
                for item in items {
                    self.add(item);
                }
            }
        }
        Ok(())
    }
}

/// Row encoding of `seq`, native width or widened to `f64`.
pub fn encode_row<T: Record>(seq: &Collection<T>, widen: bool) -> ByteBlock {
    let mut out = Vec::new();
    seq.write_rows(widen, &mut out);
    ByteBlock::raw(out)
}

pub fn decode_row<T: Record>(block: &ByteBlock, widen: bool, out: &mut Collection<T>) -> Result<()> {
    if block.is_compressed() {
        return Err(Error::InvalidArgument("decode_row needs an uncompressed block".into()));
    }
    out.read_rows(&block.data, widen)
}

/// One native-width block per attribute, in schema order.
pub fn encode_columns<T: Record>(seq: &Collection<T>) -> Vec<ByteBlock> {
    (0..T::schema().attribute_count())
        .map(|attr| {
            let mut out = Vec::new();
            seq.write_column(attr, &mut out)
                .expect("attribute index below schema count");
            ByteBlock::raw(out)
        })
        .collect()
}

pub fn decode_columns<T: Record>(blocks: &[ByteBlock], out: &mut Collection<T>) -> Result<()> {
    if blocks.iter().any(ByteBlock::is_compressed) {
        return Err(Error::InvalidArgument("decode_columns needs uncompressed blocks".into()));
    }
    let schema = T::schema();
    let count = match (blocks.first(), schema.attributes.first()) {
        (Some(b), Some(spec)) => b.data.len() / spec.width as usize,
        _ => 0,
    };
    let columns: Vec<&[u8]> = blocks.iter().map(|b| b.data.as_slice()).collect();
    out.read_columns(count, &columns)
}
