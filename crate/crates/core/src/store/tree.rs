//! Entry/branch/basket file. Entries are folders; each class is either one
//! row-wise branch (split 0) or one branch per attribute (split >= 1).
//! Per-entry element counts live in the index, so any entry can be located
//! inside its basket without decoding neighbours.

use std::io::{Read, Seek, SeekFrom, Write};

use crate::codec::{compress_bytes, decompress_into, MAX_LEVEL};
use crate::error::{Error, Result};
use crate::event::{ClassSchema, Folder};

use super::wire::{put_name, read_at, CountingReader, Fields, IoCounters, Tally};

pub const TREE_MAGIC: [u8; 4] = *b"RTBT";
pub const TREE_VERSION: u16 = 1;
/// Attribute field of a branch that carries whole rows.
pub const WHOLE_CLASS: u16 = 0xFFFF;
pub const DEFAULT_BASKET_SIZE: u32 = 8000;

const FIXED_HEADER_LEN: usize = 28;
const ENTRY_COUNT_OFFSET: u64 = 16;
const TRAILER_LEN: u64 = 12;
const BASKET_DESC_LEN: usize = 28;

/// Storage choices fixed for the whole file.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TreeLayout {
    /// Row branches hold every attribute as `f64`.
    pub widen: bool,
    /// 0 = one row branch per class, otherwise one branch per attribute.
    pub split: u8,
    pub level: u8,
    pub basket_size: u32,
}

impl TreeLayout {
    pub fn split(level: u8, basket_size: u32) -> Self {
        TreeLayout {
            widen: false,
            split: 99,
            level,
            basket_size,
        }
    }

    pub fn matrix(level: u8, basket_size: u32) -> Self {
        TreeLayout {
            widen: true,
            split: 0,
            level,
            basket_size,
        }
    }

    pub fn is_split(&self) -> bool {
        self.split > 0
    }

    fn validate(&self) -> Result<()> {
        if self.level > MAX_LEVEL {
            return Err(Error::InvalidArgument(format!("compression level {}", self.level)));
        }
        if self.basket_size == 0 {
            return Err(Error::InvalidArgument("basket size must be positive".into()));
        }
        if self.widen && self.is_split() {
            return Err(Error::InvalidArgument("widened rows cannot be split".into()));
        }
        Ok(())
    }
}

/// Attribute descriptor as stored in the header.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttrDesc {
    pub name: String,
    pub width: u8,
    pub kind: u8,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassDesc {
    pub name: String,
    pub attributes: Vec<AttrDesc>,
}

impl ClassDesc {
    fn of(schema: &ClassSchema) -> Self {
        ClassDesc {
            name: schema.class_name.to_owned(),
            attributes: schema
                .attributes
                .iter()
                .map(|a| AttrDesc {
                    name: a.name.to_owned(),
                    width: a.width,
                    kind: a.kind.code(),
                })
                .collect(),
        }
    }

    fn matches(&self, schema: &ClassSchema) -> bool {
        self.name == schema.class_name
            && self.attributes.len() == schema.attributes.len()
            && self
                .attributes
                .iter()
                .zip(schema.attributes)
                .all(|(d, a)| d.name == a.name && d.width == a.width && d.kind == a.kind.code())
    }

    fn row_size(&self, widen: bool) -> u64 {
        if widen {
            8 * self.attributes.len() as u64
        } else {
            self.attributes.iter().map(|a| a.width as u64).sum()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeHeader {
    pub version: u16,
    pub layout: TreeLayout,
    pub entry_count: u64,
    pub classes: Vec<ClassDesc>,
    pub header_len: u32,
}

/// Expected (class, attribute) of every branch, in file order.
fn branch_plan(classes: &[ClassDesc], split: bool) -> Vec<(u16, u16)> {
    let mut plan = Vec::new();
    for (c, class) in classes.iter().enumerate() {
        if split {
            plan.extend((0..class.attributes.len()).map(|a| (c as u16, a as u16)));
        } else {
            plan.push((c as u16, WHOLE_CLASS));
        }
    }
    plan
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BasketDesc {
    pub first_entry: u64,
    pub entry_count: u32,
    pub offset: u64,
    pub compressed_len: u32,
    pub uncompressed_len: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BranchIndex {
    pub class: u16,
    /// [`WHOLE_CLASS`] for a row branch.
    pub attr: u16,
    pub baskets: Vec<BasketDesc>,
    /// Element count of every entry.
    pub counts: Vec<u32>,
}

impl BranchIndex {
    pub fn label(&self, classes: &[ClassDesc]) -> String {
        let class = &classes[self.class as usize];
        if self.attr == WHOLE_CLASS {
            class.name.clone()
        } else {
            format!("{}.{}", class.name, class.attributes[self.attr as usize].name)
        }
    }
}

fn put_header(out: &mut Vec<u8>, schemas: &[&ClassSchema], layout: &TreeLayout) -> Result<()> {
    out.extend_from_slice(&TREE_MAGIC);
    out.extend_from_slice(&TREE_VERSION.to_le_bytes());
    out.push(layout.widen as u8);
    out.push(layout.split);
    out.push(layout.level);
    out.push(0);
    out.extend_from_slice(&(schemas.len() as u16).to_le_bytes());
    out.extend_from_slice(&layout.basket_size.to_le_bytes());
    out.extend_from_slice(&0u64.to_le_bytes());
    let len_at = out.len();
    out.extend_from_slice(&0u32.to_le_bytes());
    for schema in schemas {
        put_name(out, schema.class_name)?;
        out.extend_from_slice(&(schema.attributes.len() as u16).to_le_bytes());
        for a in schema.attributes {
            put_name(out, a.name)?;
            out.push(a.width);
            out.push(a.kind.code());
        }
    }
    let len = out.len() as u32;
    out[len_at..len_at + 4].copy_from_slice(&len.to_le_bytes());
    Ok(())
}

struct BranchBuffer {
    index: BranchIndex,
    buf: Vec<u8>,
    first_entry: u64,
    pending: u32,
}

/// Counts returned by [`TreeWriter::finish`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TreeTotals {
    pub file_len: u64,
    pub entries: u64,
    pub branches: usize,
    pub baskets: usize,
    /// Sum of uncompressed basket payloads.
    pub payload_bytes: u64,
}

pub struct TreeWriter<W: Write + Seek> {
    out: Tally<W>,
    layout: TreeLayout,
    schemas: &'static [&'static ClassSchema],
    branches: Vec<BranchBuffer>,
    entries: u64,
    payload_bytes: u64,
    scratch: Vec<u8>,
}

impl<W: Write + Seek> TreeWriter<W> {
    pub fn new(inner: W, schemas: &'static [&'static ClassSchema], layout: TreeLayout) -> Result<Self> {
        layout.validate()?;
        let mut header = Vec::new();
        put_header(&mut header, schemas, &layout)?;
        let mut out = Tally { inner, pos: 0 };
        out.put(&header)?;
        let descs: Vec<ClassDesc> = schemas.iter().map(|s| ClassDesc::of(s)).collect();
        let branches = branch_plan(&descs, layout.is_split())
            .into_iter()
            .map(|(class, attr)| BranchBuffer {
                index: BranchIndex {
                    class,
                    attr,
                    baskets: Vec::new(),
                    counts: Vec::new(),
                },
                buf: Vec::with_capacity(layout.basket_size as usize),
                first_entry: 0,
                pending: 0,
            })
            .collect();
        Ok(TreeWriter {
            out,
            layout,
            schemas,
            branches,
            entries: 0,
            payload_bytes: 0,
            scratch: Vec::new(),
        })
    }

    pub fn layout(&self) -> TreeLayout {
        self.layout
    }

    pub fn entries(&self) -> u64 {
        self.entries
    }

    /// Appends `folder` as the next entry.
    pub fn append<F: Folder>(&mut self, folder: &F) -> Result<()> {
        if F::schemas() != self.schemas {
            return Err(Error::InvalidArgument("folder type does not match the tree schema".into()));
        }
        for b in 0..self.branches.len() {
            let (class, attr) = {
                let i = &self.branches[b].index;
                (i.class as usize, i.attr)
            };
            let seq = folder.collection(class);
            let count = u32::try_from(seq.len())
                .map_err(|_| Error::InvalidArgument(format!("{} elements in one entry", seq.len())))?;
            self.scratch.clear();
            if attr == WHOLE_CLASS {
                seq.write_rows(self.layout.widen, &mut self.scratch);
            } else {
                seq.write_column(attr as usize, &mut self.scratch)?;
            }
            self.push_entry(b, count)?;
        }
        self.entries += 1;
        Ok(())
    }

    fn push_entry(&mut self, b: usize, count: u32) -> Result<()> {
        let limit = self.layout.basket_size as usize;
        let fits = self.branches[b].buf.len() + self.scratch.len() <= limit;
        if self.branches[b].pending > 0 && !fits {
            self.flush(b)?;
        }
        let branch = &mut self.branches[b];
        if branch.pending == 0 {
            branch.first_entry = self.entries;
        }
        branch.buf.extend_from_slice(&self.scratch);
        branch.pending += 1;
        branch.index.counts.push(count);
        if branch.buf.len() >= limit {
            self.flush(b)?;
        }
        Ok(())
    }

    fn flush(&mut self, b: usize) -> Result<()> {
        let branch = &mut self.branches[b];
        if branch.pending == 0 {
            return Ok(());
        }
        let uncompressed_len = u32::try_from(branch.buf.len())
            .map_err(|_| Error::InvalidArgument("basket larger than 4 GiB".into()))?;
        let block = compress_bytes(&branch.buf, self.layout.level)?;
        let compressed_len = u32::try_from(block.data.len())
            .map_err(|_| Error::InvalidArgument("basket larger than 4 GiB".into()))?;
        branch.index.baskets.push(BasketDesc {
            first_entry: branch.first_entry,
            entry_count: branch.pending,
            offset: self.out.pos,
            compressed_len,
            uncompressed_len,
        });
        self.payload_bytes += uncompressed_len as u64;
        branch.buf.clear();
        branch.pending = 0;
        self.out.put(&block.data)
    }

    /// Flushes every branch, writes index and trailer and patches the entry
    /// count into the header.
    pub fn finish(mut self) -> Result<(W, TreeTotals)> {
        for b in 0..self.branches.len() {
            self.flush(b)?;
        }
        let index_offset = self.out.pos;
        let mut index = Vec::new();
        index.extend_from_slice(&(self.branches.len() as u32).to_le_bytes());
        let mut baskets = 0;
        for branch in &self.branches {
            let i = &branch.index;
            index.extend_from_slice(&i.class.to_le_bytes());
            index.extend_from_slice(&i.attr.to_le_bytes());
            index.extend_from_slice(&(i.baskets.len() as u32).to_le_bytes());
            for d in &i.baskets {
                index.extend_from_slice(&d.first_entry.to_le_bytes());
                index.extend_from_slice(&d.entry_count.to_le_bytes());
                index.extend_from_slice(&d.offset.to_le_bytes());
                index.extend_from_slice(&d.compressed_len.to_le_bytes());
                index.extend_from_slice(&d.uncompressed_len.to_le_bytes());
            }
            for c in &i.counts {
                index.extend_from_slice(&c.to_le_bytes());
            }
            baskets += i.baskets.len();
        }
        index.extend_from_slice(&index_offset.to_le_bytes());
        index.extend_from_slice(&TREE_MAGIC);
        self.out.put(&index)?;
        let file_len = self.out.pos;
        let mut inner = self.out.inner;
        inner.seek(SeekFrom::Start(ENTRY_COUNT_OFFSET))?;
        inner.write_all(&self.entries.to_le_bytes())?;
        inner.seek(SeekFrom::Start(file_len))?;
        inner.flush()?;
        Ok((
            inner,
            TreeTotals {
                file_len,
                entries: self.entries,
                branches: self.branches.len(),
                baskets,
                payload_bytes: self.payload_bytes,
            },
        ))
    }
}

fn parse_header(buf: &[u8]) -> Result<TreeHeader> {
    let mut f = Fields::new(buf, "tree header");
    if f.bytes(4)? != TREE_MAGIC {
        return Err(Error::corrupt("tree file: bad magic"));
    }
    let version = f.u16()?;
    if version != TREE_VERSION {
        return Err(Error::corrupt(format!("tree file: unsupported version {version}")));
    }
    let widen = match f.u8()? {
        0 => false,
        1 => true,
        x => return Err(Error::corrupt(format!("tree header: widen flag {x}"))),
    };
    let split = f.u8()?;
    let level = f.u8()?;
    f.u8()?;
    let class_count = f.u16()? as u64;
    let basket_size = f.u32()?;
    let entry_count = f.u64()?;
    let header_len = f.u32()?;
    let layout = TreeLayout {
        widen,
        split,
        level,
        basket_size,
    };
    layout.validate().map_err(|e| Error::corrupt(format!("tree header: {e}")))?;
    if header_len as usize != buf.len() {
        return Err(Error::corrupt("tree header: length mismatch"));
    }
    let class_count = f.check_count(class_count, 4)?;
    let mut classes = Vec::with_capacity(class_count);
    for _ in 0..class_count {
        let name = f.name()?.to_owned();
        let n = f.u16()? as u64;
        let n = f.check_count(n, 4)?;
        let mut attributes = Vec::with_capacity(n);
        for _ in 0..n {
            let attr = AttrDesc {
                name: f.name()?.to_owned(),
                width: f.u8()?,
                kind: f.u8()?,
            };
            let ok = match attr.width {
                2 => attr.kind == 1,
                4 | 8 => attr.kind <= 1,
                _ => false,
            };
            if !ok {
                return Err(Error::corrupt(format!("tree header: attribute {name}.{}", attr.name)));
            }
            attributes.push(attr);
        }
        classes.push(ClassDesc { name, attributes });
    }
    if f.remaining() != 0 {
        return Err(Error::corrupt("tree header: trailing bytes"));
    }
    Ok(TreeHeader {
        version,
        layout,
        entry_count,
        classes,
        header_len,
    })
}

fn parse_index(buf: &[u8], header: &TreeHeader, index_offset: u64) -> Result<Vec<BranchIndex>> {
    let mut f = Fields::new(buf, "tree index");
    let plan = branch_plan(&header.classes, header.layout.is_split());
    let count = f.u32()? as usize;
    if count != plan.len() {
        return Err(Error::corrupt(format!("tree index: {count} branches, expected {}", plan.len())));
    }
    let entries = header.entry_count;
    let mut branches = Vec::with_capacity(count);
    for (class, attr) in plan {
        if (f.u16()?, f.u16()?) != (class, attr) {
            return Err(Error::corrupt("tree index: branch order does not match the header"));
        }
        let n = f.u32()? as u64;
        let n = f.check_count(n, BASKET_DESC_LEN)?;
        let mut baskets = Vec::with_capacity(n);
        let mut next = 0u64;
        for _ in 0..n {
            let d = BasketDesc {
                first_entry: f.u64()?,
                entry_count: f.u32()?,
                offset: f.u64()?,
                compressed_len: f.u32()?,
                uncompressed_len: f.u32()?,
            };
            let end = d.offset.checked_add(d.compressed_len as u64);
            if d.first_entry != next
                || d.entry_count == 0
                || d.offset < header.header_len as u64
                || end.is_none_or(|e| e > index_offset)
                || (header.layout.level == 0 && d.compressed_len != d.uncompressed_len)
            {
                return Err(Error::corrupt(format!("tree index: bad basket at entry {next}")));
            }
            next += d.entry_count as u64;
            baskets.push(d);
        }
        if next != entries {
            return Err(Error::corrupt(format!("tree index: baskets cover {next} of {entries} entries")));
        }
        let counts = f.check_count(entries, 4)?;
        let counts = (0..counts).map(|_| f.u32()).collect::<Result<Vec<_>>>()?;
        branches.push(BranchIndex {
            class,
            attr,
            baskets,
            counts,
        });
    }
    if f.remaining() != 0 {
        return Err(Error::corrupt("tree index: trailing bytes"));
    }
    Ok(branches)
}

/// Byte offset of every entry inside its branch stream.
struct BranchOffsets {
    starts: Vec<u64>,
}

struct CachedBasket {
    basket: usize,
    bytes: Vec<u8>,
}

pub struct TreeReader<R> {
    src: CountingReader<R>,
    header: TreeHeader,
    branches: Vec<BranchIndex>,
    offsets: Vec<BranchOffsets>,
    /// First branch of each class.
    class_start: Vec<usize>,
    cache: Vec<Option<CachedBasket>>,
    spare: Vec<u8>,
    basket_loads: u64,
    file_len: u64,
}

impl<R: Read + Seek> TreeReader<R> {
    /// Loads and validates header and index. Baskets are read on demand.
    pub fn open(src: R) -> Result<Self> {
        let mut src = CountingReader::new(src);
        let file_len = src.seek(SeekFrom::End(0))?;
        if file_len < FIXED_HEADER_LEN as u64 + TRAILER_LEN {
            return Err(Error::corrupt(format!("tree file of {file_len} bytes is too short")));
        }
        let mut buf = Vec::new();
        read_at(&mut src, 0, FIXED_HEADER_LEN, &mut buf)?;
        let header_len = u32::from_le_bytes(buf[24..28].try_into().unwrap_or_default()) as u64;
        if header_len < FIXED_HEADER_LEN as u64 || header_len > file_len - TRAILER_LEN {
            return Err(Error::corrupt(format!("tree header length {header_len}")));
        }
        read_at(&mut src, 0, header_len as usize, &mut buf)?;
        let header = parse_header(&buf)?;

        read_at(&mut src, file_len - TRAILER_LEN, TRAILER_LEN as usize, &mut buf)?;
        let mut t = Fields::new(&buf, "tree trailer");
        let index_offset = t.u64()?;
        if t.bytes(4)? != TREE_MAGIC {
            return Err(Error::corrupt("tree file: bad trailer magic"));
        }
        if index_offset < header_len || index_offset > file_len - TRAILER_LEN {
            return Err(Error::corrupt(format!("tree index offset {index_offset}")));
        }
        read_at(&mut src, index_offset, (file_len - TRAILER_LEN - index_offset) as usize, &mut buf)?;
        let branches = parse_index(&buf, &header, index_offset)?;

        let widen = header.layout.widen;
        let mut offsets = Vec::with_capacity(branches.len());
        for b in &branches {
            let class = &header.classes[b.class as usize];
            let stride = if b.attr == WHOLE_CLASS {
                class.row_size(widen)
            } else {
                class.attributes[b.attr as usize].width as u64
            };
            let mut starts = Vec::with_capacity(b.counts.len() + 1);
            let mut pos = 0u64;
            starts.push(0);
            for &n in &b.counts {
                pos = pos
                    .checked_add(n as u64 * stride)
                    .ok_or_else(|| Error::corrupt("tree index: element counts overflow"))?;
                starts.push(pos);
            }
            for d in &b.baskets {
                let first = d.first_entry as usize;
                let span = starts[first + d.entry_count as usize] - starts[first];
                if span != d.uncompressed_len as u64 {
                    return Err(Error::corrupt(format!(
                        "tree index: {} basket at entry {first} declares {} bytes, counts give {span}",
                        b.label(&header.classes),
                        d.uncompressed_len
                    )));
                }
            }
            offsets.push(BranchOffsets { starts });
        }
        let mut class_start = Vec::with_capacity(header.classes.len());
        for (i, b) in branches.iter().enumerate() {
            if class_start.len() == b.class as usize {
                class_start.push(i);
            }
        }
        // Classes without attributes have no branch in split mode.
        while class_start.len() < header.classes.len() {
            class_start.push(branches.len());
        }
        let cache = branches.iter().map(|_| None).collect();
        Ok(TreeReader {
            src,
            header,
            branches,
            offsets,
            class_start,
            cache,
            spare: Vec::new(),
            basket_loads: 0,
            file_len,
        })
    }

    pub fn header(&self) -> &TreeHeader {
        &self.header
    }

    pub fn branches(&self) -> &[BranchIndex] {
        &self.branches
    }

    pub fn entry_count(&self) -> u64 {
        self.header.entry_count
    }

    pub fn file_len(&self) -> u64 {
        self.file_len
    }

    pub fn io_counters(&self) -> IoCounters {
        self.src.counters()
    }

    pub fn basket_loads(&self) -> u64 {
        self.basket_loads
    }

    pub fn drop_caches(&mut self) {
        self.cache.iter_mut().for_each(|c| *c = None);
    }

    fn basket_of(&self, b: usize, entry: u64) -> usize {
        let baskets = &self.branches[b].baskets;
        baskets.partition_point(|d| d.first_entry <= entry) - 1
    }

    /// Makes sure the basket holding `entry` of branch `b` is cached.
    fn load(&mut self, b: usize, entry: u64) -> Result<()> {
        let k = self.basket_of(b, entry);
        if matches!(&self.cache[b], Some(c) if c.basket == k) {
            return Ok(());
        }
        let d = self.branches[b].baskets[k];
        let mut bytes = match self.cache[b].take() {
            Some(c) => c.bytes,
            None => Vec::new(),
        };
        read_at(&mut self.src, d.offset, d.compressed_len as usize, &mut self.spare)?;
        decompress_into(&self.spare, self.header.layout.level, d.uncompressed_len as u64, &mut bytes).map_err(
            |e| {
                Error::corrupt(format!(
                    "branch {} basket {k} (entries {}..{}): {e}",
                    self.branches[b].label(&self.header.classes),
                    d.first_entry,
                    d.first_entry + d.entry_count as u64
                ))
            },
        )?;
        self.basket_loads += 1;
        self.cache[b] = Some(CachedBasket { basket: k, bytes });
        Ok(())
    }

    fn slice(&self, b: usize, entry: u64) -> &[u8] {
        let c = self.cache[b].as_ref().expect("basket loaded before slicing");
        let first = self.branches[b].baskets[c.basket].first_entry as usize;
        let starts = &self.offsets[b].starts;
        let base = starts[first];
        let e = entry as usize;
        &c.bytes[(starts[e] - base) as usize..(starts[e + 1] - base) as usize]
    }

    /// True when the stored class descriptors equal `schemas`.
    pub fn matches(&self, schemas: &[&ClassSchema]) -> bool {
        self.header.classes.len() == schemas.len()
            && self.header.classes.iter().zip(schemas).all(|(d, s)| d.matches(s))
    }

    /// Reads entry `entry` into `out`; the folder id becomes the entry number.
    pub fn read_entry<F: Folder>(&mut self, entry: u64, out: &mut F) -> Result<()> {
        if entry >= self.header.entry_count {
            return Err(Error::OutOfRange {
                index: entry,
                size: self.header.entry_count,
            });
        }
        if !self.matches(F::schemas()) {
            return Err(Error::InvalidArgument("tree schema does not match the folder type".into()));
        }
        for b in 0..self.branches.len() {
            self.load(b, entry)?;
        }
        let widen = self.header.layout.widen;
        let split = self.header.layout.is_split();
        for c in 0..self.header.classes.len() {
            let first = self.class_start[c];
            let n_attrs = self.header.classes[c].attributes.len();
            let result = if !split {
                out.collection_mut(c).read_rows(self.slice(first, entry), widen)
            } else if n_attrs == 0 {
                out.collection_mut(c).read_columns(0, &[])
            } else {
                let count = self.branches[first].counts[entry as usize];
                if self.branches[first..first + n_attrs]
                    .iter()
                    .any(|b| b.counts[entry as usize] != count)
                {
                    return Err(Error::corrupt(format!(
                        "class {}: sub-branches disagree on the element count of entry {entry}",
                        self.header.classes[c].name
                    )));
                }
                let columns: Vec<&[u8]> = (first..first + n_attrs).map(|b| self.slice(b, entry)).collect();
                out.collection_mut(c).read_columns(count as usize, &columns)
            };
            result.map_err(|e| match e {
                Error::Corrupt(m) => Error::corrupt(format!("entry {entry}: {m}")),
                other => other,
            })?;
        }
        out.set_id(entry);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use std::io::Cursor;

    use super::*;
    use crate::containers::ContainerKind;
    use crate::event::{generate_event, Event, EVENT_SCHEMAS};

    fn events(n: u64, reduction: u32) -> Vec<Event> {
        (0..n)
            .map(|i| generate_event(3, i, reduction, ContainerKind::ValueSeq).unwrap())
            .collect()
    }

    fn write(evs: &[Event], layout: TreeLayout) -> (Vec<u8>, TreeTotals) {
        let mut w = TreeWriter::new(Cursor::new(Vec::new()), &EVENT_SCHEMAS, layout).unwrap();
        for e in evs {
            w.append(e).unwrap();
        }
        let (c, totals) = w.finish().unwrap();
        (c.into_inner(), totals)
    }

    #[test]
    fn branch_counts() {
        let evs = events(2, 100);
        let (bytes, t) = write(&evs, TreeLayout::split(1, 8000));
        assert_eq!(t.branches, 11 + 11 + 6 + 5 + 12);
        let r = TreeReader::open(Cursor::new(bytes)).unwrap();
        let track_hit_branches = r.branches().iter().filter(|b| b.class == 4).count();
        assert_eq!(track_hit_branches, 12);
        let (_, t) = write(&evs, TreeLayout { split: 0, ..TreeLayout::split(1, 8000) });
        assert_eq!(t.branches, 5);
    }

    #[test]
    fn zero_entries() {
        let (bytes, t) = write(&[], TreeLayout::split(1, 8000));
        assert_eq!(t.baskets, 0);
        let r = TreeReader::open(Cursor::new(bytes)).unwrap();
        assert_eq!(r.entry_count(), 0);
        assert!(r.branches().iter().all(|b| b.baskets.is_empty()));
    }

    #[test]
    fn round_trip_all_layouts() {
        let evs = events(12, 20);
        let layouts = [
            TreeLayout::split(0, 8000),
            TreeLayout::split(9, 500),
            TreeLayout { split: 0, ..TreeLayout::split(1, 3000) },
            TreeLayout::matrix(1, 8000),
            TreeLayout::matrix(0, 64),
        ];
        for layout in layouts {
            let (bytes, _) = write(&evs, layout);
            let mut r = TreeReader::open(Cursor::new(bytes)).unwrap();
            for kind in ContainerKind::ALL {
                let mut out = Event::new(kind);
                for i in [0usize, 11, 3, 4, 4, 7, 1] {
                    r.read_entry(i as u64, &mut out).unwrap();
                    assert!(out.same_content(&evs[i]), "{layout:?} {kind} entry {i}");
                }
            }
        }
    }

    #[test]
    fn basket_sizes_follow_flush_rule() {
        let evs = events(30, 10);
        let (bytes, _) = write(&evs, TreeLayout::split(0, 8000));
        let r = TreeReader::open(Cursor::new(bytes)).unwrap();
        for b in r.branches() {
            for d in &b.baskets {
                assert!(d.uncompressed_len <= 8000 || d.entry_count == 1);
            }
            let total: u64 = b.baskets.iter().map(|d| d.uncompressed_len as u64).sum();
            let n = b.baskets.len() as u64;
            assert!(n >= total.div_ceil(8000), "{n} baskets for {total} bytes");
        }
    }

    #[test]
    fn oversized_entry_gets_its_own_basket() {
        let evs = events(3, 1);
        let (bytes, _) = write(&evs, TreeLayout { split: 0, ..TreeLayout::split(0, 1000) });
        let r = TreeReader::open(Cursor::new(bytes)).unwrap();
        for b in r.branches() {
            assert!(b.baskets.iter().all(|d| d.entry_count == 1));
        }
    }

    #[test]
    fn cached_reread_does_no_io() {
        let evs = events(5, 20);
        let (bytes, _) = write(&evs, TreeLayout::split(1, 8000));
        let mut r = TreeReader::open(Cursor::new(bytes)).unwrap();
        let mut out = Event::new(ContainerKind::SlotArray);
        r.read_entry(2, &mut out).unwrap();
        let before = r.io_counters();
        r.read_entry(2, &mut out).unwrap();
        assert_eq!(r.io_counters(), before);
    }

    #[test]
    fn matrix_payload_is_all_double() {
        let evs = events(4, 10);
        let (_, t) = write(&evs, TreeLayout::matrix(0, 8000));
        let expect: usize = evs.iter().map(|e| e.all_double_bytes()).sum();
        assert_eq!(t.payload_bytes, expect as u64);
        let (_, t) = write(&evs, TreeLayout::split(0, 8000));
        let expect: usize = evs.iter().map(|e| e.raw_bytes()).sum();
        assert_eq!(t.payload_bytes, expect as u64);
    }

    #[test]
    fn out_of_range_and_wrong_folder() {
        let evs = events(2, 50);
        let (bytes, _) = write(&evs, TreeLayout::split(1, 8000));
        let mut r = TreeReader::open(Cursor::new(bytes)).unwrap();
        let mut out = Event::new(ContainerKind::ValueSeq);
        assert!(matches!(r.read_entry(2, &mut out), Err(Error::OutOfRange { .. })));
        let mut digis = crate::event::Digis::new(ContainerKind::ValueSeq);
        assert!(r.read_entry(0, &mut digis).is_err());
    }

    #[test]
    fn corrupt_basket_names_branch() {
        let evs = events(4, 10);
        let (mut bytes, _) = write(&evs, TreeLayout::split(1, 8000));
        let r = TreeReader::open(Cursor::new(bytes.clone())).unwrap();
        let target = r.branches().iter().find(|b| b.class == 3 && b.attr == 2).unwrap().clone();
        let d = target.baskets[0];
        for i in 0..d.compressed_len as usize {
            bytes[d.offset as usize + i] ^= 0x5a;
        }
        let mut r = TreeReader::open(Cursor::new(bytes)).unwrap();
        let mut out = Event::new(ContainerKind::ValueSeq);
        let err = r.read_entry(0, &mut out).unwrap_err().to_string();
        assert!(err.contains("CaloHit.cell_id"), "{err}");
    }

    #[test]
    fn truncation_detected() {
        let (bytes, _) = write(&events(3, 30), TreeLayout::split(1, 8000));
        for cut in [1, 11, 13, 100] {
            assert!(TreeReader::open(Cursor::new(bytes[..bytes.len() - cut].to_vec())).is_err());
        }
    }
}
