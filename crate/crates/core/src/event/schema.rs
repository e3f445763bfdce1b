//! Attribute descriptors and the scalar types they describe.

use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ValueKind {
    Float,
    Int,
}

impl ValueKind {
    pub(crate) fn code(self) -> u8 {
        match self {
            ValueKind::Float => 0,
            ValueKind::Int => 1,
        }
    }
}

/// One numerical attribute of a persistent class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct AttributeSpec {
    pub name: &'static str,
    /// Width in bytes: 2, 4 or 8. Two-byte attributes are always integers.
    pub width: u8,
    pub kind: ValueKind,
}

/// Ordered attribute list of one class. The order fixes both the row layout
/// and the order of column sub-branches.
#[derive(Debug, PartialEq, Eq, Hash)]
pub struct ClassSchema {
    pub class_name: &'static str,
    pub attributes: &'static [AttributeSpec],
}

impl ClassSchema {
    pub const fn new(class_name: &'static str, attributes: &'static [AttributeSpec]) -> Self {
        ClassSchema {
            class_name,
            attributes,
        }
    }

    pub fn attribute_count(&self) -> usize {
        self.attributes.len()
    }

    /// Sum of the native attribute widths.
    pub fn raw_size(&self) -> usize {
        self.attributes.iter().map(|a| a.width as usize).sum()
    }

    /// Size of one element if every attribute were stored as an `f64`.
    pub fn all_double_size(&self) -> usize {
        8 * self.attributes.len()
    }

    /// Every attribute respects the width/kind pairing.
    pub fn is_well_formed(&self) -> bool {
        self.attributes.iter().all(|a| match a.width {
            2 => a.kind == ValueKind::Int,
            4 | 8 => true,
            _ => false,
        })
    }
}

pub fn schema_raw_size(schema: &ClassSchema) -> usize {
    schema.raw_size()
}

pub fn schema_all_double_size(schema: &ClassSchema) -> usize {
    schema.all_double_size()
}

/// A single attribute value in its native type.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Value {
    F32(f32),
    F64(f64),
    I16(i16),
    I32(i32),
}

impl Value {
    /// Exact conversion: every native type embeds into `f64` losslessly.
    pub fn to_f64(self) -> f64 {
        match self {
            Value::F32(v) => v as f64,
            Value::F64(v) => v,
            Value::I16(v) => v as f64,
            Value::I32(v) => v as f64,
        }
    }

    /// Bitwise equality, so that NaN payloads and signed zeros count.
    pub fn same_bits(self, other: Value) -> bool {
        match (self, other) {
            (Value::F32(a), Value::F32(b)) => a.to_bits() == b.to_bits(),
            (Value::F64(a), Value::F64(b)) => a.to_bits() == b.to_bits(),
            (Value::I16(a), Value::I16(b)) => a == b,
            (Value::I32(a), Value::I32(b)) => a == b,
            _ => false,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::F32(v) => write!(f, "{v}f32"),
            Value::F64(v) => write!(f, "{v}f64"),
            Value::I16(v) => write!(f, "{v}i16"),
            Value::I32(v) => write!(f, "{v}i32"),
        }
    }
}

/// Native scalar types an attribute may have.
pub trait Scalar: Copy + Default + PartialEq + fmt::Debug {
    const WIDTH: u8;
    const KIND: ValueKind;

    fn to_value(self) -> Value;
    fn put_le(self, out: &mut Vec<u8>);
    /// `bytes` holds exactly `WIDTH` bytes.
    fn get_le(bytes: &[u8]) -> Self;
    fn widen(self) -> f64;
    /// Inverse of [`Scalar::widen`]; `None` when `x` is not exactly representable.
    fn narrow(x: f64) -> Option<Self>;
}

macro_rules! float_scalar {
    ($t:ty, $variant:ident, $w:expr) => {
        impl Scalar for $t {
            const WIDTH: u8 = $w;
            const KIND: ValueKind = ValueKind::Float;

            fn to_value(self) -> Value {
                Value::$variant(self)
            }

            fn put_le(self, out: &mut Vec<u8>) {
                out.extend_from_slice(&self.to_le_bytes());
            }

            fn get_le(bytes: &[u8]) -> Self {
                let mut buf = [0u8; $w];
                buf.copy_from_slice(bytes);
                <$t>::from_le_bytes(buf)
            }

            fn widen(self) -> f64 {
                self as f64
            }

            fn narrow(x: f64) -> Option<Self> {
                let v = x as $t;
                if (v as f64).to_bits() == x.to_bits() || (x.is_nan() && v.is_nan()) {
                    Some(v)
                } else {
                    None
                }
            }
        }
    };
}

macro_rules! int_scalar {
    ($t:ty, $variant:ident, $w:expr) => {
        impl Scalar for $t {
            const WIDTH: u8 = $w;
            const KIND: ValueKind = ValueKind::Int;

            fn to_value(self) -> Value {
                Value::$variant(self)
            }

            fn put_le(self, out: &mut Vec<u8>) {
                out.extend_from_slice(&self.to_le_bytes());
            }

            fn get_le(bytes: &[u8]) -> Self {
                let mut buf = [0u8; $w];
                buf.copy_from_slice(bytes);
                <$t>::from_le_bytes(buf)
            }

            fn widen(self) -> f64 {
                self as f64
            }

            fn narrow(x: f64) -> Option<Self> {
                if x.fract() == 0.0 && x >= <$t>::MIN as f64 && x <= <$t>::MAX as f64 {
                    Some(x as $t)
                } else {
                    None
                }
            }
        }
    };
}

float_scalar!(f32, F32, 4);
float_scalar!(f64, F64, 8);
int_scalar!(i16, I16, 2);
int_scalar!(i32, I32, 4);

/// A persistent class: a flat struct of scalars described by a [`ClassSchema`].
///
/// Attribute indices follow schema order. Out-of-range indices return
/// `None`/`false`; callers validate against the schema first.
pub trait Record: Copy + Default + PartialEq + fmt::Debug + Send + Sync + 'static {
    fn schema() -> &'static ClassSchema;

    fn value(&self, attr: usize) -> Option<Value>;

    /// Appends the native little-endian row (`raw_size` bytes).
    fn put_row_le(&self, out: &mut Vec<u8>);
    /// Reads one native row; `bytes.len() == raw_size`.
    fn get_row_le(bytes: &[u8]) -> Self;

    /// Appends attribute `attr` in its native width.
    fn put_attr_le(&self, attr: usize, out: &mut Vec<u8>) -> bool;
    /// Overwrites attribute `attr` from its native-width bytes.
    fn set_attr_le(&mut self, attr: usize, bytes: &[u8]) -> bool;

    /// Appends every attribute widened to `f64` (`8 * attribute_count` bytes).
    fn put_row_f64(&self, out: &mut Vec<u8>);
    /// Inverse of [`Record::put_row_f64`]; on failure returns the index of
    /// the first attribute that does not narrow exactly.
    fn get_row_f64(bytes: &[u8]) -> Result<Self, usize>;

    fn attr_f64(&self, attr: usize) -> Option<f64>;
    /// Narrows `x` into attribute `attr`; `false` if out of range or inexact.
    fn set_attr_f64(&mut self, attr: usize, x: f64) -> bool;
}

/// Declares a record struct, its static schema, and its [`Record`] impl.
macro_rules! record {
    (
        $(#[$meta:meta])*
        $name:ident, $schema:ident {
            $( $(#[$fmeta:meta])* $field:ident : $ty:ty ),* $(,)?
        }
    ) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, Default, PartialEq)]
        pub struct $name {
            $( $(#[$fmeta])* pub $field: $ty, )*
        }

        pub static $schema: ClassSchema = ClassSchema::new(
            stringify!($name),
            &[ $( AttributeSpec {
                name: stringify!($field),
                width: <$ty as Scalar>::WIDTH,
                kind: <$ty as Scalar>::KIND,
            }, )* ],
        );

        impl Record for $name {
            fn schema() -> &'static ClassSchema {
                &$schema
            }

            fn value(&self, attr: usize) -> Option<Value> {
                let mut i = 0usize;
                $(
                    if attr == i {
                        return Some(Scalar::to_value(self.$field));
                    }
                    i += 1;
                )*
                let _ = i;
                None
            }

            fn put_row_le(&self, out: &mut Vec<u8>) {
                $( Scalar::put_le(self.$field, out); )*
            }

            fn get_row_le(bytes: &[u8]) -> Self {
                let mut at = 0usize;
                $(
                    let w = <$ty as Scalar>::WIDTH as usize;
                    let $field = <$ty as Scalar>::get_le(&bytes[at..at + w]);
                    at += w;
                )*
                let _ = at;
                $name { $( $field, )* }
            }

            fn put_row_f64(&self, out: &mut Vec<u8>) {
                $( out.extend_from_slice(&Scalar::widen(self.$field).to_le_bytes()); )*
            }

            fn get_row_f64(bytes: &[u8]) -> Result<Self, usize> {
                let mut at = 0usize;
                $(
                    let mut word = [0u8; 8];
                    word.copy_from_slice(&bytes[at * 8..at * 8 + 8]);
                    let $field = <$ty as Scalar>::narrow(f64::from_le_bytes(word)).ok_or(at)?;
                    at += 1;
                )*
                let _ = at;
                Ok($name { $( $field, )* })
            }

            fn put_attr_le(&self, attr: usize, out: &mut Vec<u8>) -> bool {
                let mut i = 0usize;
                $(
                    if attr == i {
                        Scalar::put_le(self.$field, out);
                        return true;
                    }
                    i += 1;
                )*
                let _ = i;
                false
            }

            fn set_attr_le(&mut self, attr: usize, bytes: &[u8]) -> bool {
                let mut i = 0usize;
                $(
                    if attr == i {
                        self.$field = <$ty as Scalar>::get_le(bytes);
                        return true;
                    }
                    i += 1;
                )*
                let _ = (i, bytes);
                false
            }

            fn attr_f64(&self, attr: usize) -> Option<f64> {
                let mut i = 0usize;
                $(
                    if attr == i {
                        return Some(Scalar::widen(self.$field));
                    }
                    i += 1;
                )*
                let _ = i;
                None
            }

            fn set_attr_f64(&mut self, attr: usize, x: f64) -> bool {
                let mut i = 0usize;
                $(
                    if attr == i {
                        return match <$ty as Scalar>::narrow(x) {
                            Some(v) => {
                                self.$field = v;
                                true
                            }
                            None => false,
                        };
                    }
                    i += 1;
                )*
                let _ = (i, x);
                false
            }
        }
    };
}

pub(crate) use record;
