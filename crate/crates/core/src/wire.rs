//! Shuffle wire format.
//!
//! Integers travel as unsigned LEB128 varints: seven payload bits per byte,
//! the high bit set when another byte follows. A 64-bit value takes at most
//! ten bytes.
//!
//! A vertex shuffle block is laid out column-wise:
//!
//! ```text
//! varint(count)
//! varint(id[0]) varint(id[1] - id[0]) ... varint(id[n-1] - id[n-2])   // ids sorted ascending
//! varint(len[0]) payload[0] ... varint(len[n-1]) payload[n-1]
//! ```
//!
//! The [`CommMeter`](crate::CommMeter) charges exactly the length of the
//! produced blocks.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::graph::VertexId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum WireError {
    #[error("unexpected end of input")]
    Truncated,
    #[error("varint longer than 64 bits")]
    Overflow,
    #[error("{0} trailing bytes")]
    Trailing(usize),
    #[error("invalid value tag {0}")]
    InvalidTag(u8),
    #[error("invalid utf-8 string")]
    Utf8,
}

pub const MAX_VARINT_LEN: usize = 10;

pub fn write_varint(out: &mut Vec<u8>, mut value: u64) {
    while value >= 0x80 {
        out.push((value as u8) | 0x80);
        value >>= 7;
    }
    out.push(value as u8);
}

pub fn varint_len(value: u64) -> usize {
    let bits = 64 - (value | 1).leading_zeros() as usize;
    bits.div_ceil(7)
}

pub fn read_varint(input: &mut &[u8]) -> Result<u64, WireError> {
    let mut value = 0u64;
    for i in 0..MAX_VARINT_LEN {
        let (&byte, rest) = input.split_first().ok_or(WireError::Truncated)?;
        *input = rest;
        let payload = (byte & 0x7f) as u64;
        if i == MAX_VARINT_LEN - 1 && payload > 1 {
            return Err(WireError::Overflow);
        }
        value |= payload << (7 * i);
        if byte & 0x80 == 0 {
            return Ok(value);
        }
    }
    Err(WireError::Overflow)
}

#[inline]
pub fn zigzag(v: i64) -> u64 {
    ((v << 1) ^ (v >> 63)) as u64
}

#[inline]
pub fn unzigzag(v: u64) -> i64 {
    ((v >> 1) as i64) ^ -((v & 1) as i64)
}

fn take<'a>(input: &mut &'a [u8], n: usize) -> Result<&'a [u8], WireError> {
    if input.len() < n {
        return Err(WireError::Truncated);
    }
    let (head, rest) = input.split_at(n);
    *input = rest;
    Ok(head)
}

/// Values that can cross an exchange.
pub trait Wire: Sized {
    fn encode(&self, out: &mut Vec<u8>);
    fn decode(input: &mut &[u8]) -> Result<Self, WireError>;

    fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.encode(&mut out);
        out
    }

    /// Decodes a value that must span all of `bytes`.
    fn from_bytes(mut bytes: &[u8]) -> Result<Self, WireError> {
        let v = Self::decode(&mut bytes)?;
        if !bytes.is_empty() {
            return Err(WireError::Trailing(bytes.len()));
        }
        Ok(v)
    }
}

/// Bound for every attribute, message and key the engine moves around.
pub trait Data: Clone + Send + Sync + Wire + 'static {}
impl<T: Clone + Send + Sync + Wire + 'static> Data for T {}

macro_rules! unsigned_wire {
    ($($t:ty),*) => {$(
        impl Wire for $t {
            fn encode(&self, out: &mut Vec<u8>) {
                write_varint(out, *self as u64);
            }
            fn decode(input: &mut &[u8]) -> Result<Self, WireError> {
                let v = read_varint(input)?;
                <$t>::try_from(v).map_err(|_| WireError::Overflow)
            }
        }
    )*};
}
unsigned_wire!(u8, u16, u32, u64, usize);

macro_rules! signed_wire {
    ($($t:ty),*) => {$(
        impl Wire for $t {
            fn encode(&self, out: &mut Vec<u8>) {
                write_varint(out, zigzag(*self as i64));
            }
            fn decode(input: &mut &[u8]) -> Result<Self, WireError> {
                let v = unzigzag(read_varint(input)?);
                <$t>::try_from(v).map_err(|_| WireError::Overflow)
            }
        }
    )*};
}
signed_wire!(i8, i16, i32, i64, isize);

impl Wire for f64 {
    fn encode(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
    fn decode(input: &mut &[u8]) -> Result<Self, WireError> {
        let mut b = [0u8; 8];
        b.copy_from_slice(take(input, 8)?);
        Ok(f64::from_le_bytes(b))
    }
}

impl Wire for f32 {
    fn encode(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
    fn decode(input: &mut &[u8]) -> Result<Self, WireError> {
        let mut b = [0u8; 4];
        b.copy_from_slice(take(input, 4)?);
        Ok(f32::from_le_bytes(b))
    }
}

impl Wire for bool {
    fn encode(&self, out: &mut Vec<u8>) {
        out.push(*self as u8);
    }
    fn decode(input: &mut &[u8]) -> Result<Self, WireError> {
        match take(input, 1)?[0] {
            0 => Ok(false),
            1 => Ok(true),
            t => Err(WireError::InvalidTag(t)),
        }
    }
}

impl Wire for () {
    fn encode(&self, _: &mut Vec<u8>) {}
    fn decode(_: &mut &[u8]) -> Result<Self, WireError> {
        Ok(())
    }
}

impl Wire for String {
    fn encode(&self, out: &mut Vec<u8>) {
        write_varint(out, self.len() as u64);
        out.extend_from_slice(self.as_bytes());
    }
    fn decode(input: &mut &[u8]) -> Result<Self, WireError> {
        let len = read_varint(input)? as usize;
        let bytes = take(input, len)?;
        core::str::from_utf8(bytes)
            .map(String::from)
            .map_err(|_| WireError::Utf8)
    }
}

impl<T: Wire> Wire for Option<T> {
    fn encode(&self, out: &mut Vec<u8>) {
        match self {
            None => out.push(0),
            Some(v) => {
                out.push(1);
                v.encode(out);
            }
        }
    }
    fn decode(input: &mut &[u8]) -> Result<Self, WireError> {
        match take(input, 1)?[0] {
            0 => Ok(None),
            1 => Ok(Some(T::decode(input)?)),
            t => Err(WireError::InvalidTag(t)),
        }
    }
}

impl<T: Wire> Wire for Vec<T> {
    fn encode(&self, out: &mut Vec<u8>) {
        write_varint(out, self.len() as u64);
        for v in self {
            v.encode(out);
        }
    }
    fn decode(input: &mut &[u8]) -> Result<Self, WireError> {
        let len = read_varint(input)? as usize;
        // Every element takes at least zero bytes, so cap the reservation by
        // what is left in the buffer.
        let mut v = Vec::with_capacity(len.min(input.len()));
        for _ in 0..len {
            v.push(T::decode(input)?);
        }
        Ok(v)
    }
}

impl<T: Wire + Clone> Wire for Arc<T> {
    fn encode(&self, out: &mut Vec<u8>) {
        (**self).encode(out);
    }
    fn decode(input: &mut &[u8]) -> Result<Self, WireError> {
        T::decode(input).map(Arc::new)
    }
}

impl<A: Wire, B: Wire> Wire for (A, B) {
    fn encode(&self, out: &mut Vec<u8>) {
        self.0.encode(out);
        self.1.encode(out);
    }
    fn decode(input: &mut &[u8]) -> Result<Self, WireError> {
        Ok((A::decode(input)?, B::decode(input)?))
    }
}

impl<A: Wire, B: Wire, C: Wire> Wire for (A, B, C) {
    fn encode(&self, out: &mut Vec<u8>) {
        self.0.encode(out);
        self.1.encode(out);
        self.2.encode(out);
    }
    fn decode(input: &mut &[u8]) -> Result<Self, WireError> {
        Ok((A::decode(input)?, B::decode(input)?, C::decode(input)?))
    }
}

/// Post-processing applied to every block before it is metered and sent.
pub trait BlockCodec: Send + Sync {
    fn compress(&self, block: Vec<u8>) -> Vec<u8>;
    fn decompress(&self, block: Vec<u8>) -> Result<Vec<u8>, WireError>;
}

/// Pass-through codec.
#[derive(Clone, Copy, Debug, Default)]
pub struct Identity;

impl BlockCodec for Identity {
    fn compress(&self, block: Vec<u8>) -> Vec<u8> {
        block
    }
    fn decompress(&self, block: Vec<u8>) -> Result<Vec<u8>, WireError> {
        Ok(block)
    }
}

/// Encodes raw `(id, payload)` pairs in the columnar vertex block layout.
pub fn encode_shuffle_block(tuples: &[(VertexId, Vec<u8>)]) -> Vec<u8> {
    let mut order: Vec<usize> = (0..tuples.len()).collect();
    order.sort_by_key(|&i| tuples[i].0);
    let mut out = Vec::new();
    write_varint(&mut out, tuples.len() as u64);
    let mut prev = 0;
    for &i in &order {
        write_varint(&mut out, tuples[i].0 - prev);
        prev = tuples[i].0;
    }
    for &i in &order {
        let payload = &tuples[i].1;
        write_varint(&mut out, payload.len() as u64);
        out.extend_from_slice(payload);
    }
    out
}

pub fn decode_shuffle_block(block: &[u8]) -> Result<Vec<(VertexId, Vec<u8>)>, WireError> {
    let mut input = block;
    let count = read_varint(&mut input)? as usize;
    let mut ids = Vec::with_capacity(count.min(input.len()));
    let mut prev: u64 = 0;
    for _ in 0..count {
        let delta = read_varint(&mut input)?;
        prev = prev.checked_add(delta).ok_or(WireError::Overflow)?;
        ids.push(prev);
    }
    let mut out = Vec::with_capacity(ids.len());
    for id in ids {
        let len = read_varint(&mut input)? as usize;
        out.push((id, take(&mut input, len)?.to_vec()));
    }
    if !input.is_empty() {
        return Err(WireError::Trailing(input.len()));
    }
    Ok(out)
}

/// Typed form of [`encode_shuffle_block`]; produces the identical byte layout.
pub fn encode_vertex_block<'a, V: Wire + 'a>(
    tuples: impl IntoIterator<Item = (VertexId, &'a V)>,
) -> Vec<u8> {
    let mut payloads = Vec::new();
    let mut entries: Vec<(VertexId, usize, usize)> = Vec::new();
    for (id, v) in tuples {
        let start = payloads.len();
        v.encode(&mut payloads);
        entries.push((id, start, payloads.len()));
    }
    entries.sort_by_key(|e| e.0);
    let mut out = Vec::with_capacity(payloads.len() + entries.len() * 3 + 4);
    write_varint(&mut out, entries.len() as u64);
    let mut prev = 0;
    for e in &entries {
        write_varint(&mut out, e.0 - prev);
        prev = e.0;
    }
    for &(_, start, end) in &entries {
        write_varint(&mut out, (end - start) as u64);
        out.extend_from_slice(&payloads[start..end]);
    }
    out
}

pub fn decode_vertex_block<V: Wire>(block: &[u8]) -> Result<Vec<(VertexId, V)>, WireError> {
    let mut input = block;
    let count = read_varint(&mut input)? as usize;
    let mut ids = Vec::with_capacity(count.min(input.len()));
    let mut prev: u64 = 0;
    for _ in 0..count {
        prev = prev
            .checked_add(read_varint(&mut input)?)
            .ok_or(WireError::Overflow)?;
        ids.push(prev);
    }
    let mut out = Vec::with_capacity(ids.len());
    for id in ids {
        let len = read_varint(&mut input)? as usize;
        let payload = take(&mut input, len)?;
        out.push((id, V::from_bytes(payload)?));
    }
    if !input.is_empty() {
        return Err(WireError::Trailing(input.len()));
    }
    Ok(out)
}

/// Block for arbitrary keyed records: `varint(count)`, then the key column,
/// then the value column, each entry length-prefixed. Order is preserved.
pub fn encode_keyed_block<'a, K: Wire + 'a, V: Wire + 'a>(
    tuples: impl IntoIterator<Item = (&'a K, &'a V)>,
) -> Vec<u8> {
    let mut keys = Vec::new();
    let mut values = Vec::new();
    let mut scratch = Vec::new();
    let mut count = 0u64;
    for (k, v) in tuples {
        scratch.clear();
        k.encode(&mut scratch);
        write_varint(&mut keys, scratch.len() as u64);
        keys.extend_from_slice(&scratch);
        scratch.clear();
        v.encode(&mut scratch);
        write_varint(&mut values, scratch.len() as u64);
        values.extend_from_slice(&scratch);
        count += 1;
    }
    let mut out = Vec::with_capacity(keys.len() + values.len() + MAX_VARINT_LEN);
    write_varint(&mut out, count);
    out.extend_from_slice(&keys);
    out.extend_from_slice(&values);
    out
}

pub fn decode_keyed_block<K: Wire, V: Wire>(block: &[u8]) -> Result<Vec<(K, V)>, WireError> {
    let mut input = block;
    let count = read_varint(&mut input)? as usize;
    let mut keys = Vec::with_capacity(count.min(input.len()));
    for _ in 0..count {
        let len = read_varint(&mut input)? as usize;
        keys.push(K::from_bytes(take(&mut input, len)?)?);
    }
    let mut out = Vec::with_capacity(keys.len());
    for k in keys {
        let len = read_varint(&mut input)? as usize;
        out.push((k, V::from_bytes(take(&mut input, len)?)?));
    }
    if !input.is_empty() {
        return Err(WireError::Trailing(input.len()));
    }
    Ok(out)
}
