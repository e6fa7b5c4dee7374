//! Canonical binary encoding.
//!
//! Layout rules:
//! - scalars: 32-byte big-endian, rejected when `>= p`;
//! - group elements: arkworks compressed form (G1 32 bytes, G2 64 bytes,
//!   Gt 384 bytes) with curve and subgroup checks;
//! - variable-length sequences and strings: 4-byte big-endian length prefix;
//! - sets and maps: entries in ascending key order, duplicates rejected.
//!
//! Decoding re-encodes every group element and compares bytes, so any
//! non-canonical input is an error rather than being silently normalized.

use ark_ec::short_weierstrass::{Affine, Projective, SWCurveConfig};
use ark_ec::CurveGroup;
use ark_ff::{BigInteger, PrimeField};
use ark_serialize::{CanonicalDeserialize, CanonicalSerialize, Compress};
use thiserror::Error;

use crate::group::{Gt, Scalar};

pub const SCALAR_LEN: usize = 32;
pub const G1_LEN: usize = 32;
pub const G2_LEN: usize = 64;
pub const GT_LEN: usize = 384;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("truncated input: needed {needed} bytes at offset {offset}")]
    Truncated { needed: usize, offset: usize },
    #[error("{0} trailing bytes after value")]
    TrailingBytes(usize),
    #[error("scalar out of range")]
    ScalarOutOfRange,
    #[error("invalid {0} element")]
    InvalidPoint(&'static str),
    #[error("non-canonical encoding: {0}")]
    NonCanonical(&'static str),
    #[error("invalid utf-8 in string")]
    InvalidUtf8,
    #[error("invalid value: {0}")]
    Invalid(&'static str),
}

/// Cursor over an input buffer.
pub struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8], DecodeError> {
        if self.remaining() < n {
            return Err(DecodeError::Truncated {
                needed: n,
                offset: self.pos,
            });
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub fn array<const N: usize>(&mut self) -> Result<[u8; N], DecodeError> {
        let mut out = [0u8; N];
        out.copy_from_slice(self.take(N)?);
        Ok(out)
    }

    pub fn u8(&mut self) -> Result<u8, DecodeError> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32, DecodeError> {
        Ok(u32::from_be_bytes(self.array()?))
    }

    /// Reads a sequence length and checks it against the bytes left, given
    /// the minimum encoded size of one element.
    pub fn len_prefix(&mut self, min_item_len: usize) -> Result<usize, DecodeError> {
        let n = self.u32()? as usize;
        if n.saturating_mul(min_item_len.max(1)) > self.remaining() {
            return Err(DecodeError::Truncated {
                needed: n * min_item_len.max(1),
                offset: self.pos,
            });
        }
        Ok(n)
    }

    pub fn finish(self) -> Result<(), DecodeError> {
        match self.remaining() {
            0 => Ok(()),
            n => Err(DecodeError::TrailingBytes(n)),
        }
    }
}

pub fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_be_bytes());
}

pub fn put_len(out: &mut Vec<u8>, n: usize) {
    put_u32(out, u32::try_from(n).expect("sequence longer than u32::MAX"));
}

pub trait Canonical: Sized {
    fn encode_to(&self, out: &mut Vec<u8>);
    fn decode_from(r: &mut Reader<'_>) -> Result<Self, DecodeError>;

    fn to_canonical_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.encode_to(&mut out);
        out
    }

    /// Decodes a value that must span the whole buffer.
    fn from_canonical_bytes(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(bytes);
        let v = Self::decode_from(&mut r)?;
        r.finish()?;
        Ok(v)
    }
}

impl Canonical for Scalar {
    fn encode_to(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.into_bigint().to_bytes_be());
    }

    fn decode_from(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let bytes = r.take(SCALAR_LEN)?;
        let v = Scalar::from_be_bytes_mod_order(bytes);
        if v.into_bigint().to_bytes_be() != bytes {
            return Err(DecodeError::ScalarOutOfRange);
        }
        Ok(v)
    }
}

fn ark_encode<T: CanonicalSerialize>(v: &T, out: &mut Vec<u8>) {
    v.serialize_compressed(out)
        .expect("serializing into a Vec cannot fail");
}

fn ark_decode<T: CanonicalSerialize + CanonicalDeserialize>(
    r: &mut Reader<'_>,
    len: usize,
    what: &'static str,
) -> Result<T, DecodeError> {
    let bytes = r.take(len)?;
    let v = T::deserialize_compressed(bytes).map_err(|_| DecodeError::InvalidPoint(what))?;
    let mut again = Vec::with_capacity(len);
    ark_encode(&v, &mut again);
    if again != bytes {
        return Err(DecodeError::NonCanonical(what));
    }
    Ok(v)
}

/// Covers both [`crate::group::G1`] and [`crate::group::G2`].
impl<P: SWCurveConfig> Canonical for Projective<P> {
    fn encode_to(&self, out: &mut Vec<u8>) {
        ark_encode(&self.into_affine(), out)
    }

    fn decode_from(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let len = Affine::<P>::identity().serialized_size(Compress::Yes);
        ark_decode::<Affine<P>>(r, len, "curve point").map(Into::into)
    }
}

impl Canonical for Gt {
    fn encode_to(&self, out: &mut Vec<u8>) {
        ark_encode(self, out)
    }

    fn decode_from(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        ark_decode(r, GT_LEN, "Gt")
    }
}

impl Canonical for String {
    fn encode_to(&self, out: &mut Vec<u8>) {
        put_len(out, self.len());
        out.extend_from_slice(self.as_bytes());
    }

    fn decode_from(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let n = r.len_prefix(1)?;
        let bytes = r.take(n)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| DecodeError::InvalidUtf8)
    }
}

/// Lowercase hex rendering for display.
pub fn to_hex<T: Canonical>(v: &T) -> String {
    hex::encode(v.to_canonical_bytes())
}
