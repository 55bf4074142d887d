//! Canonical byte encoding and the domain-separated hash primitive.
//!
//! Every object that ends up under a Merkle root goes through this module:
//! variable-length fields are length-prefixed (8-byte big-endian), lists are
//! count-prefixed, and each hashed object class carries a one-byte domain tag
//! so leaf/inner/transaction digests can never alias one another.

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest as _, Sha256};
use thiserror::Error;

/// Hash width in bits. Build-time configuration; the golden vectors shipped
/// with the crate are pinned to the default 256-bit SHA-256 instantiation.
pub const HASH_BITS: usize = 256;
/// Hash width in bytes.
pub const DIGEST_LEN: usize = HASH_BITS / 8;

/// Fixed-width hash output.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Digest(pub [u8; DIGEST_LEN]);

impl Digest {
    pub const ZERO: Digest = Digest([0u8; DIGEST_LEN]);

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Result<Digest, CodecError> {
        let bytes = hex::decode(s).map_err(|_| CodecError::BadDigestHex)?;
        let arr: [u8; DIGEST_LEN] = bytes.try_into().map_err(|_| CodecError::BadDigestHex)?;
        Ok(Digest(arr))
    }
}

impl std::fmt::Debug for Digest {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", &self.to_hex()[..8])
    }
}

impl std::fmt::Display for Digest {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for Digest {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Digest {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Digest::from_hex(&s).map_err(de::Error::custom)
    }
}

/// One-byte domain tag, one per hashed object class. Stable across versions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[repr(u8)]
pub enum DomainTag {
    Leaf = 0x00,
    Inner = 0x01,
    PeakBag = 0x02,
    Transaction = 0x03,
    StateLeaf = 0x04,
    Header = 0x05,
}

impl DomainTag {
    pub fn from_byte(b: u8) -> Result<DomainTag, CodecError> {
        Ok(match b {
            0x00 => DomainTag::Leaf,
            0x01 => DomainTag::Inner,
            0x02 => DomainTag::PeakBag,
            0x03 => DomainTag::Transaction,
            0x04 => DomainTag::StateLeaf,
            0x05 => DomainTag::Header,
            other => return Err(CodecError::BadDomainTag(other)),
        })
    }
}

/// `H(tag || payload)`. Pure; all tree constructions go through here.
pub fn hash_tagged(tag: DomainTag, payload: &[u8]) -> Digest {
    let mut h = Sha256::new();
    h.update([tag as u8]);
    h.update(payload);
    Digest(h.finalize().into())
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CodecError {
    #[error("input truncated at offset {0}")]
    Truncated(usize),
    #[error("trailing bytes after decode")]
    TrailingBytes,
    #[error("unknown domain tag {0:#04x}")]
    BadDomainTag(u8),
    #[error("unknown object kind {0:#04x}")]
    BadKind(u8),
    #[error("length field out of range")]
    BadLength,
    #[error("digest is not valid hex of the right width")]
    BadDigestHex,
}

/// Types with a canonical, injective byte encoding.
pub trait Encodable {
    fn encode_into(&self, out: &mut Vec<u8>);

    fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.encode_into(&mut out);
        out
    }
}

pub fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_be_bytes());
}

pub fn put_u8(out: &mut Vec<u8>, v: u8) {
    out.push(v);
}

/// Length-prefixed byte string: 8-byte big-endian length, then the bytes.
pub fn put_bytes(out: &mut Vec<u8>, b: &[u8]) {
    put_u64(out, b.len() as u64);
    out.extend_from_slice(b);
}

pub fn put_digest(out: &mut Vec<u8>, d: &Digest) {
    out.extend_from_slice(&d.0);
}

/// Standalone encoding of one byte string (the `encode` of a raw field).
pub fn encode_bytes(b: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + b.len());
    put_bytes(&mut out, b);
    out
}

/// Count-prefixed list of digests. Digests are fixed-width, so the items
/// themselves carry no per-item length.
pub fn encode_digest_list(ds: &[Digest]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + ds.len() * DIGEST_LEN);
    put_u64(&mut out, ds.len() as u64);
    for d in ds {
        put_digest(&mut out, d);
    }
    out
}

/// Cursor over an encoded buffer.
pub struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    fn need(&self, n: usize) -> Result<(), CodecError> {
        if self.pos + n > self.buf.len() {
            Err(CodecError::Truncated(self.pos))
        } else {
            Ok(())
        }
    }

    pub fn take_u8(&mut self) -> Result<u8, CodecError> {
        self.need(1)?;
        let v = self.buf[self.pos];
        self.pos += 1;
        Ok(v)
    }

    pub fn take_u64(&mut self) -> Result<u64, CodecError> {
        self.need(8)?;
        let mut arr = [0u8; 8];
        arr.copy_from_slice(&self.buf[self.pos..self.pos + 8]);
        self.pos += 8;
        Ok(u64::from_be_bytes(arr))
    }

    pub fn take_bytes(&mut self) -> Result<&'a [u8], CodecError> {
        let len = self.take_u64()?;
        let len = usize::try_from(len).map_err(|_| CodecError::BadLength)?;
        self.need(len)?;
        let s = &self.buf[self.pos..self.pos + len];
        self.pos += len;
        Ok(s)
    }

    pub fn take_digest(&mut self) -> Result<Digest, CodecError> {
        self.need(DIGEST_LEN)?;
        let mut arr = [0u8; DIGEST_LEN];
        arr.copy_from_slice(&self.buf[self.pos..self.pos + DIGEST_LEN]);
        self.pos += DIGEST_LEN;
        Ok(Digest(arr))
    }

    /// Fails unless the whole buffer was consumed.
    pub fn finish(self) -> Result<(), CodecError> {
        if self.pos == self.buf.len() {
            Ok(())
        } else {
            Err(CodecError::TrailingBytes)
        }
    }
}
