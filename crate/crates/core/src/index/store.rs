//! Binary container for one forest.
//!
//! Layout (little endian):
//! magic `LKFIDX01`, format version u32, evidence u8, sketch kind u8,
//! width u32, trees u32, depth u32, seed u64, threshold f64, vector dim u32,
//! entry count u32, then per entry (ascending id) the id u32 and the
//! signature payload. Sentinel signatures are never stored.

use std::path::Path;

use super::forest::{ForestParams, LshForest, Sketch};
use super::minhash::MinHashSignature;
use super::projection::RPSignature;
use super::{AttrId, Evidence};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"LKFIDX01";
pub const FORMAT_VERSION: u32 = 1;

pub trait Codec: Sketch + Sized {
    const KIND: u8;
    fn encode(&self, out: &mut Vec<u8>);
    fn decode(width: usize, input: &mut Reader<'_>) -> Option<Self>;
}

impl Codec for MinHashSignature {
    const KIND: u8 = 1;

    fn encode(&self, out: &mut Vec<u8>) {
        for m in &self.mins {
            out.extend_from_slice(&m.to_le_bytes());
        }
    }

    fn decode(width: usize, input: &mut Reader<'_>) -> Option<Self> {
        let mins = (0..width).map(|_| input.u64()).collect::<Option<Vec<_>>>()?;
        Some(MinHashSignature { mins })
    }
}

impl Codec for RPSignature {
    const KIND: u8 = 2;

    fn encode(&self, out: &mut Vec<u8>) {
        for w in &self.words {
            out.extend_from_slice(&w.to_le_bytes());
        }
    }

    fn decode(width: usize, input: &mut Reader<'_>) -> Option<Self> {
        let words = (0..width.div_ceil(64))
            .map(|_| input.u64())
            .collect::<Option<Vec<_>>>()?;
        Some(RPSignature {
            words,
            len: width,
            degenerate: false,
        })
    }
}

pub struct Reader<'a> {
    bytes: &'a [u8],
}

impl<'a> Reader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        Reader { bytes }
    }

    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        if self.bytes.len() < n {
            return None;
        }
        let (head, tail) = self.bytes.split_at(n);
        self.bytes = tail;
        Some(head)
    }

    pub fn u8(&mut self) -> Option<u8> {
        self.take(1).map(|b| b[0])
    }

    pub fn u32(&mut self) -> Option<u32> {
        self.take(4).map(|b| u32::from_le_bytes(b.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> Option<u64> {
        self.take(8).map(|b| u64::from_le_bytes(b.try_into().unwrap()))
    }

    pub fn f64(&mut self) -> Option<f64> {
        self.u64().map(f64::from_bits)
    }

    pub fn is_empty(&self) -> bool {
        self.bytes.is_empty()
    }
}

/// Parameters recorded in a container header.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Header {
    pub evidence: Evidence,
    pub kind: u8,
    pub width: usize,
    pub trees: usize,
    pub depth: usize,
    pub seed: u64,
    pub threshold: f64,
    pub dim: usize,
}

pub fn encode_forest<S: Codec>(forest: &LshForest<S>, header: &Header) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + forest.len() * (4 + forest.width() * 8));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.push(header.evidence as u8);
    out.push(S::KIND);
    out.extend_from_slice(&(header.width as u32).to_le_bytes());
    out.extend_from_slice(&(header.trees as u32).to_le_bytes());
    out.extend_from_slice(&(header.depth as u32).to_le_bytes());
    out.extend_from_slice(&header.seed.to_le_bytes());
    out.extend_from_slice(&header.threshold.to_bits().to_le_bytes());
    out.extend_from_slice(&(header.dim as u32).to_le_bytes());
    out.extend_from_slice(&(forest.len() as u32).to_le_bytes());
    for (id, sig) in forest.entries() {
        out.extend_from_slice(&id.0.to_le_bytes());
        sig.encode(&mut out);
    }
    out
}

/// Decode a container, refusing it unless its header equals `expected`.
pub fn decode_forest<S: Codec>(bytes: &[u8], expected: &Header, path: &Path) -> Result<LshForest<S>> {
    let corrupt = |message: &str| Error::Container {
        path: path.display().to_string(),
        message: message.to_string(),
    };
    let mut r = Reader::new(bytes);
    if r.take(8) != Some(&MAGIC[..]) {
        return Err(corrupt("bad magic bytes"));
    }
    let version = r.u32().ok_or_else(|| corrupt("truncated header"))?;
    if version != FORMAT_VERSION {
        return Err(corrupt(&format!("unsupported format version {version}")));
    }
    let header = (|| {
        let evidence = Evidence::from_u8(r.u8()?)?;
        let kind = r.u8()?;
        Some(Header {
            evidence,
            kind,
            width: r.u32()? as usize,
            trees: r.u32()? as usize,
            depth: r.u32()? as usize,
            seed: r.u64()?,
            threshold: r.f64()?,
            dim: r.u32()? as usize,
        })
    })()
    .ok_or_else(|| corrupt("truncated header"))?;
    if header.kind != S::KIND {
        return Err(corrupt("wrong sketch kind"));
    }
    let want = Header {
        kind: S::KIND,
        ..*expected
    };
    if header != want {
        return Err(Error::ParamMismatch(format!(
            "{}: container parameters {header:?} differ from manifest {want:?}",
            path.display()
        )));
    }
    let count = r.u32().ok_or_else(|| corrupt("truncated header"))?;
    let mut forest = LshForest::new(
        ForestParams {
            trees: header.trees,
            depth: header.depth,
            threshold: header.threshold,
        },
        header.width,
    )?;
    for _ in 0..count {
        let id = r.u32().ok_or_else(|| corrupt("truncated entry"))?;
        let sig = S::decode(header.width, &mut r).ok_or_else(|| corrupt("truncated entry"))?;
        forest.insert(AttrId(id), sig)?;
    }
    if !r.is_empty() {
        return Err(corrupt("trailing bytes"));
    }
    Ok(forest)
}

pub fn encode_numeric<'a>(extents: impl Iterator<Item = (AttrId, &'a [f64])>) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    let items: Vec<_> = extents.collect();
    out.extend_from_slice(&(items.len() as u32).to_le_bytes());
    for (id, values) in items {
        out.extend_from_slice(&id.0.to_le_bytes());
        out.extend_from_slice(&(values.len() as u32).to_le_bytes());
        for v in values {
            out.extend_from_slice(&v.to_bits().to_le_bytes());
        }
    }
    out
}

pub fn decode_numeric(bytes: &[u8], path: &Path) -> Result<Vec<(AttrId, Vec<f64>)>> {
    let corrupt = || Error::Container {
        path: path.display().to_string(),
        message: "malformed numeric sidecar".to_string(),
    };
    let mut r = Reader::new(bytes);
    if r.take(8) != Some(&MAGIC[..]) || r.u32() != Some(FORMAT_VERSION) {
        return Err(corrupt());
    }
    let count = r.u32().ok_or_else(corrupt)?;
    let mut out = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let id = r.u32().ok_or_else(corrupt)?;
        let len = r.u32().ok_or_else(corrupt)?;
        let values = (0..len)
            .map(|_| r.f64())
            .collect::<Option<Vec<_>>>()
            .ok_or_else(corrupt)?;
        out.push((AttrId(id), values));
    }
    if !r.is_empty() {
        return Err(corrupt());
    }
    Ok(out)
}
