//! Frozen semantic embeddings and a hashing stand-in encoder.
//!
//! TEMB layout, little-endian:
//!
//! ```text
//! "TEMB" | u32 version=1 | u32 count | u32 dim
//! | count x (u16 byte-length, UTF-8 id) | count x dim f32, row-major
//! ```

use std::collections::HashMap;
use std::path::Path;

use crate::binfmt::{check_finite, count_u32, Reader, Writer};
use crate::error::{Error, FormatError, Result};

const MAGIC: &[u8; 4] = b"TEMB";
const VERSION: u32 = 1;

pub const DEFAULT_SEMANTIC_DIM: usize = 768;

#[derive(Debug, Clone)]
pub struct EmbeddingMatrix {
    ids: Vec<String>,
    dim: usize,
    data: Vec<f32>,
    index: HashMap<String, usize>,
}

impl PartialEq for EmbeddingMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.ids == other.ids && self.dim == other.dim && self.data == other.data
    }
}

impl EmbeddingMatrix {
    pub fn new(ids: Vec<String>, dim: usize, data: Vec<f32>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("embedding dim must be >= 1".into()));
        }
        if data.len() != ids.len() * dim {
            return Err(Error::DimMismatch(format!(
                "{} ids x dim {dim} needs {} values, got {}",
                ids.len(),
                ids.len() * dim,
                data.len()
            )));
        }
        check_finite(&data, dim)?;
        let mut index = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(FormatError::DuplicateId(id.clone()).into());
            }
        }
        Ok(Self { ids, dim, data, index })
    }

    pub fn from_rows<I, S>(dim: usize, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<f32>)>,
        S: Into<String>,
    {
        let mut ids = Vec::new();
        let mut data = Vec::new();
        for (id, row) in rows {
            let id = id.into();
            if row.len() != dim {
                return Err(Error::DimMismatch(format!("row {id:?} has {} values, dim is {dim}", row.len())));
            }
            ids.push(id);
            data.extend(row);
        }
        Self::new(ids, dim, data)
    }

    /// Encodes every `(id, text)` pair with [`toy_encode`].
    pub fn toy<'a, I>(items: I, dim: usize, seed: u64) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        Self::from_rows(dim, items.into_iter().map(|(id, text)| (id, toy_encode(text, dim, seed))))
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn row_at(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn get(&self, id: &str) -> Option<&[f32]> {
        self.position(id).map(|i| self.row_at(i))
    }

    pub fn require(&self, id: &str) -> Result<&[f32]> {
        self.get(id).ok_or_else(|| Error::MissingEmbedding(id.to_string()))
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = Writer::default();
        w.bytes(MAGIC);
        w.u32(VERSION);
        w.u32(count_u32(self.ids.len(), "count")?);
        w.u32(count_u32(self.dim, "dim")?);
        w.ids(&self.ids)?;
        w.f32s(&self.data);
        Ok(w.buf)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        r.magic(MAGIC)?;
        r.version(VERSION)?;
        let count = r.u32()? as usize;
        let dim = r.u32()? as usize;
        if dim == 0 {
            return Err(FormatError::InvalidField("dim 0".into()).into());
        }
        let ids = r.ids(count)?;
        let data = r.f32s(count * dim)?;
        r.finish()?;
        check_finite(&data, dim)?;
        Self::new(ids, dim, data)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

pub fn save_embeddings(m: &EmbeddingMatrix, path: impl AsRef<Path>) -> Result<()> {
    m.save(path)
}

pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingMatrix> {
    EmbeddingMatrix::load(path)
}

/// Lowercased alphanumeric tokens.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

fn seeded_hash(token: &str, seed: u64) -> u64 {
    // FNV-1a over the bytes, then a splitmix64 finalizer so the seed reaches every bit.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    for b in token.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h = (h ^ (h >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    h = (h ^ (h >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    h ^ (h >> 31)
}

/// Signed feature hashing of lowercased tokens, L2-normalized.
/// Empty or token-free text yields the zero vector.
pub fn toy_encode(text: &str, dim: usize, seed: u64) -> Vec<f32> {
    let mut acc = vec![0.0f64; dim.max(1)];
    for tok in tokenize(text) {
        let h = seeded_hash(&tok, seed);
        let bucket = (h % dim as u64) as usize;
        let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
        acc[bucket] += sign;
    }
    acc.truncate(dim);
    let norm = acc.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return vec![0.0; dim];
    }
    acc.iter().map(|v| (v / norm) as f32).collect()
}
