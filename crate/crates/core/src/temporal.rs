//! Learnable timestamp embeddings.
//!
//! A [`TemporalTable`] is a dense `(max_key - min_key + 1) x dim` matrix of
//! f32 parameters. Dates map to integer keys at a fixed granularity and the
//! embedding of a date is the stored row, returned as-is.
//!
//! On disk (TTBL, little-endian):
//!
//! ```text
//! "TTBL" | u32 version=1 | u8 granularity (0=year, 1=month)
//! | i64 min_key | i64 max_key | u32 dim | rows x dim f32, row-major
//! ```

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::binfmt::{check_finite, Reader, Writer};
use crate::date::CalendarDate;
use crate::error::{Error, FormatError, Result};

const MAGIC: &[u8; 4] = b"TTBL";
const VERSION: u32 = 1;

pub const DEFAULT_INIT_SCALE: f32 = 0.02;
pub const DEFAULT_TEMPORAL_DIM: usize = 768;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KeyGranularity {
    #[default]
    Year,
    Month,
}

impl KeyGranularity {
    pub(crate) fn code(self) -> u8 {
        match self {
            Self::Year => 0,
            Self::Month => 1,
        }
    }

    pub(crate) fn from_code(code: u8) -> Result<Self, FormatError> {
        match code {
            0 => Ok(Self::Year),
            1 => Ok(Self::Month),
            c => Err(FormatError::InvalidField(format!("granularity code {c}"))),
        }
    }

    /// Inverse of [`key_of`]; the day is never recoverable.
    pub fn date_of(self, key: i64) -> Result<CalendarDate> {
        match self {
            Self::Year => CalendarDate::year_only(
                i32::try_from(key).map_err(|_| Error::InvalidDate(key.to_string()))?,
            ),
            Self::Month => {
                let year = i32::try_from(key.div_euclid(12)).map_err(|_| Error::InvalidDate(key.to_string()))?;
                CalendarDate::year_month(year, key.rem_euclid(12) as u8 + 1)
            }
        }
    }
}

/// Year keys are the year; month keys are `year * 12 + (month - 1)`, with a
/// missing month treated as January.
pub fn key_of(date: &CalendarDate, granularity: KeyGranularity) -> i64 {
    let year = date.year() as i64;
    match granularity {
        KeyGranularity::Year => year,
        KeyGranularity::Month => year * 12 + (date.month().unwrap_or(1) as i64 - 1),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemporalTable {
    granularity: KeyGranularity,
    min_key: i64,
    max_key: i64,
    dim: usize,
    weights: Vec<f32>,
}

impl TemporalTable {
    /// Rows drawn i.i.d. uniform in `[-scale, scale]` from a seeded ChaCha8 stream.
    pub fn init(
        granularity: KeyGranularity,
        min_key: i64,
        max_key: i64,
        dim: usize,
        seed: u64,
        scale: f32,
    ) -> Result<Self> {
        if min_key > max_key {
            return Err(Error::InvalidRange { min: min_key, max: max_key });
        }
        if dim == 0 {
            return Err(Error::InvalidArgument("temporal dim must be >= 1".into()));
        }
        if !scale.is_finite() || scale < 0.0 {
            return Err(Error::InvalidArgument(format!("init scale {scale}")));
        }
        let rows = usize::try_from(max_key - min_key + 1)
            .map_err(|_| Error::InvalidRange { min: min_key, max: max_key })?;
        let len = rows
            .checked_mul(dim)
            .ok_or_else(|| Error::InvalidArgument("table too large".into()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights = if scale == 0.0 {
            vec![0.0; len]
        } else {
            (0..len).map(|_| rng.gen_range(-scale..=scale)).collect()
        };
        Ok(Self {
            granularity,
            min_key,
            max_key,
            dim,
            weights,
        })
    }

    pub fn zeros(granularity: KeyGranularity, min_key: i64, max_key: i64, dim: usize) -> Result<Self> {
        Self::init(granularity, min_key, max_key, dim, 0, 0.0)
    }

    /// A table whose key range spans every given date.
    pub fn covering<'a, I>(dates: I, granularity: KeyGranularity, dim: usize, seed: u64, scale: f32) -> Result<Self>
    where
        I: IntoIterator<Item = &'a CalendarDate>,
    {
        let (min, max) = dates
            .into_iter()
            .map(|d| key_of(d, granularity))
            .fold(None, |acc: Option<(i64, i64)>, k| match acc {
                None => Some((k, k)),
                Some((lo, hi)) => Some((lo.min(k), hi.max(k))),
            })
            .ok_or(Error::NoData)?;
        Self::init(granularity, min, max, dim, seed, scale)
    }

    pub fn granularity(&self) -> KeyGranularity {
        self.granularity
    }

    pub fn min_key(&self) -> i64 {
        self.min_key
    }

    pub fn max_key(&self) -> i64 {
        self.max_key
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        self.weights.len() / self.dim
    }

    pub fn weights(&self) -> &[f32] {
        &self.weights
    }

    pub fn key_of(&self, date: &CalendarDate) -> i64 {
        key_of(date, self.granularity)
    }

    pub fn contains_key(&self, key: i64) -> bool {
        (self.min_key..=self.max_key).contains(&key)
    }

    pub fn clamp_key(&self, key: i64) -> i64 {
        key.clamp(self.min_key, self.max_key)
    }

    pub(crate) fn row_index(&self, key: i64) -> Result<usize> {
        if !self.contains_key(key) {
            return Err(Error::UnknownTimestamp {
                key,
                min: self.min_key,
                max: self.max_key,
            });
        }
        Ok((key - self.min_key) as usize)
    }

    pub fn row(&self, key: i64) -> Result<&[f32]> {
        let i = self.row_index(key)?;
        Ok(&self.weights[i * self.dim..(i + 1) * self.dim])
    }

    pub(crate) fn row_mut(&mut self, key: i64) -> Result<&mut [f32]> {
        let i = self.row_index(key)?;
        Ok(&mut self.weights[i * self.dim..(i + 1) * self.dim])
    }

    pub fn set_row(&mut self, key: i64, values: &[f32]) -> Result<()> {
        if values.len() != self.dim {
            return Err(Error::DimMismatch(format!(
                "row of length {} for table dim {}",
                values.len(),
                self.dim
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("temporal row"));
        }
        self.row_mut(key)?.copy_from_slice(values);
        Ok(())
    }

    /// The embedding of a date: exactly the stored row for its key.
    pub fn encode(&self, date: &CalendarDate) -> Result<&[f32]> {
        self.row(self.key_of(date))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::default();
        w.bytes(MAGIC);
        w.u32(VERSION);
        w.u8(self.granularity.code());
        w.i64(self.min_key);
        w.i64(self.max_key);
        w.u32(self.dim as u32);
        w.f32s(&self.weights);
        w.buf
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        r.magic(MAGIC)?;
        r.version(VERSION)?;
        let granularity = KeyGranularity::from_code(r.u8()?)?;
        let min_key = r.i64()?;
        let max_key = r.i64()?;
        let dim = r.u32()? as usize;
        if min_key > max_key {
            return Err(FormatError::InvalidField(format!("key range [{min_key}, {max_key}]")).into());
        }
        if dim == 0 {
            return Err(FormatError::InvalidField("dim 0".into()).into());
        }
        let rows = u64::try_from(max_key as i128 - min_key as i128 + 1)
            .ok()
            .and_then(|r| usize::try_from(r).ok())
            .and_then(|r| r.checked_mul(dim))
            .ok_or_else(|| FormatError::InvalidField("table size overflow".into()))?;
        let weights = r.f32s(rows)?;
        r.finish()?;
        check_finite(&weights, dim)?;
        Ok(Self {
            granularity,
            min_key,
            max_key,
            dim,
            weights,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}
