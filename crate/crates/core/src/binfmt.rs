//! Little-endian primitives shared by the TEMB, TTBL and TIDX files.

use std::collections::HashSet;

use crate::error::FormatError;

pub(crate) struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], FormatError> {
        let remaining = self.buf.len() - self.pos;
        if remaining < n {
            return Err(FormatError::Truncated {
                offset: self.pos,
                needed: n - remaining,
            });
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub fn magic(&mut self, expected: &[u8; 4]) -> Result<(), FormatError> {
        let found: [u8; 4] = self.take(4)?.try_into().unwrap();
        if &found != expected {
            return Err(FormatError::BadMagic {
                expected: *expected,
                found,
            });
        }
        Ok(())
    }

    pub fn version(&mut self, supported: u32) -> Result<(), FormatError> {
        let v = self.u32()?;
        if v != supported {
            return Err(FormatError::UnsupportedVersion(v));
        }
        Ok(())
    }

    pub fn u8(&mut self) -> Result<u8, FormatError> {
        Ok(self.take(1)?[0])
    }

    pub fn u16(&mut self) -> Result<u16, FormatError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    pub fn u32(&mut self) -> Result<u32, FormatError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn i64(&mut self) -> Result<i64, FormatError> {
        Ok(i64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    /// Reads `n` f32 values, checking the byte budget before allocating.
    pub fn f32s(&mut self, n: usize) -> Result<Vec<f32>, FormatError> {
        let bytes = n.checked_mul(4).ok_or_else(|| FormatError::InvalidField("row count overflow".into()))?;
        let raw = self.take(bytes)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    /// `count` entries of u16 byte-length + UTF-8 bytes; ids must be unique.
    pub fn ids(&mut self, count: usize) -> Result<Vec<String>, FormatError> {
        let mut ids = Vec::with_capacity(count.min(self.buf.len() / 2));
        let mut seen = HashSet::with_capacity(ids.capacity());
        for _ in 0..count {
            let len = self.u16()? as usize;
            let id = std::str::from_utf8(self.take(len)?)
                .map_err(|_| FormatError::InvalidUtf8)?
                .to_string();
            if !seen.insert(id.clone()) {
                return Err(FormatError::DuplicateId(id));
            }
            ids.push(id);
        }
        Ok(ids)
    }

    pub fn finish(self) -> Result<(), FormatError> {
        match self.buf.len() - self.pos {
            0 => Ok(()),
            n => Err(FormatError::TrailingBytes(n)),
        }
    }
}

#[derive(Default)]
pub(crate) struct Writer {
    pub buf: Vec<u8>,
}

impl Writer {
    pub fn bytes(&mut self, b: &[u8]) {
        self.buf.extend_from_slice(b);
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u32(&mut self, v: u32) {
        self.bytes(&v.to_le_bytes());
    }

    pub fn i64(&mut self, v: i64) {
        self.bytes(&v.to_le_bytes());
    }

    pub fn f32s(&mut self, vals: &[f32]) {
        self.buf.reserve(vals.len() * 4);
        for v in vals {
            self.bytes(&v.to_le_bytes());
        }
    }

    pub fn ids<S: AsRef<str>>(&mut self, ids: &[S]) -> Result<(), FormatError> {
        for id in ids {
            let id = id.as_ref();
            let len = u16::try_from(id.len()).map_err(|_| FormatError::IdTooLong(id.to_string()))?;
            self.bytes(&len.to_le_bytes());
            self.bytes(id.as_bytes());
        }
        Ok(())
    }
}

pub(crate) fn count_u32(n: usize, what: &str) -> Result<u32, FormatError> {
    u32::try_from(n).map_err(|_| FormatError::InvalidField(format!("{what} {n} exceeds u32")))
}

pub(crate) fn check_finite(data: &[f32], dim: usize) -> Result<(), FormatError> {
    match data.iter().position(|v| !v.is_finite()) {
        None => Ok(()),
        Some(i) => Err(FormatError::NonFinite { row: i / dim.max(1) }),
    }
}
