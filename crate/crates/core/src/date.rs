//! Calendar dates with explicit granularity.
//!
//! Corpora are often dated only to the year (historical newspapers) or the
//! month, so a [`CalendarDate`] keeps `month` and `day` optional and records
//! which fields are known. Rendering and parsing use ISO-8601 truncated to
//! the known fields: `1905`, `1905-07`, `1905-07-21`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DateGranularity {
    Year,
    Month,
    Day,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CalendarDate {
    year: i32,
    month: Option<u8>,
    day: Option<u8>,
}

impl CalendarDate {
    pub fn year_only(year: i32) -> Result<Self> {
        Self::new(year, None, None)
    }

    pub fn year_month(year: i32, month: u8) -> Result<Self> {
        Self::new(year, Some(month), None)
    }

    pub fn ymd(year: i32, month: u8, day: u8) -> Result<Self> {
        Self::new(year, Some(month), Some(day))
    }

    pub fn new(year: i32, month: Option<u8>, day: Option<u8>) -> Result<Self> {
        let invalid = || Error::InvalidDate(format!("{year:?}-{month:?}-{day:?}"));
        if !(1..=9999).contains(&year) {
            return Err(invalid());
        }
        match (month, day) {
            (None, Some(_)) => return Err(invalid()),
            (Some(m), None) if !(1..=12).contains(&m) => return Err(invalid()),
            (Some(m), Some(d)) => {
                chrono::NaiveDate::from_ymd_opt(year, m as u32, d as u32).ok_or_else(invalid)?;
            }
            _ => {}
        }
        Ok(Self { year, month, day })
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn month(&self) -> Option<u8> {
        self.month
    }

    pub fn day(&self) -> Option<u8> {
        self.day
    }

    pub fn granularity(&self) -> DateGranularity {
        match (self.month, self.day) {
            (None, _) => DateGranularity::Year,
            (Some(_), None) => DateGranularity::Month,
            (Some(_), Some(_)) => DateGranularity::Day,
        }
    }
}

impl fmt::Display for CalendarDate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = format!("{:04}", self.year);
        if let Some(m) = self.month {
            s.push_str(&format!("-{m:02}"));
        }
        if let Some(d) = self.day {
            s.push_str(&format!("-{d:02}"));
        }
        f.pad(&s)
    }
}

impl FromStr for CalendarDate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let invalid = || Error::InvalidDate(s.to_string());
        let s = s.trim();
        let mut parts = s.split('-');
        let year = parts.next().filter(|p| !p.is_empty()).ok_or_else(invalid)?;
        if !year.bytes().all(|b| b.is_ascii_digit()) {
            return Err(invalid());
        }
        let year: i32 = year.parse().map_err(|_| invalid())?;
        let mut field = |width: usize| -> Result<Option<u8>> {
            match parts.next() {
                None => Ok(None),
                Some(p) if p.len() == width && p.bytes().all(|b| b.is_ascii_digit()) => {
                    Ok(Some(p.parse().map_err(|_| invalid())?))
                }
                Some(_) => Err(invalid()),
            }
        };
        let month = field(2)?;
        let day = field(2)?;
        if parts.next().is_some() {
            return Err(invalid());
        }
        Self::new(year, month, day)
    }
}

impl Serialize for CalendarDate {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CalendarDate {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
