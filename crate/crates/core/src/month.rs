//! Calendar month keys and inclusive month ranges.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// A calendar month: year plus month-of-year in 1..=12.
///
/// Ordering is chronological. Displayed and parsed as `YYYY-MM`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct MonthKey {
    year: i32,
    month: u8,
}

impl MonthKey {
    pub fn new(year: i32, month: u32) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::OutOfRange {
                what: format!("month {month} not in 1..=12"),
            });
        }
        Ok(MonthKey {
            year,
            month: month as u8,
        })
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    /// Calendar month in 1..=12.
    pub fn month(&self) -> u32 {
        self.month as u32
    }

    /// Signed whole-month offset of `self` from `origin`.
    pub fn index_from(&self, origin: MonthKey) -> i64 {
        (self.year as i64 - origin.year as i64) * 12 + (self.month as i64 - origin.month as i64)
    }

    /// The month `offset` months after `self` (negative offsets step back).
    pub fn offset(&self, offset: i64) -> MonthKey {
        let linear = self.year as i64 * 12 + (self.month as i64 - 1) + offset;
        MonthKey {
            year: linear.div_euclid(12) as i32,
            month: (linear.rem_euclid(12) + 1) as u8,
        }
    }

    pub fn next(&self) -> MonthKey {
        self.offset(1)
    }
}

impl fmt::Display for MonthKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for MonthKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::MonthFormat(s.to_string());
        let (y, m) = s.split_once('-').ok_or_else(bad)?;
        let year: i32 = y.parse().map_err(|_| bad())?;
        let month: u32 = m.parse().map_err(|_| bad())?;
        if !(1..=12).contains(&month) {
            return Err(bad());
        }
        MonthKey::new(year, month)
    }
}

/// An inclusive range of calendar months.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct MonthRange {
    start: MonthKey,
    end: MonthKey,
}

impl MonthRange {
    pub fn new(start: MonthKey, end: MonthKey) -> Result<Self> {
        if start > end {
            return Err(Error::OutOfRange {
                what: format!("month range start {start} is after end {end}"),
            });
        }
        Ok(MonthRange { start, end })
    }

    pub fn start(&self) -> MonthKey {
        self.start
    }

    pub fn end(&self) -> MonthKey {
        self.end
    }

    pub fn contains(&self, m: MonthKey) -> bool {
        self.start <= m && m <= self.end
    }

    /// Number of months in the range (inclusive).
    pub fn len(&self) -> usize {
        (self.end.index_from(self.start) + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false // new() guarantees start <= end
    }

    pub fn iter(&self) -> impl Iterator<Item = MonthKey> {
        let start = self.start;
        (0..self.len() as i64).map(move |i| start.offset(i))
    }
}
