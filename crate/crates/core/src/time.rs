//! UTC time helpers: half-open intervals, calendar months, lenient parsing.

use chrono::{DateTime, Datelike, Months, NaiveDate, NaiveDateTime, TimeZone, Utc};
use serde::{Deserialize, Serialize};
use std::fmt;

pub type Timestamp = DateTime<Utc>;

/// Half-open interval `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TimeInterval {
    pub start: Timestamp,
    pub end: Timestamp,
}

impl TimeInterval {
    pub fn new(start: Timestamp, end: Timestamp) -> Self {
        Self { start, end }
    }

    pub fn contains(&self, t: Timestamp) -> bool {
        self.start <= t && t < self.end
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    /// Label in `YYYY-MM` form when the interval is exactly one calendar
    /// month, otherwise `start/end` in RFC 3339.
    pub fn label(&self) -> String {
        if month_start(self.start) == self.start && add_months(self.start, 1) == self.end {
            month_label(self.start)
        } else {
            format!("{}/{}", format_timestamp(self.start), format_timestamp(self.end))
        }
    }
}

impl fmt::Display for TimeInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// First instant of the calendar month containing `t`.
pub fn month_start(t: Timestamp) -> Timestamp {
    Utc.with_ymd_and_hms(t.year(), t.month(), 1, 0, 0, 0).single().expect("first of month is always valid")
}

pub fn add_months(t: Timestamp, n: u32) -> Timestamp {
    t.checked_add_months(Months::new(n)).expect("timestamp within chrono range")
}

pub fn month_label(t: Timestamp) -> String {
    format!("{:04}-{:02}", t.year(), t.month())
}

/// Number of calendar months between two month starts (`to >= from`).
pub fn months_between(from: Timestamp, to: Timestamp) -> u32 {
    let a = from.year() * 12 + from.month0() as i32;
    let b = to.year() * 12 + to.month0() as i32;
    (b - a).max(0) as u32
}

pub fn format_timestamp(t: Timestamp) -> String {
    t.format("%Y-%m-%dT%H:%M:%SZ").to_string()
}

/// Parses ISO-8601 timestamps. Inputs without an offset are taken as UTC;
/// a bare date means midnight UTC. Sub-second precision is truncated.
pub fn parse_timestamp(s: &str) -> Option<Timestamp> {
    let s = s.trim();
    let t = if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        t.with_timezone(&Utc)
    } else if let Some(t) =
        ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"].iter().find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
    {
        Utc.from_utc_datetime(&t)
    } else {
        let d = NaiveDate::parse_from_str(s, "%Y-%m-%d").ok()?;
        Utc.from_utc_datetime(&d.and_hms_opt(0, 0, 0)?)
    };
    Utc.timestamp_opt(t.timestamp(), 0).single()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_common_forms() {
        let want = Utc.with_ymd_and_hms(2019, 1, 1, 0, 0, 0).unwrap();
        for s in ["2019-01-01T00:00:00Z", "2019-01-01T00:00:00", "2019-01-01 00:00:00", "2019-01-01", "2019-01-01T01:00:00+01:00"] {
            assert_eq!(parse_timestamp(s), Some(want), "{s}");
        }
        assert_eq!(parse_timestamp("01.11.2018"), None);
        assert_eq!(parse_timestamp("2019-01-01T00:00:00.900Z"), Some(want), "sub-second truncated");
    }

    #[test]
    fn month_arithmetic() {
        let t = Utc.with_ymd_and_hms(2020, 3, 31, 23, 59, 59).unwrap();
        assert_eq!(month_start(t), Utc.with_ymd_and_hms(2020, 3, 1, 0, 0, 0).unwrap());
        assert_eq!(add_months(month_start(t), 1), Utc.with_ymd_and_hms(2020, 4, 1, 0, 0, 0).unwrap());
        let nov18 = Utc.with_ymd_and_hms(2018, 11, 1, 0, 0, 0).unwrap();
        let jul20 = Utc.with_ymd_and_hms(2020, 7, 1, 0, 0, 0).unwrap();
        assert_eq!(months_between(nov18, jul20), 20);
        assert_eq!(TimeInterval::new(nov18, add_months(nov18, 1)).label(), "2018-11");
    }
}
