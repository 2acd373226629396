use std::fmt;

use chrono::{DateTime, FixedOffset, SecondsFormat, TimeZone, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A UTC instant that remembers the zone offset it was recorded in.
///
/// Ordering and arithmetic use the UTC instant; the offset only matters
/// for display and for writing evidence back out.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Timestamp {
    utc: DateTime<Utc>,
    offset_secs: i32,
}

impl Timestamp {
    pub fn parse(s: &str) -> Result<Self, chrono::ParseError> {
        let dt = DateTime::parse_from_rfc3339(s.trim())?;
        Ok(Self::from_fixed(dt))
    }

    pub fn from_fixed(dt: DateTime<FixedOffset>) -> Self {
        Self {
            utc: dt.with_timezone(&Utc),
            offset_secs: dt.offset().local_minus_utc(),
        }
    }

    pub fn from_utc(utc: DateTime<Utc>) -> Self {
        Self { utc, offset_secs: 0 }
    }

    pub fn utc(&self) -> DateTime<Utc> {
        self.utc
    }

    pub fn offset_secs(&self) -> i32 {
        self.offset_secs
    }

    pub fn local(&self) -> DateTime<FixedOffset> {
        let offset = FixedOffset::east_opt(self.offset_secs)
            .unwrap_or_else(|| FixedOffset::east_opt(0).expect("zero offset"));
        offset.from_utc_datetime(&self.utc.naive_utc())
    }

    /// Signed difference `self - earlier` in hours.
    pub fn hours_since(&self, earlier: &Timestamp) -> f64 {
        (self.utc - earlier.utc).num_milliseconds() as f64 / 3_600_000.0
    }

    /// Signed difference `self - earlier` in minutes.
    pub fn minutes_since(&self, earlier: &Timestamp) -> f64 {
        (self.utc - earlier.utc).num_milliseconds() as f64 / 60_000.0
    }

    pub fn plus_minutes(&self, minutes: f64) -> Timestamp {
        let ms = (minutes * 60_000.0).round() as i64;
        Timestamp {
            utc: self.utc + chrono::Duration::milliseconds(ms),
            offset_secs: self.offset_secs,
        }
    }

    pub fn to_rfc3339(&self) -> String {
        self.local().to_rfc3339_opts(SecondsFormat::AutoSi, false)
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_rfc3339())
    }
}

impl Serialize for Timestamp {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_rfc3339())
    }
}

impl<'de> Deserialize<'de> for Timestamp {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        Timestamp::parse(&raw).map_err(serde::de::Error::custom)
    }
}

/// Closed project interval.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub start: Timestamp,
    pub end: Timestamp,
}

impl Window {
    pub fn contains(&self, t: &Timestamp) -> bool {
        *t >= self.start && *t <= self.end
    }

    pub fn duration_hours(&self) -> f64 {
        self.end.hours_since(&self.start)
    }

    /// Position of `t` on the `[0, 1]` project timeline, clamped.
    pub fn fraction(&self, t: &Timestamp) -> f64 {
        let span = self.duration_hours();
        if span <= 0.0 {
            return 0.0;
        }
        (t.hours_since(&self.start) / span).clamp(0.0, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keeps_offset_but_orders_by_instant() {
        let a = Timestamp::parse("2024-03-01T10:00:00+02:00").unwrap();
        let b = Timestamp::parse("2024-03-01T09:00:00Z").unwrap();
        assert!(a < b);
        assert_eq!(a.offset_secs(), 7200);
        assert_eq!(a.to_rfc3339(), "2024-03-01T10:00:00+02:00");
        assert_eq!(b.to_rfc3339(), "2024-03-01T09:00:00+00:00");
        assert!((b.hours_since(&a) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn serde_round_trip() {
        let t = Timestamp::parse("2024-03-01T10:00:00-05:00").unwrap();
        let s = serde_json::to_string(&t).unwrap();
        let back: Timestamp = serde_json::from_str(&s).unwrap();
        assert_eq!(t, back);
        assert_eq!(back.offset_secs(), -5 * 3600);
    }
}
