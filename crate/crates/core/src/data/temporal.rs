use chrono::{Datelike, NaiveDate, NaiveDateTime, NaiveTime, Timelike};
use serde::{Deserialize, Serialize};

/// Resolution at which a temporal column's timestamps are exact. Ordered from
/// coarsest to finest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    Year,
    Month,
    Day,
    Hour,
    Minute,
    Second,
}

impl Granularity {
    pub fn coarser(self, other: Granularity) -> Granularity {
        self.min(other)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Granularity::Year => "year",
            Granularity::Month => "month",
            Granularity::Day => "day",
            Granularity::Hour => "hour",
            Granularity::Minute => "minute",
            Granularity::Second => "second",
        }
    }
}

const DATETIME_FORMATS: &[&str] = &[
    "%Y-%m-%d %H:%M:%S",
    "%Y-%m-%dT%H:%M:%S",
    "%Y-%m-%d %H:%M",
    "%Y-%m-%dT%H:%M",
    "%Y/%m/%d %H:%M:%S",
    "%Y/%m/%d %H:%M",
];

const DATE_FORMATS: &[&str] = &["%Y-%m-%d", "%Y/%m/%d", "%m/%d/%Y"];

/// Parses a timezone-naive date or timestamp. Fractional seconds and a
/// trailing `Z` are accepted and dropped.
pub fn parse_timestamp(raw: &str) -> Option<NaiveDateTime> {
    let s = raw.trim().trim_end_matches('Z');
    let s = match s.split_once('.') {
        Some((head, tail)) if tail.chars().all(|c| c.is_ascii_digit()) && head.contains(':') => head,
        _ => s,
    };
    for fmt in DATETIME_FORMATS {
        if let Ok(ts) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(ts);
        }
    }
    for fmt in DATE_FORMATS {
        if let Ok(d) = NaiveDate::parse_from_str(s, fmt) {
            return Some(d.and_time(NaiveTime::MIN));
        }
    }
    // year-month
    if s.len() == 7 && s.as_bytes()[4] == b'-' {
        if let Ok(d) = NaiveDate::parse_from_str(&format!("{s}-01"), "%Y-%m-%d") {
            return Some(d.and_time(NaiveTime::MIN));
        }
    }
    None
}

/// Finest-needed granularity: the coarsest unit at which every timestamp is
/// exact. An empty input is reported as `Day`.
pub fn detect_granularity<'a, I>(values: I) -> Granularity
where
    I: IntoIterator<Item = &'a NaiveDateTime>,
{
    let mut g = Granularity::Year;
    for ts in values {
        g = g.max(exact_granularity(ts));
        if g == Granularity::Second {
            break;
        }
    }
    g
}

fn exact_granularity(ts: &NaiveDateTime) -> Granularity {
    if ts.second() != 0 || ts.nanosecond() != 0 {
        Granularity::Second
    } else if ts.minute() != 0 {
        Granularity::Minute
    } else if ts.hour() != 0 {
        Granularity::Hour
    } else if ts.day() != 1 {
        Granularity::Day
    } else if ts.month() != 1 {
        Granularity::Month
    } else {
        Granularity::Year
    }
}

/// Truncates a timestamp down to the start of its `granularity` period.
pub fn truncate(ts: NaiveDateTime, granularity: Granularity) -> NaiveDateTime {
    let d = ts.date();
    let (y, m, day) = (d.year(), d.month(), d.day());
    let (h, mi, s) = (ts.hour(), ts.minute(), ts.second());
    let date = |y, m, d| NaiveDate::from_ymd_opt(y, m, d).expect("valid truncated date");
    let time = |h, m, s| NaiveTime::from_hms_opt(h, m, s).expect("valid truncated time");
    match granularity {
        Granularity::Year => date(y, 1, 1).and_time(NaiveTime::MIN),
        Granularity::Month => date(y, m, 1).and_time(NaiveTime::MIN),
        Granularity::Day => date(y, m, day).and_time(NaiveTime::MIN),
        Granularity::Hour => date(y, m, day).and_time(time(h, 0, 0)),
        Granularity::Minute => date(y, m, day).and_time(time(h, mi, 0)),
        Granularity::Second => date(y, m, day).and_time(time(h, mi, s)),
    }
}

/// Renders a timestamp so that re-parsing yields the same instant and the
/// same detected granularity.
pub fn format_timestamp(ts: &NaiveDateTime, granularity: Granularity) -> String {
    match granularity {
        Granularity::Year | Granularity::Month | Granularity::Day => {
            ts.format("%Y-%m-%d").to_string()
        }
        Granularity::Hour | Granularity::Minute => ts.format("%Y-%m-%d %H:%M").to_string(),
        Granularity::Second => ts.format("%Y-%m-%d %H:%M:%S").to_string(),
    }
}

/// Seconds since the Unix epoch, as a real number.
pub fn to_epoch_seconds(ts: &NaiveDateTime) -> f64 {
    ts.and_utc().timestamp() as f64
}

pub fn from_epoch_seconds(secs: f64) -> Option<NaiveDateTime> {
    chrono::DateTime::from_timestamp(secs.round() as i64, 0).map(|dt| dt.naive_utc())
}
