//! Conversion between calendar dates and [`Day`] numbers (days since
//! 1970-01-01).

use chrono::NaiveDate;
use ftscast_core::Day;

const EPOCH: NaiveDate = match NaiveDate::from_ymd_opt(1970, 1, 1) {
    Some(d) => d,
    None => unreachable!(),
};

pub fn to_day(date: NaiveDate) -> Day {
    Day((date - EPOCH).num_days() as i32)
}

pub fn to_date(day: Day) -> NaiveDate {
    EPOCH + chrono::Duration::days(day.0 as i64)
}

/// Parse an ISO-8601 calendar date (`YYYY-MM-DD`).
pub fn parse(s: &str) -> Option<Day> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").ok().map(to_day)
}

pub fn format(day: Day) -> String {
    to_date(day).format("%Y-%m-%d").to_string()
}
