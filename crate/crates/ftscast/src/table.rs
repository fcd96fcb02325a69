//! The canonical forecast table.
//!
//! One row per (date, city, horizon) with columns
//! `date, city_id, city_name, longitude, latitude, horizon_days, forecast_F, actual_F`.
//! Dates are ISO-8601, temperatures in °F, and a missing forecast or actual
//! is an empty field. Reading selects one horizon and forms the error panel
//! `Y = forecast_F − actual_F`.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;
use std::path::Path;

use ftscast_core::{Day, Location, MaskedMatrix, ObservationPanel};
use serde::{Deserialize, Serialize};

use crate::dates;
use crate::error::{Error, Result};
use crate::fsutil;

pub const COLUMNS: [&str; 8] =
    ["date", "city_id", "city_name", "longitude", "latitude", "horizon_days", "forecast_F", "actual_F"];

pub const MAX_HORIZON: i64 = 6;

/// What to do with rows that fail to parse.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OnMalformed {
    /// Drop them and list them in the report.
    #[default]
    Skip,
    /// Fail the whole read.
    Fail,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RowIssue {
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IngestReport {
    /// Data rows in the file.
    pub rows_read: usize,
    /// Rows of the requested horizon that entered the panel.
    pub rows_selected: usize,
    pub rejected: Vec<RowIssue>,
    /// Later rows that replaced an earlier (date, city) row.
    pub duplicates: Vec<RowIssue>,
}

/// A selected horizon: forecasts, actuals and their differences on a
/// common (dates × cities) grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastTable {
    pub panel: ObservationPanel,
    pub forecasts: MaskedMatrix,
    pub actuals: MaskedMatrix,
    pub report: IngestReport,
}

struct Row {
    line: u64,
    day: Day,
    location: Location,
    horizon: i64,
    forecast: Option<f64>,
    actual: Option<f64>,
}

fn check_horizon(horizon: i64) -> Result<u8> {
    if (0..=MAX_HORIZON).contains(&horizon) {
        Ok(horizon as u8)
    } else {
        Err(Error::UnknownHorizon(horizon))
    }
}

fn parse_number(field: &str, column: &str) -> std::result::Result<f64, String> {
    let v: f64 = field.trim().parse().map_err(|_| format!("{column}: cannot parse `{field}` as a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{column}: value `{field}` is not finite"))
    }
}

fn parse_optional(field: &str, column: &str) -> std::result::Result<Option<f64>, String> {
    if field.trim().is_empty() {
        Ok(None)
    } else {
        parse_number(field, column).map(Some)
    }
}

fn parse_row(rec: &csv::StringRecord, idx: &[usize; 8], line: u64) -> std::result::Result<Row, String> {
    let f = |c: usize| rec.get(idx[c]).unwrap_or("");
    let day = dates::parse(f(0)).ok_or_else(|| format!("date: cannot parse `{}` as YYYY-MM-DD", f(0)))?;
    let id = f(1).trim();
    if id.is_empty() {
        return Err("city_id: empty".into());
    }
    let lon = parse_number(f(3), "longitude")?;
    let lat = parse_number(f(4), "latitude")?;
    if !(-180.0..=180.0).contains(&lon) || !(-90.0..=90.0).contains(&lat) {
        return Err(format!("coordinates ({lon}, {lat}) out of range"));
    }
    let horizon: i64 = f(5).trim().parse().map_err(|_| format!("horizon_days: cannot parse `{}` as an integer", f(5)))?;
    if !(0..=MAX_HORIZON).contains(&horizon) {
        return Err(format!("horizon_days: {horizon} outside 0..={MAX_HORIZON}"));
    }
    Ok(Row {
        line,
        day,
        location: Location::new(id, f(2).trim(), lon, lat),
        horizon,
        forecast: parse_optional(f(6), "forecast_F")?,
        actual: parse_optional(f(7), "actual_F")?,
    })
}

/// Read the table at `path` and select `horizon`.
pub fn read_table(path: &Path, horizon: i64, on_malformed: OnMalformed) -> Result<ForecastTable> {
    let file = std::fs::File::open(path).map_err(Error::io(path))?;
    read_table_from(file, path, horizon, on_malformed)
}

type Cell = (Option<f64>, Option<f64>, u64);

/// As [`read_table`] from any reader; `path` only labels messages.
pub fn read_table_from<R: Read>(
    reader: R,
    path: &Path,
    horizon: i64,
    on_malformed: OnMalformed,
) -> Result<ForecastTable> {
    let horizon = check_horizon(horizon)?;
    let mut rdr = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::Headers).from_reader(reader);
    let headers = rdr.headers().map_err(Error::csv(path))?.clone();
    let mut idx = [0usize; 8];
    for (slot, &name) in idx.iter_mut().zip(COLUMNS.iter()) {
        *slot = headers.iter().position(|h| h == name).ok_or(Error::MissingColumn { column: name, path: path.into() })?;
    }

    let mut report = IngestReport::default();
    let mut cities: BTreeMap<String, (Location, u64)> = BTreeMap::new();
    // (forecast, actual, line) per (date, city)
    let mut cells: BTreeMap<(Day, String), Cell> = BTreeMap::new();
    for rec in rdr.records() {
        report.rows_read += 1;
        let (rec, line) = match rec {
            Ok(r) => {
                let line = r.position().map_or(0, |p| p.line());
                (r, line)
            }
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                report.rejected.push(RowIssue { line, reason: e.to_string() });
                continue;
            }
        };
        if rec.len() != headers.len() {
            report
                .rejected
                .push(RowIssue { line, reason: format!("expected {} fields, found {}", headers.len(), rec.len()) });
            continue;
        }
        let row = match parse_row(&rec, &idx, line) {
            Ok(r) => r,
            Err(reason) => {
                report.rejected.push(RowIssue { line, reason });
                continue;
            }
        };
        match cities.get(&row.location.id) {
            Some((known, first)) if known.lon != row.location.lon || known.lat != row.location.lat => {
                report.rejected.push(RowIssue {
                    line,
                    reason: format!("city {}: coordinates differ from line {first}", row.location.id),
                });
                continue;
            }
            Some(_) => {}
            None => {
                cities.insert(row.location.id.clone(), (row.location.clone(), line));
            }
        }
        if row.horizon != horizon as i64 {
            continue;
        }
        report.rows_selected += 1;
        let key = (row.day, row.location.id.clone());
        if let Some((_, _, earlier)) = cells.insert(key, (row.forecast, row.actual, row.line)) {
            report.duplicates.push(RowIssue {
                line: row.line,
                reason: format!("replaces line {earlier} for city {} on {}", row.location.id, dates::format(row.day)),
            });
        }
    }

    if on_malformed == OnMalformed::Fail {
        if let Some(first) = report.rejected.first() {
            return Err(Error::MalformedRows {
                path: path.into(),
                count: report.rejected.len(),
                first_line: first.line,
                first_reason: first.reason.clone(),
            });
        }
    }
    if cells.is_empty() {
        return Err(Error::EmptySelection { horizon, path: path.into() });
    }
    report.rows_selected -= report.duplicates.len();

    let ids: BTreeSet<&String> = cells.keys().map(|(_, id)| id).collect();
    let locations: Vec<Location> = ids.iter().map(|id| cities[*id].0.clone()).collect();
    let col: BTreeMap<&String, usize> = ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
    let days: Vec<Day> = cells.keys().map(|(d, _)| *d).collect::<BTreeSet<_>>().into_iter().collect();
    let (n, m) = (days.len(), locations.len());
    let mut forecasts = MaskedMatrix::missing(n, m);
    let mut actuals = MaskedMatrix::missing(n, m);
    let mut errors = MaskedMatrix::missing(n, m);
    let mut t = 0;
    for ((day, id), (f, a, _)) in &cells {
        while days[t] != *day {
            t += 1;
        }
        let c = col[id];
        forecasts.set(t, c, *f);
        actuals.set(t, c, *a);
        errors.set(t, c, f.zip(*a).map(|(f, a)| f - a));
    }
    let panel = ObservationPanel::new(horizon, days, locations, errors)?;
    Ok(ForecastTable { panel, forecasts, actuals, report })
}

/// Serialize forecasts and actuals in the canonical column order. Cells
/// where both are missing produce no row.
pub fn table_bytes(
    horizon: u8,
    dates: &[Day],
    locations: &[Location],
    forecasts: &MaskedMatrix,
    actuals: &MaskedMatrix,
) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Csv { path: "<table>".into(), source: e };
    w.write_record(COLUMNS).map_err(io)?;
    let num = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    for (t, &d) in dates.iter().enumerate() {
        let date = dates::format(d);
        for (c, loc) in locations.iter().enumerate() {
            let (f, a) = (forecasts.get(t, c), actuals.get(t, c));
            if f.is_none() && a.is_none() {
                continue;
            }
            w.write_record([
                date.as_str(),
                &loc.id,
                &loc.name,
                &loc.lon.to_string(),
                &loc.lat.to_string(),
                &horizon.to_string(),
                &num(f),
                &num(a),
            ])
            .map_err(io)?;
        }
    }
    w.into_inner().map_err(|e| Error::Io { path: "<table>".into(), source: e.into_error() })
}

pub fn write_table(
    path: &Path,
    horizon: u8,
    dates: &[Day],
    locations: &[Location],
    forecasts: &MaskedMatrix,
    actuals: &MaskedMatrix,
) -> Result<()> {
    fsutil::write_atomic(path, &table_bytes(horizon, dates, locations, forecasts, actuals)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(text: &str, h: i64) -> Result<ForecastTable> {
        read_table_from(text.as_bytes(), Path::new("t.csv"), h, OnMalformed::Skip)
    }

    const HEAD: &str = "date,city_id,city_name,longitude,latitude,horizon_days,forecast_F,actual_F\n";

    #[test]
    fn error_is_forecast_minus_actual() {
        let t = read(&format!("{HEAD}2014-07-10,A,Alpha,-100,35,6,70,72\n"), 6).unwrap();
        assert_eq!(t.panel.errors().get(0, 0), Some(-2.0));
        assert_eq!(t.forecasts.get(0, 0), Some(70.0));
    }

    #[test]
    fn missing_actual_keeps_forecast() {
        let t = read(&format!("{HEAD}2014-07-10,A,Alpha,-100,35,6,70,\n"), 6).unwrap();
        assert_eq!(t.panel.errors().get(0, 0), None);
        assert_eq!(t.forecasts.get(0, 0), Some(70.0));
    }

    #[test]
    fn horizon_selection() {
        let text = format!("{HEAD}2014-07-10,A,Alpha,-100,35,3,70,72\n");
        assert!(matches!(read(&text, 6), Err(Error::EmptySelection { horizon: 6, .. })));
        assert!(matches!(read(&text, 7), Err(Error::UnknownHorizon(7))));
        assert!(matches!(read(&text, -1), Err(Error::UnknownHorizon(-1))));
        assert!(read(&text, 3).is_ok());
    }

    #[test]
    fn malformed_rows_are_reported_by_line() {
        let text = format!(
            "{HEAD}2014-07-10,A,Alpha,-100,35,6,70,72\n2014-07-1x,A,Alpha,-100,35,6,70,72\n2014-07-11,A,Alpha,-100,35,6,hot,72\n2014-07-11,B,Beta,-90,40,6,60,61\n"
        );
        let t = read(&text, 6).unwrap();
        let lines: Vec<u64> = t.report.rejected.iter().map(|r| r.line).collect();
        assert_eq!(lines, vec![3, 4]);
        assert!(t.report.rejected[1].reason.contains("forecast_F"));
        assert_eq!(t.report.rows_selected, 2);
        let strict = read_table_from(text.as_bytes(), Path::new("t.csv"), 6, OnMalformed::Fail);
        assert!(matches!(strict, Err(Error::MalformedRows { count: 2, first_line: 3, .. })));
    }

    #[test]
    fn duplicates_last_wins() {
        let text = format!("{HEAD}2014-07-10,A,Alpha,-100,35,6,70,72\n2014-07-10,A,Alpha,-100,35,6,71,72\n");
        let t = read(&text, 6).unwrap();
        assert_eq!(t.panel.errors().get(0, 0), Some(-1.0));
        assert_eq!(t.report.duplicates.len(), 1);
        assert_eq!(t.report.duplicates[0].line, 3);
        assert_eq!(t.report.rows_selected, 1);
    }

    #[test]
    fn missing_column_is_an_error() {
        let text = "date,city_id,city_name,longitude,latitude,horizon_days,forecast_F\n";
        assert!(matches!(read(text, 6), Err(Error::MissingColumn { column: "actual_F", .. })));
    }

    #[test]
    fn conflicting_coordinates_rejected() {
        let text = format!("{HEAD}2014-07-10,A,Alpha,-100,35,6,70,72\n2014-07-11,A,Alpha,-101,35,6,70,72\n");
        let t = read(&text, 6).unwrap();
        assert_eq!(t.report.rejected.len(), 1);
        assert_eq!(t.panel.n_days(), 1);
    }
}
