//! Day-by-city panels of values with missing entries.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::spline::TensorSplineBasis;
use crate::{Error, Result};

/// Calendar day as a day count from a fixed epoch.
///
/// Only differences between days are used inside this crate; the companion
/// crate maps ISO-8601 dates to and from this count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Day(pub i32);

impl Day {
    pub fn succ(self) -> Day {
        Day(self.0 + 1)
    }

    pub fn days_since(self, earlier: Day) -> i32 {
        self.0 - earlier.0
    }
}

/// Observation site.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Location {
    pub id: String,
    pub name: String,
    pub lon: f64,
    pub lat: f64,
}

impl Location {
    pub fn new(id: impl Into<String>, name: impl Into<String>, lon: f64, lat: f64) -> Self {
        Location { id: id.into(), name: name.into(), lon, lat }
    }
}

/// Row-major `n_rows x n_cols` matrix with explicit missing entries.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedMatrix {
    n_rows: usize,
    n_cols: usize,
    data: Vec<Option<f64>>,
}

impl MaskedMatrix {
    pub fn new(n_rows: usize, n_cols: usize, data: Vec<Option<f64>>) -> Result<Self> {
        if data.len() != n_rows * n_cols {
            return Err(Error::DimensionMismatch { expected: n_rows * n_cols, found: data.len() });
        }
        Ok(MaskedMatrix { n_rows, n_cols, data })
    }

    pub fn missing(n_rows: usize, n_cols: usize) -> Self {
        MaskedMatrix { n_rows, n_cols, data: alloc::vec![None; n_rows * n_cols] }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        self.data[row * self.n_cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: Option<f64>) {
        self.data[row * self.n_cols + col] = value;
    }

    pub fn row(&self, row: usize) -> &[Option<f64>] {
        &self.data[row * self.n_cols..(row + 1) * self.n_cols]
    }

    pub fn row_mut(&mut self, row: usize) -> &mut [Option<f64>] {
        &mut self.data[row * self.n_cols..(row + 1) * self.n_cols]
    }

    pub fn column(&self, col: usize) -> impl Iterator<Item = Option<f64>> + '_ {
        (0..self.n_rows).map(move |r| self.get(r, col))
    }

    pub fn as_slice(&self) -> &[Option<f64>] {
        &self.data
    }

    pub fn observed_in_row(&self, row: usize) -> usize {
        self.row(row).iter().filter(|v| v.is_some()).count()
    }

    pub fn observed_count(&self) -> usize {
        self.data.iter().filter(|v| v.is_some()).count()
    }

    /// Mean of all observed entries, `None` when nothing is observed.
    pub fn observed_mean(&self) -> Option<f64> {
        let (sum, n) = self.data.iter().flatten().fold((0.0, 0usize), |(s, n), &v| (s + v, n + 1));
        (n > 0).then(|| sum / n as f64)
    }
}

/// Forecast errors `Y_t(τ_i)` for one horizon: one row per day, one column
/// per location.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationPanel {
    horizon: u8,
    dates: Vec<Day>,
    locations: Vec<Location>,
    errors: MaskedMatrix,
}

impl ObservationPanel {
    /// Dates must be strictly increasing; `errors` is `dates.len() x locations.len()`.
    pub fn new(horizon: u8, dates: Vec<Day>, locations: Vec<Location>, errors: MaskedMatrix) -> Result<Self> {
        if errors.n_rows() != dates.len() {
            return Err(Error::DimensionMismatch { expected: dates.len(), found: errors.n_rows() });
        }
        if errors.n_cols() != locations.len() {
            return Err(Error::DimensionMismatch { expected: locations.len(), found: errors.n_cols() });
        }
        if dates.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("panel dates must be strictly increasing".into()));
        }
        if errors.as_slice().iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("panel contains non-finite values".into()));
        }
        Ok(ObservationPanel { horizon, dates, locations, errors })
    }

    pub fn horizon(&self) -> u8 {
        self.horizon
    }

    pub fn dates(&self) -> &[Day] {
        &self.dates
    }

    pub fn locations(&self) -> &[Location] {
        &self.locations
    }

    pub fn errors(&self) -> &MaskedMatrix {
        &self.errors
    }

    pub fn n_days(&self) -> usize {
        self.dates.len()
    }

    pub fn n_cities(&self) -> usize {
        self.locations.len()
    }

    pub fn day(&self, t: usize) -> &[Option<f64>] {
        self.errors.row(t)
    }

    pub fn n_observed(&self, t: usize) -> usize {
        self.errors.observed_in_row(t)
    }

    /// Mean of every observed error in the panel.
    pub fn grand_mean(&self) -> Option<f64> {
        self.errors.observed_mean()
    }

    /// Restrict to the first `n` days.
    pub fn head(&self, n: usize) -> ObservationPanel {
        let n = n.min(self.n_days());
        let data = self.errors.as_slice()[..n * self.n_cities()].to_vec();
        ObservationPanel {
            horizon: self.horizon,
            dates: self.dates[..n].to_vec(),
            locations: self.locations.clone(),
            errors: MaskedMatrix { n_rows: n, n_cols: self.n_cities(), data },
        }
    }

    /// Every location must lie in the spline domain.
    pub fn check_domain(&self, basis: &TensorSplineBasis) -> Result<()> {
        let d = basis.domain();
        for loc in &self.locations {
            if !d.contains(loc.lon, loc.lat) {
                return Err(Error::InvalidArgument(format!(
                    "location {} ({}, {}) outside spline domain",
                    loc.id, loc.lon, loc.lat
                )));
            }
        }
        Ok(())
    }
}
