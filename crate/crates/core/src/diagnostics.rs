//! Spatial correlation of errors or residuals across cities, distance
//! correlograms and the Frobenius curve used to pick `K`.

use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::coefficients::{project_panel, CityDesign};
use crate::panel::{Location, MaskedMatrix, ObservationPanel};
use crate::stats;
use crate::{Error, Result};

/// Pairs with fewer common days than this are flagged.
pub const MIN_PAIR_DAYS: usize = 30;

pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// Residuals below this fraction of the panel's RMS error count as zero.
pub const RESIDUAL_ZERO_TOL: f64 = 1e-9;

/// Which days enter a pair's correlation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Completeness {
    /// Days on which both cities are observed.
    #[default]
    Pairwise,
    /// Days on which every city is observed.
    Global,
}

/// Symmetric correlation matrix with cities ordered east to west.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialCorrelation {
    order: Vec<usize>,
    values: Vec<Option<f64>>,
}

impl SpatialCorrelation {
    pub fn n(&self) -> usize {
        self.order.len()
    }

    /// Original city index at each position, easternmost first.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Entry at ordered positions `(a, b)`; `None` if flagged.
    pub fn get(&self, a: usize, b: usize) -> Option<f64> {
        self.values[a * self.n() + b]
    }

    /// Entry for original city indices `(i, j)`.
    pub fn get_city(&self, i: usize, j: usize) -> Option<f64> {
        let pos = |c| self.order.iter().position(|&o| o == c).expect("city index in range");
        self.get(pos(i), pos(j))
    }

    pub fn flagged_pairs(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count() / 2
    }

    /// Largest `|ρ|` off the diagonal, ignoring flagged entries.
    pub fn max_abs_off_diagonal(&self) -> Option<f64> {
        let n = self.n();
        (0..n)
            .flat_map(|a| (0..n).filter(move |&b| b != a).map(move |b| (a, b)))
            .filter_map(|(a, b)| self.get(a, b))
            .map(f64::abs)
            .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))))
    }

    /// `Σ ρ_ij²` over unflagged entries, diagonal included.
    pub fn sum_of_squares(&self) -> f64 {
        self.values.iter().flatten().map(|v| v * v).sum()
    }
}

/// Positions sorted by longitude, east (largest) first.
pub fn east_to_west(locations: &[Location]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..locations.len()).collect();
    order.sort_by(|&a, &b| locations[b].lon.total_cmp(&locations[a].lon).then(a.cmp(&b)));
    order
}

/// Pearson correlation between the columns of `data` (days × cities).
///
/// Pairs with fewer than `min_days` common days are flagged (`None`).
pub fn spatial_correlation(
    data: &MaskedMatrix,
    locations: &[Location],
    mode: Completeness,
    min_days: usize,
) -> Result<SpatialCorrelation> {
    let n = data.n_cols();
    if locations.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: locations.len() });
    }
    let complete_days: Vec<usize> = match mode {
        Completeness::Pairwise => Vec::new(),
        Completeness::Global => (0..data.n_rows()).filter(|&t| data.observed_in_row(t) == n).collect(),
    };
    let order = east_to_west(locations);
    let mut values = vec![None; n * n];
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for a in 0..n {
        values[a * n + a] = Some(1.0);
        for b in a + 1..n {
            let (i, j) = (order[a], order[b]);
            xs.clear();
            ys.clear();
            let mut take = |t: usize| {
                if let (Some(x), Some(y)) = (data.get(t, i), data.get(t, j)) {
                    xs.push(x);
                    ys.push(y);
                }
            };
            match mode {
                Completeness::Pairwise => (0..data.n_rows()).for_each(&mut take),
                Completeness::Global => complete_days.iter().copied().for_each(&mut take),
            }
            // a constant series is uncorrelated with everything
            let r = (xs.len() >= min_days).then(|| stats::pearson(&xs, &ys).unwrap_or(0.0));
            values[a * n + b] = r;
            values[b * n + a] = r;
        }
    }
    Ok(SpatialCorrelation { order, values })
}

/// Great-circle distance in km between two (lon, lat) points in degrees.
pub fn haversine_km(lon1: f64, lat1: f64, lon2: f64, lat2: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dp = p2 - p1;
    let dl = (lon2 - lon1).to_radians();
    let h = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CorrelogramPoint {
    /// Original city indices, `i < j`.
    pub i: usize,
    pub j: usize,
    pub distance_km: f64,
    pub correlation: f64,
}

/// One point per unflagged city pair.
pub fn correlogram(corr: &SpatialCorrelation, locations: &[Location]) -> Vec<CorrelogramPoint> {
    let n = corr.n();
    let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for a in 0..n {
        for b in a + 1..n {
            if let Some(r) = corr.get(a, b) {
                let (i, j) = (corr.order[a].min(corr.order[b]), corr.order[a].max(corr.order[b]));
                let (li, lj) = (&locations[i], &locations[j]);
                out.push(CorrelogramPoint {
                    i,
                    j,
                    distance_km: haversine_km(li.lon, li.lat, lj.lon, lj.lat),
                    correlation: r,
                });
            }
        }
    }
    out.sort_by_key(|p| (p.i, p.j));
    out
}

/// Options shared by the residual diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualOptions {
    pub min_obs_per_day: usize,
    pub mode: Completeness,
    pub min_pair_days: usize,
}

impl Default for ResidualOptions {
    fn default() -> Self {
        ResidualOptions { min_obs_per_day: 10, mode: Completeness::Pairwise, min_pair_days: MIN_PAIR_DAYS }
    }
}

/// Correlation of the residuals after removing the leading `k` basis functions.
pub fn residual_correlation(
    design: &CityDesign,
    panel: &ObservationPanel,
    k: usize,
    opts: &ResidualOptions,
) -> Result<SpatialCorrelation> {
    if k > design.k() {
        return Err(Error::KOutOfRange { k, max: design.k() });
    }
    let mut proj = project_panel(&design.truncated(k), panel, opts.min_obs_per_day)?;
    // residuals at rounding level are exact zeros
    let obs: Vec<f64> = panel.errors().as_slice().iter().flatten().copied().collect();
    let tiny = RESIDUAL_ZERO_TOL * (obs.iter().map(|v| v * v).sum::<f64>() / obs.len().max(1) as f64).sqrt();
    for t in 0..proj.residuals.n_rows() {
        for r in proj.residuals.row_mut(t).iter_mut().flatten() {
            if r.abs() <= tiny {
                *r = 0.0;
            }
        }
    }
    spatial_correlation(&proj.residuals, panel.locations(), opts.mode, opts.min_pair_days)
}

/// `(K, Σ_ij (ρ^after_ij)²)` for each requested `K`.
///
/// An entry flagged in either the raw-error matrix or the residual matrix is
/// left out of the sum, so all points cover the same pairs.
pub fn frobenius_curve(
    design: &CityDesign,
    panel: &ObservationPanel,
    k_values: &[usize],
    opts: &ResidualOptions,
) -> Result<Vec<(usize, f64)>> {
    if let Some(&k) = k_values.iter().find(|&&k| k > design.k()) {
        return Err(Error::KOutOfRange { k, max: design.k() });
    }
    let before = spatial_correlation(panel.errors(), panel.locations(), opts.mode, opts.min_pair_days)?;
    k_values
        .iter()
        .map(|&k| {
            let after = residual_correlation(design, panel, k, opts)?;
            Ok((k, masked_sum_of_squares(&before, &after)))
        })
        .collect()
}

/// `Σ ρ²` of `after` over entries unflagged in both matrices.
pub fn masked_sum_of_squares(before: &SpatialCorrelation, after: &SpatialCorrelation) -> f64 {
    before.values.iter().zip(&after.values).filter_map(|(b, a)| b.and(*a)).map(|v| v * v).sum()
}
