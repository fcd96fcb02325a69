//! CSV and JSON renderings of pipeline results.
//!
//! | file                     | columns                                                         |
//! |--------------------------|-----------------------------------------------------------------|
//! | `adjusted.csv`           | `date, city_id, F, Y_hat, F_adj, A, Y, Z, predictive_sd`        |
//! | `summary.json`           | mode, horizon, K, counts, mean and SD of `Y` and `Z`            |
//! | `histogram.csv`          | `bin_lo, bin_hi, count_Y, count_Z`                              |
//! | `corr_before.csv`, `corr_after.csv` | `city_id` then one column per city, east to west    |
//! | `correlogram_before.csv`, `correlogram_after.csv` | `distance_km, correlation`            |
//! | `frobenius.csv`          | `k, sum_sq`                                                     |
//! | `acf.csv`                | `k, lag, acf_std, acf_std_sq, band`                             |
//! | `predictions.csv`        | `date, city_id, city_name, longitude, latitude, predicted_error, predictive_sd` |
//! | `basis_mean.csv`, `basis_NN.csv` | `lon, lat, value`                                       |
//! | `truth_betas.csv`        | `date, k, value`                                                |
//! | `truth_fields.csv`       | `city_id, mu, phi_1 .. phi_K`                                   |
//! | `truth_loadings.csv`     | `j, i_lon, i_lat, phi_1 .. phi_K`                               |
//!
//! Empty fields mean missing or flagged values.

use ftscast_core::diagnostics::{correlogram, SpatialCorrelation};
use ftscast_core::predict::FieldPrediction;
use ftscast_core::simulate::SimulatedPanel;
use ftscast_core::spatial::BasisGrid;
use ftscast_core::{Day, Location};
use serde::Serialize;

use crate::artifact::{num, Csv};
use crate::config::Mode;
use crate::dates;
use crate::error::{Error, Result};
use crate::pipeline::{Adjustment, Diagnosis};

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn adjusted_csv(adj: &Adjustment, locations: &[Location]) -> Result<Vec<u8>> {
    let mut w = Csv::new(["date", "city_id", "F", "Y_hat", "F_adj", "A", "Y", "Z", "predictive_sd"]);
    for r in &adj.records {
        w.row([
            dates::format(r.date),
            locations[r.location].id.clone(),
            num(r.forecast),
            num(r.predicted_error),
            num(r.adjusted),
            opt(r.actual),
            opt(r.raw_error),
            opt(r.adjusted_error),
            num(r.predictive_sd),
        ]);
    }
    w.finish()
}

#[derive(Debug, Clone, Serialize)]
pub struct SummaryRecord {
    pub mode: Mode,
    pub horizon: u8,
    pub k: usize,
    pub n_forecasts: usize,
    pub n_with_actual: usize,
    pub first_date: Option<String>,
    pub last_date: Option<String>,
    pub mean_y: f64,
    pub sd_y: f64,
    pub mean_z: f64,
    pub sd_z: f64,
    /// `1 − SD(Z)/SD(Y)`.
    pub sd_reduction: f64,
}

pub fn summary_record(adj: &Adjustment, horizon: u8, k: usize) -> SummaryRecord {
    let s = &adj.summary;
    SummaryRecord {
        mode: adj.mode,
        horizon,
        k,
        n_forecasts: adj.records.len(),
        n_with_actual: s.n,
        first_date: adj.records.first().map(|r| dates::format(r.date)),
        last_date: adj.records.last().map(|r| dates::format(r.date)),
        mean_y: s.mean_raw,
        sd_y: s.sd_raw,
        mean_z: s.mean_adjusted,
        sd_z: s.sd_adjusted,
        sd_reduction: s.sd_reduction,
    }
}

pub fn json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value).map_err(|source| Error::Json { path: "<memory>".into(), source })?;
    v.push(b'\n');
    Ok(v)
}

pub fn histogram_csv(adj: &Adjustment) -> Result<Vec<u8>> {
    let (y, z) = &adj.histograms;
    let mut w = Csv::new(["bin_lo", "bin_hi", "count_Y", "count_Z"]);
    for i in 0..y.counts.len() {
        w.row([num(y.edges[i]), num(y.edges[i + 1]), y.counts[i].to_string(), z.counts[i].to_string()]);
    }
    w.finish()
}

pub fn correlation_csv(corr: &SpatialCorrelation, locations: &[Location]) -> Result<Vec<u8>> {
    let order = corr.order();
    let mut w = Csv::new(std::iter::once("city_id".to_string()).chain(order.iter().map(|&i| locations[i].id.clone())));
    for (a, &i) in order.iter().enumerate() {
        w.row(std::iter::once(locations[i].id.clone()).chain((0..order.len()).map(|b| opt(corr.get(a, b)))));
    }
    w.finish()
}

pub fn correlogram_csv(corr: &SpatialCorrelation, locations: &[Location]) -> Result<Vec<u8>> {
    let mut w = Csv::new(["distance_km", "correlation"]);
    for p in correlogram(corr, locations) {
        w.row([num(p.distance_km), num(p.correlation)]);
    }
    w.finish()
}

pub fn frobenius_csv(d: &Diagnosis) -> Result<Vec<u8>> {
    let mut w = Csv::new(["k", "sum_sq"]);
    for &(k, s) in &d.frobenius {
        w.row([k.to_string(), num(s)]);
    }
    w.finish()
}

pub fn acf_csv(d: &Diagnosis) -> Result<Vec<u8>> {
    let mut w = Csv::new(["k", "lag", "acf_std", "acf_std_sq", "band"]);
    for (k, rows) in d.acf.iter().enumerate() {
        for &(lag, a, a2, band) in rows {
            w.row([(k + 1).to_string(), lag.to_string(), num(a), num(a2), num(band)]);
        }
    }
    w.finish()
}

pub fn predictions_csv(date: Day, locations: &[Location], field: &[FieldPrediction]) -> Result<Vec<u8>> {
    let mut w = Csv::new(["date", "city_id", "city_name", "longitude", "latitude", "predicted_error", "predictive_sd"]);
    let d = dates::format(date);
    for (l, p) in locations.iter().zip(field) {
        w.row([d.clone(), l.id.clone(), l.name.clone(), num(l.lon), num(l.lat), num(p.mean), num(p.sd())]);
    }
    w.finish()
}

pub fn grid_csv(grid: &BasisGrid) -> Result<Vec<u8>> {
    let mut w = Csv::new(["lon", "lat", "value"]);
    for (lon, lat, v) in grid.points() {
        w.row([num(lon), num(lat), num(v)]);
    }
    w.finish()
}

/// Ground-truth files of a simulated panel, by file name.
pub fn truth_files(sim: &SimulatedPanel, n_lat: usize) -> Result<Vec<(&'static str, Vec<u8>)>> {
    let t = &sim.truth;
    let k = t.betas.ncols();
    let phi_cols = || (1..=k).map(|c| format!("phi_{c}"));

    let mut w = Csv::new(["date", "k", "value"]);
    for (i, &d) in sim.panel.dates().iter().enumerate() {
        let date = dates::format(d);
        for c in 0..k {
            w.row([date.clone(), (c + 1).to_string(), num(t.betas[(i, c)])]);
        }
    }
    let betas = w.finish()?;

    let mut w = Csv::new(["city_id".to_string(), "mu".to_string()].into_iter().chain(phi_cols()));
    for (i, l) in sim.panel.locations().iter().enumerate() {
        w.row([l.id.clone(), num(t.mu[i])].into_iter().chain((0..k).map(|c| num(t.phi[(i, c)]))));
    }
    let fields = w.finish()?;

    let mut w = Csv::new(["j", "i_lon", "i_lat"].into_iter().map(String::from).chain(phi_cols()));
    for j in 0..t.loadings.nrows() {
        w.row([j.to_string(), (j / n_lat).to_string(), (j % n_lat).to_string()].into_iter().chain((0..k).map(|c| num(t.loadings[(j, c)]))));
    }
    let loadings = w.finish()?;

    let mut w = Csv::new(["j", "i_lon", "i_lat", "value"]);
    for (j, v) in t.mean_coeffs.iter().enumerate() {
        w.row([j.to_string(), (j / n_lat).to_string(), (j % n_lat).to_string(), num(*v)]);
    }
    let mean = w.finish()?;
    Ok(vec![("truth_betas.csv", betas), ("truth_fields.csv", fields), ("truth_loadings.csv", loadings), ("truth_mean.csv", mean)])
}
