//! One-step-ahead prediction of the coefficients and of the error field, and
//! adjustment of raw forecasts by the predicted error.

use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::coefficients::{BetaSeries, CityDesign};
use crate::garch::GarchParams;
use crate::panel::Day;
use crate::stats::{self, Histogram};
use crate::{Error, Result};

/// Filter state of one coefficient at the state date `m`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CoefficientState {
    /// `β_m`.
    pub beta: f64,
    /// `u_m`.
    pub innovation: f64,
    /// `η_m²`.
    pub scale: f64,
    /// `η_{m+1}²`, already implied by the three fields above (or the start-up
    /// scale before any observation).
    pub next_scale: f64,
}

impl CoefficientState {
    pub fn new(params: &GarchParams, beta: f64, innovation: f64, scale: f64) -> Self {
        let next_scale = params.omega + params.alpha * innovation * innovation + params.gamma * scale;
        CoefficientState { beta, innovation, scale, next_scale }
    }

    /// State before the first observation: `β = 0` and `η_1²` given.
    pub fn start(initial_scale: f64) -> Self {
        CoefficientState { beta: 0.0, innovation: 0.0, scale: initial_scale, next_scale: initial_scale }
    }

    /// Predictive law `gap` days ahead. Beyond one day the scale recursion is
    /// iterated with `u := 0`.
    fn ahead(&self, params: &GarchParams, gap: i32) -> CoefficientForecast {
        let mut scale = self.next_scale;
        for _ in 1..gap {
            scale = params.omega + params.gamma * scale;
        }
        CoefficientForecast { location: params.psi.powi(gap) * self.beta, scale, nu: params.nu }
    }
}

/// `β_{k,d} | ℱ_m ~ t_ν(location, scale)`, `scale` being the squared t scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientForecast {
    pub location: f64,
    pub scale: f64,
    pub nu: f64,
}

impl CoefficientForecast {
    pub fn variance(&self) -> f64 {
        self.nu / (self.nu - 2.0) * self.scale
    }

    /// Central predictive interval with coverage `level`.
    pub fn interval(&self, level: f64) -> (f64, f64) {
        let q = stats::student_t_quantile(0.5 + level / 2.0, self.nu) * self.scale.sqrt();
        (self.location - q, self.location + q)
    }
}

/// Per-`k` filter states sharing one date.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PredictionState {
    date: Day,
    coefficients: Vec<CoefficientState>,
}

impl PredictionState {
    pub fn new(date: Day, coefficients: Vec<CoefficientState>) -> Result<Self> {
        if coefficients.iter().any(|c| !(c.next_scale > 0.0) || !c.beta.is_finite()) {
            return Err(Error::InvalidArgument("state scales must be positive and betas finite".into()));
        }
        Ok(PredictionState { date, coefficients })
    }

    /// Start-up state dated the day before `first`.
    pub fn start(first: Day, initial_scales: &[f64]) -> Result<Self> {
        Self::new(Day(first.0 - 1), initial_scales.iter().map(|&s| CoefficientState::start(s)).collect())
    }

    pub fn date(&self) -> Day {
        self.date
    }

    pub fn k(&self) -> usize {
        self.coefficients.len()
    }

    pub fn coefficients(&self) -> &[CoefficientState] {
        &self.coefficients
    }

    fn gap(&self, date: Day) -> Result<i32> {
        let gap = date.days_since(self.date);
        if gap <= 0 {
            return Err(Error::StaleState { state: self.date, requested: date });
        }
        Ok(gap)
    }

    fn check_params(&self, params: &[GarchParams]) -> Result<()> {
        if params.len() != self.k() {
            return Err(Error::DimensionMismatch { expected: self.k(), found: params.len() });
        }
        Ok(())
    }

    /// Predictive law of every coefficient on `date`.
    pub fn predict(&self, params: &[GarchParams], date: Day) -> Result<Vec<CoefficientForecast>> {
        self.check_params(params)?;
        let gap = self.gap(date)?;
        Ok(self.coefficients.iter().zip(params).map(|(c, p)| c.ahead(p, gap)).collect())
    }

    /// Advance the state with the coefficients observed on `date`.
    pub fn observe(&mut self, params: &[GarchParams], date: Day, beta: &[f64]) -> Result<()> {
        self.check_params(params)?;
        if beta.len() != self.k() {
            return Err(Error::DimensionMismatch { expected: self.k(), found: beta.len() });
        }
        let gap = self.gap(date)?;
        for ((c, p), &b) in self.coefficients.iter_mut().zip(params).zip(beta) {
            let f = c.ahead(p, gap);
            *c = CoefficientState::new(p, b, b - f.location, f.scale);
        }
        self.date = date;
        Ok(())
    }
}

/// Predicted error at one location.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FieldPrediction {
    pub mean: f64,
    pub variance: f64,
}

impl FieldPrediction {
    pub fn sd(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// `Ŷ(τ_i) = μ̂(τ_i) + Σ_k β̂_k φ_k(τ_i)` with variance
/// `Σ_k ν_k/(ν_k−2) η_k² φ_k(τ_i)² + σ̂²`.
pub fn predict_error_field(
    design: &CityDesign,
    forecasts: &[CoefficientForecast],
    noise_variance: f64,
) -> Result<Vec<FieldPrediction>> {
    if forecasts.len() != design.k() {
        return Err(Error::DimensionMismatch { expected: design.k(), found: forecasts.len() });
    }
    let beta: Vec<f64> = forecasts.iter().map(|f| f.location).collect();
    let phi = design.phi();
    Ok((0..design.n_cities())
        .map(|i| {
            let spread: f64 = forecasts.iter().enumerate().map(|(k, f)| f.variance() * phi[(i, k)].powi(2)).sum();
            FieldPrediction { mean: design.field(&beta, i), variance: spread + noise_variance }
        })
        .collect())
}

/// Conditional covariance of the error field between locations `i` and `j`.
pub fn conditional_covariance(
    design: &CityDesign,
    forecasts: &[CoefficientForecast],
    noise_variance: f64,
    i: usize,
    j: usize,
) -> f64 {
    let phi = design.phi();
    let spread: f64 = forecasts.iter().enumerate().map(|(k, f)| f.variance() * phi[(i, k)] * phi[(j, k)]).sum();
    spread + if i == j { noise_variance } else { 0.0 }
}

/// Predicted error fields for a sequence of dates over one set of locations.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionTable {
    dates: Vec<Day>,
    n_locations: usize,
    fields: Vec<Vec<FieldPrediction>>,
}

impl PredictionTable {
    pub fn new(n_locations: usize) -> Self {
        PredictionTable { dates: Vec::new(), n_locations, fields: Vec::new() }
    }

    /// Append a day; dates must be strictly increasing.
    pub fn push(&mut self, date: Day, field: Vec<FieldPrediction>) -> Result<()> {
        if field.len() != self.n_locations {
            return Err(Error::DimensionMismatch { expected: self.n_locations, found: field.len() });
        }
        if self.dates.last().is_some_and(|&d| d >= date) {
            return Err(Error::InvalidArgument("prediction dates must be strictly increasing".into()));
        }
        self.dates.push(date);
        self.fields.push(field);
        Ok(())
    }

    pub fn dates(&self) -> &[Day] {
        &self.dates
    }

    pub fn n_locations(&self) -> usize {
        self.n_locations
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn field(&self, date: Day) -> Option<&[FieldPrediction]> {
        self.dates.binary_search(&date).ok().map(|i| self.fields[i].as_slice())
    }

    pub fn iter(&self) -> impl Iterator<Item = (Day, &[FieldPrediction])> + '_ {
        self.dates.iter().copied().zip(self.fields.iter().map(Vec::as_slice))
    }
}

/// Filtered one-step predictions for every date in `dates`.
///
/// The state for date `d` only contains coefficients from dates before `d`.
/// Days without coefficients are bridged by the gap rule of
/// [`PredictionState::predict`].
pub fn rolling_predictions(
    design: &CityDesign,
    params: &[GarchParams],
    initial_scales: &[f64],
    noise_variance: f64,
    betas: &BetaSeries,
    dates: &[Day],
) -> Result<PredictionTable> {
    let first = match (betas.dates().first(), dates.first()) {
        (Some(&b), Some(&d)) => b.min(d),
        (Some(&b), None) => b,
        (None, Some(&d)) => d,
        (None, None) => return Ok(PredictionTable::new(design.n_cities())),
    };
    let mut state = PredictionState::start(first, initial_scales)?;
    let mut table = PredictionTable::new(design.n_cities());
    let mut next_beta = 0;
    for &d in dates {
        while next_beta < betas.len() && betas.dates()[next_beta] < d {
            state.observe(params, betas.dates()[next_beta], &betas.day(next_beta))?;
            next_beta += 1;
        }
        let forecasts = state.predict(params, d)?;
        table.push(d, predict_error_field(design, &forecasts, noise_variance)?)?;
    }
    Ok(table)
}

/// One raw forecast to be adjusted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawForecast {
    pub date: Day,
    /// Index into the locations of the prediction table.
    pub location: usize,
    pub forecast: f64,
    pub actual: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AdjustedForecast {
    pub date: Day,
    pub location: usize,
    /// `F`.
    pub forecast: f64,
    /// `Ŷ`.
    pub predicted_error: f64,
    /// `F − Ŷ`.
    pub adjusted: f64,
    pub actual: Option<f64>,
    /// `Y = F − A`.
    pub raw_error: Option<f64>,
    /// `Z = F^adj − A`.
    pub adjusted_error: Option<f64>,
    pub predictive_sd: f64,
}

pub fn adjust_forecasts(predictions: &PredictionTable, raw: &[RawForecast]) -> Result<Vec<AdjustedForecast>> {
    raw.iter()
        .map(|r| {
            let field = predictions.field(r.date).ok_or_else(|| {
                Error::AlignmentMismatch(alloc::format!("no prediction for day {}", r.date.0))
            })?;
            let p = field.get(r.location).ok_or_else(|| {
                Error::AlignmentMismatch(alloc::format!("location index {} out of range", r.location))
            })?;
            let adjusted = r.forecast - p.mean;
            Ok(AdjustedForecast {
                date: r.date,
                location: r.location,
                forecast: r.forecast,
                predicted_error: p.mean,
                adjusted,
                actual: r.actual,
                raw_error: r.actual.map(|a| r.forecast - a),
                adjusted_error: r.actual.map(|a| adjusted - a),
                predictive_sd: p.sd(),
            })
        })
        .collect()
}

/// Mean and SD of `Y` and `Z` over records with an actual.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AdjustmentSummary {
    pub n: usize,
    pub mean_raw: f64,
    pub sd_raw: f64,
    pub mean_adjusted: f64,
    pub sd_adjusted: f64,
    /// `1 − SD(Z)/SD(Y)`.
    pub sd_reduction: f64,
}

pub fn summarize(records: &[AdjustedForecast]) -> Result<AdjustmentSummary> {
    let (y, z) = errors(records);
    if y.len() < 2 {
        return Err(Error::InsufficientObservations { observed: y.len(), required: 2 });
    }
    let (sd_raw, sd_adjusted) = (stats::std_dev(&y), stats::std_dev(&z));
    Ok(AdjustmentSummary {
        n: y.len(),
        mean_raw: stats::mean(&y),
        sd_raw,
        mean_adjusted: stats::mean(&z),
        sd_adjusted,
        sd_reduction: 1.0 - sd_adjusted / sd_raw,
    })
}

fn errors(records: &[AdjustedForecast]) -> (Vec<f64>, Vec<f64>) {
    records.iter().filter_map(|r| Some((r.raw_error?, r.adjusted_error?))).unzip()
}

/// Histograms of `Y` and `Z` on shared bins spanning both.
pub fn error_histograms(records: &[AdjustedForecast], bins: usize) -> (Histogram, Histogram) {
    let (y, z) = errors(records);
    let lo = y.iter().chain(&z).copied().fold(f64::INFINITY, f64::min);
    let hi = y.iter().chain(&z).copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if lo.is_finite() { (lo.floor(), hi.ceil().max(lo.floor() + 1.0)) } else { (0.0, 1.0) };
    (Histogram::new(&y, lo, hi, bins), Histogram::new(&z, lo, hi, bins))
}
