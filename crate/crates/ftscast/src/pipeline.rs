//! The stages behind each subcommand.

use ftscast_core::coefficients::{project_values, BetaSeries, CityDesign};
use ftscast_core::diagnostics::{masked_sum_of_squares, residual_correlation, spatial_correlation, SpatialCorrelation};
use ftscast_core::garch::acf;
use ftscast_core::model::{walk_forward, Executor, FittedModel};
use ftscast_core::predict::{
    adjust_forecasts, error_histograms, summarize, AdjustedForecast, AdjustmentSummary, FieldPrediction,
    PredictionTable, RawForecast,
};
use ftscast_core::simulate::{simulate_panel, SimulatedPanel};
use ftscast_core::spatial::{principal_components, BasisGrid};
use ftscast_core::stats::Histogram;
use ftscast_core::surface::{centered_day, estimate_mean, fit_day, CoefficientMatrix};
use ftscast_core::{Day, Error as ModelError, Location, ObservationPanel};
use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::artifact::Artifact;
use crate::config::{Mode, PipelineConfig};
use crate::error::Result;
use crate::table::ForecastTable;

/// Runs jobs on the rayon thread pool. Results keep index order, so output
/// does not depend on the number of threads.
#[derive(Debug, Clone, Copy, Default)]
pub struct Rayon;

impl Executor for Rayon {
    fn map<R, F>(&self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        (0..n).into_par_iter().map(f).collect()
    }
}

pub fn fit(config: &PipelineConfig, panel: &ObservationPanel) -> Result<Artifact> {
    let fitted = FittedModel::fit_with(panel, &config.model_config(), &Rayon)?;
    Ok(Artifact::new(config, panel, &fitted))
}

/// Fitted coefficients followed by projections of the table's later days,
/// so filtered predictions can run past the end of the fitted sample.
fn extended_betas(artifact: &Artifact, design: &CityDesign, panel: &ObservationPanel) -> Result<BetaSeries> {
    let model = &artifact.model;
    let b = &model.betas;
    let last = b.dates().last().copied();
    let min_obs = artifact.config.surface.min_obs_per_day as usize;
    let mut dates = b.dates().to_vec();
    let mut rows = b.panel_rows().to_vec();
    let mut norms = b.residual_norms().to_vec();
    let mut values: Vec<Vec<f64>> = (0..b.len()).map(|i| b.day(i)).collect();
    for (t, &d) in panel.dates().iter().enumerate() {
        if last.is_some_and(|l| d <= l) {
            continue;
        }
        if let Ok(p) = project_values(design, panel.day(t), min_obs) {
            dates.push(d);
            rows.push(t);
            norms.push(p.residual_norm);
            values.push(p.beta);
        }
    }
    let k = model.k();
    let m = DMatrix::from_fn(values.len(), k, |i, c| values[i][c]);
    Ok(BetaSeries::new(dates, rows, m, norms)?)
}

/// One-step predictions on every day of `table`, using only earlier days.
pub fn filtered_predictions(artifact: &Artifact, table: &ForecastTable) -> Result<PredictionTable> {
    let model = &artifact.model;
    let design = model.design(table.panel.locations())?;
    let betas = extended_betas(artifact, &design, &table.panel)?;
    Ok(ftscast_core::predict::rolling_predictions(
        &design,
        &model.params,
        &model.initial_scales,
        model.noise_variance,
        &betas,
        table.panel.dates(),
    )?)
}

pub fn walk_forward_predictions(config: &PipelineConfig, table: &ForecastTable) -> Result<PredictionTable> {
    Ok(walk_forward(&table.panel, &config.model_config(), &config.walk_forward(), &Rayon)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adjustment {
    pub mode: Mode,
    pub records: Vec<AdjustedForecast>,
    pub summary: AdjustmentSummary,
    pub histograms: (Histogram, Histogram),
}

pub const HISTOGRAM_BINS: usize = 60;

/// Adjust every forecast in `table` that has a prediction.
pub fn adjust(predictions: &PredictionTable, table: &ForecastTable, mode: Mode) -> Result<Adjustment> {
    let mut raw = Vec::new();
    for (t, &d) in table.panel.dates().iter().enumerate() {
        if predictions.field(d).is_none() {
            continue;
        }
        for c in 0..table.panel.n_cities() {
            if let Some(forecast) = table.forecasts.get(t, c) {
                raw.push(RawForecast { date: d, location: c, forecast, actual: table.actuals.get(t, c) });
            }
        }
    }
    let records = adjust_forecasts(predictions, &raw)?;
    let summary = summarize(&records)?;
    let histograms = error_histograms(&records, HISTOGRAM_BINS);
    Ok(Adjustment { mode, records, summary, histograms })
}

/// Before/after correlation structure and the Frobenius curve.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnosis {
    pub locations: Vec<Location>,
    pub before: SpatialCorrelation,
    pub after: SpatialCorrelation,
    /// `K` used for `after`.
    pub k: usize,
    pub frobenius: Vec<(usize, f64)>,
    /// Per coefficient `(lag, acf of u/η, acf of (u/η)², band)`, when a model is given.
    pub acf: Vec<Vec<(usize, f64, f64, f64)>>,
}

pub const ACF_LAGS: usize = 20;

fn panel_design(config: &PipelineConfig, panel: &ObservationPanel) -> Result<(CityDesign, usize)> {
    let mc = config.model_config();
    let splines = mc.splines()?;
    panel.check_domain(&splines)?;
    let offset = panel.grand_mean().ok_or(ModelError::EmptyOutput)?;
    let fits = Rayon.map(panel.n_days(), |t| fit_day(&splines, panel.locations(), &centered_day(panel, t, offset), &mc.surface));
    let coefficients = CoefficientMatrix::assemble(panel, offset, fits)?;
    let mean = estimate_mean(&coefficients)?;
    let pcs = principal_components(&coefficients, &mean)?;
    let k_max = (config.diagnostics.k_max as usize).max(config.k as usize).min(pcs.n_components());
    let basis = pcs.spatial_basis(&splines, k_max)?;
    Ok((CityDesign::new(&basis, &mean, panel.locations())?, (config.k as usize).min(k_max)))
}

/// With a model the basis is the model's and the curve runs to its `K`;
/// otherwise a basis is fitted to `panel` up to `diagnostics.k_max`.
pub fn diagnose(config: &PipelineConfig, panel: &ObservationPanel, artifact: Option<&Artifact>) -> Result<Diagnosis> {
    let opts = config.residual_options();
    let (design, k) = match artifact {
        Some(a) => (a.model.design(panel.locations())?, a.model.k()),
        None => panel_design(config, panel)?,
    };
    let before = spatial_correlation(panel.errors(), panel.locations(), opts.mode, opts.min_pair_days)?;
    let k_values: Vec<usize> = (0..=design.k()).collect();
    let after_all = Rayon.map(k_values.len(), |i| residual_correlation(&design, panel, k_values[i], &opts));
    let mut frobenius = Vec::with_capacity(k_values.len());
    let mut after = None;
    for (kv, a) in k_values.iter().zip(after_all) {
        let a = a?;
        frobenius.push((*kv, masked_sum_of_squares(&before, &a)));
        if *kv == k {
            after = Some(a);
        }
    }
    let acf_rows = match artifact {
        Some(a) => a
            .filtered
            .iter()
            .map(|f| {
                let z = f.standardized();
                let z2: Vec<f64> = z.iter().map(|v| v * v).collect();
                match (acf(&z, ACF_LAGS), acf(&z2, ACF_LAGS)) {
                    (Ok(a1), Ok(a2)) => (1..=ACF_LAGS).map(|l| (l, a1.values[l - 1], a2.values[l - 1], a1.band)).collect(),
                    _ => Vec::new(),
                }
            })
            .collect(),
        None => Vec::new(),
    };
    Ok(Diagnosis {
        locations: panel.locations().to_vec(),
        before,
        after: after.expect("k within curve"),
        k,
        frobenius,
        acf: acf_rows,
    })
}

/// Predicted error field on `date` at `locations`, after first observing
/// any days of `observed` that fall between the model's last day and `date`.
pub fn predict(
    artifact: &Artifact,
    date: Day,
    locations: &[Location],
    observed: Option<&ForecastTable>,
) -> Result<Vec<FieldPrediction>> {
    let mut model = artifact.model.clone();
    if let Some(table) = observed {
        let min_obs = artifact.config.surface.min_obs_per_day as usize;
        for (t, &d) in table.panel.dates().iter().enumerate() {
            if d > model.state.date() && d < date {
                // days too sparse to project are bridged by the gap rule
                match model.observe(d, table.panel.locations(), table.panel.day(t), min_obs) {
                    Ok(()) | Err(ModelError::InsufficientObservations { .. }) | Err(ModelError::RankDeficientDesign { .. }) => {}
                    Err(e) => return Err(e.into()),
                }
            }
        }
    }
    Ok(model.predict(date, locations)?)
}

pub fn simulate(config: &PipelineConfig) -> Result<SimulatedPanel> {
    Ok(simulate_panel(&config.simulation_config()?)?)
}

/// Grids of the mean surface (index 0) and each requested `φ_k`.
pub fn basis_grids(artifact: &Artifact, ks: &[usize], n_lon: usize, n_lat: usize) -> Result<Vec<(usize, BasisGrid)>> {
    let m = &artifact.model;
    let splines = m.basis.splines();
    let mut out = vec![(0, BasisGrid::evaluate(splines, n_lon, n_lat, |row| m.mean.eval_row(row))?)];
    for &k in ks {
        out.push((k, m.basis.grid(k, n_lon, n_lat)?));
    }
    Ok(out)
}
