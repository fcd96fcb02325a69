//! The full fitting pipeline: daily spline surfaces, mean field, spatial
//! basis, coefficient series, per-coefficient GARCH fits, and the prediction
//! state at the end of the sample.

use alloc::vec::Vec;

use crate::coefficients::{project_panel, project_values, BetaSeries, CityDesign};
use crate::garch::{self, FitOptions, GarchFit, GarchParams};
use crate::panel::{Day, Location, ObservationPanel};
use crate::predict::{
    predict_error_field, rolling_predictions, FieldPrediction, PredictionState, PredictionTable,
};
use crate::spatial::{principal_components, SpatialBasis};
use crate::spline::{Domain, TensorSplineBasis};
use crate::surface::{
    centered_day, estimate_mean, fit_day, observed, CoefficientMatrix, DayFit, DaySolver, MeanField, SkippedDay,
    SparseDesign, SurfaceFitOptions,
};
use crate::{Error, Result};

/// Runs independent jobs `0..n`; results are returned in index order.
pub trait Executor {
    fn map<R, F>(&self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send;
}

/// Runs jobs one after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<R, F>(&self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        (0..n).map(f).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModelConfig {
    pub domain: Domain,
    pub n_interior_lon: usize,
    pub n_interior_lat: usize,
    pub surface: SurfaceFitOptions,
    /// Number of spatial basis functions `K`.
    pub k: usize,
    pub garch: FitOptions,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            domain: Domain::CONUS,
            n_interior_lon: 13,
            n_interior_lat: 13,
            surface: SurfaceFitOptions::default(),
            k: 20,
            garch: FitOptions::default(),
        }
    }
}

impl ModelConfig {
    pub fn splines(&self) -> Result<TensorSplineBasis> {
        TensorSplineBasis::uniform(self.domain, self.n_interior_lon, self.n_interior_lat)
    }
}

/// What prediction needs: `μ̂`, `φ_k`, the GARCH parameters, `σ̂²`, the
/// coefficient history and the state after its last day.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub mean: MeanField,
    pub basis: SpatialBasis,
    pub params: Vec<GarchParams>,
    /// `η_1²` of each coefficient series.
    pub initial_scales: Vec<f64>,
    pub noise_variance: f64,
    pub betas: BetaSeries,
    pub state: PredictionState,
}

impl Model {
    pub fn k(&self) -> usize {
        self.basis.k()
    }

    pub fn design(&self, locations: &[Location]) -> Result<CityDesign> {
        CityDesign::new(&self.basis, &self.mean, locations)
    }

    /// Filtered one-step predictions on each of `dates`, each using only the
    /// coefficients of earlier days.
    pub fn filtered_predictions(&self, locations: &[Location], dates: &[Day]) -> Result<PredictionTable> {
        rolling_predictions(
            &self.design(locations)?,
            &self.params,
            &self.initial_scales,
            self.noise_variance,
            &self.betas,
            dates,
        )
    }

    /// Predicted error field on `date`, after the end of the fitted sample.
    pub fn predict(&self, date: Day, locations: &[Location]) -> Result<Vec<FieldPrediction>> {
        let forecasts = self.state.predict(&self.params, date)?;
        predict_error_field(&self.design(locations)?, &forecasts, self.noise_variance)
    }

    /// Project a newly observed day and advance the state to it.
    pub fn observe(&mut self, date: Day, locations: &[Location], values: &[Option<f64>], min_obs: usize) -> Result<()> {
        let p = project_values(&self.design(locations)?, values, min_obs)?;
        self.state.observe(&self.params, date, &p.beta)
    }
}

/// State after running the filter over `betas` from its start-up scales.
pub fn final_state(params: &[GarchParams], initial_scales: &[f64], betas: &BetaSeries) -> Result<PredictionState> {
    let first = betas.dates().first().copied().ok_or(Error::EmptyOutput)?;
    let mut state = PredictionState::start(first, initial_scales)?;
    for (i, &d) in betas.dates().iter().enumerate() {
        state.observe(params, d, &betas.day(i))?;
    }
    Ok(state)
}

/// A fitted model together with by-products of the fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel {
    pub config: ModelConfig,
    pub model: Model,
    pub garch: Vec<GarchFit>,
    /// All singular values of the centered coefficient matrix.
    pub singular_values: Vec<f64>,
    pub surface_skipped: Vec<SkippedDay>,
    pub projection_skipped: Vec<SkippedDay>,
    pub coefficients: CoefficientMatrix,
}

impl FittedModel {
    pub fn fit(panel: &ObservationPanel, config: &ModelConfig) -> Result<Self> {
        Self::fit_with(panel, config, &Sequential)
    }

    pub fn fit_with<E: Executor>(panel: &ObservationPanel, config: &ModelConfig, exec: &E) -> Result<Self> {
        if config.k == 0 {
            return Err(Error::KOutOfRange { k: 0, max: 0 });
        }
        let splines = config.splines()?;
        panel.check_domain(&splines)?;
        let offset = panel.grand_mean().ok_or(Error::EmptyOutput)?;
        let fits = exec.map(panel.n_days(), |t| {
            fit_day(&splines, panel.locations(), &centered_day(panel, t, offset), &config.surface)
        });
        let coefficients = CoefficientMatrix::assemble(panel, offset, fits)?;
        let mean = estimate_mean(&coefficients)?;
        let pcs = principal_components(&coefficients, &mean)?;
        let basis = pcs.spatial_basis(&splines, config.k)?;
        let design = CityDesign::new(&basis, &mean, panel.locations())?;
        let projection = project_panel(&design, panel, config.surface.min_obs_per_day)?;
        let betas = projection.betas.clone();
        let garch = exec.map(config.k, |c| garch::fit(&betas.series(c), &config.garch)).into_iter().collect::<Result<Vec<_>>>()?;
        let params: Vec<GarchParams> = garch.iter().map(|g| g.params).collect();
        let initial_scales: Vec<f64> = garch.iter().map(|g| g.initial_scale).collect();
        let state = final_state(&params, &initial_scales, &betas)?;
        Ok(FittedModel {
            config: config.clone(),
            model: Model {
                mean,
                basis,
                params,
                initial_scales,
                noise_variance: projection.noise_variance(),
                betas,
                state,
            },
            garch,
            singular_values: pcs.singular_values().to_vec(),
            surface_skipped: coefficients.skipped().to_vec(),
            projection_skipped: projection.skipped,
            coefficients,
        })
    }
}

/// Settings of the strict out-of-sample evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WalkForward {
    /// Panel rows used for the first fit; predictions start after them.
    pub min_train: usize,
    /// Rows between refits. Between refits the basis and parameters are kept
    /// and only the filter state advances.
    pub refit_every: usize,
}

impl Default for WalkForward {
    fn default() -> Self {
        WalkForward { min_train: 200, refit_every: 30 }
    }
}

/// Per-day fits of the raw values and of the constant 1, so the fit of the
/// values centered by any offset `o` is `c_y − o c_1`.
struct LinearDayFit {
    values: Vec<f64>,
    ones: Vec<f64>,
    rank: usize,
    n_obs: usize,
}

fn linear_day_fit(
    splines: &TensorSplineBasis,
    locations: &[Location],
    values: &[Option<f64>],
    opts: &SurfaceFitOptions,
) -> Result<LinearDayFit> {
    // same admission rules as the one-shot fit
    let probe = fit_day(splines, locations, &values.iter().map(|v| v.map(|_| 0.0)).collect::<Vec<_>>(), opts)?;
    let (points, y): (Vec<(f64, f64)>, Vec<f64>) = observed(locations, values).map(|(l, v)| ((l.lon, l.lat), v)).unzip();
    let solver = DaySolver::new(SparseDesign::assemble(splines, points)?, opts.svd_rtol);
    let ones = alloc::vec![1.0; y.len()];
    Ok(LinearDayFit { values: solver.solve(&y), ones: solver.solve(&ones), rank: solver.rank(), n_obs: probe.n_obs })
}

/// Out-of-sample one-step predictions for panel rows from `min_train` on.
///
/// Every refit uses only rows before the refit point: grand mean, mean field,
/// spatial basis, coefficient series and GARCH parameters are all re-estimated.
pub fn walk_forward<E: Executor>(
    panel: &ObservationPanel,
    config: &ModelConfig,
    wf: &WalkForward,
    exec: &E,
) -> Result<PredictionTable> {
    if wf.refit_every == 0 || wf.min_train == 0 || wf.min_train >= panel.n_days() {
        return Err(Error::InvalidArgument("walk-forward needs 0 < min_train < n_days and refit_every > 0".into()));
    }
    let splines = config.splines()?;
    panel.check_domain(&splines)?;
    let locations = panel.locations();
    let day_fits: Vec<Result<LinearDayFit>> =
        exec.map(panel.n_days(), |t| linear_day_fit(&splines, locations, panel.day(t), &config.surface));

    let mut table = PredictionTable::new(panel.n_cities());
    let mut start = wf.min_train;
    while start < panel.n_days() {
        let train = panel.head(start);
        let offset = train.grand_mean().ok_or(Error::EmptyOutput)?;
        let fits: Vec<Result<DayFit>> = day_fits[..start]
            .iter()
            .map(|f| match f {
                Ok(f) => Ok(DayFit {
                    coeffs: f.values.iter().zip(&f.ones).map(|(v, o)| v - offset * o).collect(),
                    rank: f.rank,
                    residual_norm: f64::NAN,
                    n_obs: f.n_obs,
                }),
                Err(e) => Err(e.clone()),
            })
            .collect();
        let coefficients = CoefficientMatrix::assemble(&train, offset, fits)?;
        let mean = estimate_mean(&coefficients)?;
        let basis = principal_components(&coefficients, &mean)?.spatial_basis(&splines, config.k)?;
        let design = CityDesign::new(&basis, &mean, locations)?;
        let projection = project_panel(&design, &train, config.surface.min_obs_per_day)?;
        let betas = projection.betas;
        let garch = exec
            .map(config.k, |c| garch::fit(&betas.series(c), &config.garch))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        let params: Vec<GarchParams> = garch.iter().map(|g| g.params).collect();
        let initial: Vec<f64> = garch.iter().map(|g| g.initial_scale).collect();
        let noise_variance = {
            let r: Vec<f64> = projection.residuals.as_slice().iter().flatten().copied().collect();
            crate::stats::variance(&r)
        };
        let mut state = final_state(&params, &initial, &betas)?;

        let end = (start + wf.refit_every).min(panel.n_days());
        for t in start..end {
            let date = panel.dates()[t];
            let forecasts = state.predict(&params, date)?;
            table.push(date, predict_error_field(&design, &forecasts, noise_variance)?)?;
            if let Ok(p) = project_values(&design, panel.day(t), config.surface.min_obs_per_day) {
                state.observe(&params, date, &p.beta)?;
            }
        }
        start = end;
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::{scatter_locations, simulate_panel, Loadings, SimulationConfig};
    use alloc::vec;

    fn small_panel(n_days: usize) -> ObservationPanel {
        let region = Domain { lon_min: -120.0, lon_max: -70.0, lat_min: 27.0, lat_max: 47.0 };
        let cfg = SimulationConfig {
            splines: TensorSplineBasis::conus(),
            loadings: Loadings::RandomOrthonormal,
            params: vec![GarchParams::new(0.8, 2.0, 0.1, 0.8, 8.0), GarchParams::new(0.7, 1.0, 0.05, 0.9, 6.0)],
            sigma: 0.5,
            mean_offset: -1.0,
            mean_surface_sd: 0.5,
            locations: scatter_locations(30, region, 3.0, 2).unwrap(),
            n_days,
            start: Day(0),
            horizon: 6,
            missing_rate: 0.05,
            seed: 5,
        };
        simulate_panel(&cfg).unwrap().panel
    }

    fn config(k: usize) -> ModelConfig {
        ModelConfig { k, ..ModelConfig::default() }
    }

    #[test]
    fn pipeline_fits_and_predicts() {
        let panel = small_panel(150);
        let fitted = FittedModel::fit(&panel, &config(2)).unwrap();
        let m = &fitted.model;
        assert_eq!(m.k(), 2);
        assert_eq!(m.betas.len(), 150);
        assert_eq!(m.state.date(), Day(149));
        let field = m.predict(Day(150), panel.locations()).unwrap();
        assert!(field.iter().all(|f| f.variance >= m.noise_variance));
        assert!(m.predict(Day(149), panel.locations()).is_err());
        let table = m.filtered_predictions(panel.locations(), panel.dates()).unwrap();
        assert_eq!(table.len(), 150);
    }

    #[test]
    fn k_larger_than_day_count_is_rejected() {
        let panel = small_panel(40).head(5);
        assert!(matches!(FittedModel::fit(&panel, &config(8)), Err(Error::KOutOfRange { .. })));
    }

    #[test]
    fn observing_a_new_day_advances_state() {
        let panel = small_panel(120);
        let mut m = FittedModel::fit(&panel.head(100), &config(2)).unwrap().model;
        m.observe(panel.dates()[100], panel.locations(), panel.day(100), 10).unwrap();
        assert_eq!(m.state.date(), panel.dates()[100]);
    }

    #[test]
    fn walk_forward_never_looks_ahead() {
        let panel = small_panel(130);
        let wf = WalkForward { min_train: 100, refit_every: 15 };
        let table = walk_forward(&panel, &config(2), &wf, &Sequential).unwrap();
        assert_eq!(table.len(), 30);
        assert_eq!(table.dates()[0], panel.dates()[100]);
        // truncating the future changes nothing already predicted
        let shorter = walk_forward(&panel.head(120), &config(2), &wf, &Sequential).unwrap();
        for (d, f) in shorter.iter() {
            assert_eq!(table.field(d).unwrap(), f);
        }
    }
}
