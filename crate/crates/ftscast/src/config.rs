//! Pipeline configuration, read from TOML.
//!
//! Every section is optional and falls back to the defaults below; unknown
//! keys are errors. Counts are read as signed integers so a negative value
//! is reported as such rather than as a type error.
//!
//! ```toml
//! horizon = 6
//! k = 20
//! mode = "filtered"          # or "walkforward"
//!
//! [domain]
//! lon_min = -124.0
//! lon_max = -66.0
//! lat_min = 24.0
//! lat_max = 49.0
//!
//! [splines]
//! n_interior_lon = 13
//! n_interior_lat = 13
//!
//! [surface]
//! svd_rtol = 1e-8
//! min_obs_per_day = 10
//!
//! [garch]
//! extra_starts = 0
//! seed = 0
//! nelder_mead_iters = 400
//! bfgs_iters = 300
//!
//! [walk_forward]
//! min_train = 200
//! refit_every = 30
//!
//! [diagnostics]
//! completeness = "pairwise"  # or "global"
//! min_pair_days = 30
//! k_max = 30
//!
//! [ingest]
//! on_malformed = "skip"      # or "fail"
//!
//! [paths]
//! data = "errors.csv"
//! out = "model"
//! ```

use std::path::{Path, PathBuf};

use ftscast_core::diagnostics::{Completeness, ResidualOptions};
use ftscast_core::garch::{FitOptions, GarchParams};
use ftscast_core::model::{ModelConfig, WalkForward};
use ftscast_core::simulate::{scatter_locations, Loadings, SimulationConfig};
use ftscast_core::spline::Domain;
use ftscast_core::surface::SurfaceFitOptions;
use ftscast_core::TensorSplineBasis;
use serde::{Deserialize, Serialize};

use crate::dates;
use crate::error::{Error, Result};
use crate::table::{OnMalformed, MAX_HORIZON};

/// Upper limit on interior knots per axis.
pub const MAX_INTERIOR_KNOTS: i64 = 60;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// One fit on the whole panel; day `t` is predicted from days before `t`.
    #[default]
    Filtered,
    /// Periodic refits that only ever see earlier days.
    Walkforward,
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "filtered" => Ok(Mode::Filtered),
            "walkforward" | "walk-forward" => Ok(Mode::Walkforward),
            _ => Err(format!("unknown mode `{s}`, expected filtered or walkforward")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rect {
    pub lon_min: f64,
    pub lon_max: f64,
    pub lat_min: f64,
    pub lat_max: f64,
}

impl Default for Rect {
    fn default() -> Self {
        Rect::from(Domain::CONUS)
    }
}

impl From<Domain> for Rect {
    fn from(d: Domain) -> Self {
        Rect { lon_min: d.lon_min, lon_max: d.lon_max, lat_min: d.lat_min, lat_max: d.lat_max }
    }
}

impl From<Rect> for Domain {
    fn from(r: Rect) -> Self {
        Domain { lon_min: r.lon_min, lon_max: r.lon_max, lat_min: r.lat_min, lat_max: r.lat_max }
    }
}

impl Rect {
    fn validate(&self, what: &str) -> Result<()> {
        let finite = [self.lon_min, self.lon_max, self.lat_min, self.lat_max].iter().all(|v| v.is_finite());
        let ok = finite
            && -180.0 <= self.lon_min
            && self.lon_min < self.lon_max
            && self.lon_max <= 180.0
            && -90.0 <= self.lat_min
            && self.lat_min < self.lat_max
            && self.lat_max <= 90.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("{what}: need -180 <= lon_min < lon_max <= 180 and -90 <= lat_min < lat_max <= 90")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Splines {
    pub n_interior_lon: i64,
    pub n_interior_lat: i64,
}

impl Default for Splines {
    fn default() -> Self {
        Splines { n_interior_lon: 13, n_interior_lat: 13 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Surface {
    pub svd_rtol: f64,
    pub min_obs_per_day: i64,
}

impl Default for Surface {
    fn default() -> Self {
        Surface { svd_rtol: 1e-8, min_obs_per_day: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Garch {
    pub extra_starts: i64,
    pub seed: u64,
    pub nelder_mead_iters: i64,
    pub bfgs_iters: i64,
}

impl Default for Garch {
    fn default() -> Self {
        let d = FitOptions::default();
        Garch {
            extra_starts: d.extra_starts as i64,
            seed: d.seed,
            nelder_mead_iters: d.nelder_mead_iters as i64,
            bfgs_iters: d.bfgs_iters as i64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WalkForwardSection {
    pub min_train: i64,
    pub refit_every: i64,
}

impl Default for WalkForwardSection {
    fn default() -> Self {
        let d = WalkForward::default();
        WalkForwardSection { min_train: d.min_train as i64, refit_every: d.refit_every as i64 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Diagnostics {
    pub completeness: Completeness,
    pub min_pair_days: i64,
    /// Largest `K` on the Frobenius curve when diagnosing a raw panel.
    pub k_max: i64,
}

impl Default for Diagnostics {
    fn default() -> Self {
        Diagnostics { completeness: Completeness::Pairwise, min_pair_days: 30, k_max: 30 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Ingest {
    pub on_malformed: OnMalformed,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub data: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

/// AR(1)+GARCH(1,1)-t parameters of one simulated factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Factor {
    pub psi: f64,
    pub omega: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub nu: f64,
}

impl From<Factor> for GarchParams {
    fn from(f: Factor) -> Self {
        GarchParams::new(f.psi, f.omega, f.alpha, f.gamma, f.nu)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LoadingKind {
    /// Orthonormalised Gaussian coefficient vectors.
    #[default]
    Random,
    /// Orthonormalised low-frequency surfaces.
    Smooth,
}

/// Settings of the `simulate` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Simulation {
    pub n_cities: i64,
    /// Rectangle the cities are drawn from; must lie inside `domain`.
    pub region: Rect,
    /// Minimum distance between cities, degrees.
    pub min_separation: f64,
    /// Seed of the city layout, separate so the layout can stay fixed.
    pub city_seed: u64,
    pub n_days: i64,
    pub start_date: String,
    pub loadings: LoadingKind,
    /// Noise SD, °F.
    pub sigma: f64,
    /// Constant part of the mean error, °F.
    pub mean_offset: f64,
    /// SD of the spline coefficients of the mean surface.
    pub mean_surface_sd: f64,
    pub missing_rate: f64,
    pub seed: u64,
    /// One entry per planted factor.
    pub factors: Vec<Factor>,
}

impl Default for Simulation {
    fn default() -> Self {
        let factor = |k: usize, psi: f64| Factor { psi, omega: 36.0 * (1.0 - 0.1 * k as f64), alpha: 0.09, gamma: 0.85, nu: 8.33 };
        Simulation {
            n_cities: 111,
            region: Rect { lon_min: -122.0, lon_max: -70.0, lat_min: 26.0, lat_max: 48.0 },
            min_separation: 1.5,
            city_seed: 11,
            n_days: 1000,
            start_date: "2012-01-01".into(),
            loadings: LoadingKind::Random,
            sigma: 0.5,
            mean_offset: -1.0,
            mean_surface_sd: 1.0,
            missing_rate: 0.05,
            seed: 2024,
            factors: [0.9, 0.8, 0.7, 0.65, 0.6].iter().enumerate().map(|(k, &p)| factor(k, p)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub horizon: i64,
    pub k: i64,
    pub mode: Mode,
    pub domain: Rect,
    pub splines: Splines,
    pub surface: Surface,
    pub garch: Garch,
    pub walk_forward: WalkForwardSection,
    pub diagnostics: Diagnostics,
    pub ingest: Ingest,
    pub paths: Paths,
    pub simulation: Simulation,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            horizon: 6,
            k: 20,
            mode: Mode::Filtered,
            domain: Rect::default(),
            splines: Splines::default(),
            surface: Surface::default(),
            garch: Garch::default(),
            walk_forward: WalkForwardSection::default(),
            diagnostics: Diagnostics::default(),
            ingest: Ingest::default(),
            paths: Paths::default(),
            simulation: Simulation::default(),
        }
    }
}

fn count(field: &'static str, value: i64, min: i64, max: i64) -> Result<usize> {
    if value < 0 {
        return Err(Error::NegativeCount { field, value });
    }
    if value < min || value > max {
        return Err(Error::Config(format!("{field} = {value} outside {min}..={max}")));
    }
    Ok(value as usize)
}

impl PipelineConfig {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|source| Error::Toml { path: path.into(), source })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
        Self::from_toml(&text, path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Check every field against its documented range.
    pub fn validate(&self) -> Result<()> {
        if !(0..=MAX_HORIZON).contains(&self.horizon) {
            return Err(Error::UnknownHorizon(self.horizon));
        }
        self.domain.validate("domain")?;
        let n_lon = count("splines.n_interior_lon", self.splines.n_interior_lon, 0, MAX_INTERIOR_KNOTS)?;
        let n_lat = count("splines.n_interior_lat", self.splines.n_interior_lat, 0, MAX_INTERIOR_KNOTS)?;
        let n_basis = ((n_lon + 4) * (n_lat + 4)) as i64;
        count("k", self.k, 1, n_basis)?;
        if !(self.surface.svd_rtol > 0.0 && self.surface.svd_rtol < 1.0) {
            return Err(Error::Config(format!("surface.svd_rtol = {} outside (0, 1)", self.surface.svd_rtol)));
        }
        count("surface.min_obs_per_day", self.surface.min_obs_per_day, 1, i64::MAX)?;
        count("garch.extra_starts", self.garch.extra_starts, 0, 1000)?;
        count("garch.nelder_mead_iters", self.garch.nelder_mead_iters, 1, 1_000_000)?;
        count("garch.bfgs_iters", self.garch.bfgs_iters, 0, 1_000_000)?;
        count("walk_forward.min_train", self.walk_forward.min_train, 20, i64::MAX)?;
        count("walk_forward.refit_every", self.walk_forward.refit_every, 1, i64::MAX)?;
        count("diagnostics.min_pair_days", self.diagnostics.min_pair_days, 3, i64::MAX)?;
        count("diagnostics.k_max", self.diagnostics.k_max, 1, n_basis)?;
        self.validate_simulation()
    }

    fn validate_simulation(&self) -> Result<()> {
        let s = &self.simulation;
        count("simulation.n_cities", s.n_cities, 1, 100_000)?;
        count("simulation.n_days", s.n_days, 1, 10_000_000)?;
        s.region.validate("simulation.region")?;
        let d = self.domain;
        if s.region.lon_min < d.lon_min || s.region.lon_max > d.lon_max || s.region.lat_min < d.lat_min || s.region.lat_max > d.lat_max {
            return Err(Error::Config("simulation.region must lie inside domain".into()));
        }
        if dates::parse(&s.start_date).is_none() {
            return Err(Error::Config(format!("simulation.start_date `{}` is not YYYY-MM-DD", s.start_date)));
        }
        let nonneg = [("min_separation", s.min_separation), ("sigma", s.sigma), ("mean_surface_sd", s.mean_surface_sd)];
        if let Some((name, v)) = nonneg.iter().find(|(_, v)| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Config(format!("simulation.{name} = {v} must be finite and >= 0")));
        }
        if !s.mean_offset.is_finite() {
            return Err(Error::Config("simulation.mean_offset must be finite".into()));
        }
        if !(0.0..1.0).contains(&s.missing_rate) {
            return Err(Error::Config(format!("simulation.missing_rate = {} outside [0, 1)", s.missing_rate)));
        }
        if s.factors.is_empty() {
            return Err(Error::Config("simulation.factors is empty".into()));
        }
        for (i, f) in s.factors.iter().enumerate() {
            GarchParams::from(*f)
                .validate()
                .map_err(|e| Error::Config(format!("simulation.factors[{i}]: {e}")))?;
        }
        Ok(())
    }

    pub fn horizon(&self) -> u8 {
        self.horizon as u8
    }

    pub fn model_config(&self) -> ModelConfig {
        ModelConfig {
            domain: self.domain.into(),
            n_interior_lon: self.splines.n_interior_lon as usize,
            n_interior_lat: self.splines.n_interior_lat as usize,
            surface: SurfaceFitOptions {
                svd_rtol: self.surface.svd_rtol,
                min_obs_per_day: self.surface.min_obs_per_day as usize,
            },
            k: self.k as usize,
            garch: FitOptions {
                extra_starts: self.garch.extra_starts as usize,
                seed: self.garch.seed,
                nelder_mead_iters: self.garch.nelder_mead_iters as usize,
                bfgs_iters: self.garch.bfgs_iters as usize,
            },
        }
    }

    pub fn walk_forward(&self) -> WalkForward {
        WalkForward {
            min_train: self.walk_forward.min_train as usize,
            refit_every: self.walk_forward.refit_every as usize,
        }
    }

    pub fn residual_options(&self) -> ResidualOptions {
        ResidualOptions {
            min_obs_per_day: self.surface.min_obs_per_day as usize,
            mode: self.diagnostics.completeness,
            min_pair_days: self.diagnostics.min_pair_days as usize,
        }
    }

    pub fn simulation_config(&self) -> Result<SimulationConfig> {
        let s = &self.simulation;
        let splines = self.model_config().splines()?;
        let locations = scatter_locations(s.n_cities as usize, s.region.into(), s.min_separation, s.city_seed)?;
        let loadings = match s.loadings {
            LoadingKind::Random => Loadings::RandomOrthonormal,
            LoadingKind::Smooth => Loadings::Planted(ftscast_core::simulate::smooth_loadings(&splines, s.factors.len(), s.seed)),
        };
        Ok(SimulationConfig {
            splines: TensorSplineBasis::clone(&splines),
            loadings,
            params: s.factors.iter().map(|&f| f.into()).collect(),
            sigma: s.sigma,
            mean_offset: s.mean_offset,
            mean_surface_sd: s.mean_surface_sd,
            locations,
            n_days: s.n_days as usize,
            start: dates::parse(&s.start_date).expect("validated"),
            horizon: self.horizon(),
            missing_rate: s.missing_rate,
            seed: s.seed,
        })
    }
}
