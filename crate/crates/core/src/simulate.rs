//! Synthetic panels from the full generative model
//!
//! ```text
//! Y_t(τ) = μ(τ) + Σ_k β_kt φ_k(τ) + ε_t(τ),   ε ~ N(0, σ²) i.i.d.
//! ```
//!
//! with each `β_k` an AR(1)+GARCH(1,1)-t path. Coefficient paths, noise and
//! masking, and the planted surfaces draw from separate ChaCha streams of the
//! same seed, so changing `σ` or the missing rate leaves `β` untouched.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::garch::{self, GarchParams};
use crate::panel::{Day, Location, MaskedMatrix, ObservationPanel};
use crate::spline::{Domain, TensorSplineBasis};
use crate::{Error, Result};

const BETA_STREAM: u64 = 0;
const NOISE_STREAM: u64 = 1;
const SURFACE_STREAM: u64 = 2;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub enum Loadings {
    /// Orthonormalised Gaussian matrix drawn from the seed.
    RandomOrthonormal,
    /// `n_basis × K`, columns orthonormal.
    Planted(DMatrix<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub splines: TensorSplineBasis,
    pub loadings: Loadings,
    /// One entry per planted factor.
    pub params: Vec<GarchParams>,
    /// Noise SD `σ` in °F.
    pub sigma: f64,
    /// Constant part of `μ`.
    pub mean_offset: f64,
    /// SD of the random spline coefficients added to the mean surface.
    pub mean_surface_sd: f64,
    pub locations: Vec<Location>,
    pub n_days: usize,
    pub start: Day,
    pub horizon: u8,
    pub missing_rate: f64,
    pub seed: u64,
}

impl SimulationConfig {
    pub fn k_true(&self) -> usize {
        self.params.len()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidArgument("sigma must be finite and nonnegative".into()));
        }
        if !(0.0..1.0).contains(&self.missing_rate) {
            return Err(Error::InvalidArgument("missing rate must be in [0, 1)".into()));
        }
        if self.n_days == 0 {
            return Err(Error::InvalidArgument("need at least one day".into()));
        }
        if self.locations.is_empty() {
            return Err(Error::InvalidArgument("need at least one location".into()));
        }
        if !(self.mean_surface_sd >= 0.0) || !self.mean_offset.is_finite() {
            return Err(Error::InvalidArgument("mean surface parameters must be finite".into()));
        }
        for p in &self.params {
            p.validate()?;
        }
        for l in &self.locations {
            self.splines.eval(l.lon, l.lat)?;
        }
        if let Loadings::Planted(l) = &self.loadings {
            let n = self.splines.n_basis();
            if l.nrows() != n || l.ncols() != self.k_true() {
                return Err(Error::DimensionMismatch { expected: n * self.k_true(), found: l.nrows() * l.ncols() });
            }
            let gram = l.transpose() * l;
            if (gram - DMatrix::identity(l.ncols(), l.ncols())).amax() > 1e-8 {
                return Err(Error::InvalidArgument("planted loadings must be orthonormal".into()));
            }
        }
        Ok(())
    }
}

/// Everything the panel was generated from.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTruth {
    /// `n_days × K`, indexed like the panel rows.
    pub betas: DMatrix<f64>,
    /// `n_basis × K`.
    pub loadings: DMatrix<f64>,
    /// Spline coefficients of `μ − mean_offset`.
    pub mean_coeffs: Vec<f64>,
    pub mean_offset: f64,
    /// `μ(τ_i)`.
    pub mu: Vec<f64>,
    /// `φ_k(τ_i)`, `n_cities × K`.
    pub phi: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedPanel {
    /// Errors `F − A`.
    pub panel: ObservationPanel,
    pub forecasts: MaskedMatrix,
    pub actuals: MaskedMatrix,
    pub truth: SimulationTruth,
}

fn orthonormal_columns(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng));
    g.qr().q()
}

/// Integer "climatology" for day `t` at latitude `lat`.
fn climatology(t: i32, lat: f64) -> f64 {
    let season = (2.0 * core::f64::consts::PI * t as f64 / 365.25).sin();
    (70.0 - 1.2 * (lat - 37.0) + 18.0 * season).round()
}

pub fn simulate_panel(config: &SimulationConfig) -> Result<SimulatedPanel> {
    config.validate()?;
    let (n_days, n_cities, k) = (config.n_days, config.locations.len(), config.k_true());
    let n_basis = config.splines.n_basis();

    let mut surface_rng = stream(config.seed, SURFACE_STREAM);
    let loadings = match &config.loadings {
        Loadings::Planted(l) => l.clone(),
        Loadings::RandomOrthonormal => orthonormal_columns(n_basis, k, &mut surface_rng),
    };
    let mean_coeffs: Vec<f64> = (0..n_basis)
        .map(|_| config.mean_surface_sd * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut surface_rng))
        .collect();

    let mut beta_rng = stream(config.seed, BETA_STREAM);
    let mut betas = DMatrix::zeros(n_days, k);
    for (c, p) in config.params.iter().enumerate() {
        let path = garch::simulate_with_rng(p, n_days, &mut beta_rng)?;
        betas.column_mut(c).copy_from_slice(&path.series);
    }

    let mut mu = Vec::with_capacity(n_cities);
    let mut phi = DMatrix::zeros(n_cities, k);
    for (i, loc) in config.locations.iter().enumerate() {
        let row = config.splines.eval(loc.lon, loc.lat)?;
        mu.push(config.mean_offset + row.dot(&mean_coeffs));
        for c in 0..k {
            phi[(i, c)] = row.iter().map(|(j, v)| v * loadings[(j, c)]).sum();
        }
    }

    let noise = Normal::new(0.0, config.sigma).map_err(|_| Error::InvalidArgument("sigma".into()))?;
    let mut noise_rng = stream(config.seed, NOISE_STREAM);
    let dates: Vec<Day> = (0..n_days as i32).map(|t| Day(config.start.0 + t)).collect();
    let mut forecasts = MaskedMatrix::missing(n_days, n_cities);
    let mut actuals = MaskedMatrix::missing(n_days, n_cities);
    let mut errors = MaskedMatrix::missing(n_days, n_cities);
    for t in 0..n_days {
        for i in 0..n_cities {
            let eps = noise.sample(&mut noise_rng);
            let masked = noise_rng.random::<f64>() < config.missing_rate;
            if masked {
                continue;
            }
            let y = mu[i] + (0..k).map(|c| betas[(t, c)] * phi[(i, c)]).sum::<f64>() + eps;
            let a = climatology(dates[t].0, config.locations[i].lat);
            let f = a + y;
            forecasts.set(t, i, Some(f));
            actuals.set(t, i, Some(a));
            errors.set(t, i, Some(f - a));
        }
    }
    let panel = ObservationPanel::new(config.horizon, dates, config.locations.clone(), errors)?;
    Ok(SimulatedPanel {
        panel,
        forecasts,
        actuals,
        truth: SimulationTruth { betas, loadings, mean_coeffs, mean_offset: config.mean_offset, mu, phi },
    })
}

/// `k` orthonormal loading vectors describing smooth, large-scale surfaces:
/// random low-frequency cosine patterns sampled at the spline Greville
/// points, then orthonormalised.
pub fn smooth_loadings(splines: &TensorSplineBasis, k: usize, seed: u64) -> DMatrix<f64> {
    let greville = |knots: &[f64], i: usize| (knots[i + 1] + knots[i + 2] + knots[i + 3]) / 3.0;
    let (lon, lat) = (splines.lon_knots(), splines.lat_knots());
    let (n_lon, n_lat) = (lon.n_basis(), lat.n_basis());
    let mut rng = stream(seed, SURFACE_STREAM);
    const FREQ: usize = 3;
    let mut raw = DMatrix::zeros(splines.n_basis(), k);
    for c in 0..k {
        let w: Vec<f64> = (0..FREQ * FREQ).map(|_| StandardNormal.sample(&mut rng)).collect();
        for i_lon in 0..n_lon {
            let x = (greville(lon.knots(), i_lon) - lon.min()) / (lon.max() - lon.min());
            for i_lat in 0..n_lat {
                let y = (greville(lat.knots(), i_lat) - lat.min()) / (lat.max() - lat.min());
                let mut v = 0.0;
                for a in 0..FREQ {
                    for b in 0..FREQ {
                        v += w[a * FREQ + b]
                            * (core::f64::consts::PI * a as f64 * x).cos()
                            * (core::f64::consts::PI * b as f64 * y).cos();
                    }
                }
                raw[(splines.flat_index(i_lon, i_lat), c)] = v;
            }
        }
    }
    raw.qr().q()
}

/// `n` locations uniformly inside `region`, at least `min_separation` degrees
/// apart, named `C001`, `C002`, ...
pub fn scatter_locations(n: usize, region: Domain, min_separation: f64, seed: u64) -> Result<Vec<Location>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<Location> = Vec::with_capacity(n);
    let mut attempts = 0usize;
    while out.len() < n {
        attempts += 1;
        if attempts > 1000 * (n + 1) {
            return Err(Error::InvalidArgument(format!(
                "could not place {n} locations {min_separation} degrees apart"
            )));
        }
        let lon = rng.random_range(region.lon_min..=region.lon_max);
        let lat = rng.random_range(region.lat_min..=region.lat_max);
        if out.iter().all(|l| (l.lon - lon).hypot(l.lat - lat) >= min_separation) {
            let id: String = format!("C{:03}", out.len() + 1);
            let name = format!("City {}", out.len() + 1);
            out.push(Location::new(id, name, lon, lat));
        }
    }
    Ok(out)
}
