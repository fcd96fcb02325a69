//! Daily basis coefficients `β_t` and the residual field `ε̂_t(τ)`.

use alloc::vec::Vec;

use nalgebra::DMatrix;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::linalg::{lstsq_qr, TruncatedSvd};
use crate::panel::{Day, Location, MaskedMatrix, ObservationPanel};
use crate::spatial::SpatialBasis;
use crate::surface::{MeanField, SkippedDay};
use crate::{Error, Result};

const SOLVE_RTOL: f64 = 1e-10;

/// `μ̂(τ_i)` and `φ_k(τ_i)` precomputed at a fixed set of locations.
#[derive(Debug, Clone, PartialEq)]
pub struct CityDesign {
    mu: Vec<f64>,
    phi: DMatrix<f64>,
}

impl CityDesign {
    pub fn new(basis: &SpatialBasis, mean: &MeanField, locations: &[Location]) -> Result<Self> {
        let k = basis.k();
        let mut mu = Vec::with_capacity(locations.len());
        let mut phi = DMatrix::zeros(locations.len(), k);
        for (i, loc) in locations.iter().enumerate() {
            let row = basis.splines().eval(loc.lon, loc.lat)?;
            mu.push(mean.eval_row(&row));
            for (c, v) in basis.eval_row(&row).into_iter().enumerate() {
                phi[(i, c)] = v;
            }
        }
        Ok(CityDesign { mu, phi })
    }

    pub fn k(&self) -> usize {
        self.phi.ncols()
    }

    pub fn n_cities(&self) -> usize {
        self.mu.len()
    }

    /// `μ̂(τ_i)` for every location.
    pub fn mean(&self) -> &[f64] {
        &self.mu
    }

    /// `n_cities x K` matrix of `φ_k(τ_i)`.
    pub fn phi(&self) -> &DMatrix<f64> {
        &self.phi
    }

    /// Same locations, leading `k` basis functions only (`k` may be 0).
    pub fn truncated(&self, k: usize) -> CityDesign {
        CityDesign { mu: self.mu.clone(), phi: self.phi.columns(0, k.min(self.k())).into_owned() }
    }

    /// `μ̂(τ_i) + Σ_k β_k φ_k(τ_i)`.
    pub fn field(&self, beta: &[f64], i: usize) -> f64 {
        self.mu[i] + beta.iter().enumerate().map(|(k, b)| b * self.phi[(i, k)]).sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DayProjection {
    pub beta: Vec<f64>,
    /// `ε̂(τ_i)` at observed locations, `None` elsewhere.
    pub residuals: Vec<Option<f64>>,
    pub residual_norm: f64,
    pub rank: usize,
    pub n_obs: usize,
}

/// Least-squares `β` for one day's values on a precomputed design.
///
/// Uses Householder QR when the design has full column rank and falls back
/// to the minimum-norm SVD solution otherwise (e.g. fewer observations than
/// basis functions).
pub fn project_values(design: &CityDesign, values: &[Option<f64>], min_obs: usize) -> Result<DayProjection> {
    if values.len() != design.n_cities() {
        return Err(Error::DimensionMismatch { expected: design.n_cities(), found: values.len() });
    }
    let obs: Vec<usize> = (0..values.len()).filter(|&i| values[i].is_some()).collect();
    let n_obs = obs.len();
    let required = min_obs.max(1);
    if n_obs < required {
        return Err(Error::InsufficientObservations { observed: n_obs, required });
    }
    let k = design.k();
    let target: Vec<f64> = obs.iter().map(|&i| values[i].unwrap_or_default() - design.mu[i]).collect();
    let (beta, rank) = if k == 0 {
        (Vec::new(), 0)
    } else {
        let a = DMatrix::from_fn(n_obs, k, |r, c| design.phi[(obs[r], c)]);
        match lstsq_qr(&a, &target, SOLVE_RTOL) {
            Some(x) => (x.iter().copied().collect(), k),
            None => {
                let svd = TruncatedSvd::new(a);
                let rank = svd.rank(SOLVE_RTOL);
                if rank == 0 {
                    return Err(Error::RankDeficientDesign { rank, k });
                }
                (svd.solve(&target, rank).iter().copied().collect(), rank)
            }
        }
    };
    let mut residuals = alloc::vec![None; values.len()];
    let mut ss = 0.0;
    for &i in &obs {
        let r = values[i].unwrap_or_default() - design.field(&beta, i);
        ss += r * r;
        residuals[i] = Some(r);
    }
    Ok(DayProjection { beta, residuals, residual_norm: ss.sqrt(), rank, n_obs })
}

/// Project a single day onto the spatial basis.
pub fn project_day(
    basis: &SpatialBasis,
    mean: &MeanField,
    locations: &[Location],
    values: &[Option<f64>],
    min_obs: usize,
) -> Result<DayProjection> {
    project_values(&CityDesign::new(basis, mean, locations)?, values, min_obs)
}

/// `β_{kt}` for every projected day.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaSeries {
    dates: Vec<Day>,
    rows: Vec<usize>,
    values: DMatrix<f64>,
    residual_norms: Vec<f64>,
}

impl BetaSeries {
    pub fn new(dates: Vec<Day>, rows: Vec<usize>, values: DMatrix<f64>, residual_norms: Vec<f64>) -> Result<Self> {
        if dates.len() != values.nrows() || rows.len() != values.nrows() || residual_norms.len() != values.nrows() {
            return Err(Error::DimensionMismatch { expected: values.nrows(), found: dates.len() });
        }
        if dates.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("beta dates must be strictly increasing".into()));
        }
        Ok(BetaSeries { dates, rows, values, residual_norms })
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn k(&self) -> usize {
        self.values.ncols()
    }

    pub fn dates(&self) -> &[Day] {
        &self.dates
    }

    /// Panel row of each entry.
    pub fn panel_rows(&self) -> &[usize] {
        &self.rows
    }

    /// `len x K` matrix.
    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn residual_norms(&self) -> &[f64] {
        &self.residual_norms
    }

    /// Time series of coefficient `k` (0-based).
    pub fn series(&self, k: usize) -> Vec<f64> {
        self.values.column(k).iter().copied().collect()
    }

    pub fn day(&self, i: usize) -> Vec<f64> {
        self.values.row(i).iter().copied().collect()
    }
}

/// Output of [`project_all`].
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub betas: BetaSeries,
    /// Same shape as the panel; rows of skipped days are entirely missing.
    pub residuals: MaskedMatrix,
    pub skipped: Vec<SkippedDay>,
}

impl Projection {
    /// Sample variance of every residual entry, the white-noise `σ̂²`.
    pub fn noise_variance(&self) -> f64 {
        let r: Vec<f64> = self.residuals.as_slice().iter().flatten().copied().collect();
        crate::stats::variance(&r)
    }
}

/// Project every day of a panel onto a precomputed design.
pub fn project_panel(design: &CityDesign, panel: &ObservationPanel, min_obs: usize) -> Result<Projection> {
    let mut dates = Vec::new();
    let mut rows = Vec::new();
    let mut betas = Vec::new();
    let mut norms = Vec::new();
    let mut skipped = Vec::new();
    let mut residuals = MaskedMatrix::missing(panel.n_days(), panel.n_cities());
    for t in 0..panel.n_days() {
        match project_values(design, panel.day(t), min_obs) {
            Ok(p) => {
                dates.push(panel.dates()[t]);
                rows.push(t);
                betas.extend_from_slice(&p.beta);
                norms.push(p.residual_norm);
                residuals.row_mut(t).copy_from_slice(&p.residuals);
            }
            Err(reason) => skipped.push(SkippedDay { date: panel.dates()[t], row: t, reason }),
        }
    }
    if dates.is_empty() {
        return Err(Error::EmptyOutput);
    }
    let values = DMatrix::from_row_slice(dates.len(), design.k(), &betas);
    Ok(Projection { betas: BetaSeries::new(dates, rows, values, norms)?, residuals, skipped })
}

/// Project every day of a panel onto the spatial basis.
pub fn project_all(
    basis: &SpatialBasis,
    mean: &MeanField,
    panel: &ObservationPanel,
    min_obs: usize,
) -> Result<Projection> {
    project_panel(&CityDesign::new(basis, mean, panel.locations())?, panel, min_obs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spline::TensorSplineBasis;
    use alloc::format;
    use alloc::vec;
    use approx::assert_abs_diff_eq;

    fn setup() -> (SpatialBasis, MeanField, Vec<Location>) {
        let s = TensorSplineBasis::conus();
        let mut l = DMatrix::from_fn(289, 3, |j, k| libm::sin((j * (k + 3)) as f64 * 0.21));
        let q = l.clone().qr().q();
        l.copy_from(&q);
        let basis = SpatialBasis::from_parts(s, l, vec![3.0, 2.0, 1.0]).unwrap();
        let mean = MeanField {
            grand_mean: -1.0,
            mean_coeffs: (0..289).map(|j| libm::cos(j as f64 * 0.1) * 0.5).collect(),
        };
        let locs = (0..40)
            .map(|i| {
                let lon = -122.0 + (i as f64 * 7.3) % 54.0;
                let lat = 25.5 + (i as f64 * 3.7) % 22.0;
                Location::new(format!("{i}"), "", lon, lat)
            })
            .collect();
        (basis, mean, locs)
    }

    #[test]
    fn mean_only_day_gives_zero_beta() {
        let (basis, mean, locs) = setup();
        let vals: Vec<Option<f64>> = locs.iter().map(|l| Some(mean.eval(basis.splines(), l.lon, l.lat).unwrap())).collect();
        let p = project_day(&basis, &mean, &locs, &vals, 10).unwrap();
        for b in p.beta {
            assert_abs_diff_eq!(b, 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn planted_coefficient_recovered() {
        let (basis, mean, locs) = setup();
        let vals: Vec<Option<f64>> = locs
            .iter()
            .map(|l| {
                let phi = basis.eval(l.lon, l.lat).unwrap();
                Some(mean.eval(basis.splines(), l.lon, l.lat).unwrap() + 3.0 * phi[0])
            })
            .collect();
        let p = project_day(&basis, &mean, &locs, &vals, 10).unwrap();
        assert_abs_diff_eq!(p.beta[0], 3.0, epsilon = 1e-6);
        assert_abs_diff_eq!(p.beta[1], 0.0, epsilon = 1e-6);
        assert_abs_diff_eq!(p.beta[2], 0.0, epsilon = 1e-6);
        assert!(p.residual_norm < 1e-8);
    }

    #[test]
    fn residual_identity_and_orthogonality() {
        let (basis, mean, locs) = setup();
        let design = CityDesign::new(&basis, &mean, &locs).unwrap();
        let vals: Vec<Option<f64>> =
            (0..locs.len()).map(|i| if i % 7 == 3 { None } else { Some(((i * 13) % 11) as f64 - 5.0) }).collect();
        let p = project_values(&design, &vals, 10).unwrap();
        let mut zero_ss = 0.0;
        for i in 0..locs.len() {
            match (vals[i], p.residuals[i]) {
                (Some(y), Some(r)) => {
                    assert_abs_diff_eq!(r, y - design.field(&p.beta, i), epsilon = 1e-10);
                    zero_ss += (y - design.mean()[i]).powi(2);
                }
                (None, None) => {}
                _ => panic!("mask mismatch at {i}"),
            }
        }
        assert!(p.residual_norm <= zero_ss.sqrt());
        for k in 0..3 {
            let g: f64 = (0..locs.len()).filter_map(|i| p.residuals[i].map(|r| r * design.phi()[(i, k)])).sum();
            assert!(g.abs() < 1e-8, "gradient {g}");
        }
    }

    #[test]
    fn sparse_day_uses_min_norm_fallback() {
        let (basis, mean, locs) = setup();
        let design = CityDesign::new(&basis, &mean, &locs[..2]).unwrap();
        let p = project_values(&design, &[Some(1.0), Some(-1.0)], 1).unwrap();
        assert_eq!(p.rank, 2);
        assert!(p.residual_norm < 1e-10);
    }

    #[test]
    fn too_few_observations() {
        let (basis, mean, locs) = setup();
        let design = CityDesign::new(&basis, &mean, &locs).unwrap();
        let err = project_values(&design, &vec![None; locs.len()], 10).unwrap_err();
        assert_eq!(err, Error::InsufficientObservations { observed: 0, required: 10 });
    }
}
