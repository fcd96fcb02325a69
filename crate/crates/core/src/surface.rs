//! Per-day least-squares spline surfaces and the mean error field.
//!
//! Each day is fit independently: only that day's observed locations enter
//! the design matrix, so missing data needs no imputation. The design has
//! at most 16 nonzeros per row and is usually wider than tall; it is solved
//! by a truncated SVD restricted to the columns that touch an observation.
//! Splines whose support holds no observation get a coefficient of exactly
//! zero.
//!
//! `fit_all_days` fits the panel after subtracting its grand mean, so that
//! `μ̂(τ) = Ȳ̄ + Σ_j c̄_j S_j(τ)` reproduces a constant field exactly.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::linalg::TruncatedSvd;
use crate::panel::{Day, Location, ObservationPanel};
use crate::spline::{TensorRow, TensorSplineBasis};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SurfaceFitOptions {
    /// Singular values at or below `svd_rtol * σ_max` are discarded.
    pub svd_rtol: f64,
    pub min_obs_per_day: usize,
}

impl Default for SurfaceFitOptions {
    fn default() -> Self {
        SurfaceFitOptions { svd_rtol: 1e-8, min_obs_per_day: 10 }
    }
}

/// Sparse spline design matrix for one set of observation points.
#[derive(Debug, Clone)]
pub struct SparseDesign {
    n_basis: usize,
    rows: Vec<TensorRow>,
    active: Vec<usize>,
}

impl SparseDesign {
    pub fn assemble<I>(basis: &TensorSplineBasis, points: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, f64)>,
    {
        let n_basis = basis.n_basis();
        let rows = points.into_iter().map(|(lon, lat)| basis.eval(lon, lat)).collect::<Result<Vec<_>>>()?;
        let mut touched = vec![false; n_basis];
        for row in &rows {
            for &j in row.indices() {
                touched[j] = true;
            }
        }
        let active = touched.iter().enumerate().filter(|(_, &t)| t).map(|(j, _)| j).collect();
        Ok(SparseDesign { n_basis, rows, active })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_basis(&self) -> usize {
        self.n_basis
    }

    pub fn rows(&self) -> &[TensorRow] {
        &self.rows
    }

    /// Columns with at least one nonzero entry, ascending.
    pub fn active_columns(&self) -> &[usize] {
        &self.active
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.rows.len(), self.n_basis);
        for (i, row) in self.rows.iter().enumerate() {
            for (j, v) in row.iter() {
                a[(i, j)] = v;
            }
        }
        a
    }

    fn dense_active(&self) -> DMatrix<f64> {
        let mut col_of = vec![usize::MAX; self.n_basis];
        for (c, &j) in self.active.iter().enumerate() {
            col_of[j] = c;
        }
        let mut a = DMatrix::zeros(self.rows.len(), self.active.len());
        for (i, row) in self.rows.iter().enumerate() {
            for (j, v) in row.iter() {
                a[(i, col_of[j])] = v;
            }
        }
        a
    }

    /// `A c`.
    pub fn apply(&self, coeffs: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| r.dot(coeffs)).collect()
    }

    pub fn residual_norm(&self, y: &[f64], coeffs: &[f64]) -> f64 {
        self.rows.iter().zip(y).map(|(r, &y)| (y - r.dot(coeffs)).powi(2)).sum::<f64>().sqrt()
    }
}

/// Truncated-SVD least-squares solver for one day's design.
pub struct DaySolver {
    design: SparseDesign,
    svd: TruncatedSvd,
    rank: usize,
}

impl DaySolver {
    pub fn new(design: SparseDesign, svd_rtol: f64) -> Self {
        let svd = TruncatedSvd::new(design.dense_active());
        let rank = svd.rank(svd_rtol);
        DaySolver { design, svd, rank }
    }

    pub fn design(&self) -> &SparseDesign {
        &self.design
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn singular_values(&self) -> &[f64] {
        self.svd.singular_values()
    }

    pub fn solve(&self, y: &[f64]) -> Vec<f64> {
        self.solve_with_rank(y, self.rank)
    }

    /// Solution keeping the `rank` leading singular triplets.
    pub fn solve_with_rank(&self, y: &[f64], rank: usize) -> Vec<f64> {
        let x = self.svd.solve(y, rank);
        let mut coeffs = vec![0.0; self.design.n_basis()];
        for (c, &j) in self.design.active.iter().enumerate() {
            coeffs[j] = x[c];
        }
        coeffs
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DayFit {
    pub coeffs: Vec<f64>,
    pub rank: usize,
    pub residual_norm: f64,
    pub n_obs: usize,
}

/// Observed `(lon, lat)` points and values of one day.
pub(crate) fn observed<'a>(
    locations: &'a [Location],
    values: &'a [Option<f64>],
) -> impl Iterator<Item = (&'a Location, f64)> + 'a {
    locations.iter().zip(values).filter_map(|(loc, v)| v.map(|v| (loc, v)))
}

/// Least-squares spline coefficients for one day's observed values.
pub fn fit_day(
    basis: &TensorSplineBasis,
    locations: &[Location],
    values: &[Option<f64>],
    opts: &SurfaceFitOptions,
) -> Result<DayFit> {
    if locations.len() != values.len() {
        return Err(Error::DimensionMismatch { expected: locations.len(), found: values.len() });
    }
    let (points, y): (Vec<(f64, f64)>, Vec<f64>) = observed(locations, values).map(|(l, v)| ((l.lon, l.lat), v)).unzip();
    let n_obs = y.len();
    if n_obs < opts.min_obs_per_day.max(1) {
        return Err(Error::InsufficientObservations { observed: n_obs, required: opts.min_obs_per_day.max(1) });
    }
    if n_obs > 1 && points.iter().all(|&p| p == points[0]) {
        return Err(Error::DegenerateDesign);
    }
    let solver = DaySolver::new(SparseDesign::assemble(basis, points)?, opts.svd_rtol);
    let coeffs = solver.solve(&y);
    let residual_norm = solver.design().residual_norm(&y, &coeffs);
    Ok(DayFit { coeffs, rank: solver.rank(), residual_norm, n_obs })
}

/// Day dropped from a fit, with the error that excluded it.
#[derive(Debug, Clone, PartialEq)]
pub struct SkippedDay {
    pub date: Day,
    pub row: usize,
    pub reason: Error,
}

/// Fitted coefficient rows `ĉ_t`, one per usable day.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientMatrix {
    offset: f64,
    rows: Vec<usize>,
    dates: Vec<Day>,
    values: DMatrix<f64>,
    ranks: Vec<usize>,
    residual_norms: Vec<f64>,
    n_obs: Vec<usize>,
    skipped: Vec<SkippedDay>,
}

impl CoefficientMatrix {
    /// Collect per-day results (index `t` is panel row `t`) fitted on values
    /// centered by `offset`.
    pub fn assemble(panel: &ObservationPanel, offset: f64, fits: Vec<Result<DayFit>>) -> Result<Self> {
        if fits.len() != panel.n_days() {
            return Err(Error::DimensionMismatch { expected: panel.n_days(), found: fits.len() });
        }
        let mut kept = Vec::new();
        let mut skipped = Vec::new();
        for (t, fit) in fits.into_iter().enumerate() {
            match fit {
                Ok(f) => kept.push((t, f)),
                Err(reason) => skipped.push(SkippedDay { date: panel.dates()[t], row: t, reason }),
            }
        }
        if kept.is_empty() {
            return Err(Error::EmptyOutput);
        }
        let n_basis = kept[0].1.coeffs.len();
        let mut values = DMatrix::zeros(kept.len(), n_basis);
        for (i, (_, f)) in kept.iter().enumerate() {
            for (j, &c) in f.coeffs.iter().enumerate() {
                values[(i, j)] = c;
            }
        }
        Ok(CoefficientMatrix {
            offset,
            rows: kept.iter().map(|(t, _)| *t).collect(),
            dates: kept.iter().map(|(t, _)| panel.dates()[*t]).collect(),
            ranks: kept.iter().map(|(_, f)| f.rank).collect(),
            residual_norms: kept.iter().map(|(_, f)| f.residual_norm).collect(),
            n_obs: kept.iter().map(|(_, f)| f.n_obs).collect(),
            values,
            skipped,
        })
    }

    /// Constant subtracted from every observation before fitting.
    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn n_days(&self) -> usize {
        self.rows.len()
    }

    pub fn n_basis(&self) -> usize {
        self.values.ncols()
    }

    /// Panel row of each fitted day.
    pub fn panel_rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn dates(&self) -> &[Day] {
        &self.dates
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.values.row(i).iter().copied().collect()
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    pub fn residual_norms(&self) -> &[f64] {
        &self.residual_norms
    }

    pub fn n_obs(&self) -> &[usize] {
        &self.n_obs
    }

    pub fn skipped(&self) -> &[SkippedDay] {
        &self.skipped
    }
}

/// Values of day `t` minus `offset`.
pub fn centered_day(panel: &ObservationPanel, t: usize, offset: f64) -> Vec<Option<f64>> {
    panel.day(t).iter().map(|v| v.map(|v| v - offset)).collect()
}

/// Fit every day of the panel after removing its grand mean.
pub fn fit_all_days(
    basis: &TensorSplineBasis,
    panel: &ObservationPanel,
    opts: &SurfaceFitOptions,
) -> Result<CoefficientMatrix> {
    panel.check_domain(basis)?;
    let offset = panel.grand_mean().ok_or(Error::EmptyOutput)?;
    let fits = (0..panel.n_days())
        .map(|t| fit_day(basis, panel.locations(), &centered_day(panel, t, offset), opts))
        .collect();
    CoefficientMatrix::assemble(panel, offset, fits)
}

/// `μ̂(τ) = grand_mean + Σ_j mean_coeffs[j] S_j(τ)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MeanField {
    pub grand_mean: f64,
    pub mean_coeffs: Vec<f64>,
}

impl MeanField {
    pub fn eval(&self, basis: &TensorSplineBasis, lon: f64, lat: f64) -> Result<f64> {
        Ok(self.grand_mean + basis.eval(lon, lat)?.dot(&self.mean_coeffs))
    }

    pub fn eval_row(&self, row: &TensorRow) -> f64 {
        self.grand_mean + row.dot(&self.mean_coeffs)
    }
}

/// Centering offset plus unweighted column means of the coefficients.
pub fn estimate_mean(coeffs: &CoefficientMatrix) -> Result<MeanField> {
    if coeffs.n_days() == 0 {
        return Err(Error::EmptyOutput);
    }
    let grand_mean = coeffs.offset();
    let m = coeffs.n_days() as f64;
    let mean_coeffs = coeffs.values().column_iter().map(|c| c.sum() / m).collect();
    Ok(MeanField { grand_mean, mean_coeffs })
}
