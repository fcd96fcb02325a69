//! Spatial basis functions from the principal components of the centered
//! spline coefficients.
//!
//! With `C − C̄ = U Σ Vᵀ`, the k-th spatial basis function is
//! `φ_k(τ) = Σ_j V_jk S_j(τ)`. Each loading column is sign-normalised so its
//! largest-magnitude entry is positive.

use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::linalg::TruncatedSvd;
use crate::spline::{TensorRow, TensorSplineBasis};
use crate::surface::{CoefficientMatrix, MeanField};
use crate::{Error, Result};

/// Full thin SVD of the centered coefficient matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PrincipalComponents {
    loadings: DMatrix<f64>,
    singular_values: Vec<f64>,
}

impl PrincipalComponents {
    /// Number of available components, `min(m, n_basis)`.
    pub fn n_components(&self) -> usize {
        self.singular_values.len()
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    /// All loading columns, `n_basis x n_components`.
    pub fn loadings(&self) -> &DMatrix<f64> {
        &self.loadings
    }

    /// Fraction `σ_k² / Σ σ_i²` for every component.
    pub fn explained_variance(&self) -> Vec<f64> {
        explained(&self.singular_values)
    }

    /// Basis built from the `k` leading components.
    pub fn spatial_basis(&self, splines: &TensorSplineBasis, k: usize) -> Result<SpatialBasis> {
        if k == 0 || k > self.n_components() {
            return Err(Error::KOutOfRange { k, max: self.n_components() });
        }
        Ok(SpatialBasis {
            splines: splines.clone(),
            loadings: self.loadings.columns(0, k).into_owned(),
            singular_values: self.singular_values.clone(),
        })
    }
}

fn explained(s: &[f64]) -> Vec<f64> {
    let total: f64 = s.iter().map(|s| s * s).sum();
    s.iter().map(|s| if total > 0.0 { s * s / total } else { 0.0 }).collect()
}

/// SVD of `C − C̄`, centered with the mean field's column means.
pub fn principal_components(coeffs: &CoefficientMatrix, mean: &MeanField) -> Result<PrincipalComponents> {
    let c = coeffs.values();
    if mean.mean_coeffs.len() != c.ncols() {
        return Err(Error::DimensionMismatch { expected: c.ncols(), found: mean.mean_coeffs.len() });
    }
    if c.nrows() == 0 {
        return Err(Error::EmptyOutput);
    }
    let mut centered = c.clone();
    for (j, mut col) in centered.column_iter_mut().enumerate() {
        col.add_scalar_mut(-mean.mean_coeffs[j]);
    }
    let svd = TruncatedSvd::new(centered);
    let mut loadings = svd.v_t().transpose();
    for mut col in loadings.column_iter_mut() {
        let (mut best, mut arg) = (0.0f64, 0);
        for (i, v) in col.iter().enumerate() {
            if v.abs() > best {
                best = v.abs();
                arg = i;
            }
        }
        if col[arg] < 0.0 {
            col.neg_mut();
        }
    }
    Ok(PrincipalComponents { loadings, singular_values: svd.singular_values().to_vec() })
}

/// `K` spatial basis functions over a spline basis.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialBasis {
    splines: TensorSplineBasis,
    loadings: DMatrix<f64>,
    singular_values: Vec<f64>,
}

impl SpatialBasis {
    /// Assemble from stored parts (e.g. a saved model).
    pub fn from_parts(splines: TensorSplineBasis, loadings: DMatrix<f64>, singular_values: Vec<f64>) -> Result<Self> {
        if loadings.nrows() != splines.n_basis() {
            return Err(Error::DimensionMismatch { expected: splines.n_basis(), found: loadings.nrows() });
        }
        if loadings.ncols() == 0 || loadings.ncols() > singular_values.len() {
            return Err(Error::KOutOfRange { k: loadings.ncols(), max: singular_values.len() });
        }
        Ok(SpatialBasis { splines, loadings, singular_values })
    }

    pub fn k(&self) -> usize {
        self.loadings.ncols()
    }

    pub fn splines(&self) -> &TensorSplineBasis {
        &self.splines
    }

    /// `n_basis x K` loading matrix.
    pub fn loadings(&self) -> &DMatrix<f64> {
        &self.loadings
    }

    /// Every singular value of the centered coefficient matrix, descending.
    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    /// Explained-variance fraction of each of the `K` retained components.
    pub fn explained_variance(&self) -> Vec<f64> {
        let mut e = explained(&self.singular_values);
        e.truncate(self.k());
        e
    }

    /// `Φ(τ) = [φ_1(τ) … φ_K(τ)]`.
    pub fn eval(&self, lon: f64, lat: f64) -> Result<Vec<f64>> {
        Ok(self.eval_row(&self.splines.eval(lon, lat)?))
    }

    pub fn eval_row(&self, row: &TensorRow) -> Vec<f64> {
        (0..self.k())
            .map(|k| {
                let col = self.loadings.column(k);
                row.iter().map(|(j, v)| col[j] * v).sum()
            })
            .collect()
    }

    /// Copy with column `k` (0-based) negated.
    pub fn with_flipped_sign(&self, k: usize) -> SpatialBasis {
        let mut out = self.clone();
        out.loadings.column_mut(k).neg_mut();
        out
    }

    /// `φ_k` (1-based `k`) on a regular grid spanning the spline domain.
    pub fn grid(&self, k: usize, n_lon: usize, n_lat: usize) -> Result<BasisGrid> {
        if k == 0 || k > self.k() {
            return Err(Error::KOutOfRange { k, max: self.k() });
        }
        let loading: Vec<f64> = self.loadings.column(k - 1).iter().copied().collect();
        BasisGrid::evaluate(&self.splines, n_lon, n_lat, |row| row.dot(&loading))
    }
}

/// Surface values on a regular lon/lat grid.
///
/// `values[i_lat * lons.len() + i_lon]`: latitude rows, longitude varying
/// fastest, both axes ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisGrid {
    pub lons: Vec<f64>,
    pub lats: Vec<f64>,
    pub values: Vec<f64>,
}

impl BasisGrid {
    pub fn evaluate<F>(splines: &TensorSplineBasis, n_lon: usize, n_lat: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(&TensorRow) -> f64,
    {
        if n_lon < 2 || n_lat < 2 {
            return Err(Error::InvalidArgument("grid resolution must be at least 2 x 2".into()));
        }
        let d = splines.domain();
        let axis = |lo: f64, hi: f64, n: usize| -> Vec<f64> {
            (0..n).map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 }).collect()
        };
        let lons = axis(d.lon_min, d.lon_max, n_lon);
        let lats = axis(d.lat_min, d.lat_max, n_lat);
        let mut values = Vec::with_capacity(n_lon * n_lat);
        for &lat in &lats {
            for &lon in &lons {
                values.push(f(&splines.eval(lon, lat)?));
            }
        }
        Ok(BasisGrid { lons, lats, values })
    }

    pub fn get(&self, i_lon: usize, i_lat: usize) -> f64 {
        self.values[i_lat * self.lons.len() + i_lon]
    }

    /// `(lon, lat, value)` in storage order.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.lats
            .iter()
            .flat_map(move |&lat| self.lons.iter().map(move |&lon| (lon, lat)))
            .zip(&self.values)
            .map(|((lon, lat), &v)| (lon, lat, v))
    }
}

/// `φ_k` grid for the (1-based) component `k`.
pub fn export_basis_grid(basis: &SpatialBasis, k: usize, n_lon: usize, n_lat: usize) -> Result<BasisGrid> {
    basis.grid(k, n_lon, n_lat)
}

/// `principal_components` followed by truncation to `k` columns.
pub fn build_basis(
    splines: &TensorSplineBasis,
    coeffs: &CoefficientMatrix,
    mean: &MeanField,
    k: usize,
) -> Result<SpatialBasis> {
    principal_components(coeffs, mean)?.spatial_basis(splines, k)
}
