//! Clamped cubic B-splines and their tensor product over a lon/lat rectangle.
//!
//! Tensor functions are flattened longitude-major: with `n_lat` latitude
//! functions, flat index `j = i_lon * n_lat + i_lat` (all indices 0-based).
//! At the default resolution (13 interior knots per axis) there are 17 x 17 = 289
//! tensor functions.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Polynomial degree of every basis in this crate.
pub const DEGREE: usize = 3;

const ORDER: usize = DEGREE + 1;

/// Tensor values with magnitude below this are treated as structural zeros.
pub const ZERO_CUTOFF: f64 = 1e-14;

/// Nondecreasing knot sequence whose end knots are repeated `DEGREE + 1` times.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KnotVector {
    knots: Vec<f64>,
}

impl KnotVector {
    /// `n_interior` equally spaced interior knots strictly inside `(min, max)`.
    pub fn clamped(min: f64, max: f64, n_interior: usize) -> Result<Self> {
        if !(max > min) || !min.is_finite() || !max.is_finite() {
            return Err(Error::InvalidRange { min, max });
        }
        let step = (max - min) / (n_interior + 1) as f64;
        let mut knots = Vec::with_capacity(n_interior + 2 * ORDER);
        knots.extend_from_slice(&[min; ORDER]);
        knots.extend((1..=n_interior).map(|i| min + i as f64 * step));
        knots.extend_from_slice(&[max; ORDER]);
        Ok(KnotVector { knots })
    }

    pub fn from_knots(knots: Vec<f64>) -> Result<Self> {
        if knots.len() < 2 * ORDER {
            return Err(Error::InvalidKnots("need at least 8 knots"));
        }
        if knots.iter().any(|k| !k.is_finite()) {
            return Err(Error::InvalidKnots("non-finite knot"));
        }
        if knots.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidKnots("knots must be nondecreasing"));
        }
        let n = knots.len();
        let (lo, hi) = (knots[0], knots[n - 1]);
        if knots[..ORDER].iter().any(|&k| k != lo) || knots[n - ORDER..].iter().any(|&k| k != hi) {
            return Err(Error::InvalidKnots("end knots must be repeated degree + 1 times"));
        }
        if !(hi > lo) {
            return Err(Error::InvalidRange { min: lo, max: hi });
        }
        // interior knots may not reach the boundary multiplicity
        if knots[ORDER] == lo || knots[n - ORDER - 1] == hi {
            return Err(Error::InvalidKnots("end knot multiplicity exceeds degree + 1"));
        }
        Ok(KnotVector { knots })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn n_basis(&self) -> usize {
        self.knots.len() - ORDER
    }

    pub fn n_interior(&self) -> usize {
        self.knots.len() - 2 * ORDER
    }

    pub fn min(&self) -> f64 {
        self.knots[0]
    }

    pub fn max(&self) -> f64 {
        self.knots[self.knots.len() - 1]
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.min() && x <= self.max()
    }

    /// Knot span `s` with `knots[s] <= x < knots[s + 1]`; the right endpoint
    /// maps to the last nonempty span.
    fn span(&self, x: f64) -> usize {
        let last = self.n_basis() - 1;
        let s = self.knots.partition_point(|&k| k <= x).saturating_sub(1);
        s.clamp(DEGREE, last)
    }

    /// The (at most) four nonzero basis values at `x`, as `(first_index, values)`.
    ///
    /// `values[r]` is the value of basis function `first_index + r`.
    pub fn eval_local(&self, x: f64) -> Result<(usize, [f64; ORDER])> {
        if !self.contains(x) {
            return Err(Error::OutOfDomain { value: x, min: self.min(), max: self.max() });
        }
        // clamped ends interpolate; skip the recursion so the value is exactly 1
        if x == self.min() {
            return Ok((0, [1.0, 0.0, 0.0, 0.0]));
        }
        if x == self.max() {
            return Ok((self.n_basis() - ORDER, [0.0, 0.0, 0.0, 1.0]));
        }
        let s = self.span(x);
        let u = &self.knots;
        let mut n = [0.0; ORDER];
        let mut left = [0.0; ORDER];
        let mut right = [0.0; ORDER];
        n[0] = 1.0;
        for j in 1..=DEGREE {
            left[j] = x - u[s + 1 - j];
            right[j] = u[s + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                let temp = n[r] / (right[r + 1] + left[j - r]);
                n[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            n[j] = saved;
        }
        Ok((s - DEGREE, n))
    }

    /// Dense vector of all `n_basis()` values at `x`.
    pub fn eval(&self, x: f64) -> Result<Vec<f64>> {
        let (first, vals) = self.eval_local(x)?;
        let mut out = vec![0.0; self.n_basis()];
        out[first..first + ORDER].copy_from_slice(&vals);
        Ok(out)
    }
}

/// Sparse row of tensor-product basis values at one point (at most 16 nonzeros).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TensorRow {
    idx: [usize; ORDER * ORDER],
    val: [f64; ORDER * ORDER],
    len: usize,
}

impl TensorRow {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.idx[..self.len].iter().copied().zip(self.val[..self.len].iter().copied())
    }

    pub fn indices(&self) -> &[usize] {
        &self.idx[..self.len]
    }

    pub fn values(&self) -> &[f64] {
        &self.val[..self.len]
    }

    /// `Σ_j coeffs[j] S_j(τ)`.
    pub fn dot(&self, coeffs: &[f64]) -> f64 {
        self.iter().map(|(j, v)| coeffs[j] * v).sum()
    }

    pub fn to_dense(&self, n_basis: usize) -> Vec<f64> {
        let mut out = vec![0.0; n_basis];
        for (j, v) in self.iter() {
            out[j] = v;
        }
        out
    }
}

/// Rectangle in longitude/latitude degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Domain {
    pub lon_min: f64,
    pub lon_max: f64,
    pub lat_min: f64,
    pub lat_max: f64,
}

impl Domain {
    /// Rectangle covering the contiguous United States.
    pub const CONUS: Domain = Domain { lon_min: -124.0, lon_max: -66.0, lat_min: 24.0, lat_max: 49.0 };

    pub fn contains(&self, lon: f64, lat: f64) -> bool {
        lon >= self.lon_min && lon <= self.lon_max && lat >= self.lat_min && lat <= self.lat_max
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TensorSplineBasis {
    lon: KnotVector,
    lat: KnotVector,
}

impl TensorSplineBasis {
    pub fn new(lon: KnotVector, lat: KnotVector) -> Self {
        TensorSplineBasis { lon, lat }
    }

    /// Equally spaced clamped knots on both axes of `domain`.
    pub fn uniform(domain: Domain, n_interior_lon: usize, n_interior_lat: usize) -> Result<Self> {
        Ok(TensorSplineBasis {
            lon: KnotVector::clamped(domain.lon_min, domain.lon_max, n_interior_lon)?,
            lat: KnotVector::clamped(domain.lat_min, domain.lat_max, n_interior_lat)?,
        })
    }

    /// 13 interior knots per axis over the CONUS rectangle: 289 functions.
    pub fn conus() -> Self {
        Self::uniform(Domain::CONUS, 13, 13).expect("static domain is valid")
    }

    pub fn lon_knots(&self) -> &KnotVector {
        &self.lon
    }

    pub fn lat_knots(&self) -> &KnotVector {
        &self.lat
    }

    pub fn domain(&self) -> Domain {
        Domain {
            lon_min: self.lon.min(),
            lon_max: self.lon.max(),
            lat_min: self.lat.min(),
            lat_max: self.lat.max(),
        }
    }

    pub fn n_basis(&self) -> usize {
        self.lon.n_basis() * self.lat.n_basis()
    }

    pub fn flat_index(&self, i_lon: usize, i_lat: usize) -> usize {
        debug_assert!(i_lon < self.lon.n_basis() && i_lat < self.lat.n_basis());
        i_lon * self.lat.n_basis() + i_lat
    }

    pub fn split_index(&self, j: usize) -> (usize, usize) {
        let n_lat = self.lat.n_basis();
        (j / n_lat, j % n_lat)
    }

    /// Tensor basis values at `(lon, lat)`, sorted by flat index.
    pub fn eval(&self, lon: f64, lat: f64) -> Result<TensorRow> {
        let (lon0, bl) = self.lon.eval_local(lon)?;
        let (lat0, bt) = self.lat.eval_local(lat)?;
        let mut row = TensorRow { idx: [0; ORDER * ORDER], val: [0.0; ORDER * ORDER], len: 0 };
        for (a, &x) in bl.iter().enumerate() {
            for (b, &y) in bt.iter().enumerate() {
                let v = x * y;
                if v.abs() >= ZERO_CUTOFF {
                    row.idx[row.len] = self.flat_index(lon0 + a, lat0 + b);
                    row.val[row.len] = v;
                    row.len += 1;
                }
            }
        }
        Ok(row)
    }

    pub fn eval_dense(&self, lon: f64, lat: f64) -> Result<Vec<f64>> {
        Ok(self.eval(lon, lat)?.to_dense(self.n_basis()))
    }
}
