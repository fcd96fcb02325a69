//! AR(1)+GARCH(1,1) with Student-t innovations for one coefficient series:
//!
//! ```text
//! β_t  = ψ β_{t−1} + u_t,          u_t | ℱ_{t−1} ~ t_ν(0, η_t²)
//! η_t² = ω + α u_{t−1}² + γ η_{t−1}²
//! ```
//!
//! `η_t` is the *scale* of the t distribution, so `Var(u_t | ℱ_{t−1}) =
//! ν/(ν−2) · η_t²`.
//!
//! The recursion starts from a pre-sample `β_0 = 0` (so `u_1 = β_1`) and
//! `η_1² = mean(u_t²) · (ν−2)/ν`, the second moment of the AR-filtered series
//! converted to a t scale at the current parameters. If that moment is zero
//! the unconditional scale `ω / (1 − α − γ)` is used instead. The likelihood
//! sums over `t ≥ 2`.

use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StudentT};

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::optim::{self, Bfgs, NelderMead};
use crate::stats;
use crate::{Error, Result};

/// Shortest series accepted by the likelihood.
pub const MIN_SERIES_LEN: usize = 20;

/// Below this length `fit` still runs but flags the estimate as unreliable.
pub const RECOMMENDED_SERIES_LEN: usize = 100;

pub const PARAM_NAMES: [&str; 5] = ["psi", "omega", "alpha", "gamma", "nu"];

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GarchParams {
    /// AR(1) coefficient.
    pub psi: f64,
    /// GARCH intercept.
    pub omega: f64,
    /// ARCH coefficient on `u_{t−1}²`.
    pub alpha: f64,
    /// GARCH coefficient on `η_{t−1}²`.
    pub gamma: f64,
    /// Student-t degrees of freedom.
    pub nu: f64,
}

impl GarchParams {
    pub fn new(psi: f64, omega: f64, alpha: f64, gamma: f64, nu: f64) -> Self {
        GarchParams { psi, omega, alpha, gamma, nu }
    }

    pub fn validate(&self) -> Result<()> {
        let GarchParams { psi, omega, alpha, gamma, nu } = *self;
        if !(psi.abs() < 1.0) {
            return Err(Error::InvalidParams("|psi| must be < 1"));
        }
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::InvalidParams("omega must be positive"));
        }
        if !(alpha >= 0.0 && gamma >= 0.0) {
            return Err(Error::InvalidParams("alpha and gamma must be nonnegative"));
        }
        if !(alpha + gamma < 1.0) {
            return Err(Error::InvalidParams("alpha + gamma must be < 1"));
        }
        if !(nu > 2.0) {
            return Err(Error::InvalidParams("nu must exceed 2"));
        }
        Ok(())
    }

    /// `ν / (ν − 2)`, the variance of a unit-scale t variate.
    pub fn variance_factor(&self) -> f64 {
        self.nu / (self.nu - 2.0)
    }

    /// `E[η_t²] = ω / (1 − γ − α ν/(ν−2))`, or `None` when the variance of
    /// the innovations is infinite.
    pub fn unconditional_scale(&self) -> Option<f64> {
        let d = 1.0 - self.gamma - self.alpha * self.variance_factor();
        (d > 0.0).then(|| self.omega / d)
    }

    /// Stationary variance of `β_t`, `None` when infinite.
    pub fn stationary_variance(&self) -> Option<f64> {
        self.unconditional_scale().map(|s| self.variance_factor() * s / (1.0 - self.psi * self.psi))
    }

    /// Start-up scale for recursions without data: `E[η²]` when finite,
    /// otherwise `ω / (1 − α − γ)`.
    pub fn start_scale(&self) -> f64 {
        self.unconditional_scale().unwrap_or(self.omega / (1.0 - self.alpha - self.gamma))
    }

    pub fn to_array(&self) -> [f64; 5] {
        [self.psi, self.omega, self.alpha, self.gamma, self.nu]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        GarchParams::new(a[0], a[1], a[2], a[3], a[4])
    }

    /// Unconstrained coordinates; requires `alpha > 0` and `gamma > 0`.
    fn to_unconstrained(self) -> [f64; 5] {
        let rest = 1.0 - self.alpha - self.gamma;
        [
            self.psi.atanh(),
            self.omega.ln(),
            (self.alpha / rest).ln(),
            (self.gamma / rest).ln(),
            (self.nu - 2.0).ln(),
        ]
    }

    fn from_unconstrained(x: &[f64]) -> Self {
        let (ea, eg) = (x[2].exp(), x[3].exp());
        let d = 1.0 + ea + eg;
        GarchParams::new(x[0].tanh(), x[1].exp(), ea / d, eg / d, 2.0 + x[4].exp())
    }

    /// `∂θ/∂x` of the map from unconstrained coordinates.
    fn jacobian(&self) -> DMatrix<f64> {
        let mut j = DMatrix::zeros(5, 5);
        j[(0, 0)] = 1.0 - self.psi * self.psi;
        j[(1, 1)] = self.omega;
        j[(2, 2)] = self.alpha * (1.0 - self.alpha);
        j[(2, 3)] = -self.alpha * self.gamma;
        j[(3, 2)] = -self.alpha * self.gamma;
        j[(3, 3)] = self.gamma * (1.0 - self.gamma);
        j[(4, 4)] = self.nu - 2.0;
        j
    }
}

/// `ln f(u)` for `u ~ t_ν(0, η²)` with scale `η`.
pub fn student_t_log_density(u: f64, nu: f64, eta2: f64) -> f64 {
    libm::lgamma((nu + 1.0) / 2.0) - libm::lgamma(nu / 2.0) - 0.5 * (core::f64::consts::PI * nu).ln()
        - 0.5 * eta2.ln()
        - (nu + 1.0) / 2.0 * (u * u / (nu * eta2)).ln_1p()
}

/// Innovations `u_t` and squared scales `η_t²` aligned with the input series.
#[derive(Debug, Clone, PartialEq)]
pub struct Filtered {
    pub innovations: Vec<f64>,
    pub scales: Vec<f64>,
}

impl Filtered {
    /// `u_t / η_t`.
    pub fn standardized(&self) -> Vec<f64> {
        self.innovations.iter().zip(&self.scales).map(|(u, s)| u / s.sqrt()).collect()
    }
}

/// AR residuals with `β_0 = 0`.
fn ar_residuals(psi: f64, series: &[f64]) -> impl Iterator<Item = f64> + '_ {
    let prev = core::iter::once(0.0).chain(series.iter().copied());
    series.iter().zip(prev).map(move |(b, p)| b - psi * p)
}

/// Starting value `η_1²` of the scale recursion for `series`.
pub fn initial_scale(params: &GarchParams, series: &[f64]) -> f64 {
    let m2 = ar_residuals(params.psi, series).map(|u| u * u).sum::<f64>() / series.len() as f64;
    if m2 > 0.0 && m2.is_finite() {
        m2 / params.variance_factor()
    } else {
        params.start_scale()
    }
}

/// Run the AR and scale recursions from a given `η_1²`.
pub fn filter_from(params: &GarchParams, series: &[f64], eta2_init: f64) -> Filtered {
    let innovations: Vec<f64> = ar_residuals(params.psi, series).collect();
    let mut scales = Vec::with_capacity(series.len());
    let mut eta2 = eta2_init;
    for t in 0..innovations.len() {
        if t > 0 {
            let prev = innovations[t - 1];
            eta2 = params.omega + params.alpha * prev * prev + params.gamma * eta2;
        }
        scales.push(eta2);
    }
    Filtered { innovations, scales }
}

/// Filter with the default initialisation.
pub fn filter(params: &GarchParams, series: &[f64]) -> Result<Filtered> {
    params.validate()?;
    Ok(filter_from(params, series, initial_scale(params, series)))
}

fn nll_unchecked(params: &GarchParams, series: &[f64]) -> f64 {
    if params.validate().is_err() {
        return f64::INFINITY;
    }
    let nu = params.nu;
    let c = libm::lgamma((nu + 1.0) / 2.0) - libm::lgamma(nu / 2.0) - 0.5 * (core::f64::consts::PI * nu).ln();
    let half_nu1 = (nu + 1.0) / 2.0;
    let mut eta2 = initial_scale(params, series);
    let mut u_prev = series[0];
    let mut ll = 0.0;
    for t in 1..series.len() {
        eta2 = params.omega + params.alpha * u_prev * u_prev + params.gamma * eta2;
        let u = series[t] - params.psi * series[t - 1];
        ll += c - 0.5 * eta2.ln() - half_nu1 * (u * u / (nu * eta2)).ln_1p();
        u_prev = u;
    }
    if ll.is_finite() {
        -ll
    } else {
        f64::INFINITY
    }
}

/// `−Σ_{t≥2} ln f(u_t | ℱ_{t−1})`.
pub fn neg_log_likelihood(params: &GarchParams, series: &[f64]) -> Result<f64> {
    params.validate()?;
    if series.len() < MIN_SERIES_LEN {
        return Err(Error::SeriesTooShort { len: series.len(), min: MIN_SERIES_LEN });
    }
    Ok(nll_unchecked(params, series))
}

/// One simulated path together with the shocks that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedPath {
    pub series: Vec<f64>,
    pub innovations: Vec<f64>,
    pub scales: Vec<f64>,
}

/// Simulate `len` steps from `β_0 = 0` and `η_1²` given by [`GarchParams::start_scale`].
pub fn simulate_with_rng<R: Rng + ?Sized>(params: &GarchParams, len: usize, rng: &mut R) -> Result<SimulatedPath> {
    params.validate()?;
    let t_dist = StudentT::new(params.nu).map_err(|_| Error::InvalidParams("nu"))?;
    let mut series = Vec::with_capacity(len);
    let mut innovations = Vec::with_capacity(len);
    let mut scales = Vec::with_capacity(len);
    let mut eta2 = params.start_scale();
    let mut beta = 0.0;
    for _ in 0..len {
        let u = eta2.sqrt() * t_dist.sample(rng);
        beta = params.psi * beta + u;
        series.push(beta);
        innovations.push(u);
        scales.push(eta2);
        eta2 = params.omega + params.alpha * u * u + params.gamma * eta2;
    }
    Ok(SimulatedPath { series, innovations, scales })
}

pub fn simulate(params: &GarchParams, len: usize, seed: u64) -> Result<SimulatedPath> {
    simulate_with_rng(params, len, &mut ChaCha8Rng::seed_from_u64(seed))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FitOptions {
    /// Random restarts in addition to the fixed starting grid.
    pub extra_starts: usize,
    pub seed: u64,
    pub nelder_mead_iters: usize,
    pub bfgs_iters: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { extra_starts: 0, seed: 0, nelder_mead_iters: 400, bfgs_iters: 300 }
    }
}

/// Parameters within this distance of a constraint are flagged.
pub const BOUNDARY_TOL: f64 = 1e-4;

/// Constraints that are (nearly) active at the estimate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundaryFlags {
    pub psi: bool,
    pub alpha: bool,
    pub gamma: bool,
    pub persistence: bool,
    /// Degrees of freedom so large the fit is effectively Gaussian.
    pub nu: bool,
}

impl BoundaryFlags {
    fn of(p: &GarchParams) -> Self {
        BoundaryFlags {
            psi: p.psi.abs() > 1.0 - BOUNDARY_TOL,
            alpha: p.alpha < BOUNDARY_TOL,
            gamma: p.gamma < BOUNDARY_TOL,
            persistence: p.alpha + p.gamma > 1.0 - BOUNDARY_TOL,
            nu: p.nu > 1.0 / BOUNDARY_TOL,
        }
    }

    pub fn any(&self) -> bool {
        self.psi || self.alpha || self.gamma || self.persistence || self.nu
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GarchFit {
    pub params: GarchParams,
    /// Delta-method standard errors, order as [`PARAM_NAMES`]. NaN when the
    /// Hessian is not positive definite.
    pub std_errors: [f64; 5],
    pub t_ratios: [f64; 5],
    /// Two-sided p-values from the normal approximation.
    pub p_values: [f64; 5],
    pub log_likelihood: f64,
    /// `η_1²` used for the recursion.
    pub initial_scale: f64,
    pub filtered: Filtered,
    pub n_obs: usize,
    /// Finite-difference gradient norm at the optimum (unconstrained coordinates).
    pub gradient_norm: f64,
    pub converged: bool,
    pub boundary: BoundaryFlags,
    pub short_series: bool,
    pub evaluations: usize,
}

fn starting_points(series: &[f64]) -> Vec<GarchParams> {
    let psi = acf(series, 1).map(|a| a.values[0]).unwrap_or(0.0).clamp(-0.9, 0.9);
    let m2 = ar_residuals(psi, series).map(|u| u * u).sum::<f64>() / series.len() as f64;
    let nu: f64 = 8.0;
    [(0.05, 0.90), (0.10, 0.80), (0.15, 0.50)]
        .iter()
        .map(|&(alpha, gamma)| {
            let omega = (m2 * (nu - 2.0) / nu * (1.0 - alpha - gamma)).max(1e-8);
            GarchParams::new(psi, omega, alpha, gamma, nu)
        })
        .collect()
}

/// Maximum-likelihood fit over the constrained parameter set.
pub fn fit(series: &[f64], opts: &FitOptions) -> Result<GarchFit> {
    if series.len() < MIN_SERIES_LEN {
        return Err(Error::SeriesTooShort { len: series.len(), min: MIN_SERIES_LEN });
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("series contains non-finite values".into()));
    }
    if stats::variance(series) <= 0.0 {
        return Err(Error::DegenerateSeries);
    }
    let objective = |x: &[f64]| nll_unchecked(&GarchParams::from_unconstrained(x), series);

    let mut starts: Vec<[f64; 5]> = starting_points(series).iter().map(|p| p.to_unconstrained()).collect();
    if opts.extra_starts > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let base = starts[0];
        for _ in 0..opts.extra_starts {
            let mut x = base;
            for v in x.iter_mut() {
                *v += rng.random_range(-1.0..1.0);
            }
            starts.push(x);
        }
    }

    let nm = NelderMead { max_iter: opts.nelder_mead_iters, f_tol: 1e-10, initial_step: 0.5 };
    let bfgs = Bfgs { max_iter: opts.bfgs_iters, grad_tol: 1e-9, fd_step: 1e-5 };
    let mut evaluations = 0;
    let mut best: Option<optim::Minimum> = None;
    for x0 in &starts {
        let m = nm.minimize(objective, x0);
        evaluations += m.evaluations;
        if best.as_ref().is_none_or(|b| m.f < b.f) {
            best = Some(m);
        }
    }
    let mut best = best.expect("at least one start");
    for round in 0..2 {
        let refined = bfgs.minimize(objective, &best.x);
        evaluations += refined.evaluations;
        if refined.f <= best.f {
            best = refined;
        }
        if best.converged || round == 1 {
            break;
        }
        // restart the simplex around the current point, then refine again
        let polish = NelderMead { initial_step: 0.05, ..nm }.minimize(objective, &best.x);
        evaluations += polish.evaluations;
        if polish.f < best.f {
            best = polish;
        }
    }
    let params = GarchParams::from_unconstrained(&best.x);
    let nll = nll_unchecked(&params, series);
    if !nll.is_finite() {
        return Err(Error::InvalidParams("likelihood is not finite at any start"));
    }

    let mut obj = objective;
    let grad = optim::gradient(&mut obj, &best.x, 1e-5);
    let gradient_norm = optim::norm(&grad);
    let converged = gradient_norm <= 1e-4 * nll.abs().max(1.0);

    let hess = optim::hessian(&mut obj, &best.x, 1e-4);
    let mut std_errors = [f64::NAN; 5];
    if let Some(chol) = hess.cholesky() {
        let jac = params.jacobian();
        let cov = &jac * chol.inverse() * jac.transpose();
        for (i, se) in std_errors.iter_mut().enumerate() {
            let v = cov[(i, i)];
            if v >= 0.0 {
                *se = v.sqrt();
            }
        }
    }
    let theta = params.to_array();
    let mut t_ratios = [f64::NAN; 5];
    let mut p_values = [f64::NAN; 5];
    for i in 0..5 {
        t_ratios[i] = theta[i] / std_errors[i];
        p_values[i] = stats::two_sided_normal_p(t_ratios[i]);
    }
    let eta2_init = initial_scale(&params, series);
    Ok(GarchFit {
        params,
        std_errors,
        t_ratios,
        p_values,
        log_likelihood: -nll,
        initial_scale: eta2_init,
        filtered: filter_from(&params, series, eta2_init),
        n_obs: series.len(),
        gradient_norm,
        converged,
        boundary: BoundaryFlags::of(&params),
        short_series: series.len() < RECOMMENDED_SERIES_LEN,
        evaluations,
    })
}

/// Sample autocorrelations at lags `1..=max_lag` with the `±1.96/√T` band.
#[derive(Debug, Clone, PartialEq)]
pub struct Acf {
    pub values: Vec<f64>,
    pub band: f64,
}

pub fn acf(series: &[f64], max_lag: usize) -> Result<Acf> {
    let n = series.len();
    if n <= max_lag {
        return Err(Error::SeriesTooShort { len: n, min: max_lag + 1 });
    }
    let m = stats::mean(series);
    let dev: Vec<f64> = series.iter().map(|x| x - m).collect();
    let denom: f64 = dev.iter().map(|d| d * d).sum();
    if !(denom > 0.0) {
        return Err(Error::DegenerateSeries);
    }
    let values = (1..=max_lag).map(|k| dev[..n - k].iter().zip(&dev[k..]).map(|(a, b)| a * b).sum::<f64>() / denom).collect();
    Ok(Acf { values, band: 1.96 / (n as f64).sqrt() })
}

/// Squares of a series, for ARCH-effect diagnostics.
pub fn squared(xs: &[f64]) -> Vec<f64> {
    xs.iter().map(|x| x * x).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn table1() -> GarchParams {
        GarchParams::new(0.65, 13.50, 0.09, 0.89, 8.33)
    }

    #[test]
    fn validation() {
        assert!(table1().validate().is_ok());
        assert!(GarchParams::new(1.0, 1.0, 0.1, 0.8, 5.0).validate().is_err());
        assert!(GarchParams::new(0.5, 0.0, 0.1, 0.8, 5.0).validate().is_err());
        assert!(GarchParams::new(0.5, 1.0, -0.1, 0.8, 5.0).validate().is_err());
        assert!(GarchParams::new(0.5, 1.0, 0.2, 0.8, 5.0).validate().is_err());
        assert!(GarchParams::new(0.5, 1.0, 0.1, 0.8, 2.0).validate().is_err());
        assert!(GarchParams::new(f64::NAN, 1.0, 0.1, 0.8, 5.0).validate().is_err());
    }

    #[test]
    fn reparameterisation_round_trips() {
        let p = table1();
        let q = GarchParams::from_unconstrained(&p.to_unconstrained());
        for (a, b) in p.to_array().iter().zip(q.to_array()) {
            assert_relative_eq!(*a, b, max_relative = 1e-12);
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let p = table1();
        let x = p.to_unconstrained();
        let j = p.jacobian();
        for c in 0..5 {
            let h = 1e-6;
            let mut xp = x;
            xp[c] += h;
            let mut xm = x;
            xm[c] -= h;
            let (tp, tm) = (GarchParams::from_unconstrained(&xp).to_array(), GarchParams::from_unconstrained(&xm).to_array());
            for r in 0..5 {
                assert_abs_diff_eq!(j[(r, c)], (tp[r] - tm[r]) / (2.0 * h), epsilon = 1e-6 * p.to_array()[r].max(1.0));
            }
        }
    }

    #[test]
    fn zero_series_hand_computed() {
        // ν = 3: lnΓ(2) − lnΓ(3/2) = −ln(√π / 2)
        let p = GarchParams::new(0.3, 2.0, 0.0, 0.5, 3.0);
        let series = [0.0; 20];
        let scale: f64 = 2.0 / (1.0 - 0.5);
        let term = -(core::f64::consts::PI.sqrt() / 2.0).ln() - 0.5 * (3.0 * core::f64::consts::PI).ln() - 0.5 * scale.ln();
        let nll = neg_log_likelihood(&p, &series).unwrap();
        assert_abs_diff_eq!(nll, -19.0 * term, epsilon = 1e-12);
        let f = filter(&p, &series).unwrap();
        assert!(f.scales.iter().all(|&s| (s - scale).abs() < 1e-12));
    }

    #[test]
    fn scale_family_identity() {
        let beta: Vec<f64> = (0..50).map(|i| libm::sin(i as f64 * 0.7) * 3.0).collect();
        let half: Vec<f64> = beta.iter().map(|b| b / 2f64.sqrt()).collect();
        let p1 = GarchParams::new(0.4, 1.5, 0.0, 0.0, 6.0);
        let p2 = GarchParams { omega: 3.0, ..p1 };
        let a = neg_log_likelihood(&p2, &beta).unwrap();
        let b = neg_log_likelihood(&p1, &half).unwrap();
        assert_abs_diff_eq!(a, b + 49.0 * 0.5 * 2f64.ln(), epsilon = 1e-10);
    }

    #[test]
    fn degenerate_filters() {
        let beta: Vec<f64> = (0..30).map(|i| (i as f64 * 1.3).cos()).collect();
        let f = filter(&GarchParams::new(0.5, 2.5, 0.0, 0.0, 5.0), &beta).unwrap();
        assert!(f.scales[1..].iter().all(|&s| s == 2.5));
        let f = filter(&GarchParams::new(0.0, 2.5, 0.1, 0.5, 5.0), &beta).unwrap();
        assert_eq!(f.innovations, beta);
    }

    #[test]
    fn simulation_is_deterministic_and_filter_recovers_shocks() {
        let p = table1();
        let a = simulate(&p, 500, 7).unwrap();
        let b = simulate(&p, 500, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.series, simulate(&p, 500, 8).unwrap().series);
        let f = filter_from(&p, &a.series, a.scales[0]);
        for t in 0..500 {
            assert_abs_diff_eq!(f.innovations[t], a.innovations[t], epsilon = 1e-10);
            assert_relative_eq!(f.scales[t], a.scales[t], max_relative = 1e-10);
        }
    }

    #[test]
    fn too_short_and_constant() {
        let p = table1();
        assert_eq!(neg_log_likelihood(&p, &[1.0; 5]).unwrap_err(), Error::SeriesTooShort { len: 5, min: 20 });
        assert_eq!(fit(&[1.0; 40], &FitOptions::default()).unwrap_err(), Error::DegenerateSeries);
        assert_eq!(acf(&[2.0; 40], 5).unwrap_err(), Error::DegenerateSeries);
        assert!(acf(&[1.0, 2.0], 2).is_err());
    }

    #[test]
    fn acf_of_ar1() {
        let p = GarchParams::new(0.65, 1.0, 0.0, 0.0, 1e6);
        let s = simulate(&p, 20000, 3).unwrap().series;
        let a = acf(&s, 3).unwrap();
        assert_abs_diff_eq!(a.values[0], 0.65, epsilon = 0.03);
        assert_abs_diff_eq!(a.band, 1.96 / 20000f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn fit_respects_constraints_near_unit_persistence() {
        let p = GarchParams::new(0.5, 0.2, 0.08, 0.90, 7.0);
        let s = simulate(&p, 2000, 11).unwrap().series;
        let f = fit(&s, &FitOptions::default()).unwrap();
        assert!(f.params.validate().is_ok());
        assert!(f.params.alpha + f.params.gamma < 1.0);
        assert!(f.converged, "gradient norm {}", f.gradient_norm);
        assert_eq!(f.filtered.innovations.len(), 2000);
    }
}
