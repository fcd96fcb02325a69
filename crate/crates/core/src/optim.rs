//! Unconstrained minimisation: Nelder–Mead simplex followed by BFGS with
//! central-difference gradients.
//!
//! Objectives may return `+∞` (or NaN) for infeasible points; both methods
//! treat such points as worse than any finite value.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

#[cfg(not(feature = "std"))]
use num_traits::Float;

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

fn sanitize(f: f64) -> f64 {
    if f.is_nan() {
        f64::INFINITY
    } else {
        f
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMead {
    pub max_iter: usize,
    /// Stop when `f_worst − f_best <= f_tol * (1 + |f_best|)`.
    pub f_tol: f64,
    pub initial_step: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        NelderMead { max_iter: 2000, f_tol: 1e-10, initial_step: 0.5 }
    }
}

impl NelderMead {
    pub fn minimize<F>(&self, mut f: F, x0: &[f64]) -> Minimum
    where
        F: FnMut(&[f64]) -> f64,
    {
        let n = x0.len();
        let mut evals = 0;
        let mut eval = |x: &[f64], evals: &mut usize| {
            *evals += 1;
            sanitize(f(x))
        };
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        let f0 = eval(x0, &mut evals);
        simplex.push((x0.to_vec(), f0));
        for i in 0..n {
            let mut x = x0.to_vec();
            x[i] += self.initial_step;
            let fx = eval(&x, &mut evals);
            simplex.push((x, fx));
        }

        let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
        let mut iterations = 0;
        let mut converged = false;
        while iterations < self.max_iter {
            simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(core::cmp::Ordering::Equal));
            let best = simplex[0].1;
            let worst = simplex[n].1;
            if best.is_finite() && worst - best <= self.f_tol * (1.0 + best.abs()) {
                converged = true;
                break;
            }
            iterations += 1;

            let mut centroid = vec![0.0; n];
            for (x, _) in &simplex[..n] {
                for (c, xi) in centroid.iter_mut().zip(x) {
                    *c += xi / n as f64;
                }
            }
            let along = |t: f64| -> Vec<f64> {
                centroid.iter().zip(&simplex[n].0).map(|(c, w)| c + t * (w - c)).collect()
            };

            let xr = along(-alpha);
            let fr = eval(&xr, &mut evals);
            if fr < simplex[0].1 {
                let xe = along(-gamma);
                let fe = eval(&xe, &mut evals);
                simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
                continue;
            }
            if fr < simplex[n - 1].1 {
                simplex[n] = (xr, fr);
                continue;
            }
            let (xc, fc) = if fr < simplex[n].1 {
                let xc = along(-rho);
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            } else {
                let xc = along(rho);
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            };
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (xc, fc);
                continue;
            }
            let x_best = simplex[0].0.clone();
            for vertex in simplex.iter_mut().skip(1) {
                let x: Vec<f64> = x_best.iter().zip(&vertex.0).map(|(b, v)| b + sigma * (v - b)).collect();
                let fx = eval(&x, &mut evals);
                *vertex = (x, fx);
            }
        }
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(core::cmp::Ordering::Equal));
        let (x, f) = simplex.swap_remove(0);
        Minimum { x, f, iterations, evaluations: evals, converged }
    }
}

/// Central-difference gradient with step `h_rel * max(1, |x_i|)`.
pub fn gradient<F>(f: &mut F, x: &[f64], h_rel: f64) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut xp = x.to_vec();
    (0..x.len())
        .map(|i| {
            let h = h_rel * x[i].abs().max(1.0);
            xp[i] = x[i] + h;
            let fp = f(&xp);
            xp[i] = x[i] - h;
            let fm = f(&xp);
            xp[i] = x[i];
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

/// Central-difference Hessian, symmetrised.
pub fn hessian<F>(f: &mut F, x: &[f64], h_rel: f64) -> DMatrix<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x.len();
    let h: Vec<f64> = x.iter().map(|xi| h_rel * xi.abs().max(1.0)).collect();
    let f0 = f(x);
    let mut xp = x.to_vec();
    let mut hess = DMatrix::zeros(n, n);
    for i in 0..n {
        xp[i] = x[i] + h[i];
        let fp = f(&xp);
        xp[i] = x[i] - h[i];
        let fm = f(&xp);
        xp[i] = x[i];
        hess[(i, i)] = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
        for j in 0..i {
            let mut corner = |si: f64, sj: f64| {
                xp[i] = x[i] + si * h[i];
                xp[j] = x[j] + sj * h[j];
                let v = f(&xp);
                xp[i] = x[i];
                xp[j] = x[j];
                v
            };
            let v = (corner(1.0, 1.0) - corner(1.0, -1.0) - corner(-1.0, 1.0) + corner(-1.0, -1.0))
                / (4.0 * h[i] * h[j]);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    hess
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|g| g * g).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bfgs {
    pub max_iter: usize,
    /// Stop when `‖∇f‖ <= grad_tol * max(1, |f|)`.
    pub grad_tol: f64,
    pub fd_step: f64,
}

impl Default for Bfgs {
    fn default() -> Self {
        Bfgs { max_iter: 200, grad_tol: 1e-8, fd_step: 1e-5 }
    }
}

impl Bfgs {
    pub fn minimize<F>(&self, mut f: F, x0: &[f64]) -> Minimum
    where
        F: FnMut(&[f64]) -> f64,
    {
        let n = x0.len();
        let mut evals = 0usize;
        let mut obj = |x: &[f64]| {
            evals += 1;
            sanitize(f(x))
        };
        let mut x = DVector::from_column_slice(x0);
        let mut fx = obj(x.as_slice());
        let mut g = DVector::from_vec(gradient(&mut obj, x.as_slice(), self.fd_step));
        let mut h_inv = DMatrix::<f64>::identity(n, n);
        let mut iterations = 0;
        let mut converged = false;
        while iterations < self.max_iter {
            if !fx.is_finite() || g.iter().any(|v| !v.is_finite()) {
                break;
            }
            if norm(g.as_slice()) <= self.grad_tol * fx.abs().max(1.0) {
                converged = true;
                break;
            }
            iterations += 1;
            let mut p = -(&h_inv * &g);
            let mut slope = g.dot(&p);
            if slope >= 0.0 {
                h_inv = DMatrix::identity(n, n);
                p = -g.clone();
                slope = g.dot(&p);
            }
            let mut step = 1.0;
            let mut accepted = None;
            for _ in 0..50 {
                let xn = &x + step * &p;
                let fnew = obj(xn.as_slice());
                if fnew <= fx + 1e-4 * step * slope {
                    accepted = Some((xn, fnew));
                    break;
                }
                step *= 0.5;
            }
            let Some((xn, fnew)) = accepted else {
                break;
            };
            let gn = DVector::from_vec(gradient(&mut obj, xn.as_slice(), self.fd_step));
            let s = &xn - &x;
            let y = &gn - &g;
            let sy = s.dot(&y);
            if sy > 1e-12 * s.norm() * y.norm() {
                if iterations == 1 {
                    h_inv *= sy / y.dot(&y);
                }
                let rho = 1.0 / sy;
                let hy = &h_inv * &y;
                let yhy = y.dot(&hy);
                h_inv += (rho * rho * yhy + rho) * (&s * s.transpose()) - rho * (&hy * s.transpose() + &s * hy.transpose());
            }
            x = xn;
            fx = fnew;
            g = gn;
        }
        Minimum { x: x.iter().copied().collect(), f: fx, iterations, evaluations: evals, converged }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn rosenbrock(x: &[f64]) -> f64 {
        (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
    }

    #[test]
    fn nelder_mead_rosenbrock() {
        let m = NelderMead { max_iter: 5000, f_tol: 1e-14, initial_step: 0.5 }.minimize(rosenbrock, &[-1.2, 1.0]);
        assert!(m.converged);
        assert_abs_diff_eq!(m.x[0], 1.0, epsilon = 1e-3);
        assert_abs_diff_eq!(m.x[1], 1.0, epsilon = 1e-3);
    }

    #[test]
    fn bfgs_rosenbrock() {
        let m = Bfgs { max_iter: 500, ..Default::default() }.minimize(rosenbrock, &[-1.2, 1.0]);
        assert_abs_diff_eq!(m.x[0], 1.0, epsilon = 1e-5);
        assert_abs_diff_eq!(m.x[1], 1.0, epsilon = 1e-5);
    }

    #[test]
    fn infeasible_region_is_avoided() {
        let f = |x: &[f64]| if x[0] < 0.0 { f64::INFINITY } else { (x[0] - 2.0).powi(2) + x[1] * x[1] };
        let m = NelderMead::default().minimize(f, &[0.1, 1.0]);
        assert_abs_diff_eq!(m.x[0], 2.0, epsilon = 1e-4);
    }

    #[test]
    fn finite_difference_derivatives() {
        let mut f = |x: &[f64]| x[0] * x[0] * x[1] + libm::exp(x[1]);
        let g = gradient(&mut f, &[1.5, 0.3], 1e-6);
        assert_abs_diff_eq!(g[0], 2.0 * 1.5 * 0.3, epsilon = 1e-7);
        assert_abs_diff_eq!(g[1], 1.5 * 1.5 + libm::exp(0.3), epsilon = 1e-7);
        let h = hessian(&mut f, &[1.5, 0.3], 1e-4);
        assert_abs_diff_eq!(h[(0, 0)], 0.6, epsilon = 1e-5);
        assert_abs_diff_eq!(h[(0, 1)], 3.0, epsilon = 1e-5);
        assert_abs_diff_eq!(h[(1, 1)], libm::exp(0.3), epsilon = 1e-5);
    }
}
