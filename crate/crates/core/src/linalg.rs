//! Dense least-squares helpers on top of nalgebra.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

#[cfg(not(feature = "std"))]
use num_traits::Float;

/// Thin SVD `A = U Σ Vᵀ` with singular values in descending order.
///
/// Computed by one-sided Jacobi rotations, after a Householder QR when the
/// matrix is tall, on the transpose when it is wide. Jacobi keeps high relative
/// accuracy on the exactly rank-deficient designs that arise here.
pub(crate) struct TruncatedSvd {
    u: DMatrix<f64>,
    s: Vec<f64>,
    v_t: DMatrix<f64>,
}

const JACOBI_MAX_SWEEPS: usize = 80;

/// One-sided Jacobi on the columns of `w` (m×n column-major, m ≥ n).
/// On return the columns of `w` are `U Σ` and `v` (n×n) holds `V`.
fn jacobi_columns(w: &mut [f64], m: usize, n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let tol = f64::EPSILON * 0.5;
    let mut norms: Vec<f64> = (0..n).map(|j| w[j * m..(j + 1) * m].iter().map(|x| x * x).sum()).collect();
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (alpha, beta) = (norms[p], norms[q]);
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let (cp, cq) = split_cols(w, m, p, q);
                let gamma: f64 = cp.iter().zip(cq.iter()).map(|(a, b)| a * b).sum();
                if gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for (a, b) in cp.iter_mut().zip(cq.iter_mut()) {
                    let (x, y) = (*a, *b);
                    *a = c * x - s * y;
                    *b = s * x + c * y;
                }
                norms[p] = cp.iter().map(|x| x * x).sum();
                norms[q] = cq.iter().map(|x| x * x).sum();
                let (vp, vq) = split_cols(&mut v, n, p, q);
                for (a, b) in vp.iter_mut().zip(vq.iter_mut()) {
                    let (x, y) = (*a, *b);
                    *a = c * x - s * y;
                    *b = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    v
}

fn split_cols(buf: &mut [f64], m: usize, p: usize, q: usize) -> (&mut [f64], &mut [f64]) {
    debug_assert!(p < q);
    let (lo, hi) = buf.split_at_mut(q * m);
    (&mut lo[p * m..(p + 1) * m], &mut hi[..m])
}

/// SVD of a tall-or-square matrix: returns `(U, σ, V)` unsorted.
fn svd_tall(a: DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    let (m, n) = a.shape();
    let (q, mut w) = if m > n {
        let qr = a.qr();
        (Some(qr.q()), qr.r())
    } else {
        (None, a)
    };
    let k = w.nrows();
    let v = jacobi_columns(w.as_mut_slice(), k, n);
    let mut s = Vec::with_capacity(n);
    for j in 0..n {
        let mut col = w.column_mut(j);
        let norm = col.norm();
        s.push(norm);
        if norm > 0.0 {
            col /= norm;
        }
    }
    let u = match q {
        Some(q) => q * w,
        None => w,
    };
    (u, s, DMatrix::from_vec(n, n, v))
}

impl TruncatedSvd {
    pub fn new(a: DMatrix<f64>) -> Self {
        let (m, n) = a.shape();
        let (u, s, v) = if m >= n {
            svd_tall(a)
        } else {
            let (v, s, u) = svd_tall(a.transpose());
            (u, s, v)
        };
        let mut order: Vec<usize> = (0..s.len()).collect();
        order.sort_by(|&i, &j| s[j].partial_cmp(&s[i]).unwrap_or(core::cmp::Ordering::Equal).then(i.cmp(&j)));
        let r = order.len();
        let u_sorted = DMatrix::from_fn(u.nrows(), r, |i, c| u[(i, order[c])]);
        let v_t = DMatrix::from_fn(r, v.nrows(), |c, j| v[(j, order[c])]);
        TruncatedSvd { u: u_sorted, s: order.iter().map(|&i| s[i]).collect(), v_t }
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.s
    }

    pub fn v_t(&self) -> &DMatrix<f64> {
        &self.v_t
    }

    /// Count of singular values strictly above `rtol * σ_max`.
    pub fn rank(&self, rtol: f64) -> usize {
        let smax = self.s.first().copied().unwrap_or(0.0);
        if smax <= 0.0 {
            return 0;
        }
        self.s.iter().take_while(|&&s| s > rtol * smax).count()
    }

    /// `x = Σ_{i<rank} v_i (u_iᵀ b) / σ_i`.
    pub fn solve(&self, b: &[f64], rank: usize) -> DVector<f64> {
        let n = self.v_t.ncols();
        let mut x = DVector::zeros(n);
        for i in 0..rank.min(self.s.len()) {
            let coef = self.u.column(i).iter().zip(b).map(|(u, b)| u * b).sum::<f64>() / self.s[i];
            x.axpy(coef, &self.v_t.row(i).transpose(), 1.0);
        }
        x
    }
}

/// Least squares `min ‖A x − b‖` through Householder QR.
///
/// Returns `None` when `A` has fewer rows than columns or a diagonal entry of
/// `R` falls below `rtol` times the largest one.
pub(crate) fn lstsq_qr(a: &DMatrix<f64>, b: &[f64], rtol: f64) -> Option<DVector<f64>> {
    let (m, n) = a.shape();
    if m < n || n == 0 {
        return None;
    }
    let qr = a.clone().qr();
    let r = qr.r();
    let rmax = (0..n).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if rmax == 0.0 || (0..n).any(|i| r[(i, i)].abs() <= rtol * rmax) {
        return None;
    }
    let mut qtb = DVector::from_column_slice(b);
    qr.q_tr_mul(&mut qtb);
    let mut x = qtb.rows(0, n).into_owned();
    if !r.solve_upper_triangular_mut(&mut x) {
        return None;
    }
    Some(x)
}
