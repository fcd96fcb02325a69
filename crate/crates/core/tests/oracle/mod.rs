//! Independent reference implementations used as test oracles. They favour
//! directness over speed and share no code with the library.

#![allow(dead_code)]

/// Cox–de Boor recursion for the `i`-th B-spline of degree `p`. At the right
/// end of a clamped knot vector the last function takes the value 1.
pub fn cox_de_boor(knots: &[f64], i: usize, p: usize, x: f64) -> f64 {
    let last = *knots.last().unwrap();
    let n_basis = knots.len() - p - 1;
    if x == last {
        return if i == n_basis - 1 { 1.0 } else { 0.0 };
    }
    if p == 0 {
        return if knots[i] <= x && x < knots[i + 1] { 1.0 } else { 0.0 };
    }
    let mut v = 0.0;
    let d1 = knots[i + p] - knots[i];
    if d1 > 0.0 {
        v += (x - knots[i]) / d1 * cox_de_boor(knots, i, p - 1, x);
    }
    let d2 = knots[i + p + 1] - knots[i + 1];
    if d2 > 0.0 {
        v += (knots[i + p + 1] - x) / d2 * cox_de_boor(knots, i + 1, p - 1, x);
    }
    v
}

/// Clamped cubic knot vector with `n_interior` equally spaced interior knots.
pub fn clamped_knots(min: f64, max: f64, n_interior: usize) -> Vec<f64> {
    let h = (max - min) / (n_interior + 1) as f64;
    let mut k = vec![min; 4];
    k.extend((1..=n_interior).map(|i| min + i as f64 * h));
    k.extend([max; 4]);
    k
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues in descending order and eigenvectors as columns
/// (`vectors[row][col]`).
pub fn jacobi_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut a: Vec<Vec<f64>> = a.to_vec();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        let diag: f64 = (0..n).map(|i| a[i][i] * a[i][i]).sum();
        if off <= 1e-30 * diag.max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| a[j][j].partial_cmp(&a[i][i]).unwrap());
    let values = idx.iter().map(|&i| a[i][i]).collect();
    let vectors = (0..n).map(|r| idx.iter().map(|&c| v[r][c]).collect()).collect();
    (values, vectors)
}

/// Minimum-norm least squares with singular values below `rtol * σ_max`
/// discarded. `rows` is the dense design, one row per observation.
///
/// One-sided Jacobi on the observation vectors directly (no QR, no column
/// restriction).
pub fn truncated_pinv_solve(rows: &[Vec<f64>], b: &[f64], rtol: f64) -> Vec<f64> {
    let m = rows.len();
    let n = rows[0].len();
    // w_j are the rows; orthogonalise them, tracking the rotation in u (m×m)
    let mut w: Vec<Vec<f64>> = rows.to_vec();
    let mut u = vec![vec![0.0; m]; m];
    for (i, row) in u.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    for _ in 0..100 {
        let mut changed = false;
        for p in 0..m {
            for q in p + 1..m {
                let alpha = dot(&w[p], &w[p]);
                let beta = dot(&w[q], &w[q]);
                let gamma = dot(&w[p], &w[q]);
                if gamma.abs() <= 1e-16 * (alpha * beta).sqrt() || alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                changed = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for k in 0..n {
                    let (x, y) = (w[p][k], w[q][k]);
                    w[p][k] = c * x - s * y;
                    w[q][k] = s * x + c * y;
                }
                for row in u.iter_mut() {
                    let (x, y) = (row[p], row[q]);
                    row[p] = c * x - s * y;
                    row[q] = s * x + c * y;
                }
            }
        }
        if !changed {
            break;
        }
    }
    // A = U Σ Ṽᵀ with ṽ_j = w_j / σ_j
    let sigma: Vec<f64> = w.iter().map(|r| dot(r, r).sqrt()).collect();
    let smax = sigma.iter().cloned().fold(0.0, f64::max);
    let mut x = vec![0.0; n];
    for j in 0..m {
        if sigma[j] > rtol * smax && sigma[j] > 0.0 {
            let ub: f64 = (0..m).map(|i| u[i][j] * b[i]).sum();
            for k in 0..n {
                x[k] += w[j][k] / sigma[j] * ub / sigma[j];
            }
        }
    }
    x
}

/// Solve `AᵀA x = Aᵀb` by Gaussian elimination with partial pivoting.
pub fn normal_equations(rows: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = rows[0].len();
    let mut m = vec![vec![0.0; n + 1]; n];
    for (r, &bi) in rows.iter().zip(b) {
        for i in 0..n {
            for j in 0..n {
                m[i][j] += r[i] * r[j];
            }
            m[i][n] += r[i] * bi;
        }
    }
    for col in 0..n {
        let piv = (col..n).max_by(|&a, &b| m[a][col].abs().partial_cmp(&m[b][col].abs()).unwrap()).unwrap();
        m.swap(col, piv);
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            for c in col..=n {
                m[r][c] -= f * m[col][c];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| m[i][j] * x[j]).sum();
        x[i] = (m[i][n] - s) / m[i][i];
    }
    x
}

/// AR(1)+GARCH(1,1) recursion written out index by index.
pub fn garch_recursion(
    psi: f64,
    omega: f64,
    alpha: f64,
    gamma: f64,
    beta: &[f64],
    eta2_first: f64,
) -> (Vec<f64>, Vec<f64>) {
    let n = beta.len();
    let mut u = vec![0.0; n];
    let mut e = vec![0.0; n];
    u[0] = beta[0];
    e[0] = eta2_first;
    for t in 1..n {
        u[t] = beta[t] - psi * beta[t - 1];
        e[t] = omega + alpha * u[t - 1] * u[t - 1] + gamma * e[t - 1];
    }
    (u, e)
}

/// Gaussian GARCH negative log-likelihood over `t ≥ 2` with conditional
/// variance `η_t²`.
pub fn gaussian_nll(u: &[f64], eta2: &[f64]) -> f64 {
    (1..u.len())
        .map(|t| 0.5 * (2.0 * std::f64::consts::PI * eta2[t]).ln() + u[t] * u[t] / (2.0 * eta2[t]))
        .sum()
}

/// Sample covariance of two equally long series.
pub fn covariance(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / (n - 1.0)
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

pub fn sd(x: &[f64]) -> f64 {
    covariance(x, x).sqrt()
}
