#[path = "oracle/mod.rs"]
mod oracle;

use approx::assert_abs_diff_eq;
use ftscast_core::spatial::{build_basis, export_basis_grid, principal_components, SpatialBasis};
use ftscast_core::surface::{estimate_mean, CoefficientMatrix, DayFit, MeanField};
use ftscast_core::{Day, Error, Location, MaskedMatrix, ObservationPanel, TensorSplineBasis};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn coefficient_matrix(rows: &[Vec<f64>]) -> CoefficientMatrix {
    let m = rows.len();
    let panel = ObservationPanel::new(
        6,
        (0..m as i32).map(Day).collect(),
        vec![Location::new("a", "", -100.0, 30.0)],
        MaskedMatrix::new(m, 1, vec![Some(0.0); m]).unwrap(),
    )
    .unwrap();
    let fits = rows.iter().map(|c| Ok(DayFit { coeffs: c.clone(), rank: 0, residual_norm: 0.0, n_obs: 1 })).collect();
    CoefficientMatrix::assemble(&panel, 0.0, fits).unwrap()
}

fn random_rows(m: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..m).map(|_| (0..289).map(|_| rng.random_range(-1.0..1.0)).collect()).collect()
}

#[test]
fn loadings_match_covariance_eigenvectors() {
    let rows = random_rows(50, 17);
    let c = coefficient_matrix(&rows);
    let mean = estimate_mean(&c).unwrap();
    let pcs = principal_components(&c, &mean).unwrap();

    let cols: Vec<Vec<f64>> = (0..289).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
    let cov: Vec<Vec<f64>> = (0..289).map(|a| (0..289).map(|b| oracle::covariance(&cols[a], &cols[b])).collect()).collect();
    let (values, vectors) = oracle::jacobi_eigen(&cov);

    let v = pcs.loadings();
    for k in 0..49 {
        assert_abs_diff_eq!(pcs.singular_values()[k].powi(2) / 49.0, values[k], epsilon = 1e-10 * values[0]);
        let dot: f64 = (0..289).map(|j| v[(j, k)] * vectors[j][k]).sum();
        let sign = dot.signum();
        for j in 0..289 {
            assert_abs_diff_eq!(v[(j, k)], sign * vectors[j][k], epsilon = 1e-8);
        }
    }
}

#[test]
fn orthonormal_sorted_and_signed() {
    let c = coefficient_matrix(&random_rows(50, 2));
    let mean = estimate_mean(&c).unwrap();
    let basis = build_basis(&TensorSplineBasis::conus(), &c, &mean, 20).unwrap();
    let l = basis.loadings();
    let gram = l.transpose() * l;
    assert!((gram - DMatrix::identity(20, 20)).amax() < 1e-10);
    let s = basis.singular_values();
    assert!(s.windows(2).all(|w| w[0] >= w[1]));
    let ev = basis.explained_variance();
    assert_eq!(ev.len(), 20);
    assert!(ev.windows(2).all(|w| w[0] >= w[1]));
    assert!(ev.iter().sum::<f64>() <= 1.0 + 1e-12);
    for k in 0..20 {
        let col = l.column(k);
        let big = col.iter().copied().fold(0.0f64, |a, x| if x.abs() > a.abs() { x } else { a });
        assert!(big > 0.0);
    }
}

#[test]
fn rank_one_matrix_gives_its_direction() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let dir: Vec<f64> = (0..289).map(|_| rng.random_range(-1.0..1.0)).collect();
    let scales = [1.0, -2.0, 0.5, 3.0, -2.5, 0.0];
    let mean_s = scales.iter().sum::<f64>() / scales.len() as f64;
    let rows: Vec<Vec<f64>> = scales.iter().map(|s| dir.iter().map(|d| (s - mean_s) * d).collect()).collect();
    let c = coefficient_matrix(&rows);
    let mean = MeanField { grand_mean: 0.0, mean_coeffs: vec![0.0; 289] };
    let basis = build_basis(&TensorSplineBasis::conus(), &c, &mean, 1).unwrap();
    let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
    let big = dir.iter().copied().fold(0.0f64, |a, x| if x.abs() > a.abs() { x } else { a });
    for j in 0..289 {
        assert_abs_diff_eq!(basis.loadings()[(j, 0)], big.signum() * dir[j] / norm, epsilon = 1e-12);
    }
    assert_abs_diff_eq!(basis.explained_variance()[0], 1.0, epsilon = 1e-12);
}

#[test]
fn top_k_beats_random_projections() {
    let rows = random_rows(40, 8);
    let c = coefficient_matrix(&rows);
    let mean = estimate_mean(&c).unwrap();
    let pcs = principal_components(&c, &mean).unwrap();
    let mut centered = c.values().clone();
    for (j, mut col) in centered.column_iter_mut().enumerate() {
        col.add_scalar_mut(-mean.mean_coeffs[j]);
    }
    let err = |q: &DMatrix<f64>| (&centered - &centered * q * q.transpose()).norm();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for k in [1, 5, 10] {
        let best = err(&pcs.loadings().columns(0, k).into_owned());
        for _ in 0..10 {
            let q = DMatrix::from_fn(289, k, |_, _| rng.random_range(-1.0..1.0)).qr().q();
            assert!(best <= err(&q) + 1e-9);
        }
    }
}

#[test]
fn k_out_of_range() {
    let c = coefficient_matrix(&random_rows(6, 3));
    let mean = estimate_mean(&c).unwrap();
    let s = TensorSplineBasis::conus();
    assert_eq!(build_basis(&s, &c, &mean, 0).unwrap_err(), Error::KOutOfRange { k: 0, max: 6 });
    assert_eq!(build_basis(&s, &c, &mean, 7).unwrap_err(), Error::KOutOfRange { k: 7, max: 6 });
    let basis = build_basis(&s, &c, &mean, 2).unwrap();
    assert!(matches!(export_basis_grid(&basis, 3, 4, 4), Err(Error::KOutOfRange { .. })));
    assert!(matches!(export_basis_grid(&basis, 0, 4, 4), Err(Error::KOutOfRange { .. })));
}

#[test]
fn evaluation_matches_direct_sum() {
    let splines = TensorSplineBasis::conus();
    let c = coefficient_matrix(&random_rows(30, 12));
    let basis = build_basis(&splines, &c, &estimate_mean(&c).unwrap(), 4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..200 {
        let (lon, lat) = (rng.random_range(-124.0..=-66.0), rng.random_range(24.0..=49.0));
        let s = splines.eval_dense(lon, lat).unwrap();
        let phi = basis.eval(lon, lat).unwrap();
        for k in 0..4 {
            let direct: f64 = (0..289).map(|j| basis.loadings()[(j, k)] * s[j]).sum();
            assert_abs_diff_eq!(phi[k], direct, epsilon = 1e-12);
        }
    }
}

#[test]
fn corner_indicator_loading() {
    let splines = TensorSplineBasis::conus();
    let mut l = DMatrix::zeros(289, 1);
    l[(0, 0)] = 1.0;
    let basis = SpatialBasis::from_parts(splines, l, vec![1.0]).unwrap();
    assert_eq!(basis.eval(-124.0, 24.0).unwrap(), vec![1.0]);
}

#[test]
fn grids() {
    let splines = TensorSplineBasis::conus();
    let c = coefficient_matrix(&random_rows(10, 4));
    let basis = build_basis(&splines, &c, &estimate_mean(&c).unwrap(), 3).unwrap();
    let g = export_basis_grid(&basis, 2, 2, 2).unwrap();
    assert_eq!(g.values.len(), 4);
    assert_eq!((g.lons.clone(), g.lats.clone()), (vec![-124.0, -66.0], vec![24.0, 49.0]));
    let g = export_basis_grid(&basis, 3, 25, 13).unwrap();
    for (lon, lat, v) in g.points() {
        assert_abs_diff_eq!(v, basis.eval(lon, lat).unwrap()[2], epsilon = 1e-14);
    }
    assert_eq!(g.get(24, 0), basis.eval(-66.0, 24.0).unwrap()[2]);

    let zero = SpatialBasis::from_parts(splines, DMatrix::zeros(289, 1), vec![0.0]).unwrap();
    assert!(export_basis_grid(&zero, 1, 10, 10).unwrap().values.iter().all(|&v| v == 0.0));
}
