#[path = "oracle/mod.rs"]
mod oracle;

use approx::assert_abs_diff_eq;
use ftscast_core::spline::{Domain, KnotVector};
use ftscast_core::{Error, TensorSplineBasis};
use proptest::prelude::*;

#[test]
fn conus_knots_match_published_values() {
    let lon = KnotVector::clamped(-124.0, -66.0, 13).unwrap();
    let lat = KnotVector::clamped(24.0, 49.0, 13).unwrap();
    assert_eq!(&lon.knots()[..4], &[-124.0; 4]);
    assert_eq!(&lon.knots()[17..], &[-66.0; 4]);
    assert_eq!(lon.n_basis(), 17);
    let round2 = |x: f64| (x * 100.0).round() / 100.0;
    assert_eq!(round2(lon.knots()[4]), -119.86);
    assert_eq!(round2(lon.knots()[5]), -115.71);
    assert_eq!(round2(lat.knots()[4]), 25.79);
    assert_eq!(round2(lat.knots()[5]), 27.57);
    assert_abs_diff_eq!(lon.knots()[5] - lon.knots()[4], 58.0 / 14.0, epsilon = 1e-12);
}

#[test]
fn knot_vector_errors() {
    assert!(matches!(KnotVector::clamped(1.0, 1.0, 3), Err(Error::InvalidRange { .. })));
    assert!(matches!(KnotVector::clamped(2.0, 1.0, 3), Err(Error::InvalidRange { .. })));
    let kv = KnotVector::clamped(0.0, 1.0, 0).unwrap();
    assert!(matches!(kv.eval(1.5), Err(Error::OutOfDomain { .. })));
    assert!(matches!(kv.eval(-0.1), Err(Error::OutOfDomain { .. })));
}

#[test]
fn bezier_segment_midpoint() {
    let kv = KnotVector::clamped(0.0, 1.0, 0).unwrap();
    assert_eq!(kv.knots(), &[0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0]);
    let v = kv.eval(0.5).unwrap();
    for (a, b) in v.iter().zip([0.125, 0.375, 0.375, 0.125]) {
        assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
    }
}

#[test]
fn endpoints_interpolate() {
    let kv = KnotVector::clamped(-124.0, -66.0, 13).unwrap();
    let left = kv.eval(-124.0).unwrap();
    assert_eq!(left[0], 1.0);
    assert!(left[1..].iter().all(|&v| v == 0.0));
    let right = kv.eval(-66.0).unwrap();
    assert_eq!(right[16], 1.0);
    assert!(right[..16].iter().all(|&v| v == 0.0));
}

#[test]
fn corners_have_single_entry() {
    let b = TensorSplineBasis::conus();
    let d = b.domain();
    for (lon, lat, i_lon, i_lat) in [
        (d.lon_min, d.lat_min, 0, 0),
        (d.lon_max, d.lat_min, 16, 0),
        (d.lon_min, d.lat_max, 0, 16),
        (d.lon_max, d.lat_max, 16, 16),
    ] {
        let row = b.eval(lon, lat).unwrap();
        assert_eq!(row.len(), 1);
        assert_eq!(row.indices()[0], b.flat_index(i_lon, i_lat));
        assert_eq!(row.values()[0], 1.0);
    }
}

#[test]
fn lon_major_flattening() {
    let b = TensorSplineBasis::conus();
    assert_eq!(b.n_basis(), 289);
    assert_eq!(b.flat_index(0, 1), 1);
    assert_eq!(b.flat_index(1, 0), 17);
    for j in 0..289 {
        let (i, k) = b.split_index(j);
        assert_eq!(b.flat_index(i, k), j);
    }
}

#[test]
fn outside_rectangle_rejected() {
    let b = TensorSplineBasis::conus();
    assert!(b.eval(-130.0, 30.0).is_err());
    assert!(b.eval(-100.0, 50.0).is_err());
    let d = Domain { lon_min: 0.0, lon_max: 1.0, lat_min: 0.0, lat_max: 1.0 };
    assert!(TensorSplineBasis::uniform(d, 2, 2).unwrap().eval(0.5, 0.5).is_ok());
}

fn lon() -> impl Strategy<Value = f64> {
    -124.0..=-66.0f64
}

fn lat() -> impl Strategy<Value = f64> {
    24.0..=49.0f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn one_dimensional_matches_cox_de_boor(x in lon(), n_int in 0usize..20) {
        let kv = KnotVector::clamped(-124.0, -66.0, n_int).unwrap();
        let knots = oracle::clamped_knots(-124.0, -66.0, n_int);
        let v = kv.eval(x).unwrap();
        prop_assert_eq!(v.len(), n_int + 4);
        for (i, &vi) in v.iter().enumerate() {
            let o = oracle::cox_de_boor(&knots, i, 3, x);
            prop_assert!((vi - o).abs() < 1e-12, "i={} lib={} oracle={}", i, vi, o);
        }
    }

    #[test]
    fn one_dimensional_partition_support_sign(x in lat()) {
        let kv = KnotVector::clamped(24.0, 49.0, 13).unwrap();
        let v = kv.eval(x).unwrap();
        prop_assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        prop_assert!(v.iter().all(|&b| b >= 0.0));
        let nz: Vec<usize> = (0..v.len()).filter(|&i| v[i] != 0.0).collect();
        prop_assert!(!nz.is_empty() && nz.len() <= 4);
        prop_assert_eq!(nz.last().unwrap() - nz[0] + 1, nz.len());
    }

    #[test]
    fn tensor_matches_product_oracle(x in lon(), y in lat()) {
        let b = TensorSplineBasis::conus();
        let (kx, ky) = (oracle::clamped_knots(-124.0, -66.0, 13), oracle::clamped_knots(24.0, 49.0, 13));
        let dense = b.eval_dense(x, y).unwrap();
        let row = b.eval(x, y).unwrap();
        prop_assert!(row.len() <= 16);
        prop_assert!((row.values().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(row.values().iter().all(|&v| v >= 1e-14));
        for i in 0..17 {
            for j in 0..17 {
                let o = oracle::cox_de_boor(&kx, i, 3, x) * oracle::cox_de_boor(&ky, j, 3, y);
                let o = if o.abs() < 1e-14 { 0.0 } else { o };
                prop_assert!((dense[b.flat_index(i, j)] - o).abs() < 1e-12);
            }
        }
    }
}
