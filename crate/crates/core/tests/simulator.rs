#[path = "oracle/mod.rs"]
mod oracle;

use ftscast_core::garch::GarchParams;
use ftscast_core::simulate::{scatter_locations, simulate_panel, smooth_loadings, Loadings, SimulationConfig};
use ftscast_core::spline::Domain;
use ftscast_core::{Day, TensorSplineBasis};

fn config(n_days: usize, sigma: f64, missing: f64) -> SimulationConfig {
    let splines = TensorSplineBasis::conus();
    SimulationConfig {
        loadings: Loadings::Planted(smooth_loadings(&splines, 3, 4)),
        splines,
        params: vec![
            GarchParams::new(0.6, 2.0, 0.05, 0.85, 10.0),
            GarchParams::new(0.5, 1.5, 0.08, 0.8, 12.0),
            GarchParams::new(0.3, 1.0, 0.05, 0.7, 15.0),
        ],
        sigma,
        mean_offset: -1.0,
        mean_surface_sd: 1.0,
        locations: scatter_locations(10, Domain::CONUS, 3.0, 2).unwrap(),
        n_days,
        start: Day(0),
        horizon: 6,
        missing_rate: missing,
        seed: 31,
    }
}

#[test]
fn cross_city_covariance_matches_unconditional_form() {
    let cfg = config(100_000, 0.5, 0.0);
    let sim = simulate_panel(&cfg).unwrap();
    let phi = &sim.truth.phi;
    let cols: Vec<Vec<f64>> = (0..10).map(|i| sim.panel.errors().column(i).map(|v| v.unwrap()).collect()).collect();
    // Var β_k for AR(1)+GARCH-t with squared-scale η²
    let var_beta: Vec<f64> = cfg
        .params
        .iter()
        .map(|p| {
            let f = p.nu / (p.nu - 2.0);
            f * p.omega / (1.0 - p.gamma - p.alpha * f) / (1.0 - p.psi * p.psi)
        })
        .collect();
    for i in 0..10 {
        let mut c = cfg.sigma * cfg.sigma;
        for k in 0..3 {
            c += var_beta[k] * phi[(i, k)] * phi[(i, k)];
        }
        let sample = oracle::covariance(&cols[i], &cols[i]);
        assert!((sample / c - 1.0).abs() < 0.03, "city {i}: sample {sample} theory {c}");
    }
    // off-diagonal entries, judged against the diagonal scale
    for i in 0..10 {
        for j in i + 1..10 {
            let c: f64 = (0..3).map(|k| var_beta[k] * phi[(i, k)] * phi[(j, k)]).sum();
            let scale = (oracle::covariance(&cols[i], &cols[i]) * oracle::covariance(&cols[j], &cols[j])).sqrt();
            assert!((oracle::covariance(&cols[i], &cols[j]) - c).abs() < 0.03 * scale);
        }
    }
}

#[test]
fn noise_is_independent_of_coefficients() {
    let sim = simulate_panel(&config(50_000, 1.0, 0.0)).unwrap();
    let t = sim.panel.n_days();
    for i in 0..10 {
        let eps: Vec<f64> = (0..t)
            .map(|d| {
                let signal: f64 = (0..3).map(|k| sim.truth.betas[(d, k)] * sim.truth.phi[(i, k)]).sum();
                sim.panel.day(d)[i].unwrap() - sim.truth.mu[i] - signal
            })
            .collect();
        for k in 0..3 {
            let beta: Vec<f64> = sim.truth.betas.column(k).iter().copied().collect();
            let r = oracle::covariance(&eps, &beta) / (oracle::sd(&eps) * oracle::sd(&beta));
            assert!(r.abs() < 4.0 / (t as f64).sqrt(), "city {i} k {k}: {r}");
        }
    }
}

#[test]
fn noise_and_masking_do_not_perturb_the_coefficient_path() {
    let a = simulate_panel(&config(500, 0.5, 0.0)).unwrap();
    let b = simulate_panel(&config(500, 2.0, 0.3)).unwrap();
    assert_eq!(a.truth.betas, b.truth.betas);
    let c = simulate_panel(&config(500, 0.5, 0.3)).unwrap();
    let mut masked = 0;
    for t in 0..500 {
        for i in 0..10 {
            match c.panel.day(t)[i] {
                Some(v) => assert_eq!(Some(v), a.panel.day(t)[i]),
                None => masked += 1,
            }
        }
    }
    let rate = masked as f64 / 5000.0;
    assert!((rate - 0.3).abs() < 0.03, "masked fraction {rate}");
}

#[test]
fn errors_are_forecast_minus_actual() {
    let sim = simulate_panel(&config(50, 0.5, 0.2)).unwrap();
    for t in 0..50 {
        for i in 0..10 {
            match (sim.forecasts.get(t, i), sim.actuals.get(t, i), sim.panel.day(t)[i]) {
                (Some(f), Some(a), Some(y)) => {
                    assert_eq!(f - a, y);
                    assert_eq!(a.fract(), 0.0);
                }
                (None, None, None) => {}
                other => panic!("inconsistent masking {other:?}"),
            }
        }
    }
}
