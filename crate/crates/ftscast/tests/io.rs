use std::fs;
use std::path::Path;

use ftscast::artifact::Artifact;
use ftscast::config::PipelineConfig;
use ftscast::pipeline;
use ftscast::table::{self, OnMalformed};
use ftscast::Error;

fn small_config() -> PipelineConfig {
    let mut c = PipelineConfig::default();
    c.k = 2;
    c.simulation.n_cities = 40;
    c.simulation.n_days = 260;
    c.simulation.factors.truncate(2);
    c.simulation.min_separation = 2.0;
    c
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    out.sort();
    out
}

#[test]
fn simulated_table_round_trips() {
    let cfg = small_config();
    let sim = pipeline::simulate(&cfg).unwrap();
    let p = &sim.panel;
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("panel.csv");
    table::write_table(&path, p.horizon(), p.dates(), p.locations(), &sim.forecasts, &sim.actuals).unwrap();
    let back = table::read_table(&path, p.horizon() as i64, OnMalformed::Fail).unwrap();
    assert_eq!(&back.panel, p);
    assert_eq!(back.forecasts, sim.forecasts);
    assert_eq!(back.actuals, sim.actuals);
    assert!(back.report.rejected.is_empty() && back.report.duplicates.is_empty());
    // other horizons are absent from a simulated file
    let other = (p.horizon() as i64 + 1) % 7;
    assert!(matches!(table::read_table(&path, other, OnMalformed::Skip), Err(Error::EmptySelection { .. })));
}

#[test]
fn artifact_round_trip_and_determinism() {
    let cfg = small_config();
    let panel = pipeline::simulate(&cfg).unwrap().panel;
    let a = pipeline::fit(&cfg, &panel).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let (d1, d2) = (tmp.path().join("m1"), tmp.path().join("m2"));
    a.save(&d1).unwrap();
    let loaded = Artifact::load(&d1).unwrap();
    assert_eq!(loaded, a);

    // the config snapshot alone reproduces the artifact byte for byte
    let again = pipeline::fit(&loaded.config, &panel).unwrap();
    again.save(&d2).unwrap();
    assert_eq!(dir_bytes(&d1), dir_bytes(&d2));

    // saving over an existing artifact replaces it and leaves no temporaries
    a.save(&d1).unwrap();
    let names: Vec<String> = fs::read_dir(tmp.path()).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    assert_eq!(names.len(), 2, "{names:?}");
}

#[test]
fn tampered_artifact_is_rejected() {
    let cfg = small_config();
    let panel = pipeline::simulate(&cfg).unwrap().panel;
    let a = pipeline::fit(&cfg, &panel).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("m");
    a.save(&dir).unwrap();
    let betas = dir.join("betas.csv");
    let mut text = fs::read_to_string(&betas).unwrap();
    text.push_str("2099-01-01,1,0\n");
    fs::write(&betas, text).unwrap();
    let err = Artifact::load(&dir).unwrap_err();
    assert_eq!(err.kind(), "artifact");
    assert!(err.to_string().contains("checksum"));
}

#[test]
fn artifact_shapes_are_consistent() {
    let cfg = small_config();
    let panel = pipeline::simulate(&cfg).unwrap().panel;
    let a = pipeline::fit(&cfg, &panel).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    a.save(tmp.path().join("m").as_path()).unwrap();
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(tmp.path().join("m/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["version"], 1);
    assert_eq!(manifest["shapes"]["k"], 2);
    assert_eq!(manifest["shapes"]["n_basis"], 289);
    assert_eq!(manifest["garch"].as_array().unwrap().len(), 2);
    assert_eq!(manifest["data"]["fingerprint"].as_str().unwrap().len(), 64);
    assert_eq!(manifest["files"].as_object().unwrap().len(), 8);
    assert_eq!(a.model.basis.loadings().shape(), (289, 2));
}

#[test]
fn k_beyond_day_count_is_out_of_range() {
    let mut cfg = small_config();
    cfg.simulation.n_days = 12;
    cfg.k = 20;
    let panel = pipeline::simulate(&cfg).unwrap().panel;
    let err = pipeline::fit(&cfg, &panel).unwrap_err();
    assert_eq!(err.kind(), "k-out-of-range");
}

#[test]
fn filtered_predictions_extend_past_the_fit() {
    let cfg = small_config();
    let sim = pipeline::simulate(&cfg).unwrap();
    let p = &sim.panel;
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("panel.csv");
    table::write_table(&path, p.horizon(), p.dates(), p.locations(), &sim.forecasts, &sim.actuals).unwrap();
    let full = table::read_table(&path, 6, OnMalformed::Fail).unwrap();
    let head = p.head(200);
    let a = pipeline::fit(&cfg, &head).unwrap();
    let preds = pipeline::filtered_predictions(&a, &full).unwrap();
    assert_eq!(preds.len(), p.n_days());
    // within the fitted sample, identical to the model's own filter
    let own = a.model.filtered_predictions(p.locations(), &p.dates()[..200]).unwrap();
    for (d, f) in own.iter() {
        assert_eq!(preds.field(d).unwrap(), f);
    }
    // beyond it, each day only depends on earlier days
    let shorter = table::ForecastTable { panel: p.head(230), ..full.clone() };
    let preds_short = pipeline::filtered_predictions(&a, &shorter).unwrap();
    for (d, f) in preds_short.iter() {
        assert_eq!(preds.field(d).unwrap(), f);
    }
}
