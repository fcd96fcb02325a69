//! Model artifacts: a directory of CSV matrices and a JSON manifest.
//!
//! | file                  | columns                                                    |
//! |-----------------------|------------------------------------------------------------|
//! | `manifest.json`       | version, shapes, SHA-256 of every CSV, config snapshot, data fingerprint, GARCH summaries, final state |
//! | `cities.csv`          | `city_id, city_name, longitude, latitude`                  |
//! | `mean.csv`            | `j, i_lon, i_lat, value` (mean spline coefficients)        |
//! | `loadings.csv`        | `j, i_lon, i_lat, phi_1 .. phi_K`                          |
//! | `singular_values.csv` | `component, singular_value, explained_variance`            |
//! | `coefficients.csv`    | `date, panel_row, rank, n_obs, residual_norm, c_1 .. c_n`  |
//! | `betas.csv`           | `date, k, value`                                           |
//! | `projection.csv`      | `date, panel_row, residual_norm`                           |
//! | `filtered.csv`        | `date, k, innovation, scale`                               |
//!
//! Numbers are written in shortest round-trip form, so loading reproduces
//! every stored value bit for bit. Saving is atomic: the directory is built
//! under a temporary name and renamed into place.

use std::collections::BTreeMap;
use std::path::Path;

use ftscast_core::coefficients::BetaSeries;
use ftscast_core::garch::{BoundaryFlags, Filtered, GarchFit, GarchParams};
use ftscast_core::model::{FittedModel, Model};
use ftscast_core::predict::{CoefficientState, PredictionState};
use ftscast_core::spatial::SpatialBasis;
use ftscast_core::surface::{CoefficientMatrix, MeanField, SkippedDay};
use ftscast_core::{Day, Location, ObservationPanel};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::PipelineConfig;
use crate::dates;
use crate::error::{Error, Result};
use crate::fsutil;

pub const FORMAT: &str = "ftscast-model";
pub const VERSION: u32 = 1;
pub const MANIFEST: &str = "manifest.json";

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

/// Hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash of the panel contents: horizon, dates, cities and every cell.
pub fn fingerprint(panel: &ObservationPanel) -> String {
    let mut h = Sha256::new();
    h.update([panel.horizon()]);
    h.update((panel.n_days() as u64).to_le_bytes());
    for d in panel.dates() {
        h.update(d.0.to_le_bytes());
    }
    h.update((panel.n_cities() as u64).to_le_bytes());
    for l in panel.locations() {
        for s in [&l.id, &l.name] {
            h.update((s.len() as u64).to_le_bytes());
            h.update(s.as_bytes());
        }
        h.update(l.lon.to_bits().to_le_bytes());
        h.update(l.lat.to_bits().to_le_bytes());
    }
    for v in panel.errors().as_slice() {
        match v {
            Some(v) => {
                h.update([1]);
                h.update(v.to_bits().to_le_bytes());
            }
            None => h.update([0]),
        }
    }
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataInfo {
    pub fingerprint: String,
    pub horizon: u8,
    pub n_days: usize,
    pub n_cities: usize,
    pub n_observed: usize,
    pub first_date: String,
    pub last_date: String,
}

impl DataInfo {
    pub fn of(panel: &ObservationPanel) -> Self {
        let fmt = |d: Option<&Day>| d.map(|&d| dates::format(d)).unwrap_or_default();
        DataInfo {
            fingerprint: fingerprint(panel),
            horizon: panel.horizon(),
            n_days: panel.n_days(),
            n_cities: panel.n_cities(),
            n_observed: panel.errors().observed_count(),
            first_date: fmt(panel.dates().first()),
            last_date: fmt(panel.dates().last()),
        }
    }
}

/// Everything about one GARCH fit except the filtered series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GarchSummary {
    pub k: usize,
    pub params: GarchParams,
    /// Order `psi, omega, alpha, gamma, nu`; `None` where unavailable.
    pub std_errors: [Option<f64>; 5],
    pub t_ratios: [Option<f64>; 5],
    pub p_values: [Option<f64>; 5],
    pub log_likelihood: f64,
    pub initial_scale: f64,
    pub n_obs: usize,
    pub gradient_norm: Option<f64>,
    pub converged: bool,
    pub boundary: BoundaryFlags,
    pub short_series: bool,
    pub evaluations: usize,
}

impl GarchSummary {
    pub fn of(k: usize, g: &GarchFit) -> Self {
        GarchSummary {
            k: k + 1,
            params: g.params,
            std_errors: g.std_errors.map(finite),
            t_ratios: g.t_ratios.map(finite),
            p_values: g.p_values.map(finite),
            log_likelihood: g.log_likelihood,
            initial_scale: g.initial_scale,
            n_obs: g.n_obs,
            gradient_norm: finite(g.gradient_norm),
            converged: g.converged,
            boundary: g.boundary,
            short_series: g.short_series,
            evaluations: g.evaluations,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkipRecord {
    pub stage: String,
    pub date: String,
    pub panel_row: usize,
    pub reason: String,
}

impl SkipRecord {
    fn of(stage: &str, s: &SkippedDay) -> Self {
        SkipRecord { stage: stage.into(), date: dates::format(s.date), panel_row: s.row, reason: s.reason.to_string() }
    }
}

/// The per-day spline fits the basis was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredCoefficients {
    pub offset: f64,
    pub dates: Vec<Day>,
    pub panel_rows: Vec<usize>,
    pub ranks: Vec<usize>,
    pub n_obs: Vec<usize>,
    pub residual_norms: Vec<f64>,
    /// Days x basis functions.
    pub values: DMatrix<f64>,
}

impl From<&CoefficientMatrix> for StoredCoefficients {
    fn from(c: &CoefficientMatrix) -> Self {
        StoredCoefficients {
            offset: c.offset(),
            dates: c.dates().to_vec(),
            panel_rows: c.panel_rows().to_vec(),
            ranks: c.ranks().to_vec(),
            n_obs: c.n_obs().to_vec(),
            residual_norms: c.residual_norms().to_vec(),
            values: c.values().clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Shapes {
    n_basis: usize,
    n_lon: usize,
    n_lat: usize,
    k: usize,
    n_components: usize,
    n_cities: usize,
    n_coefficient_days: usize,
    n_beta_days: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Knots {
    lon: Vec<f64>,
    lat: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct StateRecord {
    date: String,
    coefficients: Vec<CoefficientState>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    format: String,
    version: u32,
    shapes: Shapes,
    files: BTreeMap<String, String>,
    config: PipelineConfig,
    data: DataInfo,
    knots: Knots,
    grand_mean: f64,
    coefficient_offset: f64,
    noise_variance: f64,
    initial_scales: Vec<f64>,
    garch: Vec<GarchSummary>,
    state: StateRecord,
    skipped: Vec<SkipRecord>,
}

/// A fitted model with what is needed to inspect, reuse and re-run it.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub config: PipelineConfig,
    pub data: DataInfo,
    pub locations: Vec<Location>,
    pub model: Model,
    pub garch: Vec<GarchSummary>,
    /// Per coefficient, aligned with `model.betas`.
    pub filtered: Vec<Filtered>,
    pub coefficients: StoredCoefficients,
    pub skipped: Vec<SkipRecord>,
}

impl Artifact {
    pub fn new(config: &PipelineConfig, panel: &ObservationPanel, fitted: &FittedModel) -> Self {
        let skipped = fitted
            .surface_skipped
            .iter()
            .map(|s| SkipRecord::of("surface", s))
            .chain(fitted.projection_skipped.iter().map(|s| SkipRecord::of("projection", s)))
            .collect();
        Artifact {
            config: config.clone(),
            data: DataInfo::of(panel),
            locations: panel.locations().to_vec(),
            model: fitted.model.clone(),
            garch: fitted.garch.iter().enumerate().map(|(k, g)| GarchSummary::of(k, g)).collect(),
            filtered: fitted.garch.iter().map(|g| g.filtered.clone()).collect(),
            coefficients: StoredCoefficients::from(&fitted.coefficients),
            skipped,
        }
    }

    /// Write the artifact to `dir`, replacing what was there.
    pub fn save(&self, dir: &Path) -> Result<()> {
        let files = self.csv_files()?;
        let manifest = self.manifest(&files);
        let mut json = serde_json::to_vec_pretty(&manifest).map_err(|source| Error::Json { path: dir.join(MANIFEST), source })?;
        json.push(b'\n');
        fsutil::write_dir_atomic(dir, |tmp| {
            for (name, bytes) in &files {
                fsutil::write_atomic(&tmp.join(name), bytes)?;
            }
            fsutil::write_atomic(&tmp.join(MANIFEST), &json)
        })
    }

    fn manifest(&self, files: &BTreeMap<String, Vec<u8>>) -> Manifest {
        let m = &self.model;
        let splines = m.basis.splines();
        Manifest {
            format: FORMAT.into(),
            version: VERSION,
            shapes: Shapes {
                n_basis: splines.n_basis(),
                n_lon: splines.lon_knots().n_basis(),
                n_lat: splines.lat_knots().n_basis(),
                k: m.k(),
                n_components: m.basis.singular_values().len(),
                n_cities: self.locations.len(),
                n_coefficient_days: self.coefficients.dates.len(),
                n_beta_days: m.betas.len(),
            },
            files: files.iter().map(|(n, b)| (n.clone(), sha256_hex(b))).collect(),
            config: self.config.clone(),
            data: self.data.clone(),
            knots: Knots { lon: splines.lon_knots().knots().to_vec(), lat: splines.lat_knots().knots().to_vec() },
            grand_mean: m.mean.grand_mean,
            coefficient_offset: self.coefficients.offset,
            noise_variance: m.noise_variance,
            initial_scales: m.initial_scales.clone(),
            garch: self.garch.clone(),
            state: StateRecord { date: dates::format(m.state.date()), coefficients: m.state.coefficients().to_vec() },
            skipped: self.skipped.clone(),
        }
    }

    fn csv_files(&self) -> Result<BTreeMap<String, Vec<u8>>> {
        let m = &self.model;
        let splines = m.basis.splines();
        let n_lat = splines.lat_knots().n_basis();
        let k = m.k();
        let mut files = BTreeMap::new();

        let mut w = Csv::new(["city_id", "city_name", "longitude", "latitude"]);
        for l in &self.locations {
            w.row([l.id.clone(), l.name.clone(), num(l.lon), num(l.lat)]);
        }
        files.insert("cities.csv".into(), w.finish()?);

        let mut w = Csv::new(["j", "i_lon", "i_lat", "value"]);
        for (j, v) in m.mean.mean_coeffs.iter().enumerate() {
            w.row([j.to_string(), (j / n_lat).to_string(), (j % n_lat).to_string(), num(*v)]);
        }
        files.insert("mean.csv".into(), w.finish()?);

        let mut w = Csv::new(["j", "i_lon", "i_lat"].into_iter().map(String::from).chain((1..=k).map(|c| format!("phi_{c}"))));
        let phi = m.basis.loadings();
        for j in 0..phi.nrows() {
            w.row([j.to_string(), (j / n_lat).to_string(), (j % n_lat).to_string()].into_iter().chain(phi.row(j).iter().map(|v| num(*v))));
        }
        files.insert("loadings.csv".into(), w.finish()?);

        let mut w = Csv::new(["component", "singular_value", "explained_variance"]);
        let sv = m.basis.singular_values();
        let total: f64 = sv.iter().map(|s| s * s).sum();
        for (i, s) in sv.iter().enumerate() {
            let share = if total > 0.0 { s * s / total } else { 0.0 };
            w.row([(i + 1).to_string(), num(*s), num(share)]);
        }
        files.insert("singular_values.csv".into(), w.finish()?);

        let c = &self.coefficients;
        let head = ["date", "panel_row", "rank", "n_obs", "residual_norm"].into_iter().map(String::from);
        let mut w = Csv::new(head.chain((1..=c.values.ncols()).map(|j| format!("c_{j}"))));
        for i in 0..c.dates.len() {
            let meta = [dates::format(c.dates[i]), c.panel_rows[i].to_string(), c.ranks[i].to_string(), c.n_obs[i].to_string(), num(c.residual_norms[i])];
            w.row(meta.into_iter().chain(c.values.row(i).iter().map(|v| num(*v))));
        }
        files.insert("coefficients.csv".into(), w.finish()?);

        let b = &m.betas;
        let mut w = Csv::new(["date", "k", "value"]);
        for (i, &d) in b.dates().iter().enumerate() {
            let date = dates::format(d);
            for c in 0..k {
                w.row([date.clone(), (c + 1).to_string(), num(b.values()[(i, c)])]);
            }
        }
        files.insert("betas.csv".into(), w.finish()?);

        let mut w = Csv::new(["date", "panel_row", "residual_norm"]);
        for (i, &d) in b.dates().iter().enumerate() {
            w.row([dates::format(d), b.panel_rows()[i].to_string(), num(b.residual_norms()[i])]);
        }
        files.insert("projection.csv".into(), w.finish()?);

        let mut w = Csv::new(["date", "k", "innovation", "scale"]);
        for (i, &d) in b.dates().iter().enumerate() {
            let date = dates::format(d);
            for (c, f) in self.filtered.iter().enumerate() {
                w.row([date.clone(), (c + 1).to_string(), num(f.innovations[i]), num(f.scales[i])]);
            }
        }
        files.insert("filtered.csv".into(), w.finish()?);
        Ok(files)
    }

    /// Read and verify an artifact directory.
    pub fn load(dir: &Path) -> Result<Self> {
        let bad = |reason: String| Error::artifact(dir, reason);
        let mpath = dir.join(MANIFEST);
        let manifest: Manifest =
            serde_json::from_slice(&fsutil::read(&mpath)?).map_err(|source| Error::Json { path: mpath, source })?;
        if manifest.format != FORMAT || manifest.version != VERSION {
            return Err(bad(format!("unsupported format {} version {}", manifest.format, manifest.version)));
        }
        manifest.config.validate()?;
        let mut files = BTreeMap::new();
        for (name, hash) in &manifest.files {
            let bytes = fsutil::read(&dir.join(name))?;
            if &sha256_hex(&bytes) != hash {
                return Err(bad(format!("{name}: checksum mismatch")));
            }
            files.insert(name.clone(), bytes);
        }
        let file = |name: &str| -> Result<Vec<csv::StringRecord>> {
            let bytes = files.get(name).ok_or_else(|| bad(format!("{name} not listed in manifest")))?;
            read_records(bytes, &dir.join(name))
        };
        let sh = &manifest.shapes;

        let splines = manifest.config.model_config().splines()?;
        if splines.lon_knots().knots() != manifest.knots.lon.as_slice() || splines.lat_knots().knots() != manifest.knots.lat.as_slice() {
            return Err(bad("knots differ from those implied by the config snapshot".into()));
        }
        if splines.n_basis() != sh.n_basis || splines.lon_knots().n_basis() != sh.n_lon {
            return Err(bad("basis dimension differs from shapes".into()));
        }
        if sh.k != manifest.config.k as usize || sh.k != manifest.garch.len() || sh.k != manifest.initial_scales.len() {
            return Err(bad("K differs between shapes, config and GARCH fits".into()));
        }

        let locations = file("cities.csv")?
            .iter()
            .map(|r| Ok(Location::new(field(r, 0), field(r, 1), parse_f(r, 2)?, parse_f(r, 3)?)))
            .collect::<Result<Vec<_>>>()?;
        expect_len("cities.csv", locations.len(), sh.n_cities, dir)?;

        let mean_rows = file("mean.csv")?;
        expect_len("mean.csv", mean_rows.len(), sh.n_basis, dir)?;
        let mean_coeffs = mean_rows.iter().map(|r| parse_f(r, 3)).collect::<Result<Vec<_>>>()?;

        let load_rows = file("loadings.csv")?;
        expect_len("loadings.csv", load_rows.len(), sh.n_basis, dir)?;
        let mut phi = DMatrix::zeros(sh.n_basis, sh.k);
        for (j, r) in load_rows.iter().enumerate() {
            expect_len("loadings.csv columns", r.len(), 3 + sh.k, dir)?;
            for c in 0..sh.k {
                phi[(j, c)] = parse_f(r, 3 + c)?;
            }
        }

        let sv_rows = file("singular_values.csv")?;
        expect_len("singular_values.csv", sv_rows.len(), sh.n_components, dir)?;
        let singular_values = sv_rows.iter().map(|r| parse_f(r, 1)).collect::<Result<Vec<_>>>()?;
        let basis = SpatialBasis::from_parts(splines, phi, singular_values)?;

        let coef_rows = file("coefficients.csv")?;
        expect_len("coefficients.csv", coef_rows.len(), sh.n_coefficient_days, dir)?;
        let mut coefficients = StoredCoefficients {
            offset: manifest.coefficient_offset,
            dates: Vec::new(),
            panel_rows: Vec::new(),
            ranks: Vec::new(),
            n_obs: Vec::new(),
            residual_norms: Vec::new(),
            values: DMatrix::zeros(coef_rows.len(), sh.n_basis),
        };
        for (i, r) in coef_rows.iter().enumerate() {
            expect_len("coefficients.csv columns", r.len(), 5 + sh.n_basis, dir)?;
            coefficients.dates.push(parse_date(r, 0)?);
            coefficients.panel_rows.push(parse_u(r, 1)?);
            coefficients.ranks.push(parse_u(r, 2)?);
            coefficients.n_obs.push(parse_u(r, 3)?);
            coefficients.residual_norms.push(parse_f(r, 4)?);
            for j in 0..sh.n_basis {
                coefficients.values[(i, j)] = parse_f(r, 5 + j)?;
            }
        }

        let n = sh.n_beta_days;
        let proj_rows = file("projection.csv")?;
        expect_len("projection.csv", proj_rows.len(), n, dir)?;
        let beta_dates = proj_rows.iter().map(|r| parse_date(r, 0)).collect::<Result<Vec<_>>>()?;
        let rows = proj_rows.iter().map(|r| parse_u(r, 1)).collect::<Result<Vec<_>>>()?;
        let norms = proj_rows.iter().map(|r| parse_f(r, 2)).collect::<Result<Vec<_>>>()?;
        let beta_rows = file("betas.csv")?;
        expect_len("betas.csv", beta_rows.len(), n * sh.k, dir)?;
        let mut values = DMatrix::zeros(n, sh.k);
        let filt_rows = file("filtered.csv")?;
        expect_len("filtered.csv", filt_rows.len(), n * sh.k, dir)?;
        let mut filtered = vec![Filtered { innovations: vec![0.0; n], scales: vec![0.0; n] }; sh.k];
        for i in 0..n {
            for c in 0..sh.k {
                let (b, f) = (&beta_rows[i * sh.k + c], &filt_rows[i * sh.k + c]);
                if parse_date(b, 0)? != beta_dates[i] || parse_date(f, 0)? != beta_dates[i] || parse_u(b, 1)? != c + 1 || parse_u(f, 1)? != c + 1 {
                    return Err(bad(format!("betas.csv/filtered.csv out of order at day {}", i + 1)));
                }
                values[(i, c)] = parse_f(b, 2)?;
                filtered[c].innovations[i] = parse_f(f, 2)?;
                filtered[c].scales[i] = parse_f(f, 3)?;
            }
        }
        let betas = BetaSeries::new(beta_dates, rows, values, norms)?;

        let state_date = dates::parse(&manifest.state.date).ok_or_else(|| bad("bad state date".into()))?;
        let state = PredictionState::new(state_date, manifest.state.coefficients.clone())?;
        if state.k() != sh.k {
            return Err(bad("state dimension differs from K".into()));
        }
        let model = Model {
            mean: MeanField { grand_mean: manifest.grand_mean, mean_coeffs },
            basis,
            params: manifest.garch.iter().map(|g| g.params).collect(),
            initial_scales: manifest.initial_scales.clone(),
            noise_variance: manifest.noise_variance,
            betas,
            state,
        };
        Ok(Artifact {
            config: manifest.config,
            data: manifest.data,
            locations,
            model,
            garch: manifest.garch,
            filtered,
            coefficients,
            skipped: manifest.skipped,
        })
    }
}

/// Shortest round-trip decimal form.
pub fn num(v: f64) -> String {
    v.to_string()
}

/// In-memory CSV builder.
pub(crate) struct Csv {
    w: csv::Writer<Vec<u8>>,
    err: Option<csv::Error>,
}

impl Csv {
    pub(crate) fn new<I, S>(header: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        let mut c = Csv { w: csv::Writer::from_writer(Vec::new()), err: None };
        c.row(header);
        c
    }

    pub(crate) fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        if self.err.is_none() {
            if let Err(e) = self.w.write_record(fields) {
                self.err = Some(e);
            }
        }
    }

    pub(crate) fn finish(self) -> Result<Vec<u8>> {
        if let Some(e) = self.err {
            return Err(Error::Csv { path: "<memory>".into(), source: e });
        }
        self.w.into_inner().map_err(|e| Error::Io { path: "<memory>".into(), source: e.into_error() })
    }
}

fn read_records(bytes: &[u8], path: &Path) -> Result<Vec<csv::StringRecord>> {
    csv::Reader::from_reader(bytes).records().collect::<std::result::Result<_, _>>().map_err(Error::csv(path))
}

fn field(r: &csv::StringRecord, i: usize) -> String {
    r.get(i).unwrap_or("").to_string()
}

fn malformed(r: &csv::StringRecord, i: usize) -> Error {
    let line = r.position().map_or(0, |p| p.line());
    Error::artifact("<csv>", format!("line {line}, field {}: cannot parse `{}`", i + 1, r.get(i).unwrap_or("")))
}

fn parse_f(r: &csv::StringRecord, i: usize) -> Result<f64> {
    r.get(i).and_then(|s| s.parse().ok()).ok_or_else(|| malformed(r, i))
}

fn parse_u(r: &csv::StringRecord, i: usize) -> Result<usize> {
    r.get(i).and_then(|s| s.parse().ok()).ok_or_else(|| malformed(r, i))
}

fn parse_date(r: &csv::StringRecord, i: usize) -> Result<Day> {
    r.get(i).and_then(dates::parse).ok_or_else(|| malformed(r, i))
}

fn expect_len(what: &str, found: usize, expected: usize, dir: &Path) -> Result<()> {
    if found == expected {
        Ok(())
    } else {
        Err(Error::artifact(dir, format!("{what}: expected {expected} entries, found {found}")))
    }
}
