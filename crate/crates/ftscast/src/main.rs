//! `ftscast` command line.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ftscast::artifact::Artifact;
use ftscast::config::{Mode, PipelineConfig};
use ftscast::pipeline;
use ftscast::table::{self, ForecastTable};
use ftscast::{dates, fsutil, output, Error, Result};
use ftscast_core::Location;
use serde_json::json;

const TABLE_HELP: &str = "\
Input table (CSV with header), one row per date, city and horizon:
  date,city_id,city_name,longitude,latitude,horizon_days,forecast_F,actual_F
Dates are YYYY-MM-DD, temperatures in °F, missing values are empty fields.
The error panel is Y = forecast_F - actual_F for the selected horizon.";

const FIT_HELP: &str = "\
Writes a model directory to --out:
  manifest.json        version, shapes, SHA-256 of each CSV, config, data fingerprint,
                       GARCH fits, final filter state
  cities.csv           city_id,city_name,longitude,latitude
  mean.csv             j,i_lon,i_lat,value
  loadings.csv         j,i_lon,i_lat,phi_1..phi_K
  singular_values.csv  component,singular_value,explained_variance
  coefficients.csv     date,panel_row,rank,n_obs,residual_norm,c_1..c_n
  betas.csv            date,k,value
  projection.csv       date,panel_row,residual_norm
  filtered.csv         date,k,innovation,scale";

const PREDICT_HELP: &str = "\
Writes predictions.csv to --out:
  date,city_id,city_name,longitude,latitude,predicted_error,predictive_sd
Days in --data after the model's last day and before --date are observed first.";

const ADJUST_HELP: &str = "\
Writes to --out:
  adjusted.csv   date,city_id,F,Y_hat,F_adj,A,Y,Z,predictive_sd
  summary.json   mode, horizon, K, counts, mean_y, sd_y, mean_z, sd_z, sd_reduction
  histogram.csv  bin_lo,bin_hi,count_Y,count_Z
filtered: one model, each day predicted from earlier days (needs --model).
walkforward: periodic refits on earlier days only (uses --model's config if given).";

const DIAGNOSE_HELP: &str = "\
Writes to --out:
  corr_before.csv, corr_after.csv  city_id then one column per city, east to west
  correlogram_before.csv, correlogram_after.csv  distance_km,correlation
  frobenius.csv                    k,sum_sq
  acf.csv (with --model)           k,lag,acf_std,acf_std_sq,band
Flagged pairs (too few common days) are empty fields.";

const SIMULATE_HELP: &str = "\
Writes to --out:
  panel.csv           the input table format above
  truth_betas.csv     date,k,value
  truth_fields.csv    city_id,mu,phi_1..phi_K
  truth_loadings.csv  j,i_lon,i_lat,phi_1..phi_K
  truth_mean.csv      j,i_lon,i_lat,value";

const EXPORT_HELP: &str = "\
Writes basis_mean.csv and basis_NN.csv (one per k) to --out, each
  lon,lat,value
on a regular grid over the spline domain.";

#[derive(Debug, Parser)]
#[command(name = "ftscast", version, about = "Functional time series model of spatial forecast errors", after_long_help = TABLE_HELP)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// Pipeline configuration (TOML).
    #[arg(long, global = true, env = "FTSCAST_CONFIG")]
    config: Option<PathBuf>,
    /// Forecast horizon in days, 0..=6.
    #[arg(long, global = true, env = "FTSCAST_HORIZON", allow_hyphen_values = true)]
    horizon: Option<i64>,
    /// Number of spatial basis functions.
    #[arg(long, global = true, env = "FTSCAST_K", allow_hyphen_values = true)]
    k: Option<i64>,
    /// Evaluation mode: filtered or walkforward.
    #[arg(long, global = true, env = "FTSCAST_MODE")]
    mode: Option<Mode>,
    /// Seed for GARCH restarts and simulation.
    #[arg(long, global = true, env = "FTSCAST_SEED")]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, env = "FTSCAST_OUT")]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a model to a forecast table.
    #[command(after_long_help = FIT_HELP)]
    Fit {
        /// Forecast table; defaults to paths.data.
        #[arg(long, env = "FTSCAST_DATA")]
        data: Option<PathBuf>,
    },
    /// Predict the error field on a future day.
    #[command(after_long_help = PREDICT_HELP)]
    Predict {
        #[arg(long)]
        model: PathBuf,
        /// Target date, YYYY-MM-DD.
        #[arg(long)]
        date: String,
        /// Newer observations, and the cities to predict at (default: the model's).
        #[arg(long, env = "FTSCAST_DATA")]
        data: Option<PathBuf>,
    },
    /// Bias-correct forecasts with one-step predictions.
    #[command(after_long_help = ADJUST_HELP)]
    Adjust {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, env = "FTSCAST_DATA")]
        data: Option<PathBuf>,
    },
    /// Spatial correlation before and after removing the basis.
    #[command(after_long_help = DIAGNOSE_HELP)]
    Diagnose {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, env = "FTSCAST_DATA")]
        data: Option<PathBuf>,
    },
    /// Generate a synthetic forecast table with known truth.
    #[command(after_long_help = SIMULATE_HELP)]
    Simulate,
    /// Evaluate the mean surface and basis functions on a grid.
    #[command(name = "export-basis", after_long_help = EXPORT_HELP)]
    ExportBasis {
        #[arg(long)]
        model: PathBuf,
        /// Grid points along longitude.
        #[arg(long, default_value_t = 117)]
        n_lon: usize,
        /// Grid points along latitude.
        #[arg(long, default_value_t = 51)]
        n_lat: usize,
    },
}

fn cli_error(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl Global {
    fn apply(&self, cfg: &mut PipelineConfig) -> Result<()> {
        if let Some(h) = self.horizon {
            cfg.horizon = h;
        }
        if let Some(k) = self.k {
            cfg.k = k;
        }
        if let Some(m) = self.mode {
            cfg.mode = m;
        }
        if let Some(s) = self.seed {
            cfg.garch.seed = s;
            cfg.simulation.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.paths.out = Some(o.clone());
        }
        cfg.validate()
    }

    fn config(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        };
        self.apply(&mut cfg)?;
        Ok(cfg)
    }

    /// The artifact's config with the mode and output overrides applied;
    /// settings that would contradict the fitted model are refused.
    fn model_config(&self, artifact: &Artifact) -> Result<PipelineConfig> {
        let mut cfg = artifact.config.clone();
        if let Some(h) = self.horizon.filter(|&h| h != cfg.horizon) {
            return Err(cli_error(format!("--horizon {h} differs from the model's horizon {}", cfg.horizon)));
        }
        if let Some(k) = self.k.filter(|&k| k != cfg.k) {
            return Err(cli_error(format!("--k {k} differs from the model's K = {}", cfg.k)));
        }
        if let Some(m) = self.mode {
            cfg.mode = m;
        }
        if let Some(o) = &self.out {
            cfg.paths.out = Some(o.clone());
        }
        Ok(cfg)
    }
}

fn data_path(flag: &Option<PathBuf>, cfg: &PipelineConfig) -> Result<PathBuf> {
    flag.clone().or_else(|| cfg.paths.data.clone()).ok_or_else(|| cli_error("no input table: pass --data or set paths.data"))
}

fn out_dir(cfg: &PipelineConfig) -> Result<PathBuf> {
    cfg.paths.out.clone().ok_or_else(|| cli_error("no output directory: pass --out or set paths.out"))
}

fn read(path: &Path, cfg: &PipelineConfig) -> Result<ForecastTable> {
    let t = table::read_table(path, cfg.horizon, cfg.ingest.on_malformed)?;
    for r in &t.report.rejected {
        eprintln!("warning: {}:{}: rejected: {}", path.display(), r.line, r.reason);
    }
    for r in &t.report.duplicates {
        eprintln!("warning: {}:{}: duplicate, {}", path.display(), r.line, r.reason);
    }
    Ok(t)
}

fn write_all(dir: &Path, files: Vec<(String, Vec<u8>)>) -> Result<Vec<String>> {
    let mut names = Vec::with_capacity(files.len());
    for (name, bytes) in files {
        fsutil::write_atomic(&dir.join(&name), &bytes)?;
        names.push(name);
    }
    Ok(names)
}

fn run(cli: Cli) -> Result<serde_json::Value> {
    let g = &cli.global;
    match &cli.command {
        Command::Fit { data } => {
            let cfg = g.config()?;
            let (path, out) = (data_path(data, &cfg)?, out_dir(&cfg)?);
            let t = read(&path, &cfg)?;
            let artifact = pipeline::fit(&cfg, &t.panel)?;
            artifact.save(&out)?;
            Ok(json!({
                "command": "fit",
                "out": out,
                "k": artifact.model.k(),
                "n_days": t.panel.n_days(),
                "n_cities": t.panel.n_cities(),
                "fingerprint": artifact.data.fingerprint,
                "rejected_rows": t.report.rejected.len(),
                "skipped_days": artifact.skipped.len(),
            }))
        }
        Command::Predict { model, date, data } => {
            let artifact = Artifact::load(model)?;
            let cfg = g.model_config(&artifact)?;
            let out = out_dir(&cfg)?;
            let day = dates::parse(date).ok_or_else(|| cli_error(format!("--date `{date}` is not YYYY-MM-DD")))?;
            let table = data.as_ref().map(|p| read(p, &cfg)).transpose()?;
            let locations: Vec<Location> = match &table {
                Some(t) => t.panel.locations().to_vec(),
                None => artifact.locations.clone(),
            };
            let field = pipeline::predict(&artifact, day, &locations, table.as_ref())?;
            let files = write_all(&out, vec![("predictions.csv".into(), output::predictions_csv(day, &locations, &field)?)])?;
            Ok(json!({ "command": "predict", "out": out, "files": files, "date": date }))
        }
        Command::Adjust { model, data } => {
            let artifact = model.as_ref().map(|m| Artifact::load(m)).transpose()?;
            let cfg = match &artifact {
                Some(a) => g.model_config(a)?,
                None => g.config()?,
            };
            let (path, out) = (data_path(data, &cfg)?, out_dir(&cfg)?);
            let t = read(&path, &cfg)?;
            let predictions = match (cfg.mode, &artifact) {
                (Mode::Filtered, Some(a)) => pipeline::filtered_predictions(a, &t)?,
                (Mode::Filtered, None) => return Err(cli_error("filtered mode needs --model")),
                (Mode::Walkforward, _) => pipeline::walk_forward_predictions(&cfg, &t)?,
            };
            let adj = pipeline::adjust(&predictions, &t, cfg.mode)?;
            let summary = output::summary_record(&adj, cfg.horizon(), cfg.k as usize);
            let files = write_all(
                &out,
                vec![
                    ("adjusted.csv".into(), output::adjusted_csv(&adj, t.panel.locations())?),
                    ("summary.json".into(), output::json(&summary)?),
                    ("histogram.csv".into(), output::histogram_csv(&adj)?),
                ],
            )?;
            Ok(json!({ "command": "adjust", "out": out, "files": files, "summary": summary }))
        }
        Command::Diagnose { model, data } => {
            let artifact = model.as_ref().map(|m| Artifact::load(m)).transpose()?;
            let cfg = match &artifact {
                Some(a) => g.model_config(a)?,
                None => g.config()?,
            };
            let (path, out) = (data_path(data, &cfg)?, out_dir(&cfg)?);
            let t = read(&path, &cfg)?;
            let d = pipeline::diagnose(&cfg, &t.panel, artifact.as_ref())?;
            let locs = &d.locations;
            let mut files = vec![
                ("corr_before.csv".to_string(), output::correlation_csv(&d.before, locs)?),
                ("corr_after.csv".to_string(), output::correlation_csv(&d.after, locs)?),
                ("correlogram_before.csv".to_string(), output::correlogram_csv(&d.before, locs)?),
                ("correlogram_after.csv".to_string(), output::correlogram_csv(&d.after, locs)?),
                ("frobenius.csv".to_string(), output::frobenius_csv(&d)?),
            ];
            if !d.acf.is_empty() {
                files.push(("acf.csv".into(), output::acf_csv(&d)?));
            }
            let files = write_all(&out, files)?;
            Ok(json!({
                "command": "diagnose",
                "out": out,
                "files": files,
                "k": d.k,
                "max_abs_before": d.before.max_abs_off_diagonal(),
                "max_abs_after": d.after.max_abs_off_diagonal(),
            }))
        }
        Command::Simulate => {
            let cfg = g.config()?;
            let out = out_dir(&cfg)?;
            let sim = pipeline::simulate(&cfg)?;
            let p = &sim.panel;
            let n_lat = cfg.model_config().splines()?.lat_knots().n_basis();
            let mut files = vec![(
                "panel.csv".to_string(),
                table::table_bytes(p.horizon(), p.dates(), p.locations(), &sim.forecasts, &sim.actuals)?,
            )];
            files.extend(output::truth_files(&sim, n_lat)?.into_iter().map(|(n, b)| (n.to_string(), b)));
            let files = write_all(&out, files)?;
            Ok(json!({ "command": "simulate", "out": out, "files": files, "n_days": p.n_days(), "n_cities": p.n_cities() }))
        }
        Command::ExportBasis { model, n_lon, n_lat } => {
            let artifact = Artifact::load(model)?;
            let cfg = g.model_config(&artifact)?;
            let out = out_dir(&cfg)?;
            let ks: Vec<usize> = (1..=artifact.model.k()).collect();
            let grids = pipeline::basis_grids(&artifact, &ks, *n_lon, *n_lat)?;
            let files = grids
                .iter()
                .map(|(k, grid)| {
                    let name = if *k == 0 { "basis_mean.csv".to_string() } else { format!("basis_{k:02}.csv") };
                    Ok((name, output::grid_csv(grid)?))
                })
                .collect::<Result<Vec<_>>>()?;
            let files = write_all(&out, files)?;
            Ok(json!({ "command": "export-basis", "out": out, "files": files }))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(report) => {
            println!("{report}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", serde_json::to_string(&e.record()).expect("error record serializes"));
            ExitCode::from(2)
        }
    }
}
