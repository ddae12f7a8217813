//! Command implementations, independent of argument parsing.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use hdcpr::inference::{
    one_step_ahead_forecast, rmspe, select_num_changepoints, summarize, PosteriorSummary,
};
use hdcpr::model::PriorFamily;
use hdcpr::parallel;
use hdcpr::simulation::{gen_dataset, run_scenario_grid, GridSettings, Preset, ScenarioSpec};
use hdcpr::stats::Interval;
use hdcpr::timeseries::{monthly_to_quarterly, pacf, Period, Series};
use hdcpr::{Execution, RngStream};
use serde::Serialize;

use crate::config::{resolve_seed, KSpec, RunConfig};
use crate::data::{load_csv_dataset, read_numeric_column};
use crate::output::{read_json, read_samples, write_json, write_rows, write_samples, Manifest};
use crate::{hpi, CliError, Result};

/// Command-line values that take precedence over the configuration file.
#[derive(Clone, Debug, Default)]
pub struct FitOverrides {
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub k: Option<Vec<usize>>,
    pub prior: Option<PriorFamily>,
    pub iterations: Option<usize>,
    pub burn_in: Option<usize>,
    pub thin: Option<usize>,
    pub seed: Option<u64>,
    pub proposal_sd: Option<f64>,
    pub holdout: Option<usize>,
    pub level: Option<f64>,
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Worker threads for per-K chains; 0 uses every core.
    pub jobs: usize,
    pub sequential: bool,
    /// Value of the seed environment variable, if set.
    pub env_seed: Option<String>,
}

impl RunOptions {
    fn execution(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        }
    }
}

impl FitOverrides {
    fn apply(&self, cfg: &mut RunConfig) {
        if let Some(v) = &self.input {
            cfg.data.input = v.clone();
        }
        if let Some(v) = &self.out {
            cfg.output.dir = v.clone();
        }
        if let Some(v) = &self.k {
            cfg.model.k = KSpec::Many(v.clone());
        }
        if let Some(v) = self.prior {
            cfg.model.prior = v;
        }
        if let Some(v) = self.iterations {
            cfg.chain.iterations = v;
        }
        if let Some(v) = self.burn_in {
            cfg.chain.burn_in = v;
        }
        if let Some(v) = self.thin {
            cfg.chain.thin = v;
        }
        if let Some(v) = self.proposal_sd {
            cfg.chain.proposal_sd = v;
        }
        if let Some(v) = self.holdout {
            cfg.data.holdout = v;
        }
        if let Some(v) = self.level {
            cfg.output.level = v;
        }
    }
}

/// Where a `fit` gets its configuration from.
#[derive(Clone, Debug)]
pub enum FitSource {
    Config(PathBuf),
    Manifest(PathBuf),
}

/// One row of the model-comparison table.
#[derive(Clone, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct DicRow {
    pub k: usize,
    pub dic: f64,
    pub p_d: f64,
    pub rmspe: Option<f64>,
    /// `median (lower, upper)` for each change point, `;`-separated.
    pub tau: String,
    pub tau_acceptance: f64,
}

#[derive(Clone, Debug, Serialize)]
struct SelectionRow<'a> {
    k: usize,
    segment: usize,
    variable: &'a str,
    inclusion: Option<f64>,
    median: f64,
    lower: f64,
    upper: f64,
    selected: bool,
}

#[derive(Clone, Debug, Serialize)]
struct PredictiveRow<'a> {
    k: usize,
    label: &'a str,
    t: f64,
    actual: f64,
    median: f64,
    lower: f64,
    upper: f64,
}

#[derive(Clone, Debug, Serialize, serde::Deserialize)]
pub struct FitReport {
    pub best_k: usize,
    pub table: Vec<DicRow>,
    pub dropped_rows: Vec<String>,
    pub note: String,
}

const RMSPE_NOTE: &str = "RMSPE uses one-step-ahead predictions of the held-out rows after the last \
training time only, so for change-point models it reflects accuracy after the last change point.";

fn format_tau(tau: &[Interval]) -> String {
    tau.iter()
        .map(|iv| format!("{:.3} ({:.3}, {:.3})", iv.median, iv.lower, iv.upper))
        .collect::<Vec<_>>()
        .join("; ")
}

pub fn fit_config(source: &FitSource, overrides: &FitOverrides, opts: &RunOptions) -> Result<RunConfig> {
    let mut cfg = match source {
        FitSource::Config(p) => RunConfig::from_file(p)?,
        FitSource::Manifest(p) => read_json::<Manifest>(p)?.config,
    };
    overrides.apply(&mut cfg);
    let seed = resolve_seed(overrides.seed, opts.env_seed.as_deref(), cfg.chain.seed)?;
    cfg.chain.seed = Some(seed);
    cfg.validate()?;
    Ok(cfg)
}

/// Fits every configured `K`, writes the output bundle and returns the DIC
/// table.
pub fn fit(cfg: &RunConfig, opts: &RunOptions) -> Result<FitReport> {
    let started = Instant::now();
    let ks = cfg.model.k.values();
    let max_k = *ks.last().expect("validated");
    let loaded = load_csv_dataset(&cfg.data, max_k)?;
    let data = &loaded.fit;
    let cp_bounds = cfg.model.cp_bounds.unwrap_or_else(|| {
        let t = data.t();
        (t[0], t[t.len() - 1])
    });
    let base = cfg.chain_config(ks[0], cp_bounds, loaded.forced_in.clone())?;
    let level = cfg.output.level;
    let selection = parallel::install(opts.jobs, || {
        select_num_changepoints(data, &ks, &base, level, opts.execution())
    })?;

    let dir = &cfg.output.dir;
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut files = Vec::new();
    let mut table = Vec::new();
    let mut selection_rows = Vec::new();
    let mut predictive_rows = Vec::new();
    let mut summaries: Vec<PosteriorSummary> = Vec::new();
    let seed = cfg.chain.seed.expect("resolved");

    for (report, samples) in selection.reports.iter().zip(&selection.samples) {
        let k = report.k;
        let mut summary = summarize(samples, Some(data), level)?;
        if let Some(h) = &loaded.holdout {
            let mut rng = RngStream::new(seed, RngStream::chain_stream_id(k, 0)).derive(0xF0CA);
            let f = one_step_ahead_forecast(samples, &h.x, &h.t, level, &mut rng)?;
            summary.rmspe = Some(rmspe(&f.median, &h.y)?);
            for i in 0..h.y.len() {
                predictive_rows.push((k, i, f.median[i], f.lower[i], f.upper[i]));
            }
        }
        let name = format!("samples_K{k}.csv");
        write_samples(&dir.join(&name), samples, &loaded.columns)?;
        files.push(name);
        files.push(format!("samples_K{k}.meta.json"));
        let name = format!("summary_K{k}.json");
        write_json(&dir.join(&name), &summary)?;
        files.push(name);
        table.push(DicRow {
            k,
            dic: report.dic,
            p_d: report.p_d,
            rmspe: summary.rmspe,
            tau: format_tau(&report.tau),
            tau_acceptance: report.tau_acceptance,
        });
        summaries.push(summary);
    }

    for s in &summaries {
        for (seg, ivs) in s.beta.iter().enumerate() {
            for (j, iv) in ivs.iter().enumerate() {
                selection_rows.push(SelectionRow {
                    k: s.k,
                    segment: seg + 1,
                    variable: &loaded.columns[j],
                    inclusion: s.inclusion.as_ref().map(|p| p[seg][j]),
                    median: iv.median,
                    lower: iv.lower,
                    upper: iv.upper,
                    selected: s.selected[seg].contains(&j),
                });
            }
        }
    }
    write_rows(&dir.join("selection.csv"), &selection_rows)?;
    files.push("selection.csv".into());
    write_rows(&dir.join("dic_table.csv"), &table)?;
    files.push("dic_table.csv".into());
    if let Some(h) = &loaded.holdout {
        let rows: Vec<PredictiveRow> = predictive_rows
            .iter()
            .map(|&(k, i, median, lower, upper)| PredictiveRow {
                k,
                label: &h.labels[i],
                t: h.t[i],
                actual: h.y[i],
                median,
                lower,
                upper,
            })
            .collect();
        write_rows(&dir.join("predictive.csv"), &rows)?;
        files.push("predictive.csv".into());
    }
    let report = FitReport {
        best_k: selection.best_k,
        table,
        dropped_rows: loaded.dropped.clone(),
        note: RMSPE_NOTE.into(),
    };
    write_json(&dir.join("report.json"), &report)?;
    files.push("report.json".into());

    let mut manifest_cfg = cfg.clone();
    manifest_cfg.data.input = absolute(&cfg.data.input);
    manifest_cfg.output.dir = absolute(dir);
    files.push("manifest.json".into());
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").into(),
        seed,
        config: manifest_cfg,
        wall_time_secs: started.elapsed().as_secs_f64(),
        files,
    };
    write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(report)
}

fn absolute(p: &Path) -> PathBuf {
    std::fs::canonicalize(p).unwrap_or_else(|_| p.to_path_buf())
}

/// Summary of a samples file written by `fit`.
pub fn summarize_samples(path: &Path, level: f64) -> Result<PosteriorSummary> {
    let (samples, _) = read_samples(path)?;
    Ok(summarize(&samples, None, level)?)
}

#[derive(Clone, Debug, Serialize)]
pub struct PacfRow {
    pub lag: usize,
    pub pacf: f64,
    pub band_lower: f64,
    pub band_upper: f64,
}

/// Partial autocorrelations with the `±2/sqrt(n)` band. With `label` given
/// and `quarterly` set, monthly values are first averaged to quarters.
pub fn pacf_table(input: &Path, column: &str, max_lag: usize, label: Option<&str>, quarterly: bool) -> Result<Vec<PacfRow>> {
    let values = read_numeric_column(input, column)?;
    let series = match (label, quarterly) {
        (Some(l), true) => {
            let mut rdr = csv::Reader::from_path(input).map_err(|e| CliError::csv(input, e))?;
            let header = rdr.headers().map_err(|e| CliError::csv(input, e))?.clone();
            let j = header.iter().position(|h| h == l).ok_or_else(|| CliError::MissingColumn {
                path: input.to_path_buf(),
                column: l.to_string(),
            })?;
            let mut periods = Vec::new();
            for rec in rdr.records() {
                let rec = rec.map_err(|e| CliError::csv(input, e))?;
                periods.push(rec.get(j).unwrap_or("").parse::<Period>()?);
            }
            monthly_to_quarterly(&Series::new(values, periods)?)?
        }
        (None, true) => return Err(CliError::Config("quarterly averaging needs a label column".into())),
        _ => Series::from_values(values)?,
    };
    let band = 2.0 / (series.len() as f64).sqrt();
    Ok(pacf(&series, max_lag)?
        .into_iter()
        .enumerate()
        .map(|(i, v)| PacfRow {
            lag: i + 1,
            pacf: v,
            band_lower: -band,
            band_upper: band,
        })
        .collect())
}

pub fn write_pacf<W: Write>(out: W, rows: &[PacfRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| CliError::csv("<pacf output>", e);
    w.write_record(["lag", "pacf", "band_lower", "band_upper"]).map_err(err)?;
    for r in rows {
        w.write_record([
            r.lag.to_string(),
            r.pacf.to_string(),
            r.band_lower.to_string(),
            r.band_upper.to_string(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| CliError::io("<pacf output>", e))
}

/// What `simulate` should generate.
#[derive(Clone, Debug)]
pub enum SimSource {
    Preset { name: String, p: Option<usize> },
    Spec(PathBuf),
}

/// Writes `dataset.csv` and `truth.json` (or the hpi-like panel and its
/// run configuration) into `out`. Returns the written file names.
pub fn simulate(source: &SimSource, seed: Option<u64>, out: &Path) -> Result<Vec<String>> {
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let spec: ScenarioSpec = match source {
        SimSource::Preset { name, .. } if name == "hpi-analog" => {
            let table = hpi::generate(seed.unwrap_or(hpi::DEFAULT_SEED));
            hpi::write_csv(&out.join("hpi_synthetic.csv"), &table)?;
            let cfg = out.join("hpi_synthetic.toml");
            std::fs::write(&cfg, hpi::default_config_toml("hpi_synthetic.csv")).map_err(|e| CliError::io(&cfg, e))?;
            return Ok(vec!["hpi_synthetic.csv".into(), "hpi_synthetic.toml".into()]);
        }
        SimSource::Preset { name, p } => Preset::by_name(name, *p, seed.unwrap_or(1))?.scenario,
        SimSource::Spec(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let mut s: ScenarioSpec = toml::from_str(&text).map_err(|e| CliError::Parse {
                path: path.clone(),
                detail: e.to_string(),
            })?;
            if let Some(seed) = seed {
                s.seed = seed;
            }
            s
        }
    };
    let (data, truth) = gen_dataset(&spec)?;
    let path = out.join("dataset.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::csv(&path, e))?;
    let mut header = vec!["t".to_string(), "y".to_string()];
    header.extend((1..=data.p()).map(|j| format!("x{j}")));
    w.write_record(&header).map_err(|e| CliError::csv(&path, e))?;
    for i in 0..data.n() {
        let mut row = vec![data.t()[i].to_string(), data.y()[i].to_string()];
        row.extend(data.x().row(i).iter().map(f64::to_string));
        w.write_record(&row).map_err(|e| CliError::csv(&path, e))?;
    }
    w.flush().map_err(|e| CliError::io(&path, e))?;
    write_json(&out.join("truth.json"), &truth)?;
    write_json(&out.join("scenario.json"), &spec)?;
    Ok(vec!["dataset.csv".into(), "truth.json".into(), "scenario.json".into()])
}

/// Fits a preset x prior x replicate grid; writes `metrics.csv` (one row
/// per cell and metric) and `coefficients.csv`.
pub fn grid(
    presets: &[String],
    families: &[PriorFamily],
    p: Option<usize>,
    seed: u64,
    settings: &GridSettings,
    out: &Path,
    opts: &RunOptions,
) -> Result<usize> {
    let presets = presets
        .iter()
        .map(|n| Preset::by_name(n, p, seed))
        .collect::<hdcpr::Result<Vec<_>>>()?;
    let cells = parallel::install(opts.jobs, || run_scenario_grid(&presets, families, settings, opts.execution()))?;
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let metrics: Vec<_> = cells.iter().flat_map(|c| c.metric_rows()).collect();
    write_rows(&out.join("metrics.csv"), &metrics)?;
    let mut coefs = Vec::new();
    for c in &cells {
        let preset = presets.iter().find(|p| p.name == c.scenario).expect("known preset");
        coefs.extend(c.coefficient_rows(&preset.scenario.beta));
    }
    write_rows(&out.join("coefficients.csv"), &coefs)?;
    Ok(cells.len())
}
