//! CSV ingestion into a [`Dataset`] plus an optional held-out tail.

use std::path::Path;

use hdcpr::model::Dataset;
use hdcpr::timeseries::{build_lagged, Series};
use nalgebra::DMatrix;

use crate::config::DataConfig;
use crate::{CliError, Result};

/// Rows after the last training row, kept for one-step-ahead evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct Holdout {
    pub x: DMatrix<f64>,
    pub y: Vec<f64>,
    pub t: Vec<f64>,
    pub labels: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct LoadedData {
    pub fit: Dataset,
    pub holdout: Option<Holdout>,
    /// Names of the design columns, in order.
    pub columns: Vec<String>,
    /// Row labels of the training rows, in threshold order.
    pub labels: Vec<String>,
    /// Labels of leading rows removed to build lagged covariates.
    pub dropped: Vec<String>,
    pub forced_in: Vec<bool>,
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn read_table(path: &Path) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::csv(path, e))?;
    let header = rdr
        .headers()
        .map_err(|e| CliError::csv(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let rows = rdr
        .records()
        .map(|r| r.map(|rec| rec.iter().map(str::to_string).collect()))
        .collect::<std::result::Result<Vec<Vec<String>>, _>>()
        .map_err(|e| CliError::csv(path, e))?;
    Ok(Table { header, rows })
}

/// Reads a numeric column; `row` in errors is the 1-based data row.
pub fn numeric_column(path: &Path, header: &[String], rows: &[Vec<String>], name: &str) -> Result<Vec<f64>> {
    let j = header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| CliError::MissingColumn {
            path: path.to_path_buf(),
            column: name.to_string(),
        })?;
    rows.iter()
        .enumerate()
        .map(|(i, r)| {
            let cell = r.get(j).map(String::as_str).unwrap_or("");
            cell.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::NotNumeric {
                    path: path.to_path_buf(),
                    row: i + 1,
                    column: name.to_string(),
                    value: cell.to_string(),
                })
        })
        .collect()
}

/// Reads one column of a CSV file as numbers.
pub fn read_numeric_column(path: &Path, name: &str) -> Result<Vec<f64>> {
    let t = read_table(path)?;
    numeric_column(path, &t.header, &t.rows, name)
}

/// Loads the configured columns, sorts rows by threshold, appends the lagged
/// response and intercept if requested and splits off the holdout tail.
/// `max_k` sets the minimum number of usable rows.
pub fn load_csv_dataset(cfg: &DataConfig, max_k: usize) -> Result<LoadedData> {
    let path = cfg.input.as_path();
    let table = read_table(path)?;
    let header = &table.header;
    let y = numeric_column(path, header, &table.rows, &cfg.response)?;
    let t = numeric_column(path, header, &table.rows, &cfg.threshold)?;
    let labels: Vec<String> = match &cfg.label {
        Some(name) => {
            let j = header.iter().position(|h| h == name).ok_or_else(|| CliError::MissingColumn {
                path: path.to_path_buf(),
                column: name.clone(),
            })?;
            table.rows.iter().map(|r| r.get(j).cloned().unwrap_or_default()).collect()
        }
        None => t.iter().map(|v| v.to_string()).collect(),
    };
    let covariates: Vec<String> = match &cfg.covariates {
        Some(c) => c.clone(),
        None => header
            .iter()
            .filter(|h| **h != cfg.response && **h != cfg.threshold && Some(*h) != cfg.label.as_ref())
            .cloned()
            .collect(),
    };
    let mut cols = Vec::with_capacity(covariates.len());
    for name in &covariates {
        cols.push(numeric_column(path, header, &table.rows, name)?);
    }

    let mut order: Vec<usize> = (0..y.len()).collect();
    order.sort_by(|&a, &b| t[a].total_cmp(&t[b]));
    let y: Vec<f64> = order.iter().map(|&i| y[i]).collect();
    let t: Vec<f64> = order.iter().map(|&i| t[i]).collect();
    let labels: Vec<String> = order.iter().map(|&i| labels[i].clone()).collect();
    let mut cols: Vec<Vec<f64>> = cols.into_iter().map(|c| order.iter().map(|&i| c[i]).collect()).collect();
    let mut names = covariates;

    let mut start = 0;
    let mut dropped = Vec::new();
    if cfg.lag > 0 {
        let series = Series::from_values(y.clone())?;
        let lagged = build_lagged(&series, cfg.lag)?;
        start = lagged.targets.start;
        dropped = labels[..start].to_vec();
        for c in &mut cols {
            c.drain(..start);
        }
        cols.push(lagged.column);
        names.push(format!("{}_lag{}", cfg.response, cfg.lag));
    }
    let n_all = y.len() - start;
    if cfg.intercept {
        cols.push(vec![1.0; n_all]);
        names.push("intercept".into());
    }
    if names.is_empty() {
        return Err(CliError::Config("no covariate columns selected".into()));
    }
    let y = &y[start..];
    let t = &t[start..];
    let labels = &labels[start..];

    if cfg.holdout >= n_all {
        return Err(CliError::Config(format!(
            "holdout of {} rows leaves nothing to fit ({} usable rows)",
            cfg.holdout, n_all
        )));
    }
    let n_fit = n_all - cfg.holdout;
    let need = 2 * (max_k + 1) * 2;
    if n_fit < need {
        return Err(hdcpr::Error::InsufficientData(format!(
            "{n_fit} usable rows; {max_k} change points need at least {need}"
        ))
        .into());
    }
    let design = DMatrix::from_fn(n_all, names.len(), |i, j| cols[j][i]);

    let forced_in = names.iter().map(|n| cfg.forced_in.contains(n)).collect();
    if let Some(missing) = cfg.forced_in.iter().find(|f| !names.contains(f)) {
        return Err(CliError::MissingColumn {
            path: path.to_path_buf(),
            column: missing.clone(),
        });
    }

    let fit = Dataset::new(y[..n_fit].to_vec(), design.rows(0, n_fit).into_owned(), t[..n_fit].to_vec())?;
    let holdout = (cfg.holdout > 0).then(|| Holdout {
        x: design.rows(n_fit, cfg.holdout).into_owned(),
        y: y[n_fit..].to_vec(),
        t: t[n_fit..].to_vec(),
        labels: labels[n_fit..].to_vec(),
    });
    Ok(LoadedData {
        fit,
        holdout,
        columns: names,
        labels: labels[..n_fit].to_vec(),
        dropped,
        forced_in,
    })
}
