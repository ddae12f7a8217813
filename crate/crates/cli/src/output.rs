//! On-disk formats: draws as CSV with a JSON sidecar, summaries as JSON,
//! and the run manifest.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use hdcpr::inference::PosteriorSamples;
use hdcpr::model::PriorSpec;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::{CliError, Result};

/// Everything about a chain's draws that the CSV columns do not carry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplesMeta {
    pub k: usize,
    pub p: usize,
    pub prior: PriorSpec,
    pub cp_bounds: (f64, f64),
    pub tau_acceptance: f64,
    /// Design column names; `beta.k.j` refers to `columns[j - 1]`.
    pub columns: Vec<String>,
}

pub fn meta_path(samples: &Path) -> PathBuf {
    samples.with_extension("meta.json")
}

/// Column names. Segment, variable and change-point indices are 1-based.
pub fn samples_header(s: &PosteriorSamples) -> Vec<String> {
    let segs = s.num_segments();
    let mut h = Vec::new();
    for k in 1..=segs {
        for j in 1..=s.p {
            h.push(format!("beta.{k}.{j}"));
        }
    }
    if !s.z.is_empty() {
        for k in 1..=segs {
            for j in 1..=s.p {
                h.push(format!("Z.{k}.{j}"));
            }
        }
    }
    h.push("sigma2".into());
    for i in 1..=s.k {
        h.push(format!("tau.{i}"));
    }
    for i in 1..=s.lambda_len() {
        h.push(format!("lambda2.{i}"));
    }
    h.push("log_lik".into());
    h
}

/// Writes one row per retained draw. Numbers use the shortest text that
/// parses back to the same `f64`.
pub fn write_samples(path: &Path, s: &PosteriorSamples, columns: &[String]) -> Result<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(samples_header(s)).map_err(|e| CliError::csv(path, e))?;
    let width = s.num_segments() * s.p;
    let ll = s.lambda_len();
    let mut row: Vec<String> = Vec::new();
    for d in 0..s.n_draws() {
        row.clear();
        row.extend(s.beta[d * width..(d + 1) * width].iter().map(f64::to_string));
        if !s.z.is_empty() {
            row.extend(s.z[d * width..(d + 1) * width].iter().map(u8::to_string));
        }
        row.push(s.sigma2[d].to_string());
        row.extend(s.tau_draw(d).iter().map(f64::to_string));
        row.extend(s.lambda2[d * ll..(d + 1) * ll].iter().map(f64::to_string));
        row.push(s.log_lik[d].to_string());
        w.write_record(&row).map_err(|e| CliError::csv(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))?;
    let meta = SamplesMeta {
        k: s.k,
        p: s.p,
        prior: s.prior.clone(),
        cp_bounds: s.cp_bounds,
        tau_acceptance: s.tau_acceptance,
        columns: columns.to_vec(),
    };
    write_json(&meta_path(path), &meta)
}

/// Reads draws written by [`write_samples`] together with their sidecar.
pub fn read_samples(path: &Path) -> Result<(PosteriorSamples, SamplesMeta)> {
    let meta: SamplesMeta = read_json(&meta_path(path))?;
    let mut rdr = csv::Reader::from_path(path).map_err(|e| CliError::csv(path, e))?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| CliError::csv(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let bad = |detail: String| CliError::Parse {
        path: path.to_path_buf(),
        detail,
    };
    let find = |name: &str| header.iter().position(|h| h == name);
    let segs = meta.k + 1;
    let width = segs * meta.p;
    let beta_at = find("beta.1.1").ok_or_else(|| bad("no beta columns".into()))?;
    let z_at = find("Z.1.1");
    let sigma_at = find("sigma2").ok_or_else(|| bad("no sigma2 column".into()))?;
    let ll_at = find("log_lik").ok_or_else(|| bad("no log_lik column".into()))?;
    let lambda_at = find("lambda2.1");
    let lambda_len = lambda_at.map_or(0, |a| ll_at - a);

    let mut s = PosteriorSamples {
        k: meta.k,
        p: meta.p,
        prior: meta.prior.clone(),
        cp_bounds: meta.cp_bounds,
        beta: vec![],
        z: vec![],
        eta: vec![],
        lambda2: vec![],
        sigma2: vec![],
        tau: vec![],
        log_lik: vec![],
        tau_acceptance: meta.tau_acceptance,
    };
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::csv(path, e))?;
        let num = |j: usize| -> Result<f64> {
            rec.get(j)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| bad(format!("row {}: bad value in column {}", r + 1, header[j])))
        };
        for j in beta_at..beta_at + width {
            s.beta.push(num(j)?);
        }
        if let Some(z) = z_at {
            for j in z..z + width {
                s.z.push(num(j)? as u8);
            }
        }
        s.sigma2.push(num(sigma_at)?);
        for j in sigma_at + 1..sigma_at + 1 + meta.k {
            s.tau.push(num(j)?);
        }
        if let Some(a) = lambda_at {
            for j in a..a + lambda_len {
                s.lambda2.push(num(j)?);
            }
        }
        s.log_lik.push(num(ll_at)?);
    }
    Ok((s, meta))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        detail: e.to_string(),
    })?;
    w.write_all(b"\n").map_err(|e| CliError::io(path, e))?;
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        detail: e.to_string(),
    })
}

/// Writes serializable rows as CSV with a header taken from the field names.
pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::csv(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| CliError::csv(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Enough to repeat a `fit` exactly: the resolved configuration (seed
/// included), the tool version and how long the original run took.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub seed: u64,
    pub config: RunConfig,
    pub wall_time_secs: f64,
    pub files: Vec<String>,
}
