//! Synthetic quarterly house-price-index panel with one planted regime
//! change, shaped like a state-level hpi regression: cpi, unemployment,
//! temperature, precipitation, sixteen stock indices and an AR(1) term.

use std::path::Path;

use hdcpr::timeseries::Period;
use hdcpr::RngStream;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::{CliError, Result};

pub const DEFAULT_SEED: u64 = 2008;
pub const QUARTERS: usize = 97;
pub const STOCKS: usize = 16;
/// Last quarter of the first regime (2008Q4) on the `t = 1, 2, ...` scale;
/// the second regime starts at the next quarter.
pub const LAST_PRE_BREAK: f64 = 72.0;
pub const FIRST_PERIOD: Period = Period::Quarter {
    year: 1991,
    quarter: 1,
};
const STREAM: u64 = 0x4850_4900;

#[derive(Clone, Debug, PartialEq)]
pub struct HpiTable {
    pub header: Vec<String>,
    pub labels: Vec<String>,
    /// Numeric columns in header order after the label column.
    pub columns: Vec<Vec<f64>>,
}

fn ar1(rng: &mut RngStream, n: usize, phi: f64, sd: f64) -> Vec<f64> {
    let mut v = Vec::with_capacity(n);
    let mut x = 0.0;
    for _ in 0..n {
        x = phi * x + sd * rng.sample::<f64, _>(StandardNormal);
        v.push(x);
    }
    v
}

/// Values are rounded to 4 decimals so the CSV text is the data.
fn round4(v: f64) -> f64 {
    (v * 1e4).round() / 1e4
}

pub fn generate(seed: u64) -> HpiTable {
    let n = QUARTERS;
    let mut rng = RngStream::new(seed, STREAM);
    let cpi = ar1(&mut rng, n, 0.7, 0.7);
    let mut unemp = ar1(&mut rng, n, 0.8, 0.6);
    for (i, u) in unemp.iter_mut().enumerate() {
        if i as f64 + 1.0 > LAST_PRE_BREAK {
            *u += 0.3;
        }
    }
    let seasonal = |i: usize, phase: f64| (std::f64::consts::FRAC_PI_2 * i as f64 + phase).sin();
    let temp: Vec<f64> = (0..n).map(|i| seasonal(i, 0.0) + 0.3 * rng.sample::<f64, _>(StandardNormal)).collect();
    let precip: Vec<f64> = (0..n).map(|i| 0.7 * seasonal(i, 0.8) + 0.5 * rng.sample::<f64, _>(StandardNormal)).collect();
    let stocks: Vec<Vec<f64>> = (0..STOCKS).map(|_| ar1(&mut rng, n, 0.5, 1.0)).collect();

    let mut hpi = Vec::with_capacity(n);
    let mut prev = 100.0;
    for i in 0..n {
        let t = i as f64 + 1.0;
        let e: f64 = rng.sample(StandardNormal);
        let h = if t <= LAST_PRE_BREAK {
            40.0 + 0.6 * prev + 1.5 * cpi[i] - 1.0 * unemp[i] + 0.8 * temp[i] + 0.6 * stocks[2][i] + e
        } else {
            30.0 + 0.6 * prev - 1.5 * cpi[i] - 3.0 * unemp[i] + 0.8 * temp[i] + e
        };
        hpi.push(round4(h));
        prev = round4(h);
    }

    let mut header: Vec<String> = ["period", "t", "hpi", "cpi", "unemp", "temp", "precip"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((1..=STOCKS).map(|k| format!("stock{k:02}")));
    let mut columns = vec![(1..=n).map(|i| i as f64).collect(), hpi];
    for c in [cpi, unemp, temp, precip].into_iter().chain(stocks) {
        columns.push(c.into_iter().map(round4).collect());
    }
    let mut labels = Vec::with_capacity(n);
    let mut p = FIRST_PERIOD;
    for _ in 0..n {
        labels.push(p.to_string());
        p = p.next();
    }
    HpiTable { header, labels, columns }
}

pub fn write_csv(path: &Path, table: &HpiTable) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::csv(path, e))?;
    w.write_record(&table.header).map_err(|e| CliError::csv(path, e))?;
    for (i, label) in table.labels.iter().enumerate() {
        let mut row = vec![label.clone()];
        row.extend(table.columns.iter().map(|c| c[i].to_string()));
        w.write_record(&row).map_err(|e| CliError::csv(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Run configuration matching the bundled file: lag-1 response, intercept,
/// both forced in, three held-out quarters.
pub fn default_config_toml(input: &str) -> String {
    format!(
        r#"[data]
input = "{input}"
response = "hpi"
threshold = "t"
label = "period"
lag = 1
intercept = true
forced_in = ["hpi_lag1", "intercept"]
holdout = 3

[model]
prior = "basad"
k = [0, 1, 2]
cp_bounds = [10.0, 90.0]

[chain]
iterations = 20000
burn_in = 10000
seed = 7

[output]
dir = "hpi-out"
level = 0.95
"#
    )
}
