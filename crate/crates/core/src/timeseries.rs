//! Preprocessing for regularly spaced series: partial autocorrelation,
//! monthly to quarterly averaging and lagged covariates.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A calendar period at monthly or quarterly resolution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Period {
    Month { year: i32, month: u8 },
    Quarter { year: i32, quarter: u8 },
}

impl Period {
    /// Position on a uniform grid at the period's own resolution.
    pub fn ordinal(self) -> i64 {
        match self {
            Period::Month { year, month } => year as i64 * 12 + month as i64 - 1,
            Period::Quarter { year, quarter } => year as i64 * 4 + quarter as i64 - 1,
        }
    }

    pub fn next(self) -> Self {
        match self {
            Period::Month { year, month: 12 } => Period::Month { year: year + 1, month: 1 },
            Period::Month { year, month } => Period::Month { year, month: month + 1 },
            Period::Quarter { year, quarter: 4 } => Period::Quarter { year: year + 1, quarter: 1 },
            Period::Quarter { year, quarter } => Period::Quarter { year, quarter: quarter + 1 },
        }
    }

    pub fn is_month(self) -> bool {
        matches!(self, Period::Month { .. })
    }

    /// Quarter containing a month; quarters map to themselves.
    pub fn quarter(self) -> Self {
        match self {
            Period::Month { year, month } => Period::Quarter {
                year,
                quarter: (month - 1) / 3 + 1,
            },
            q => q,
        }
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Period::Month { year, month } => write!(f, "{year}-{month:02}"),
            Period::Quarter { year, quarter } => write!(f, "{year}Q{quarter}"),
        }
    }
}

impl FromStr for Period {
    type Err = Error;

    /// Accepts `1991Q1` and `1991-01`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::domain(format!("cannot parse period `{s}` (expected YYYYQn or YYYY-MM)"));
        if let Some((y, q)) = s.split_once(['Q', 'q']) {
            let year = y.parse().map_err(|_| bad())?;
            let quarter: u8 = q.parse().map_err(|_| bad())?;
            if !(1..=4).contains(&quarter) {
                return Err(bad());
            }
            return Ok(Period::Quarter { year, quarter });
        }
        if let Some((y, m)) = s.split_once('-') {
            let year = y.parse().map_err(|_| bad())?;
            let month: u8 = m.parse().map_err(|_| bad())?;
            if !(1..=12).contains(&month) {
                return Err(bad());
            }
            return Ok(Period::Month { year, month });
        }
        Err(bad())
    }
}

/// Values on consecutive periods.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Series {
    values: Vec<f64>,
    labels: Vec<Period>,
}

impl Series {
    pub fn new(values: Vec<f64>, labels: Vec<Period>) -> Result<Self> {
        if values.len() != labels.len() {
            return Err(Error::Dimension(format!(
                "{} values but {} period labels",
                values.len(),
                labels.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!("missing or non-finite value at {}", labels[i])));
        }
        for w in labels.windows(2) {
            if w[0].is_month() != w[1].is_month() || w[1] != w[0].next() {
                return Err(Error::domain(format!(
                    "periods must be consecutive: {} followed by {}",
                    w[0], w[1]
                )));
            }
        }
        Ok(Self { values, labels })
    }

    /// Consecutive periods starting at `start`.
    pub fn starting_at(start: Period, values: Vec<f64>) -> Result<Self> {
        let mut labels = Vec::with_capacity(values.len());
        let mut p = start;
        for _ in 0..values.len() {
            labels.push(p);
            p = p.next();
        }
        Self::new(values, labels)
    }

    /// Unlabelled values, e.g. for PACF of an arbitrary column.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        Self::starting_at(Period::Month { year: 0, month: 1 }, values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn labels(&self) -> &[Period] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Sample autocovariances at lags `0..=max_lag` with denominator `n`.
pub fn autocovariance(x: &[f64], max_lag: usize) -> Vec<f64> {
    let n = x.len();
    let m = x.iter().sum::<f64>() / n as f64;
    (0..=max_lag)
        .map(|h| (0..n - h).map(|i| (x[i] - m) * (x[i + h] - m)).sum::<f64>() / n as f64)
        .collect()
}

/// Partial autocorrelations at lags `1..=max_lag` by the Durbin-Levinson
/// recursion.
pub fn pacf(series: &Series, max_lag: usize) -> Result<Vec<f64>> {
    let x = series.values();
    if x.len() <= max_lag + 1 {
        return Err(Error::InsufficientData(format!(
            "pacf to lag {max_lag} needs more than {} observations, got {}",
            max_lag + 1,
            x.len()
        )));
    }
    if max_lag == 0 {
        return Ok(vec![]);
    }
    let g = autocovariance(x, max_lag);
    if !(g[0] > 0.0) {
        return Err(Error::domain("autocorrelation undefined for a constant series"));
    }
    let rho: Vec<f64> = g.iter().map(|v| v / g[0]).collect();
    let mut out = Vec::with_capacity(max_lag);
    let mut phi = vec![rho[1]];
    let mut v = 1.0 - rho[1] * rho[1];
    out.push(rho[1]);
    for k in 2..=max_lag {
        let num = rho[k] - (0..k - 1).map(|j| phi[j] * rho[k - 1 - j]).sum::<f64>();
        let a = if v > 0.0 { num / v } else { 0.0 };
        let next: Vec<f64> = (0..k - 1).map(|j| phi[j] - a * phi[k - 2 - j]).chain([a]).collect();
        v *= 1.0 - a * a;
        phi = next;
        out.push(a);
    }
    Ok(out)
}

/// Averages each calendar quarter of a monthly series.
pub fn monthly_to_quarterly(series: &Series) -> Result<Series> {
    let labels = series.labels();
    if series.len() % 3 != 0 {
        return Err(Error::domain(format!("{} months is not a whole number of quarters", series.len())));
    }
    match labels.first() {
        Some(Period::Month { month, .. }) if (month - 1) % 3 == 0 => {}
        Some(Period::Month { .. }) => return Err(Error::domain("monthly series must start at a quarter's first month")),
        Some(Period::Quarter { .. }) => return Err(Error::domain("series is already quarterly")),
        None => return Series::new(vec![], vec![]),
    }
    let values = series.values().chunks_exact(3).map(|c| c.iter().sum::<f64>() / 3.0).collect();
    let quarters = labels.chunks_exact(3).map(|c| c[0].quarter()).collect();
    Series::new(values, quarters)
}

/// Lagged copy of a series aligned to its targets.
#[derive(Clone, Debug, PartialEq)]
pub struct Lagged {
    /// `x[t - lag]` for each retained target `t`.
    pub column: Vec<f64>,
    /// Range of target rows (indices into the input) the column aligns to.
    pub targets: std::ops::Range<usize>,
    /// Labels of the leading rows dropped from the modelling frame.
    pub dropped: Vec<Period>,
}

/// Shifts the series by `lag`. A zero lag returns the series itself, which
/// regresses a response on itself; callers should warn about it.
pub fn build_lagged(series: &Series, lag: usize) -> Result<Lagged> {
    let n = series.len();
    if lag >= n {
        return Err(Error::InsufficientData(format!("lag {lag} needs more than {n} observations")));
    }
    Ok(Lagged {
        column: series.values()[..n - lag].to_vec(),
        targets: lag..n,
        dropped: series.labels()[..lag].to_vec(),
    })
}
