use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::data::utc;
use crate::error::{Error, Result};

/// Rows with `|y|` below this are left out of MAPE.
pub const MAPE_GUARD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Period {
    Hourly,
    Daily,
    Weekly,
    Monthly,
    Biannual,
}

impl Period {
    pub const ALL: [Period; 5] = [Period::Hourly, Period::Daily, Period::Weekly, Period::Monthly, Period::Biannual];

    pub fn as_str(self) -> &'static str {
        match self {
            Period::Hourly => "hourly",
            Period::Daily => "daily",
            Period::Weekly => "weekly",
            Period::Monthly => "monthly",
            Period::Biannual => "biannual",
        }
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Period {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Period::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown period `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// kW.
    pub rmse: f64,
    pub r2: f64,
    /// kW.
    pub mae: f64,
    /// Percent.
    pub mape: f64,
    pub mape_skipped: usize,
    pub count: usize,
    pub horizon: usize,
    pub period: Period,
}

fn metrics_raw(y: &[f64], yhat: &[f64]) -> MetricsReport {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let (mut sse, mut sae, mut sst, mut ape) = (0.0, 0.0, 0.0, 0.0);
    let mut kept = 0usize;
    for (&a, &p) in y.iter().zip(yhat) {
        let e = a - p;
        sse += e * e;
        sae += e.abs();
        sst += (a - mean) * (a - mean);
        if a.abs() >= MAPE_GUARD {
            ape += e.abs() / a.abs();
            kept += 1;
        }
    }
    MetricsReport {
        rmse: (sse / n).sqrt(),
        r2: if sst > 0.0 { 1.0 - sse / sst } else { f64::NAN },
        mae: sae / n,
        mape: if kept > 0 { 100.0 * ape / kept as f64 } else { f64::NAN },
        mape_skipped: y.len() - kept,
        count: y.len(),
        horizon: 1,
        period: Period::Hourly,
    }
}

pub fn compute_metrics(y: &[f64], yhat: &[f64]) -> Result<MetricsReport> {
    if y.len() != yhat.len() {
        return Err(Error::LengthMismatch { left: y.len(), right: yhat.len() });
    }
    if y.len() < 2 {
        return Err(Error::DegenerateVariance);
    }
    let r = metrics_raw(y, yhat);
    if r.r2.is_nan() {
        return Err(Error::DegenerateVariance);
    }
    debug_assert!(r.rmse + 1e-12 * r.rmse.max(1.0) >= r.mae);
    Ok(r)
}

fn days_in_month(year: i32, month: u32) -> u32 {
    let (ny, nm) = if month == 12 { (year + 1, 1) } else { (year, month + 1) };
    let first = NaiveDate::from_ymd_opt(year, month, 1).expect("valid month");
    let next = NaiveDate::from_ymd_opt(ny, nm, 1).expect("valid month");
    (next - first).num_days() as u32
}

/// Bucket key and the number of hourly rows a complete bucket holds.
fn bucket(ts: i64, period: Period) -> ((i32, u32), usize) {
    let t = utc(ts);
    let d = t.date_naive();
    match period {
        Period::Hourly => ((0, ts.div_euclid(3600) as u32), 1),
        Period::Daily => ((d.year(), d.ordinal()), 24),
        Period::Weekly => {
            let w = d.iso_week();
            ((w.year(), w.week()), 168)
        }
        Period::Monthly => ((d.year(), d.month()), 24 * days_in_month(d.year(), d.month()) as usize),
        Period::Biannual => {
            let half = if d.month() <= 6 { 0 } else { 1 };
            let days: u32 = (half * 6 + 1..=half * 6 + 6).map(|m| days_in_month(d.year(), m)).sum();
            ((d.year(), half), 24 * days as usize)
        }
    }
}

/// Metrics on period totals. Buckets not fully covered by hourly rows are
/// dropped; at least one complete bucket is required.
pub fn aggregate_horizon_metrics(timestamps: &[i64], y: &[f64], yhat: &[f64], period: Period) -> Result<MetricsReport> {
    if y.len() != yhat.len() {
        return Err(Error::LengthMismatch { left: y.len(), right: yhat.len() });
    }
    if timestamps.len() != y.len() {
        return Err(Error::LengthMismatch { left: timestamps.len(), right: y.len() });
    }
    let mut buckets: BTreeMap<(i32, u32), (usize, usize, f64, f64)> = BTreeMap::new();
    for ((&ts, &a), &p) in timestamps.iter().zip(y).zip(yhat) {
        let (key, size) = bucket(ts, period);
        let e = buckets.entry(key).or_insert((0, size, 0.0, 0.0));
        e.0 += 1;
        e.2 += a;
        e.3 += p;
    }
    let (ys, ps): (Vec<f64>, Vec<f64>) =
        buckets.values().filter(|(count, size, _, _)| count == size).map(|&(_, _, a, p)| (a, p)).unzip();
    if ys.is_empty() {
        return Err(Error::InsufficientCoverage);
    }
    let mut r = metrics_raw(&ys, &ps);
    r.period = period;
    Ok(r)
}
