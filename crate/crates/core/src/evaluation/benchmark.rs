//! Rolling-origin evaluation over a test period and the result tables.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::baselines::BaselineModel;
use super::metrics::{aggregate_horizon_metrics, compute_metrics, MetricsReport, Period};
use crate::data::{format_timestamp, Dataset};
use crate::error::{Error, Result};
use crate::model::predict::Predictor;
use crate::model::{DecompositionRow, Frame, HeliosModel};

/// One forecast step of one rolling window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub origin: i64,
    /// 1-based step within the window.
    pub step: usize,
    pub timestamp: i64,
    pub actual: f64,
    pub predicted: f64,
}

/// A model that forecasts windows of a test period following a training
/// period. Fitting happens before and sees the training rows only.
pub trait RollingForecaster {
    fn name(&self) -> &str;
    fn rolling(&self, train: &Dataset, test: &Dataset, horizon: usize, stride: usize) -> Result<Vec<PredictionRow>>;
}

fn origins(train_len: usize, total: usize, stride: usize) -> impl Iterator<Item = usize> {
    (train_len..total).step_by(stride.max(1))
}

/// HELIOS windows with their decomposition: one teacher-forced pass over
/// train + test supplies the lag state at each origin.
pub fn helios_rolling(
    m: &HeliosModel,
    train: &Dataset,
    test: &Dataset,
    horizon: usize,
    stride: usize,
) -> Result<Vec<(PredictionRow, DecompositionRow)>> {
    if train.len() <= m.first_row() {
        return Err(Error::InsufficientHistory { needed: m.first_row() + 1, available: train.len() });
    }
    let all = train.concat(test)?;
    let frame = Frame::new(m, &all)?;
    let mut p = Predictor::new(m, &frame);
    let (targets, _) = p.teacher_forced();
    let mut out = Vec::new();
    for o in origins(train.len(), all.len(), stride) {
        for (s, row) in p.recursive(o, horizon, &targets).into_iter().enumerate() {
            let k = o + s;
            out.push((
                PredictionRow {
                    origin: frame.timestamps[o],
                    step: s + 1,
                    timestamp: frame.timestamps[k],
                    actual: frame.load[k],
                    predicted: row.total,
                },
                row,
            ));
        }
    }
    Ok(out)
}

pub struct HeliosForecaster {
    pub name: String,
    pub model: HeliosModel,
}

impl RollingForecaster for HeliosForecaster {
    fn name(&self) -> &str {
        &self.name
    }

    fn rolling(&self, train: &Dataset, test: &Dataset, horizon: usize, stride: usize) -> Result<Vec<PredictionRow>> {
        Ok(helios_rolling(&self.model, train, test, horizon, stride)?.into_iter().map(|(p, _)| p).collect())
    }
}

impl RollingForecaster for BaselineModel {
    fn name(&self) -> &str {
        self.kind.name()
    }

    fn rolling(&self, train: &Dataset, test: &Dataset, horizon: usize, stride: usize) -> Result<Vec<PredictionRow>> {
        let all = train.concat(test)?;
        let recs = all.records();
        let mut out = Vec::new();
        for o in origins(train.len(), all.len(), stride) {
            for (s, v) in self.forecast_window(&all, o, horizon).into_iter().enumerate() {
                let k = o + s;
                out.push(PredictionRow {
                    origin: recs[o].timestamp(),
                    step: s + 1,
                    timestamp: recs[k].timestamp(),
                    actual: recs[k].substation.heat_load,
                    predicted: v,
                });
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelResult {
    pub name: String,
    pub predictions: Vec<PredictionRow>,
}

impl ModelResult {
    /// Pooled metrics over every forecast step.
    pub fn metrics(&self, horizon: usize) -> Result<MetricsReport> {
        let y: Vec<f64> = self.predictions.iter().map(|p| p.actual).collect();
        let yhat: Vec<f64> = self.predictions.iter().map(|p| p.predicted).collect();
        let mut r = compute_metrics(&y, &yhat)?;
        r.horizon = horizon;
        Ok(r)
    }

    /// Metrics on period totals; with overlapping windows the latest
    /// forecast of each timestamp is used.
    pub fn aggregated(&self, horizon: usize, period: Period) -> Result<MetricsReport> {
        if period == Period::Hourly {
            return self.metrics(horizon);
        }
        let mut latest: BTreeMap<i64, (f64, f64)> = BTreeMap::new();
        for p in &self.predictions {
            latest.insert(p.timestamp, (p.actual, p.predicted));
        }
        let ts: Vec<i64> = latest.keys().copied().collect();
        let (y, yhat): (Vec<f64>, Vec<f64>) = latest.values().copied().unzip();
        let mut r = aggregate_horizon_metrics(&ts, &y, &yhat, period)?;
        r.horizon = horizon;
        Ok(r)
    }
}

/// Runs every model over the test period; result order follows `models`.
pub fn benchmark(
    models: &[&dyn RollingForecaster],
    train: &Dataset,
    test: &Dataset,
    horizon: usize,
    stride: usize,
) -> Result<Vec<ModelResult>> {
    if horizon == 0 {
        return Err(Error::InvalidConfig("benchmark horizon must be >= 1".into()));
    }
    models
        .iter()
        .map(|m| Ok(ModelResult { name: m.name().to_string(), predictions: m.rolling(train, test, horizon, stride)? }))
        .collect()
}

pub const RESULTS_HEADER: [&str; 9] =
    ["model", "period", "horizon", "count", "r2", "rmse", "mae", "mape", "mape_skipped"];
pub const PREDICTIONS_HEADER: [&str; 6] = ["model", "origin", "step", "timestamp", "actual", "predicted"];

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

pub fn write_results_csv<W: Write>(rows: &[(String, MetricsReport)], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(RESULTS_HEADER).map_err(csv_err)?;
    for (name, r) in rows {
        w.write_record([
            name.clone(),
            r.period.to_string(),
            r.horizon.to_string(),
            r.count.to_string(),
            r.r2.to_string(),
            r.rmse.to_string(),
            r.mae.to_string(),
            r.mape.to_string(),
            r.mape_skipped.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_predictions_csv<W: Write>(results: &[ModelResult], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(PREDICTIONS_HEADER).map_err(csv_err)?;
    for res in results {
        for p in &res.predictions {
            w.write_record([
                res.name.clone(),
                format_timestamp(p.origin),
                p.step.to_string(),
                format_timestamp(p.timestamp),
                p.actual.to_string(),
                p.predicted.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}
