//! Deterministic feature transforms: hour-of-day Fourier encoding, the
//! season index, the buried-pipe ground temperature and the equivalent pipe
//! temperature.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};

/// Period of the hour-of-day encoding.
pub const DAY_HOURS: f64 = 24.0;
pub const YEAR_DAYS: f64 = 365.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FourierConfig {
    /// Number of sine/cosine pairs `P`; the encoding has `2P` entries.
    pub harmonics: usize,
}

impl Default for FourierConfig {
    fn default() -> Self {
        Self { harmonics: 3 }
    }
}

impl FourierConfig {
    pub fn dim(&self) -> usize {
        2 * self.harmonics
    }
}

/// `[sin(2πph/24), cos(2πph/24)]` for `p = 1..=P`, interleaved.
pub fn fourier_features(hour: u32, cfg: FourierConfig) -> Vec<f64> {
    let mut out = vec![0.0; cfg.dim()];
    fourier_into(hour as f64, &mut out);
    out
}

pub(crate) fn fourier_into(hour: f64, out: &mut [f64]) {
    for (p, pair) in out.chunks_exact_mut(2).enumerate() {
        let angle = 2.0 * PI * (p + 1) as f64 * hour / DAY_HOURS;
        pair[0] = angle.sin();
        pair[1] = angle.cos();
    }
}

/// Mean of the last `window` values of `history`, i.e. the season index for
/// the step right after the history ends.
pub fn season_index(history: &[f64], window: usize) -> Result<f64> {
    if window == 0 || history.len() < window {
        return Err(Error::InsufficientHistory { needed: window.max(1), available: history.len() });
    }
    let tail = &history[history.len() - window..];
    Ok(tail.iter().sum::<f64>() / window as f64)
}

/// Season index for every step of `ambient`: `S(k)` averages
/// `ambient[k-window..k]`. Steps without a full window are NaN.
pub fn season_series(ambient: &[f64], window: usize) -> Vec<f64> {
    let mut prefix = Vec::with_capacity(ambient.len() + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for &t in ambient {
        acc += t;
        prefix.push(acc);
    }
    (0..ambient.len())
        .map(|k| if window == 0 || k < window { f64::NAN } else { (prefix[k] - prefix[k - window]) / window as f64 })
        .collect()
}

/// Annual ground temperature model at pipe depth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundModelConfig {
    /// Pipe depth `z` in metres.
    pub depth: f64,
    /// Annual mean ambient temperature, °C.
    pub mean_ambient: f64,
    /// Annual ambient amplitude, °C.
    pub amplitude: f64,
    /// Day of year of minimum surface temperature.
    pub phase_shift_days: f64,
    /// Soil thermal diffusivity, m²/day.
    pub diffusivity: f64,
}

impl Default for GroundModelConfig {
    fn default() -> Self {
        Self { depth: 1.0, mean_ambient: 10.0, amplitude: 8.0, phase_shift_days: 15.0, diffusivity: 0.07 }
    }
}

impl GroundModelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.depth >= 0.0 && self.amplitude >= 0.0 && self.diffusivity > 0.0) {
            return Err(Error::InvalidConfig("ground model needs depth >= 0, amplitude >= 0, diffusivity > 0".into()));
        }
        Ok(())
    }

    /// Mean and amplitude from a dataset: the annual mean of the ambient
    /// temperature and half the spread of its daily means.
    pub fn estimate_ambient(ds: &Dataset) -> Option<(f64, f64)> {
        if ds.is_empty() {
            return None;
        }
        let ta = ds.ambient_temperature();
        let mean = ta.iter().sum::<f64>() / ta.len() as f64;
        let mut daily: std::collections::BTreeMap<i64, (f64, usize)> = Default::default();
        for r in ds.records() {
            let e = daily.entry(r.timestamp().div_euclid(86_400)).or_insert((0.0, 0));
            e.0 += r.weather.ambient_temperature;
            e.1 += 1;
        }
        let means = daily.values().map(|(s, n)| s / *n as f64);
        let (lo, hi) = means.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), m| (lo.min(m), hi.max(m)));
        Some((mean, 0.5 * (hi - lo)))
    }

    fn damping(&self) -> f64 {
        self.depth * (PI / (YEAR_DAYS * self.diffusivity)).sqrt()
    }
}

pub fn ground_temperature(day_of_year: f64, cfg: &GroundModelConfig) -> f64 {
    let damp = cfg.damping();
    cfg.mean_ambient
        - cfg.amplitude * (-damp).exp() * (2.0 * PI * (day_of_year - cfg.phase_shift_days) / YEAR_DAYS - damp).cos()
}

pub fn equivalent_pipe_temperature(supply: f64, ret: f64) -> f64 {
    0.5 * (supply + ret)
}
