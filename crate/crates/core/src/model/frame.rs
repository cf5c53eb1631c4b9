//! Per-row inputs precomputed once for a dataset: calendar, Fourier features,
//! season index, pipe-to-ground drive and context weights.

use crate::components::annual_cosine;
use crate::contexts::{weights_from_parts, ContextSets, ContextWeights};
use crate::data::{Dataset, DayType};
use crate::error::{Error, Result};
use crate::features::{equivalent_pipe_temperature, fourier_into, ground_temperature, season_series};

use super::HeliosModel;

#[derive(Debug, Clone)]
pub struct Frame {
    pub timestamps: Vec<i64>,
    pub hour: Vec<u32>,
    /// 0 weekday, 1 weekend/holiday.
    pub day: Vec<usize>,
    pub day_of_year: Vec<f64>,
    /// `n × 2P`, row-major.
    pub fourier: Vec<f64>,
    pub dim: usize,
    pub load: Vec<f64>,
    pub ambient: Vec<f64>,
    pub radiance: Vec<f64>,
    pub wind: Vec<f64>,
    /// `T_sr - T_g`.
    pub drive: Vec<f64>,
    pub season: Vec<f64>,
    /// Annual hot-water cosine at each row.
    pub annual: Vec<f64>,
    pub weights: ContextWeights,
    /// First row with a season index and full lag windows.
    pub start: usize,
}

impl Frame {
    pub fn new(m: &HeliosModel, ds: &Dataset) -> Result<Self> {
        Self::with_contexts(m, ds, &m.contexts)
    }

    pub fn with_contexts(m: &HeliosModel, ds: &Dataset, contexts: &ContextSets) -> Result<Self> {
        ds.ensure_contiguous()?;
        let n = ds.len();
        let start = m.first_row();
        if n <= start {
            return Err(Error::InsufficientHistory { needed: start + 1, available: n });
        }
        let recs = ds.records();
        let dim = 2 * m.config.harmonics;
        let mut fourier = vec![0.0; n * dim];
        for (k, r) in recs.iter().enumerate() {
            fourier_into(r.calendar.hour as f64, &mut fourier[k * dim..(k + 1) * dim]);
        }
        let ambient = ds.ambient_temperature();
        let season = season_series(&ambient, m.config.season_window);
        let hour: Vec<u32> = recs.iter().map(|r| r.calendar.hour).collect();
        let days: Vec<DayType> = recs.iter().map(|r| r.calendar.day_type).collect();
        let day_of_year: Vec<f64> = recs.iter().map(|r| r.calendar.day_of_year as f64).collect();
        let drive = recs
            .iter()
            .zip(&day_of_year)
            .map(|(r, &d)| {
                let s = &r.substation;
                equivalent_pipe_temperature(s.supply_temperature, s.return_temperature)
                    - ground_temperature(d, &m.loss.ground)
            })
            .collect();
        let weights = ContextWeights {
            setpoint: weights_from_parts(&contexts.setpoint, &hour, &days, &season),
            season: weights_from_parts(&contexts.season, &hour, &days, &season),
            hot_water: weights_from_parts(&contexts.hot_water, &hour, &days, &season),
        };
        Ok(Self {
            timestamps: ds.timestamps(),
            day: days.iter().map(|d| d.index()).collect(),
            annual: day_of_year.iter().map(|&d| annual_cosine(d, m.hot_water.peak_day)).collect(),
            day_of_year,
            hour,
            fourier,
            dim,
            load: ds.heat_load(),
            ambient,
            radiance: recs.iter().map(|r| r.weather.global_radiance).collect(),
            wind: recs.iter().map(|r| r.weather.wind_speed).collect(),
            drive,
            season,
            weights,
            start,
        })
    }

    pub fn len(&self) -> usize {
        self.load.len()
    }

    pub fn is_empty(&self) -> bool {
        self.load.is_empty()
    }

    pub fn features(&self, k: usize) -> &[f64] {
        &self.fourier[k * self.dim..(k + 1) * self.dim]
    }

    /// Replaces the context weights (context-variant experiments).
    pub fn set_weights(&mut self, weights: ContextWeights) {
        self.weights = weights;
    }
}
