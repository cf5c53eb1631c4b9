//! Synthetic substation generator with known components.
//!
//! Space heating comes from a population of first-order buildings whose
//! thermostats follow setback/comfort schedules; hot water from activity
//! profiles with an annual cosine; piping loss from a lagged response to the
//! pipe-to-ground temperature difference.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use crate::data::{
    derive_calendar, format_timestamp, Dataset, HolidayCalendar, Record, SubstationRecord, WeatherRecord,
};
use crate::error::{Error, Result};
use crate::features::{ground_temperature, GroundModelConfig};

/// Weather synthesizer settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WeatherSettings {
    pub mean_temperature: f64,
    pub annual_amplitude: f64,
    pub diurnal_amplitude: f64,
    /// Hourly AR(1) coefficient and innovation sd of the temperature anomaly.
    pub anomaly_persistence: f64,
    pub anomaly_sd: f64,
    pub mean_wind: f64,
    /// Clear-sky noon radiance in winter and summer, W/m².
    pub winter_peak_radiance: f64,
    pub summer_peak_radiance: f64,
}

impl Default for WeatherSettings {
    fn default() -> Self {
        Self {
            mean_temperature: 10.0,
            annual_amplitude: 8.0,
            diurnal_amplitude: 3.0,
            anomaly_persistence: 0.97,
            anomaly_sd: 0.5,
            mean_wind: 4.0,
            winter_peak_radiance: 150.0,
            summer_peak_radiance: 800.0,
        }
    }
}

/// Ground-truth parameters of the generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub years: usize,
    pub seed: u64,
    /// First timestamp, UTC epoch seconds.
    pub start: i64,
    pub buildings: usize,
    pub setback: f64,
    pub comfort: f64,
    /// Building heat-loss coefficient range, kW/K.
    pub ua_range: (f64, f64),
    /// Building time constant range, hours.
    pub time_constant_range: (f64, f64),
    /// Season index below which a building starts heating, range in °C.
    pub heating_threshold_range: (f64, f64),
    /// Share of buildings with longer comfort periods on working days.
    pub home_share: f64,
    /// Room-temperature feedback of the heating controllers, in multiples
    /// of the building's heat-loss coefficient.
    pub feedback_gain: f64,
    /// Hot-water demand per activity (night, waking-up, working hours, after work), kW.
    pub hot_water_levels: [f64; 4],
    pub hot_water_amplitude: f64,
    pub hot_water_peak_day: f64,
    /// Piping heat-loss coefficient, kW/K.
    pub loss_coefficient: f64,
    /// Hourly persistence of the piping loss response.
    pub loss_persistence: f64,
    pub ground: GroundModelConfig,
    /// Measurement noise sd, kW.
    pub noise_scale: f64,
    /// Log-scale sd of the hot-water noise.
    pub hot_water_noise: f64,
    pub weather: WeatherSettings,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            years: 2,
            seed: 42,
            start: 1_514_764_800, // 2018-01-01T00:00:00Z
            buildings: 60,
            setback: 16.0,
            comfort: 20.0,
            ua_range: (0.5, 0.9),
            time_constant_range: (20.0, 60.0),
            heating_threshold_range: (11.0, 14.0),
            home_share: 0.3,
            feedback_gain: 10.0,
            hot_water_levels: [4.0, 24.0, 10.0, 18.0],
            hot_water_amplitude: 0.2,
            hot_water_peak_day: 15.0,
            loss_coefficient: 0.4,
            loss_persistence: 0.5,
            ground: GroundModelConfig {
                depth: 1.2,
                mean_ambient: 10.0,
                amplitude: 8.0,
                phase_shift_days: 20.0,
                diffusivity: 0.05,
            },
            noise_scale: 3.0,
            hot_water_noise: 0.1,
            weather: WeatherSettings::default(),
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |f: &str| Err(Error::InvalidConfig(format!("synth.{f} is out of range")));
        if self.years == 0 {
            return bad("years");
        }
        if self.buildings == 0 {
            return bad("buildings");
        }
        if !(self.noise_scale >= 0.0) || !(self.hot_water_noise >= 0.0) || !(self.weather.anomaly_sd >= 0.0) {
            return bad("noise_scale");
        }
        if self.hot_water_levels.iter().any(|&q| !(q >= 0.0)) {
            return bad("hot_water_levels");
        }
        if !(self.ua_range.0 > 0.0 && self.ua_range.0 <= self.ua_range.1) {
            return bad("ua_range");
        }
        if !(self.time_constant_range.0 >= 1.0 && self.time_constant_range.0 <= self.time_constant_range.1) {
            return bad("time_constant_range");
        }
        if self.heating_threshold_range.0 > self.heating_threshold_range.1 {
            return bad("heating_threshold_range");
        }
        if !(0.0..=1.0).contains(&self.home_share) {
            return bad("home_share");
        }
        if !(self.feedback_gain >= 0.0) {
            return bad("feedback_gain");
        }
        if !(0.0..1.0).contains(&self.loss_persistence) {
            return bad("loss_persistence");
        }
        self.ground.validate()
    }
}

/// True component series behind a synthetic dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticLabels {
    pub space: Vec<f64>,
    pub hot_water: Vec<f64>,
    pub loss: Vec<f64>,
    pub noise: Vec<f64>,
    /// Share of buildings drawing heat at each step.
    pub active_fraction: Vec<f64>,
    pub hot_water_amplitude: f64,
}

pub const LABELS_HEADER: [&str; 6] = ["timestamp", "space", "hot_water", "loss", "noise", "active_fraction"];

impl SyntheticLabels {
    /// Noise-free load, summed in the same order as the generator.
    pub fn component_sum(&self, k: usize) -> f64 {
        self.space[k] + self.hot_water[k] + self.loss[k]
    }

    /// Writes the labels next to the timestamps of the dataset they belong to.
    pub fn write_csv<W: std::io::Write>(&self, ds: &Dataset, writer: W) -> Result<()> {
        if ds.len() != self.space.len() {
            return Err(Error::LengthMismatch { left: ds.len(), right: self.space.len() });
        }
        let mut w = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(LABELS_HEADER).map_err(io)?;
        for (k, r) in ds.records().iter().enumerate() {
            w.write_record([
                format_timestamp(r.timestamp()),
                self.space[k].to_string(),
                self.hot_water[k].to_string(),
                self.loss[k].to_string(),
                self.noise[k].to_string(),
                self.active_fraction[k].to_string(),
            ])
            .map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }
}

struct Building {
    ua: f64,
    capacity: f64,
    solar: f64,
    wind: f64,
    threshold: f64,
    max_power: f64,
    works_out: bool,
    shift: i32,
    setback: f64,
    comfort: f64,
    indoor: f64,
}

impl Building {
    fn setpoint(&self, hour: u32, weekend: bool) -> f64 {
        let h = (hour as i32 - self.shift).rem_euclid(24);
        let comfort = if weekend {
            (7..10).contains(&h) || (16..23).contains(&h)
        } else if self.works_out {
            (6..9).contains(&h) || (17..22).contains(&h)
        } else {
            (6..10).contains(&h) || (16..23).contains(&h)
        };
        if comfort {
            self.comfort
        } else {
            self.setback
        }
    }
}

/// Hot-water demand share of each activity at a given hour.
fn activity_level(levels: &[f64; 4], hour: u32, weekend: bool) -> f64 {
    let h = hour as usize;
    let mut v = match h {
        0..=5 | 22..=23 => levels[0],
        6..=8 => levels[1],
        9..=16 => levels[2],
        _ => levels[3],
    };
    if weekend && (6..=11).contains(&h) {
        // later, longer mornings
        v = 0.5 * (levels[1] + levels[2]);
    }
    v
}

const PREROLL_HOURS: usize = 24 * 90;

pub fn generate_synthetic(cfg: &SynthConfig) -> Result<(Dataset, SyntheticLabels)> {
    cfg.validate()?;
    let n = cfg.years * 8760;
    let total = n + PREROLL_HOURS;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let holidays = HolidayCalendar::default();
    let w = cfg.weather;

    let mut buildings: Vec<Building> = (0..cfg.buildings)
        .map(|_| {
            let ua = rng.random_range(cfg.ua_range.0..=cfg.ua_range.1);
            let tau = rng.random_range(cfg.time_constant_range.0..=cfg.time_constant_range.1);
            Building {
                ua,
                capacity: ua * tau,
                solar: rng.random_range(0.0..0.004) * ua,
                wind: rng.random_range(0.01..0.03),
                threshold: rng.random_range(cfg.heating_threshold_range.0..=cfg.heating_threshold_range.1),
                max_power: ua * 40.0,
                works_out: rng.random::<f64>() >= cfg.home_share,
                shift: rng.random_range(-1..=1),
                setback: cfg.setback + rng.random_range(-0.5..=0.5),
                comfort: cfg.comfort + rng.random_range(-0.5..=0.5),
                indoor: cfg.comfort,
            }
        })
        .collect();

    // weather, including a pre-roll that seeds the season average
    let mut ambient = Vec::with_capacity(total);
    let mut radiance = Vec::with_capacity(total);
    let mut wind = Vec::with_capacity(total);
    let (mut anomaly, mut cloud, mut gust) = (0.0, 0.0, 0.0);
    let mut calendars = Vec::with_capacity(total);
    for k in 0..total {
        let ts = cfg.start + 3600 * (k as i64 - PREROLL_HOURS as i64);
        let cal = derive_calendar(ts, &holidays);
        let (h, dy) = (cal.hour as f64, cal.day_of_year as f64);
        anomaly = w.anomaly_persistence * anomaly + w.anomaly_sd * std_normal.sample(&mut rng);
        let season = (2.0 * PI * (dy - 15.0) / 365.0).cos();
        ambient.push(
            w.mean_temperature - w.annual_amplitude * season
                + w.diurnal_amplitude * (2.0 * PI * (h - 15.0) / 24.0).cos()
                + anomaly,
        );
        cloud = 0.97 * cloud + 0.25 * std_normal.sample(&mut rng);
        let day_len = 12.0 - 4.0 * (2.0 * PI * (dy + 10.0) / 365.0).cos();
        let rise = 12.0 - day_len / 2.0;
        let peak = 0.5 * (w.summer_peak_radiance + w.winter_peak_radiance)
            - 0.5 * (w.summer_peak_radiance - w.winter_peak_radiance) * (2.0 * PI * (dy + 10.0) / 365.0).cos();
        let arc =
            if h + 0.5 > rise && h + 0.5 < rise + day_len { (PI * (h + 0.5 - rise) / day_len).sin() } else { 0.0 };
        let clear = 1.0 / (1.0 + (-(cloud + 0.5)).exp());
        radiance.push((peak * arc * (0.2 + 0.8 * clear)).max(0.0));
        gust = 0.95 * gust + 0.15 * std_normal.sample(&mut rng);
        wind.push(w.mean_wind * (gust - 0.1).exp());
        calendars.push(cal);
    }

    let hot_noise =
        LogNormal::new(-0.5 * cfg.hot_water_noise.powi(2), cfg.hot_water_noise.max(1e-12)).expect("valid sd");
    let mut records = Vec::with_capacity(n);
    let mut labels = SyntheticLabels {
        space: Vec::with_capacity(n),
        hot_water: Vec::with_capacity(n),
        loss: Vec::with_capacity(n),
        noise: Vec::with_capacity(n),
        active_fraction: Vec::with_capacity(n),
        hot_water_amplitude: cfg.hot_water_amplitude,
    };
    let mut season_sum: f64 = ambient[..PREROLL_HOURS].iter().sum();
    let mut loss_state = f64::NAN;
    for k in PREROLL_HOURS..total {
        let cal = calendars[k];
        let weekend = cal.day_type.index() == 1;
        let season = season_sum / PREROLL_HOURS as f64;
        season_sum += ambient[k] - ambient[k - PREROLL_HOURS];
        let (ta, g, v) = (ambient[k], radiance[k], wind[k]);

        let mut space = 0.0;
        let mut active = 0;
        for b in buildings.iter_mut() {
            let ua = b.ua * (1.0 + b.wind * v);
            let passive = ua * (ta - b.indoor) + b.solar * g;
            let power = if season < b.threshold {
                // weather-compensated supply plus proportional room feedback
                let sp = b.setpoint(cal.hour, weekend);
                let demand = ua * (sp - ta) - b.solar * g + cfg.feedback_gain * b.ua * (sp - b.indoor);
                demand.clamp(0.0, b.max_power)
            } else {
                0.0
            };
            if power > 0.0 {
                active += 1;
            }
            b.indoor += (passive + power) / b.capacity;
            space += power;
        }

        let annual = 1.0
            + cfg.hot_water_amplitude * (2.0 * PI * (cal.day_of_year as f64 - cfg.hot_water_peak_day) / 365.0).cos();
        let hot = activity_level(&cfg.hot_water_levels, cal.hour, weekend)
            * annual
            * if cfg.hot_water_noise > 0.0 { hot_noise.sample(&mut rng) } else { 1.0 };

        let supply = (80.0 - 1.2 * ta).clamp(65.0, 95.0);
        let ret = supply - (15.0 + 10.0 * (space / (cfg.buildings as f64 * 15.0)).min(1.0));
        let drive = 0.5 * (supply + ret) - ground_temperature(cal.day_of_year as f64, &cfg.ground);
        let steady = cfg.loss_coefficient * drive;
        loss_state = if loss_state.is_nan() {
            steady
        } else {
            cfg.loss_persistence * loss_state + (1.0 - cfg.loss_persistence) * steady
        };
        let loss = loss_state.max(0.0);

        let noise = cfg.noise_scale * std_normal.sample(&mut rng);
        let load = space + hot + loss + noise;
        records.push(Record {
            calendar: cal,
            weather: WeatherRecord { ambient_temperature: ta, global_radiance: g, wind_speed: v },
            substation: SubstationRecord { heat_load: load, supply_temperature: supply, return_temperature: ret },
        });
        labels.space.push(space);
        labels.hot_water.push(hot);
        labels.loss.push(loss);
        labels.noise.push(noise);
        labels.active_fraction.push(active as f64 / cfg.buildings as f64);
    }
    Ok((Dataset::from_records(records)?, labels))
}
