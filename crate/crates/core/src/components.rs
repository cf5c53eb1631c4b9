//! The physical sub-models: indoor setpoint, fraction of active households,
//! aggregated space heating ARX, hot-water demand and piping loss ARX.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::data::DayType;
use crate::error::{Error, Result};
use crate::features::{GroundModelConfig, YEAR_DAYS};
use crate::gates::{SeasonGatingNetwork, TimeGatingNetwork};

/// Lag-polynomial orders of the two ARX components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArxOrders {
    /// Autoregressive order of space heating.
    pub na1: usize,
    /// Input orders for the setpoint gap, radiance and wind terms.
    pub nb: [usize; 3],
    /// Autoregressive order of piping loss.
    pub na2: usize,
    /// Input order of the piping loss drive.
    pub nb4: usize,
}

impl Default for ArxOrders {
    fn default() -> Self {
        Self { na1: 1, nb: [1, 1, 1], na2: 1, nb4: 1 }
    }
}

impl ArxOrders {
    /// Number of past steps needed by the input and output lags.
    pub fn max_lag(&self) -> usize {
        [self.na1, self.nb[0], self.nb[1], self.nb[2], self.na2, self.nb4].into_iter().max().unwrap_or(0)
    }
}

/// Indoor setpoint as a gated mixture of per-context temperatures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetpointModel {
    /// `ζ` per context, `[weekday, weekend/holiday]`, °C.
    pub zeta: Vec<[f64; 2]>,
    pub gate: TimeGatingNetwork,
}

impl SetpointModel {
    pub fn predict(&self, hour: u32, day: DayType) -> f64 {
        let p = self.gate.probs(hour, day);
        p.iter().zip(&self.zeta).map(|(p, z)| p * z[day.index()]).sum()
    }
}

pub fn setpoint_predict(m: &SetpointModel, hour: u32, day: DayType) -> f64 {
    m.predict(hour, day)
}

/// Share of households currently drawing space heat.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActiveHouseholdsModel {
    /// `η` per season context, in [0, 1].
    pub eta: Vec<f64>,
    /// `μ` per setpoint context, `[weekday, weekend/holiday]`, in [0, 1].
    pub mu: Vec<[f64; 2]>,
    pub season_gate: SeasonGatingNetwork,
    pub time_gate: TimeGatingNetwork,
}

impl ActiveHouseholdsModel {
    pub fn season_influence(&self, season: f64) -> f64 {
        self.season_gate.probs(season).iter().zip(&self.eta).map(|(p, e)| p * e).sum()
    }

    pub fn time_influence(&self, hour: u32, day: DayType) -> f64 {
        let p = self.time_gate.probs(hour, day);
        p.iter().zip(&self.mu).map(|(p, m)| p * m[day.index()]).sum()
    }

    pub fn predict(&self, season: f64, hour: u32, day: DayType) -> f64 {
        self.season_influence(season) * self.time_influence(hour, day)
    }
}

pub fn active_fraction(m: &ActiveHouseholdsModel, season: f64, hour: u32, day: DayType) -> f64 {
    m.predict(season, hour, day)
}

/// Aggregated space heating ARX with fraction-gated inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceHeatingArx {
    /// `ā_{1,j}`, j = 1..na1.
    pub a: Vec<f64>,
    /// `b̄_{i,j}`, j = 0..nb_i, for the setpoint gap, radiance and wind terms.
    pub b: [Vec<f64>; 3],
    /// Gains `β_1..β_3`.
    pub beta: [f64; 3],
}

/// Lag windows for one space heating step; index `j` holds time `k - j`
/// (`lagged_space[0]` is `k - 1`).
#[derive(Debug, Clone, Copy)]
pub struct SpaceHeatingInputs<'a> {
    pub lagged_space: &'a [f64],
    /// `T_set - T_a`.
    pub setpoint_gap: &'a [f64],
    pub radiance: &'a [f64],
    pub wind: &'a [f64],
    /// Fraction of active households at `k`.
    pub active_fraction: f64,
}

impl SpaceHeatingArx {
    fn check(&self, x: &SpaceHeatingInputs<'_>) -> Result<()> {
        let need = [
            (self.a.len(), x.lagged_space.len()),
            (self.b[0].len(), x.setpoint_gap.len()),
            (self.b[1].len(), x.radiance.len()),
            (self.b[2].len(), x.wind.len().min(x.setpoint_gap.len())),
        ];
        for (needed, available) in need {
            if available < needed {
                return Err(Error::InsufficientLags { needed, available });
            }
        }
        Ok(())
    }

    /// Prediction without the non-negativity clamp.
    pub fn predict_raw(&self, x: &SpaceHeatingInputs<'_>) -> Result<f64> {
        self.check(x)?;
        let ar: f64 = self.a.iter().zip(x.lagged_space).map(|(a, q)| a * q).sum();
        let gap: f64 = self.b[0].iter().zip(x.setpoint_gap).map(|(b, v)| b * v).sum();
        let sun: f64 = self.b[1].iter().zip(x.radiance).map(|(b, v)| b * v).sum();
        let wind: f64 = self.b[2].iter().zip(x.wind.iter().zip(x.setpoint_gap)).map(|(b, (w, g))| b * w * g).sum();
        // β₂ is a magnitude: solar gains reduce the heat demand
        Ok(ar + x.active_fraction * (self.beta[0] * gap - self.beta[1] * sun + self.beta[2] * wind))
    }

    pub fn predict(&self, x: &SpaceHeatingInputs<'_>) -> Result<f64> {
        Ok(self.predict_raw(x)?.max(0.0))
    }
}

pub fn space_heating_predict(m: &SpaceHeatingArx, inputs: &SpaceHeatingInputs<'_>) -> Result<f64> {
    m.predict(inputs)
}

/// Hot water demand: gated activity levels with an annual correction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HotWaterModel {
    /// Nominal demand `q_u` per activity, kW.
    pub q: Vec<f64>,
    pub gate: TimeGatingNetwork,
    /// Relative amplitude of the annual variation.
    pub lambda: f64,
    /// Day of year with maximum demand.
    pub peak_day: f64,
}

pub(crate) fn annual_cosine(day_of_year: f64, peak_day: f64) -> f64 {
    (2.0 * PI * (day_of_year - peak_day) / YEAR_DAYS).cos()
}

impl HotWaterModel {
    pub fn user_demand(&self, hour: u32, day: DayType) -> f64 {
        self.gate.probs(hour, day).iter().zip(&self.q).map(|(p, q)| p * q).sum()
    }

    pub fn predict(&self, hour: u32, day: DayType, day_of_year: f64) -> f64 {
        self.user_demand(hour, day) * (1.0 + self.lambda * annual_cosine(day_of_year, self.peak_day))
    }
}

pub fn user_demand(m: &HotWaterModel, hour: u32, day: DayType) -> f64 {
    m.user_demand(hour, day)
}

pub fn hot_water_predict(m: &HotWaterModel, hour: u32, day: DayType, day_of_year: u32) -> f64 {
    m.predict(hour, day, day_of_year as f64)
}

/// Piping loss ARX driven by the pipe-to-ground temperature difference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipingLossModel {
    /// `ā_{2,j}`, j = 1..na2.
    pub a: Vec<f64>,
    /// `b̄_{4,j}`, j = 0..nb4.
    pub b: Vec<f64>,
    pub beta: f64,
    pub ground: GroundModelConfig,
}

impl PipingLossModel {
    /// `lagged_loss[0]` is `k - 1`; `drive[j]` is `(T_sr - T_g)(k - j)`.
    pub fn predict_raw(&self, lagged_loss: &[f64], drive: &[f64]) -> Result<f64> {
        if lagged_loss.len() < self.a.len() {
            return Err(Error::InsufficientLags { needed: self.a.len(), available: lagged_loss.len() });
        }
        if drive.len() < self.b.len() {
            return Err(Error::InsufficientLags { needed: self.b.len(), available: drive.len() });
        }
        let ar: f64 = self.a.iter().zip(lagged_loss).map(|(a, q)| a * q).sum();
        let x: f64 = self.b.iter().zip(drive).map(|(b, d)| b * d).sum();
        Ok(ar + self.beta * x)
    }

    pub fn predict(&self, lagged_loss: &[f64], drive: &[f64]) -> Result<f64> {
        Ok(self.predict_raw(lagged_loss, drive)?.max(0.0))
    }
}

pub fn piping_loss_predict(m: &PipingLossModel, lagged_loss: &[f64], drive: &[f64]) -> Result<f64> {
    m.predict(lagged_loss, drive)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const WD: DayType = DayType::Weekday;

    fn setpoint(gate_bias: f64) -> SetpointModel {
        let mut gate = TimeGatingNetwork::zeros(2, 3);
        // cos(2πh/24) feature at h = 0 equals 1
        gate.weights_for_mut(1, WD)[1] = gate_bias;
        SetpointModel { zeta: vec![[16.0, 16.0], [20.0, 20.0]], gate }
    }

    #[test]
    fn setpoint_examples() {
        assert!((setpoint(0.0).predict(3, WD) - 18.0).abs() < 1e-12);
        assert!((setpoint(60.0).predict(0, WD) - 20.0).abs() < 1e-12);
        // P = [0.3, 0.7] when the logit difference is ln(7/3)
        let m = setpoint((7.0f64 / 3.0).ln());
        assert!((m.predict(0, WD) - 18.8).abs() < 1e-12);
    }

    fn active(eta: Vec<f64>, mu: Vec<[f64; 2]>) -> ActiveHouseholdsModel {
        ActiveHouseholdsModel {
            season_gate: SeasonGatingNetwork::zeros(eta.len()),
            time_gate: TimeGatingNetwork::zeros(mu.len(), 3),
            eta,
            mu,
        }
    }

    #[test]
    fn active_fraction_examples() {
        let m = active(vec![1.0, 1.0], vec![[1.0; 2], [1.0; 2]]);
        assert_eq!(m.predict(4.0, 13, WD), 1.0);
        let mut m = active(vec![0.0, 1.0], vec![[0.5; 2], [0.5; 2]]);
        m.season_gate = SeasonGatingNetwork { intercept: vec![50.0, -50.0], slope: vec![0.0, 0.0] };
        assert!(m.predict(20.0, 13, WD) < 1e-20);
        let m = active(vec![0.2, 1.0], vec![[0.3; 2], [0.8; 2]]);
        assert!((m.predict(0.0, 7, WD) - 0.33).abs() < 1e-12);
    }

    fn arx1(a: f64, beta: [f64; 3]) -> SpaceHeatingArx {
        SpaceHeatingArx { a: vec![a], b: [vec![1.0, 0.0], vec![1.0, 0.0], vec![1.0, 0.0]], beta }
    }

    #[test]
    fn space_heating_examples() {
        let m = arx1(0.9, [1.0; 3]);
        let z = [0.0, 0.0];
        let x =
            SpaceHeatingInputs { lagged_space: &[0.0], setpoint_gap: &z, radiance: &z, wind: &z, active_fraction: 1.0 };
        assert_eq!(m.predict(&x).unwrap(), 0.0);
        let x = SpaceHeatingInputs {
            lagged_space: &[100.0],
            setpoint_gap: &[5.0, 5.0],
            radiance: &[300.0, 0.0],
            wind: &[3.0, 3.0],
            active_fraction: 0.0,
        };
        assert!((m.predict(&x).unwrap() - 90.0).abs() < 1e-12);
        // hand recursion: 0.5 * 40 + 2 * 10
        let m = arx1(0.5, [2.0, 0.0, 0.0]);
        let x = SpaceHeatingInputs {
            lagged_space: &[40.0],
            setpoint_gap: &[10.0, 0.0],
            radiance: &z,
            wind: &z,
            active_fraction: 1.0,
        };
        assert!((m.predict(&x).unwrap() - 40.0).abs() < 1e-12);
        // sunshine lowers the demand
        let m = arx1(0.0, [1.0, 0.1, 0.0]);
        let x = SpaceHeatingInputs {
            lagged_space: &[0.0],
            setpoint_gap: &[10.0, 0.0],
            radiance: &[50.0, 0.0],
            wind: &z,
            active_fraction: 1.0,
        };
        assert!((m.predict(&x).unwrap() - 5.0).abs() < 1e-12);
        let short = SpaceHeatingInputs { lagged_space: &[], ..x };
        assert!(matches!(m.predict(&short), Err(Error::InsufficientLags { .. })));
    }

    #[test]
    fn space_heating_clamps_at_zero() {
        let m = arx1(0.0, [1.0, 0.0, 0.0]);
        let x = SpaceHeatingInputs {
            lagged_space: &[0.0],
            setpoint_gap: &[-5.0, 0.0],
            radiance: &[0.0, 0.0],
            wind: &[0.0, 0.0],
            active_fraction: 1.0,
        };
        assert_eq!(m.predict_raw(&x).unwrap(), -5.0);
        assert_eq!(m.predict(&x).unwrap(), 0.0);
    }

    fn hot_water(q: Vec<f64>, lambda: f64) -> HotWaterModel {
        HotWaterModel { gate: TimeGatingNetwork::zeros(q.len(), 3), q, lambda, peak_day: 15.0 }
    }

    #[test]
    fn hot_water_examples() {
        let m = hot_water(vec![0.0, 8.0, 4.0, 8.0], 0.2);
        assert!((m.user_demand(11, WD) - 5.0).abs() < 1e-12);
        let mut sat = hot_water(vec![5.0, 1.0, 1.0, 1.0], 0.0);
        sat.gate.weights_for_mut(0, WD)[1] = 80.0;
        assert!((sat.user_demand(0, WD) - 5.0).abs() < 1e-12);
        assert!((m.predict(11, WD, 15.0) - 1.2 * 5.0).abs() < 1e-12);
        assert!((m.predict(11, WD, 15.0 + 365.0 / 2.0) - 0.8 * 5.0).abs() < 1e-12);
        let flat = hot_water(vec![3.0; 4], 0.0);
        assert!((flat.predict(2, WD, 200.0) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn hot_water_annual_mean() {
        let m = hot_water(vec![4.0; 4], 0.05);
        let mean: f64 = (1..=365).map(|d| m.predict(8, WD, d as f64) / 4.0).sum::<f64>() / 365.0;
        assert!((mean - 1.0).abs() < 1e-3);
    }

    fn loss(a: f64) -> PipingLossModel {
        PipingLossModel { a: vec![a], b: vec![1.0, 0.0], beta: 1.0, ground: GroundModelConfig::default() }
    }

    #[test]
    fn piping_loss_examples() {
        assert_eq!(loss(0.5).predict(&[0.0], &[0.0, 0.0]).unwrap(), 0.0);
        assert!((loss(0.0).predict(&[0.0], &[50.0, 0.0]).unwrap() - 50.0).abs() < 1e-12);
        assert!((loss(0.8).predict(&[10.0], &[2.0, 0.0]).unwrap() - 10.0).abs() < 1e-12);
        assert!(matches!(loss(0.8).predict(&[], &[2.0]), Err(Error::InsufficientLags { .. })));
    }

    proptest! {
        #[test]
        fn setpoint_is_convex(w in prop::collection::vec(-4.0f64..4.0, 24), z0 in 10.0f64..18.0, z1 in 18.0f64..24.0, h in 0u32..24) {
            let m = SetpointModel { zeta: vec![[z0, z0], [z1, z1]], gate: TimeGatingNetwork { harmonics: 3, contexts: 2, weights: w } };
            let t = m.predict(h, WD);
            prop_assert!(t >= z0 - 1e-12 && t <= z1 + 1e-12);
        }

        #[test]
        fn fraction_in_unit_interval(e in prop::collection::vec(0.0f64..=1.0, 2), m in prop::collection::vec(0.0f64..=1.0, 4),
                                     u in prop::collection::vec(-3.0f64..3.0, 4), s in -10.0f64..25.0, h in 0u32..24) {
            let model = ActiveHouseholdsModel {
                eta: e,
                mu: vec![[m[0], m[1]], [m[2], m[3]]],
                season_gate: SeasonGatingNetwork { intercept: u[..2].to_vec(), slope: u[2..].to_vec() },
                time_gate: TimeGatingNetwork::zeros(2, 3),
            };
            let a = model.predict(s, h, DayType::WeekendHoliday);
            prop_assert!((0.0..=1.0).contains(&a));
        }

        #[test]
        fn zero_fraction_zero_lags_is_zero(g in -20.0f64..20.0, r in 0.0f64..800.0, w in 0.0f64..15.0) {
            let m = arx1(0.7, [3.0, 2.0, 1.0]);
            let x = SpaceHeatingInputs { lagged_space: &[0.0], setpoint_gap: &[g, g], radiance: &[r, r], wind: &[w, w], active_fraction: 0.0 };
            prop_assert_eq!(m.predict(&x).unwrap(), 0.0);
        }

        #[test]
        fn hot_water_is_annual(d in 1u32..366) {
            let m = hot_water(vec![1.0, 2.0, 3.0, 4.0], 0.2);
            prop_assert!((m.predict(9, WD, d as f64) - m.predict(9, WD, d as f64 + 365.0)).abs() < 1e-9);
        }
    }
}
