use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::contexts::ContextSets;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PriorFamily {
    Normal,
    /// Normal density restricted to non-negative values.
    HalfNormal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prior {
    pub family: PriorFamily,
    pub location: f64,
    pub scale: f64,
}

impl Prior {
    pub const fn normal(location: f64, scale: f64) -> Self {
        Self { family: PriorFamily::Normal, location, scale }
    }

    pub const fn half_normal(location: f64, scale: f64) -> Self {
        Self { family: PriorFamily::HalfNormal, location, scale }
    }

    /// Log density kernel `-(x - loc)² / (2 s²)`; normalising constants are dropped.
    pub fn log_kernel(&self, x: f64) -> f64 {
        let z = (x - self.location) / self.scale;
        -0.5 * z * z
    }

    pub fn d_log_kernel(&self, x: f64) -> f64 {
        -(x - self.location) / (self.scale * self.scale)
    }

    /// Mean of the distribution (truncated at zero for half-normal).
    pub fn mean(&self) -> f64 {
        match self.family {
            PriorFamily::Normal => self.location,
            PriorFamily::HalfNormal => {
                let a = -self.location / self.scale;
                let pdf = (-0.5 * a * a).exp() / (2.0 * std::f64::consts::PI).sqrt();
                let tail = 0.5 * erfc(a / std::f64::consts::SQRT_2);
                self.location + self.scale * pdf / tail
            }
        }
    }
}

/// Priors per parameter block. Per-context vectors follow the order of the
/// corresponding context set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    /// All gate weights, intercepts and slopes.
    pub gate: Prior,
    /// `ζ` per setpoint context.
    pub setpoint: Vec<Prior>,
    /// `η` per season context.
    pub season_effect: Vec<Prior>,
    /// `μ` per setpoint context.
    pub time_effect: Vec<Prior>,
    /// `β_1..β_4`.
    pub gain: Prior,
    /// ARX coefficients `ā`, `b̄`.
    pub arx: Prior,
    pub hot_water_amplitude: Prior,
    /// `q_u`.
    pub activity_level: Prior,
    /// Observation noise `σ`.
    pub noise_scale: Prior,
}

pub fn default_priors() -> PriorSpec {
    PriorSpec {
        gate: Prior::normal(0.0, 2.0),
        setpoint: vec![Prior::normal(16.0, 2.0), Prior::normal(20.0, 2.0)],
        season_effect: vec![Prior::half_normal(0.0, 0.1), Prior::half_normal(1.0, 0.1)],
        time_effect: vec![Prior::half_normal(0.2, 0.2), Prior::half_normal(0.8, 0.2)],
        gain: Prior::half_normal(0.0, 10.0),
        arx: Prior::half_normal(0.0, 1.0),
        hot_water_amplitude: Prior::half_normal(0.2, 0.05),
        activity_level: Prior::half_normal(0.0, 10.0),
        noise_scale: Prior::half_normal(0.0, 10.0),
    }
}

impl Default for PriorSpec {
    fn default() -> Self {
        default_priors()
    }
}

impl PriorSpec {
    pub fn validate(&self, contexts: &ContextSets) -> Result<()> {
        let all = [self.gate, self.gain, self.arx, self.hot_water_amplitude, self.activity_level, self.noise_scale];
        let per_context = self.setpoint.iter().chain(&self.season_effect).chain(&self.time_effect);
        if all.iter().chain(per_context).any(|p| !(p.scale > 0.0) || !p.location.is_finite()) {
            return Err(Error::InvalidConfig("prior scales must be positive".into()));
        }
        let checks = [
            ("setpoint", self.setpoint.len(), contexts.setpoint.len()),
            ("season_effect", self.season_effect.len(), contexts.season.len()),
            ("time_effect", self.time_effect.len(), contexts.setpoint.len()),
        ];
        for (name, got, want) in checks {
            if got != want {
                return Err(Error::InvalidConfig(format!(
                    "prior `{name}` has {got} entries but the context set has {want}"
                )));
            }
        }
        Ok(())
    }

    /// Same priors with every scale replaced; used for flat-prior checks.
    pub fn with_scale(&self, scale: f64) -> Self {
        let s = |p: Prior| Prior { scale, ..p };
        PriorSpec {
            gate: s(self.gate),
            setpoint: self.setpoint.iter().copied().map(s).collect(),
            season_effect: self.season_effect.iter().copied().map(s).collect(),
            time_effect: self.time_effect.iter().copied().map(s).collect(),
            gain: s(self.gain),
            arx: s(self.arx),
            hot_water_amplitude: s(self.hot_water_amplitude),
            activity_level: s(self.activity_level),
            noise_scale: s(self.noise_scale),
        }
    }
}
