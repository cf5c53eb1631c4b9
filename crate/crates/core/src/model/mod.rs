//! The composite heat-load model: space heating + hot water + piping loss,
//! its parameter layout, prediction and persistence.

mod frame;
mod io;
mod layout;
pub(crate) mod predict;
pub mod priors;

pub use frame::Frame;
pub use io::{load_model, save_model, write_decomposition_csv, DECOMPOSITION_HEADER, MODEL_FILE_VERSION};
pub use layout::{Constraint, Layout};
pub use predict::{
    forecast, predict_decomposed, residual_targets, ComponentTargets, DecompositionRow, PredictionMode, Predictor,
};
pub use priors::{default_priors, Prior, PriorFamily, PriorSpec};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::components::{
    ActiveHouseholdsModel, ArxOrders, HotWaterModel, PipingLossModel, SetpointModel, SpaceHeatingArx,
};
use crate::contexts::ContextSets;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::features::GroundModelConfig;
use crate::gates::{SeasonGatingNetwork, TimeGatingNetwork};

/// Ground model settings; mean and amplitude default to estimates from the
/// training data when left unset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GroundSettings {
    pub depth: f64,
    pub diffusivity: f64,
    pub phase_shift_days: f64,
    pub mean_ambient: Option<f64>,
    pub amplitude: Option<f64>,
}

impl Default for GroundSettings {
    fn default() -> Self {
        let g = GroundModelConfig::default();
        Self {
            depth: g.depth,
            diffusivity: g.diffusivity,
            phase_shift_days: g.phase_shift_days,
            mean_ambient: None,
            amplitude: None,
        }
    }
}

impl GroundSettings {
    pub fn resolve(&self, train: &Dataset) -> Result<GroundModelConfig> {
        let estimate = GroundModelConfig::estimate_ambient(train);
        let pick = |set: Option<f64>, est: Option<f64>, name: &str| {
            set.or(est)
                .ok_or_else(|| Error::DegenerateData(format!("cannot estimate ground {name} from an empty dataset")))
        };
        let cfg = GroundModelConfig {
            depth: self.depth,
            diffusivity: self.diffusivity,
            phase_shift_days: self.phase_shift_days,
            mean_ambient: pick(self.mean_ambient, estimate.map(|e| e.0), "mean")?,
            amplitude: pick(self.amplitude, estimate.map(|e| e.1), "amplitude")?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Structural hyper-parameters of the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    /// Fourier harmonic pairs `P`.
    pub harmonics: usize,
    /// Season moving-average window `M`, hours.
    pub season_window: usize,
    pub orders: ArxOrders,
    /// Day of year with maximum hot-water demand.
    pub hot_water_peak_day: f64,
    pub ground: GroundSettings,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            harmonics: 3,
            season_window: 24 * 90,
            orders: ArxOrders::default(),
            hot_water_peak_day: 15.0,
            ground: GroundSettings::default(),
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.harmonics == 0 {
            return Err(Error::InvalidConfig("harmonics must be >= 1".into()));
        }
        if self.season_window == 0 {
            return Err(Error::InvalidConfig("season_window must be >= 1".into()));
        }
        Ok(())
    }

    /// First row with a defined season index and full lag windows.
    pub fn first_row(&self) -> usize {
        self.season_window.max(self.orders.max_lag())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeliosModel {
    pub config: ModelConfig,
    pub contexts: ContextSets,
    pub priors: PriorSpec,
    pub setpoint: SetpointModel,
    pub active: ActiveHouseholdsModel,
    pub space: SpaceHeatingArx,
    pub hot_water: HotWaterModel,
    pub loss: PipingLossModel,
    /// Observation noise σ, kW.
    pub noise_scale: f64,
}

impl HeliosModel {
    /// Model with the right shapes and every parameter at zero (σ = 1).
    pub fn zeroed(config: ModelConfig, contexts: ContextSets, priors: PriorSpec, ground: GroundModelConfig) -> Self {
        let (nt, ns, nu, p) =
            (contexts.setpoint.len(), contexts.season.len(), contexts.hot_water.len(), config.harmonics);
        let o = config.orders;
        Self {
            setpoint: SetpointModel { zeta: vec![[0.0; 2]; nt], gate: TimeGatingNetwork::zeros(nt, p) },
            active: ActiveHouseholdsModel {
                eta: vec![0.0; ns],
                mu: vec![[0.0; 2]; nt],
                season_gate: SeasonGatingNetwork::zeros(ns),
                time_gate: TimeGatingNetwork::zeros(nt, p),
            },
            space: SpaceHeatingArx {
                a: vec![0.0; o.na1],
                b: [vec![0.0; o.nb[0] + 1], vec![0.0; o.nb[1] + 1], vec![0.0; o.nb[2] + 1]],
                beta: [0.0; 3],
            },
            hot_water: HotWaterModel {
                q: vec![0.0; nu],
                gate: TimeGatingNetwork::zeros(nu, p),
                lambda: 0.0,
                peak_day: config.hot_water_peak_day,
            },
            loss: PipingLossModel { a: vec![0.0; o.na2], b: vec![0.0; o.nb4 + 1], beta: 0.0, ground },
            noise_scale: 1.0,
            config,
            contexts,
            priors,
        }
    }

    /// Parameters at their prior means plus seeded uniform jitter of ±1 % of
    /// the prior scale; bounded parameters are kept strictly inside their range.
    pub fn initialize(
        config: ModelConfig,
        contexts: ContextSets,
        priors: PriorSpec,
        train: &Dataset,
        seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        contexts.validate()?;
        priors.validate(&contexts)?;
        let ground = config.ground.resolve(train)?;
        let mut model = Self::zeroed(config, contexts, priors, ground);
        let layout = Layout::of(&model);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = vec![0.0; layout.len()];
        for (i, (constraint, prior)) in layout.entries(&model.priors).into_iter().enumerate() {
            let jitter = rng.random_range(-0.01..=0.01) * prior.scale;
            x[i] = constraint.clamp_interior(prior.mean() + jitter);
        }
        model.set_vector(&layout, &x);
        Ok(model)
    }

    pub fn layout(&self) -> Layout {
        Layout::of(self)
    }

    /// Constrained parameter vector in layout order.
    pub fn to_vector(&self, layout: &Layout) -> Vec<f64> {
        layout.read(self)
    }

    pub fn set_vector(&mut self, layout: &Layout, x: &[f64]) {
        layout.write(self, x)
    }

    pub fn first_row(&self) -> usize {
        self.config.first_row()
    }
}
