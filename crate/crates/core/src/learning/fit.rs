//! Outer fitting loop: refresh the residual component targets, maximize the
//! weighted posterior with the targets held fixed, repeat.
//!
//! A candidate is only accepted when the objective evaluated with its *own*
//! targets does not drop below the current one; otherwise the step is halved
//! towards the current point. The recorded trace is therefore non-decreasing.

use serde::{Deserialize, Serialize};

use super::objective::{to_unconstrained_gradient, Objective};
use super::optim::{maximize, LbfgsConfig};
use crate::contexts::ContextSets;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::predict::Predictor;
use crate::model::{Constraint, Frame, HeliosModel, ModelConfig, PriorSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub max_outer_iterations: usize,
    /// Largest relative parameter change `|Δx| / max(1, |x|)` that counts as converged.
    pub outer_tolerance: f64,
    pub inner: LbfgsConfig,
    /// Rows after the first predictable row that are excluded from the
    /// objective while the zero initial lag state washes out.
    pub warmup: usize,
    /// Step halvings tried when a candidate lowers the objective.
    pub max_halvings: usize,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            max_outer_iterations: 50,
            outer_tolerance: 1e-4,
            inner: LbfgsConfig::default(),
            warmup: 24,
            max_halvings: 8,
            seed: 0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.outer_tolerance > 0.0) {
            return Err(Error::InvalidConfig("fit.outer_tolerance must be positive".into()));
        }
        if !(self.inner.gradient_tolerance > 0.0) || self.inner.memory == 0 {
            return Err(Error::InvalidConfig("fit.inner needs a positive gradient_tolerance and memory".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    /// Objective at the initial parameters.
    pub initial_objective: f64,
    /// Objective after each accepted outer iteration.
    pub trace: Vec<f64>,
    /// Largest relative parameter change of each accepted outer iteration.
    pub max_deltas: Vec<f64>,
    pub inner_iterations: Vec<usize>,
    pub converged: bool,
    /// No step along the last candidate improved the objective.
    pub stalled: bool,
    /// Leading rows not scored by the objective.
    pub dropped_warmup: usize,
    /// The observation noise scale is learned, not fixed.
    pub noise_scale: f64,
}

pub const TRACE_HEADER: [&str; 4] = ["iteration", "objective", "max_delta", "inner_iterations"];

impl FitReport {
    /// Objective trace, one row per accepted outer iteration; row 0 is the
    /// initialization.
    pub fn write_trace_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(TRACE_HEADER).map_err(io)?;
        w.write_record(["0".to_string(), self.initial_objective.to_string(), String::new(), String::new()])
            .map_err(io)?;
        for (i, v) in self.trace.iter().enumerate() {
            w.write_record([
                (i + 1).to_string(),
                v.to_string(),
                self.max_deltas[i].to_string(),
                self.inner_iterations[i].to_string(),
            ])
            .map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Fits a freshly initialized model (prior means plus seeded jitter).
pub fn fit(
    ds: &Dataset,
    contexts: &ContextSets,
    priors: &PriorSpec,
    model_cfg: &ModelConfig,
    cfg: &FitConfig,
) -> Result<(HeliosModel, FitReport)> {
    cfg.validate()?;
    ds.ensure_contiguous()?;
    let m = HeliosModel::initialize(*model_cfg, contexts.clone(), priors.clone(), ds, cfg.seed)?;
    fit_with_model(m, ds, cfg)
}

struct Problem<'a> {
    frame: &'a Frame,
    priors: &'a PriorSpec,
    first_row: usize,
    constraints: Vec<Constraint>,
    template: HeliosModel,
}

impl Problem<'_> {
    fn model_at(&self, u: &[f64]) -> HeliosModel {
        let x: Vec<f64> = u.iter().zip(&self.constraints).map(|(u, c)| c.forward(*u)).collect();
        let mut m = self.template.clone();
        m.set_vector(&m.layout(), &x);
        m
    }

    /// Objective with the targets implied by the parameters themselves.
    fn consistent(&self, m: &HeliosModel) -> Result<(f64, crate::model::ComponentTargets)> {
        let targets = Predictor::new(m, self.frame).teacher_forced().0;
        let v = Objective::new(self.frame, &targets, self.first_row)?.value(m, self.priors)?;
        Ok((v, targets))
    }
}

fn max_relative_change(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs() / x.abs().max(1.0)).fold(0.0, f64::max)
}

/// Fits starting from the parameters of `m` (contexts, priors and structure
/// are taken from `m`).
pub fn fit_with_model(m: HeliosModel, ds: &Dataset, cfg: &FitConfig) -> Result<(HeliosModel, FitReport)> {
    cfg.validate()?;
    let frame = Frame::new(&m, ds)?;
    let first_row = frame.start + cfg.warmup;
    if first_row + 1 >= frame.len() {
        return Err(Error::InsufficientHistory { needed: first_row + 2, available: frame.len() });
    }
    let scored = &frame.load[first_row..];
    if scored.iter().all(|&q| q == scored[0]) {
        return Err(Error::DegenerateData("heat load is constant over the fitting rows".into()));
    }
    let layout = m.layout();
    let priors = m.priors.clone();
    let problem =
        Problem { frame: &frame, priors: &priors, first_row, constraints: layout.constraints(), template: m.clone() };

    let mut u: Vec<f64> = m.to_vector(&layout).iter().zip(&problem.constraints).map(|(x, c)| c.inverse(*x)).collect();
    let mut current = problem.model_at(&u);
    let (mut value, mut targets) = problem.consistent(&current)?;
    let mut report = FitReport {
        initial_objective: value,
        trace: Vec::new(),
        max_deltas: Vec::new(),
        inner_iterations: Vec::new(),
        converged: false,
        stalled: false,
        dropped_warmup: first_row,
        noise_scale: current.noise_scale,
    };
    if cfg.max_outer_iterations == 0 {
        // hand back the initialization untouched
        return Ok((m, report));
    }

    let mut budget = cfg.inner.max_iterations;
    let mut outer = 0;
    while outer < cfg.max_outer_iterations {
        let objective = Objective::new(&frame, &targets, first_row)?;
        let inner_cfg = LbfgsConfig { max_iterations: budget, ..cfg.inner };
        let inner = maximize(
            |uu| {
                let mm = problem.model_at(uu);
                let e = objective.evaluate(&mm, &priors)?;
                Ok((e.value, to_unconstrained_gradient(&e.gradient, uu, &problem.constraints)))
            },
            &u,
            &inner_cfg,
        )?;

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..=cfg.max_halvings {
            let cand: Vec<f64> = u.iter().zip(&inner.x).map(|(a, b)| a + step * (b - a)).collect();
            let mc = problem.model_at(&cand);
            if let Ok((v, t)) = problem.consistent(&mc) {
                if v >= value {
                    accepted = Some((cand, mc, v, t));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((cand, mc, v, t)) = accepted else {
            // the fixed-target optimum drifted too far from self-consistency;
            // retry with a shorter inner run before giving up
            if budget > 1 {
                budget = (budget / 4).max(1);
                continue;
            }
            report.stalled = true;
            break;
        };
        outer += 1;
        report.inner_iterations.push(inner.iterations);
        let delta = max_relative_change(&current.to_vector(&layout), &mc.to_vector(&layout));
        u = cand;
        current = mc;
        value = v;
        targets = t;
        report.trace.push(value);
        report.max_deltas.push(delta);
        if delta < cfg.outer_tolerance {
            report.converged = true;
            break;
        }
        budget = (budget * 2).min(cfg.inner.max_iterations);
    }
    report.noise_scale = current.noise_scale;
    Ok((current, report))
}
