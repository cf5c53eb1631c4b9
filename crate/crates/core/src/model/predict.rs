//! Decomposed prediction: teacher-forced passes (lags from residual targets)
//! and recursive passes (lags from the model's own outputs).

use serde::{Deserialize, Serialize};

use crate::components::SpaceHeatingInputs;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::gates::softmax_parts;

use super::{Frame, HeliosModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictionMode {
    TeacherForced,
    Recursive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecompositionRow {
    pub timestamp: i64,
    pub space: f64,
    pub hot_water: f64,
    pub loss: f64,
    pub total: f64,
}

impl DecompositionRow {
    fn new(timestamp: i64, space: f64, hot_water: f64, loss: f64) -> Self {
        Self { timestamp, space, hot_water, loss, total: space + hot_water + loss }
    }
}

/// Residual-derived component series, aligned with the dataset rows; rows
/// before the first predictable row are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentTargets {
    pub space: Vec<f64>,
    pub hot_water: Vec<f64>,
    pub loss: Vec<f64>,
}

impl ComponentTargets {
    pub(crate) fn zeros(n: usize) -> Self {
        Self { space: vec![0.0; n], hot_water: vec![0.0; n], loss: vec![0.0; n] }
    }
}

/// Gate outputs and the lag-free parts of every component, per row.
#[derive(Debug, Clone)]
pub(crate) struct GateCache {
    pub nt: usize,
    pub ns: usize,
    pub nu: usize,
    /// Setpoint gate, `n × nt`.
    pub pt: Vec<f64>,
    pub lpt: Vec<f64>,
    /// Active-household time gate, `n × nt`.
    pub pa: Vec<f64>,
    pub lpa: Vec<f64>,
    /// Season gate, `n × ns`; zero before the season index exists.
    pub ps: Vec<f64>,
    pub lps: Vec<f64>,
    /// Hot-water gate, `n × nu`.
    pub pu: Vec<f64>,
    pub lpu: Vec<f64>,
    pub setpoint: Vec<f64>,
    pub season_influence: Vec<f64>,
    pub time_influence: Vec<f64>,
    pub fraction: Vec<f64>,
    pub user: Vec<f64>,
    pub hot_water: Vec<f64>,
}

impl GateCache {
    pub fn new(m: &HeliosModel, f: &Frame) -> Self {
        let n = f.len();
        let (nt, ns, nu) = (m.setpoint.zeta.len(), m.active.eta.len(), m.hot_water.q.len());
        let mut c = GateCache {
            nt,
            ns,
            nu,
            pt: vec![0.0; n * nt],
            lpt: vec![0.0; n * nt],
            pa: vec![0.0; n * nt],
            lpa: vec![0.0; n * nt],
            ps: vec![0.0; n * ns],
            lps: vec![0.0; n * ns],
            pu: vec![0.0; n * nu],
            lpu: vec![0.0; n * nu],
            setpoint: vec![0.0; n],
            season_influence: vec![0.0; n],
            time_influence: vec![0.0; n],
            fraction: vec![0.0; n],
            user: vec![0.0; n],
            hot_water: vec![0.0; n],
        };
        let mut z = vec![0.0; nt.max(ns).max(nu)];
        for k in 0..n {
            let r = f.features(k);
            let d = f.day[k];
            let (t, a, u) = (k * nt..(k + 1) * nt, k * nt..(k + 1) * nt, k * nu..(k + 1) * nu);

            m.setpoint.gate.logits_into(r, d, &mut z[..nt]);
            softmax_parts(&z[..nt], &mut c.lpt[t.clone()], &mut c.pt[t.clone()]);
            c.setpoint[k] = c.pt[t.clone()].iter().zip(&m.setpoint.zeta).map(|(p, z)| p * z[d]).sum();

            m.active.time_gate.logits_into(r, d, &mut z[..nt]);
            softmax_parts(&z[..nt], &mut c.lpa[a.clone()], &mut c.pa[a.clone()]);
            c.time_influence[k] = c.pa[a].iter().zip(&m.active.mu).map(|(p, mu)| p * mu[d]).sum();

            if f.season[k].is_finite() {
                let s = k * ns..(k + 1) * ns;
                m.active.season_gate.logits_into(f.season[k], &mut z[..ns]);
                softmax_parts(&z[..ns], &mut c.lps[s.clone()], &mut c.ps[s.clone()]);
                c.season_influence[k] = c.ps[s].iter().zip(&m.active.eta).map(|(p, e)| p * e).sum();
            }
            c.fraction[k] = c.season_influence[k] * c.time_influence[k];

            m.hot_water.gate.logits_into(r, d, &mut z[..nu]);
            softmax_parts(&z[..nu], &mut c.lpu[u.clone()], &mut c.pu[u.clone()]);
            c.user[k] = c.pu[u].iter().zip(&m.hot_water.q).map(|(p, q)| p * q).sum();
            c.hot_water[k] = c.user[k] * (1.0 + m.hot_water.lambda * f.annual[k]);
        }
        c
    }
}

/// Reusable lag windows for the component calls.
#[derive(Default)]
struct Scratch {
    space: Vec<f64>,
    gap: Vec<f64>,
    radiance: Vec<f64>,
    wind: Vec<f64>,
    loss: Vec<f64>,
    drive: Vec<f64>,
}

/// A model bound to a frame; evaluates components at any row given a source
/// of lagged component values.
pub struct Predictor<'a> {
    pub model: &'a HeliosModel,
    pub frame: &'a Frame,
    cache: GateCache,
    scratch: Scratch,
}

impl<'a> Predictor<'a> {
    pub fn new(model: &'a HeliosModel, frame: &'a Frame) -> Self {
        Self { model, frame, cache: GateCache::new(model, frame), scratch: Scratch::default() }
    }

    /// Unclamped space heating and piping loss at `k`; `space_lag(j)` and
    /// `loss_lag(j)` return the component value at `k - j`.
    fn raw_step(&mut self, k: usize, space_lag: impl Fn(usize) -> f64, loss_lag: impl Fn(usize) -> f64) -> (f64, f64) {
        let (m, f, c, s) = (self.model, self.frame, &self.cache, &mut self.scratch);
        let sp = &m.space;
        s.space.clear();
        s.space.extend((1..=sp.a.len()).map(&space_lag));
        let nb = sp.b.iter().map(Vec::len).max().unwrap_or(0);
        s.gap.clear();
        s.radiance.clear();
        s.wind.clear();
        for j in 0..nb {
            s.gap.push(c.setpoint[k - j] - f.ambient[k - j]);
            s.radiance.push(f.radiance[k - j]);
            s.wind.push(f.wind[k - j]);
        }
        let inputs = SpaceHeatingInputs {
            lagged_space: &s.space,
            setpoint_gap: &s.gap,
            radiance: &s.radiance,
            wind: &s.wind,
            active_fraction: c.fraction[k],
        };
        let space = sp.predict_raw(&inputs).expect("lag windows sized from the model orders");
        s.loss.clear();
        s.loss.extend((1..=m.loss.a.len()).map(&loss_lag));
        s.drive.clear();
        s.drive.extend((0..m.loss.b.len()).map(|j| f.drive[k - j]));
        let loss = m.loss.predict_raw(&s.loss, &s.drive).expect("lag windows sized from the model orders");
        (space, loss)
    }

    /// Teacher-forced pass over `start..n`, starting from zero lag state;
    /// returns the residual targets and the clamped decomposition.
    pub fn teacher_forced(&mut self) -> (ComponentTargets, Vec<DecompositionRow>) {
        let n = self.frame.len();
        let start = self.frame.start;
        let mut t = ComponentTargets::zeros(n);
        let mut rows = Vec::with_capacity(n - start);
        for k in start..n {
            let (s_raw, l_raw) = {
                let (ts, tl) = (&t.space, &t.loss);
                self.raw_step(k, |j| ts[k - j], |j| tl[k - j])
            };
            let (s, w, l) = (s_raw.max(0.0), self.cache.hot_water[k], l_raw.max(0.0));
            let q = self.frame.load[k];
            t.space[k] = (q - w - l).max(0.0);
            t.hot_water[k] = (q - s - l).max(0.0);
            t.loss[k] = (q - s - w).max(0.0);
            rows.push(DecompositionRow::new(self.frame.timestamps[k], s, w, l));
        }
        (t, rows)
    }

    /// Recursive pass over `origin..origin + horizon`; lags before `origin`
    /// come from `history` (zero before the first predictable row), later
    /// lags from the pass itself.
    pub fn recursive(&mut self, origin: usize, horizon: usize, history: &ComponentTargets) -> Vec<DecompositionRow> {
        let end = (origin + horizon).min(self.frame.len());
        let origin = origin.max(self.frame.start);
        let mut own_space = Vec::with_capacity(end.saturating_sub(origin));
        let mut own_loss = Vec::with_capacity(end.saturating_sub(origin));
        let mut rows = Vec::with_capacity(end.saturating_sub(origin));
        for k in origin..end {
            let (s_raw, l_raw) = {
                let (os, ol) = (&own_space, &own_loss);
                let lag = |own: &Vec<f64>, hist: &Vec<f64>, j: usize| {
                    if k - j >= origin {
                        own[k - j - origin]
                    } else {
                        hist[k - j]
                    }
                };
                self.raw_step(k, |j| lag(os, &history.space, j), |j| lag(ol, &history.loss, j))
            };
            let (s, w, l) = (s_raw.max(0.0), self.cache.hot_water[k], l_raw.max(0.0));
            own_space.push(s);
            own_loss.push(l);
            rows.push(DecompositionRow::new(self.frame.timestamps[k], s, w, l));
        }
        rows
    }
}

pub fn residual_targets(m: &HeliosModel, ds: &Dataset) -> Result<ComponentTargets> {
    let frame = Frame::new(m, ds)?;
    Ok(Predictor::new(m, &frame).teacher_forced().0)
}

/// Decomposition for every predictable row of `ds`.
pub fn predict_decomposed(m: &HeliosModel, ds: &Dataset, mode: PredictionMode) -> Result<Vec<DecompositionRow>> {
    let frame = Frame::new(m, ds)?;
    let mut p = Predictor::new(m, &frame);
    Ok(match mode {
        PredictionMode::TeacherForced => p.teacher_forced().1,
        PredictionMode::Recursive => {
            let zeros = ComponentTargets::zeros(frame.len());
            p.recursive(frame.start, frame.len() - frame.start, &zeros)
        }
    })
}

/// Recursive `horizon`-step forecast following `history`, with weather,
/// calendar and supply/return temperatures taken from `future` (its heat
/// load column is ignored).
pub fn forecast(m: &HeliosModel, history: &Dataset, horizon: usize, future: &Dataset) -> Result<Vec<DecompositionRow>> {
    if horizon == 0 {
        return Ok(Vec::new());
    }
    if future.len() < horizon {
        return Err(Error::MissingExogenous { needed: horizon, available: future.len() });
    }
    let start = m.first_row();
    if history.len() <= start {
        return Err(Error::InsufficientHistory { needed: start + 1, available: history.len() });
    }
    let all = history.concat(&future.slice(0..horizon))?;
    let frame = Frame::new(m, &all)?;
    let mut p = Predictor::new(m, &frame);
    // the teacher-forced targets of future rows are never read by the recursion
    let (targets, _) = p.teacher_forced();
    Ok(p.recursive(history.len(), horizon, &targets))
}
