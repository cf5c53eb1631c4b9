//! Softmax gating networks over hour-of-day Fourier features and the season
//! index.

use serde::{Deserialize, Serialize};

use crate::data::DayType;
use crate::error::{Error, Result};
use crate::features::fourier_into;

/// Log-probabilities of `z` via max subtraction.
pub fn log_softmax_stable(z: &[f64]) -> Result<Vec<f64>> {
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    let mut out = z.to_vec();
    log_softmax_in_place(&mut out);
    Ok(out)
}

/// In-place variant used on hot paths; non-finite input propagates.
pub(crate) fn log_softmax_in_place(z: &mut [f64]) {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = z.iter().map(|v| (v - max).exp()).sum();
    let lse = max + sum.ln();
    z.iter_mut().for_each(|v| *v -= lse);
}

/// Probabilities and log-probabilities for logits `z` (written into `probs` and `logp`).
pub(crate) fn softmax_parts(z: &[f64], logp: &mut [f64], probs: &mut [f64]) {
    logp.copy_from_slice(z);
    log_softmax_in_place(logp);
    for (p, l) in probs.iter_mut().zip(logp.iter()) {
        *p = l.exp();
    }
}

/// Per-(context, day type) linear logits over the `2P` Fourier features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGatingNetwork {
    pub harmonics: usize,
    pub contexts: usize,
    /// Flattened `[day][context][feature]`.
    pub weights: Vec<f64>,
}

impl TimeGatingNetwork {
    pub fn zeros(contexts: usize, harmonics: usize) -> Self {
        Self { harmonics, contexts, weights: vec![0.0; 2 * contexts * 2 * harmonics] }
    }

    pub fn dim(&self) -> usize {
        2 * self.harmonics
    }

    fn offset(&self, context: usize, day: usize) -> usize {
        (day * self.contexts + context) * self.dim()
    }

    pub fn weights_for(&self, context: usize, day: DayType) -> &[f64] {
        let o = self.offset(context, day.index());
        &self.weights[o..o + self.dim()]
    }

    pub fn weights_for_mut(&mut self, context: usize, day: DayType) -> &mut [f64] {
        let o = self.offset(context, day.index());
        let d = self.dim();
        &mut self.weights[o..o + d]
    }

    /// Logits `z_c = r · v_{c,d}` for precomputed features `r`.
    pub(crate) fn logits_into(&self, features: &[f64], day: usize, out: &mut [f64]) {
        for (c, z) in out.iter_mut().enumerate() {
            let o = self.offset(c, day);
            *z = self.weights[o..o + self.dim()].iter().zip(features).map(|(w, r)| w * r).sum();
        }
    }

    pub fn probs(&self, hour: u32, day: DayType) -> Vec<f64> {
        let mut r = vec![0.0; self.dim()];
        fourier_into(hour as f64, &mut r);
        let mut z = vec![0.0; self.contexts];
        self.logits_into(&r, day.index(), &mut z);
        let mut logp = vec![0.0; self.contexts];
        let mut p = vec![0.0; self.contexts];
        softmax_parts(&z, &mut logp, &mut p);
        p
    }
}

pub fn time_gate_probs(net: &TimeGatingNetwork, hour: u32, day: DayType) -> Vec<f64> {
    net.probs(hour, day)
}

/// Logits `z_c = u_{c,0} + u_{c,1} S`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeasonGatingNetwork {
    pub intercept: Vec<f64>,
    pub slope: Vec<f64>,
}

impl SeasonGatingNetwork {
    pub fn zeros(contexts: usize) -> Self {
        Self { intercept: vec![0.0; contexts], slope: vec![0.0; contexts] }
    }

    pub fn contexts(&self) -> usize {
        self.intercept.len()
    }

    pub(crate) fn logits_into(&self, season: f64, out: &mut [f64]) {
        for (c, z) in out.iter_mut().enumerate() {
            *z = self.intercept[c] + self.slope[c] * season;
        }
    }

    pub fn probs(&self, season: f64) -> Vec<f64> {
        let n = self.contexts();
        let mut z = vec![0.0; n];
        self.logits_into(season, &mut z);
        let mut logp = vec![0.0; n];
        let mut p = vec![0.0; n];
        softmax_parts(&z, &mut logp, &mut p);
        p
    }
}

pub fn season_gate_probs(net: &SeasonGatingNetwork, season: f64) -> Vec<f64> {
    net.probs(season)
}
