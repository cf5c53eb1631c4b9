//! Flat parameter vector layout and the constraint transforms used for
//! optimization on an unconstrained scale.

use std::ops::Range;

use super::priors::{Prior, PriorSpec};
use super::HeliosModel;

const UNIT_MARGIN: f64 = 1e-3;
const POSITIVE_FLOOR: f64 = 1e-8;

/// Domain of a parameter and its smooth map from the real line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constraint {
    Real,
    /// (0, 1) through the logistic function.
    Unit,
    /// (0, ∞) through softplus.
    Positive,
}

pub(crate) fn logistic(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn softplus(u: f64) -> f64 {
    u.max(0.0) + (-u.abs()).exp().ln_1p()
}

impl Constraint {
    pub fn forward(self, u: f64) -> f64 {
        match self {
            Constraint::Real => u,
            Constraint::Unit => logistic(u),
            Constraint::Positive => softplus(u),
        }
    }

    pub fn inverse(self, x: f64) -> f64 {
        match self {
            Constraint::Real => x,
            Constraint::Unit => {
                let x = x.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON);
                (x / (1.0 - x)).ln()
            }
            Constraint::Positive => {
                let x = x.max(f64::MIN_POSITIVE);
                if x > 30.0 {
                    x + (-(-x).exp_m1()).ln()
                } else {
                    x.exp_m1().ln()
                }
            }
        }
    }

    /// `dx/du` at unconstrained `u`.
    pub fn derivative(self, u: f64) -> f64 {
        match self {
            Constraint::Real => 1.0,
            Constraint::Unit => {
                let s = logistic(u);
                s * (1.0 - s)
            }
            Constraint::Positive => logistic(u),
        }
    }

    /// Keeps a starting value away from the boundary of the domain.
    pub fn clamp_interior(self, x: f64) -> f64 {
        match self {
            Constraint::Real => x,
            Constraint::Unit => x.clamp(UNIT_MARGIN, 1.0 - UNIT_MARGIN),
            Constraint::Positive => x.max(POSITIVE_FLOOR),
        }
    }
}

/// Offsets of every parameter block inside the flat vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub setpoint_gate: Range<usize>,
    /// `[context][day]`.
    pub zeta: Range<usize>,
    pub active_gate: Range<usize>,
    /// `[context][day]`.
    pub mu: Range<usize>,
    pub season_intercept: Range<usize>,
    pub season_slope: Range<usize>,
    pub eta: Range<usize>,
    pub space_a: Range<usize>,
    pub space_b: [Range<usize>; 3],
    pub space_beta: Range<usize>,
    pub hot_water_gate: Range<usize>,
    pub q: Range<usize>,
    pub lambda: usize,
    pub loss_a: Range<usize>,
    pub loss_b: Range<usize>,
    pub loss_beta: usize,
    pub sigma: usize,
    len: usize,
}

struct Cursor(usize);

impl Cursor {
    fn take(&mut self, n: usize) -> Range<usize> {
        let r = self.0..self.0 + n;
        self.0 += n;
        r
    }

    fn one(&mut self) -> usize {
        self.take(1).start
    }
}

impl Layout {
    pub fn of(m: &HeliosModel) -> Self {
        let mut c = Cursor(0);
        let setpoint_gate = c.take(m.setpoint.gate.weights.len());
        let zeta = c.take(2 * m.setpoint.zeta.len());
        let active_gate = c.take(m.active.time_gate.weights.len());
        let mu = c.take(2 * m.active.mu.len());
        let season_intercept = c.take(m.active.season_gate.intercept.len());
        let season_slope = c.take(m.active.season_gate.slope.len());
        let eta = c.take(m.active.eta.len());
        let space_a = c.take(m.space.a.len());
        let space_b = [c.take(m.space.b[0].len()), c.take(m.space.b[1].len()), c.take(m.space.b[2].len())];
        let space_beta = c.take(3);
        let hot_water_gate = c.take(m.hot_water.gate.weights.len());
        let q = c.take(m.hot_water.q.len());
        let lambda = c.one();
        let loss_a = c.take(m.loss.a.len());
        let loss_b = c.take(m.loss.b.len());
        let loss_beta = c.one();
        let sigma = c.one();
        Self {
            setpoint_gate,
            zeta,
            active_gate,
            mu,
            season_intercept,
            season_slope,
            eta,
            space_a,
            space_b,
            space_beta,
            hot_water_gate,
            q,
            lambda,
            loss_a,
            loss_b,
            loss_beta,
            sigma,
            len: c.0,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Constraint and prior of every coordinate, in layout order.
    pub fn entries(&self, priors: &PriorSpec) -> Vec<(Constraint, Prior)> {
        let mut out = vec![(Constraint::Real, priors.gate); self.len];
        let mut fill = |r: Range<usize>, c: Constraint, p: &dyn Fn(usize) -> Prior| {
            for (i, k) in r.enumerate() {
                out[k] = (c, p(i));
            }
        };
        fill(self.zeta.clone(), Constraint::Real, &|i| priors.setpoint[i / 2]);
        fill(self.mu.clone(), Constraint::Unit, &|i| priors.time_effect[i / 2]);
        fill(self.eta.clone(), Constraint::Unit, &|i| priors.season_effect[i]);
        for r in [self.space_a.clone(), self.space_b[0].clone(), self.space_b[1].clone(), self.space_b[2].clone()] {
            fill(r, Constraint::Positive, &|_| priors.arx);
        }
        fill(self.loss_a.clone(), Constraint::Positive, &|_| priors.arx);
        fill(self.loss_b.clone(), Constraint::Positive, &|_| priors.arx);
        fill(self.space_beta.clone(), Constraint::Positive, &|_| priors.gain);
        fill(self.loss_beta..self.loss_beta + 1, Constraint::Positive, &|_| priors.gain);
        fill(self.q.clone(), Constraint::Positive, &|_| priors.activity_level);
        fill(self.lambda..self.lambda + 1, Constraint::Positive, &|_| priors.hot_water_amplitude);
        fill(self.sigma..self.sigma + 1, Constraint::Positive, &|_| priors.noise_scale);
        out
    }

    pub fn constraints(&self) -> Vec<Constraint> {
        let base = super::priors::default_priors();
        let shaped = PriorSpec {
            setpoint: vec![base.gate; self.zeta.len() / 2],
            season_effect: vec![base.gate; self.eta.len()],
            time_effect: vec![base.gate; self.mu.len() / 2],
            ..base
        };
        self.entries(&shaped).into_iter().map(|e| e.0).collect()
    }

    pub(crate) fn read(&self, m: &HeliosModel) -> Vec<f64> {
        let mut x = vec![0.0; self.len];
        x[self.setpoint_gate.clone()].copy_from_slice(&m.setpoint.gate.weights);
        for (c, z) in m.setpoint.zeta.iter().enumerate() {
            x[self.zeta.start + 2 * c..][..2].copy_from_slice(z);
        }
        x[self.active_gate.clone()].copy_from_slice(&m.active.time_gate.weights);
        for (c, z) in m.active.mu.iter().enumerate() {
            x[self.mu.start + 2 * c..][..2].copy_from_slice(z);
        }
        x[self.season_intercept.clone()].copy_from_slice(&m.active.season_gate.intercept);
        x[self.season_slope.clone()].copy_from_slice(&m.active.season_gate.slope);
        x[self.eta.clone()].copy_from_slice(&m.active.eta);
        x[self.space_a.clone()].copy_from_slice(&m.space.a);
        for i in 0..3 {
            x[self.space_b[i].clone()].copy_from_slice(&m.space.b[i]);
        }
        x[self.space_beta.clone()].copy_from_slice(&m.space.beta);
        x[self.hot_water_gate.clone()].copy_from_slice(&m.hot_water.gate.weights);
        x[self.q.clone()].copy_from_slice(&m.hot_water.q);
        x[self.lambda] = m.hot_water.lambda;
        x[self.loss_a.clone()].copy_from_slice(&m.loss.a);
        x[self.loss_b.clone()].copy_from_slice(&m.loss.b);
        x[self.loss_beta] = m.loss.beta;
        x[self.sigma] = m.noise_scale;
        x
    }

    pub(crate) fn write(&self, m: &mut HeliosModel, x: &[f64]) {
        assert_eq!(x.len(), self.len, "parameter vector length does not match the layout");
        m.setpoint.gate.weights.copy_from_slice(&x[self.setpoint_gate.clone()]);
        for (c, z) in m.setpoint.zeta.iter_mut().enumerate() {
            z.copy_from_slice(&x[self.zeta.start + 2 * c..][..2]);
        }
        m.active.time_gate.weights.copy_from_slice(&x[self.active_gate.clone()]);
        for (c, z) in m.active.mu.iter_mut().enumerate() {
            z.copy_from_slice(&x[self.mu.start + 2 * c..][..2]);
        }
        m.active.season_gate.intercept.copy_from_slice(&x[self.season_intercept.clone()]);
        m.active.season_gate.slope.copy_from_slice(&x[self.season_slope.clone()]);
        m.active.eta.copy_from_slice(&x[self.eta.clone()]);
        m.space.a.copy_from_slice(&x[self.space_a.clone()]);
        for i in 0..3 {
            m.space.b[i].copy_from_slice(&x[self.space_b[i].clone()]);
        }
        m.space.beta.copy_from_slice(&x[self.space_beta.clone()]);
        m.hot_water.gate.weights.copy_from_slice(&x[self.hot_water_gate.clone()]);
        m.hot_water.q.copy_from_slice(&x[self.q.clone()]);
        m.hot_water.lambda = x[self.lambda];
        m.loss.a.copy_from_slice(&x[self.loss_a.clone()]);
        m.loss.b.copy_from_slice(&x[self.loss_b.clone()]);
        m.loss.beta = x[self.loss_beta];
        m.noise_scale = x[self.sigma];
    }
}
