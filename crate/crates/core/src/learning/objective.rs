//! Weighted log-posterior with context marginalisation and its exact
//! reverse-mode gradient.
//!
//! Per row `k` the objective adds
//!
//! * `ln N(Q | Q̂s + Q̂w + Q̂l, σ)` and `ln N(Q_loss | Q̂l, σ)`;
//! * `ln Σ_{i,j,l} exp(π_i ln P_i + π_j ln P_j + π_l ln P_l + π_i π_j π_l ln N(Q_space | m_ijl, σ))`
//!   where `m_ijl` fixes `A = η_i μ_j` and `T_set = ζ_l`;
//! * `ln Σ_u exp(π_u (ln P_u + ln N(Q_hw | q_u (1 + λ cos …), σ)))`;
//!
//! and the parameter priors are added once. Component targets are held fixed.

use std::f64::consts::PI;

use crate::contexts::ContextWeights;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::predict::GateCache;
use crate::model::{ComponentTargets, Constraint, Frame, HeliosModel, Layout, PriorSpec};

use super::Neumaier;

/// Objective over rows `first_row..` of a frame with fixed component targets.
pub struct Objective<'a> {
    pub frame: &'a Frame,
    pub targets: &'a ComponentTargets,
    pub first_row: usize,
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub value: f64,
    /// Gradient with respect to the constrained parameters, layout order.
    pub gradient: Vec<f64>,
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

impl<'a> Objective<'a> {
    pub fn new(frame: &'a Frame, targets: &'a ComponentTargets, first_row: usize) -> Result<Self> {
        let n = frame.len();
        for len in [targets.space.len(), targets.hot_water.len(), targets.loss.len()] {
            if len != n {
                return Err(Error::AlignmentMismatch { expected: n, found: len });
            }
        }
        for w in [&frame.weights.setpoint, &frame.weights.season, &frame.weights.hot_water] {
            if w.rows != n {
                return Err(Error::AlignmentMismatch { expected: n, found: w.rows });
            }
        }
        if first_row < frame.start || first_row >= n {
            return Err(Error::InsufficientHistory { needed: first_row.max(frame.start) + 1, available: n });
        }
        Ok(Self { frame, targets, first_row })
    }

    pub fn value(&self, m: &HeliosModel, priors: &PriorSpec) -> Result<f64> {
        Ok(self.evaluate(m, priors)?.value)
    }

    pub fn evaluate(&self, m: &HeliosModel, priors: &PriorSpec) -> Result<Evaluation> {
        self.run(m, priors, &mut Terms::default())
    }

    /// Every additive term of the objective in a fixed order: the row
    /// likelihood terms, then one prior term per parameter. Differences of
    /// two term lists avoid the cancellation in differencing the totals.
    pub fn terms(&self, m: &HeliosModel, priors: &PriorSpec) -> Result<Vec<f64>> {
        let mut terms = Terms { log: Some(Vec::new()), ..Default::default() };
        self.run(m, priors, &mut terms)?;
        Ok(terms.log.unwrap_or_default())
    }

    fn run(&self, m: &HeliosModel, priors: &PriorSpec, total: &mut Terms) -> Result<Evaluation> {
        let f = self.frame;
        let t = self.targets;
        let lay = m.layout();
        let c = GateCache::new(m, f);
        let n = f.len();
        let (nt, ns, nu) = (c.nt, c.ns, c.nu);
        let mut g = vec![0.0; lay.len()];
        let mut dzt = vec![0.0; n * nt];
        let mut dza = vec![0.0; n * nt];
        let mut dzs = vec![0.0; n * ns];
        let mut dzu = vec![0.0; n * nu];
        let mut d_tset = vec![0.0; n];

        let sigma = m.noise_scale;
        let inv = 1.0 / sigma;
        let ln_norm = sigma.ln() + 0.5 * (2.0 * PI).ln();
        let mut dsigma = 0.0;

        let (sp, lo, hw) = (&m.space, &m.loss, &m.hot_water);
        let (zeta, eta, mu) = (&m.setpoint.zeta, &m.active.eta, &m.active.mu);
        let [beta1, beta2, beta3] = sp.beta;
        let [b1, b2, b3] = [&sp.b[0], &sp.b[1], &sp.b[2]];

        let mut ell = vec![0.0; ns * nt * nt];
        let mut el = vec![0.0; nt];
        let mut d1l = vec![0.0; nt];
        let mut d3l = vec![0.0; nt];
        let mut gel = vec![0.0; nt];
        let mut gamma_s = vec![0.0; ns];
        let mut gamma_a = vec![0.0; nt];
        let mut gamma_t = vec![0.0; nt];
        let mut ellu = vec![0.0; nu];
        let mut gamma_u = vec![0.0; nu];

        for k in self.first_row..n {
            let d = f.day[k];
            let q = f.load[k];
            let ps = &c.ps[k * ns..(k + 1) * ns];
            let pa = &c.pa[k * nt..(k + 1) * nt];
            let pu = &c.pu[k * nu..(k + 1) * nu];

            // space heating with the gated setpoint and fraction
            let ar_s: f64 = sp.a.iter().enumerate().map(|(j, a)| a * t.space[k - j - 1]).sum();
            let gap = |kk: usize| c.setpoint[kk] - f.ambient[kk];
            let d1: f64 = b1.iter().enumerate().map(|(j, b)| b * gap(k - j)).sum();
            // solar gains lower the demand
            let d2: f64 = -b2.iter().enumerate().map(|(j, b)| b * f.radiance[k - j]).sum::<f64>();
            let d3: f64 = b3.iter().enumerate().map(|(j, b)| b * f.wind[k - j] * gap(k - j)).sum();
            let e = beta1 * d1 + beta2 * d2 + beta3 * d3;
            let frac = c.fraction[k];
            let qs = ar_s + frac * e;

            let corr = 1.0 + hw.lambda * f.annual[k];
            let user = c.user[k];
            let qw = user * corr;

            let ar_l: f64 = lo.a.iter().enumerate().map(|(j, a)| a * t.loss[k - j - 1]).sum();
            let x: f64 = lo.b.iter().enumerate().map(|(j, b)| b * f.drive[k - j]).sum();
            let ql = ar_l + lo.beta * x;

            // total load and piping loss terms
            let e1 = (q - (qs + qw + ql)) * inv;
            total.add(-0.5 * e1 * e1 - ln_norm);
            dsigma += (e1 * e1 - 1.0) * inv;
            let g1 = e1 * inv;
            let e2 = (t.loss[k] - ql) * inv;
            total.add(-0.5 * e2 * e2 - ln_norm);
            dsigma += (e2 * e2 - 1.0) * inv;
            let gl = g1 + e2 * inv;

            for j in 0..lo.a.len() {
                g[lay.loss_a.start + j] += gl * t.loss[k - j - 1];
            }
            g[lay.loss_beta] += gl * x;
            for j in 0..lo.b.len() {
                g[lay.loss_b.start + j] += gl * lo.beta * f.drive[k - j];
            }

            let du = g1 * corr;
            g[lay.lambda] += g1 * user * f.annual[k];
            for u in 0..nu {
                g[lay.q.start + u] += du * pu[u];
                dzu[k * nu + u] += du * pu[u] * (hw.q[u] - user);
            }

            for j in 0..sp.a.len() {
                g[lay.space_a.start + j] += g1 * t.space[k - j - 1];
            }
            let de = g1 * frac;
            let da = g1 * e;
            g[lay.space_beta.start] += de * d1;
            g[lay.space_beta.start + 1] += de * d2;
            g[lay.space_beta.start + 2] += de * d3;
            for (j, b) in b1.iter().enumerate() {
                g[lay.space_b[0].start + j] += de * beta1 * gap(k - j);
                d_tset[k - j] += de * beta1 * b;
            }
            for j in 0..b2.len() {
                g[lay.space_b[1].start + j] -= de * beta2 * f.radiance[k - j];
            }
            for (j, b) in b3.iter().enumerate() {
                let v = f.wind[k - j];
                g[lay.space_b[2].start + j] += de * beta3 * v * gap(k - j);
                d_tset[k - j] += de * beta3 * b * v;
            }
            let (si, ti) = (c.season_influence[k], c.time_influence[k]);
            let (dsi, dti) = (da * ti, da * si);
            for i in 0..ns {
                g[lay.eta.start + i] += dsi * ps[i];
                dzs[k * ns + i] += dsi * ps[i] * (eta[i] - si);
            }
            for j in 0..nt {
                g[lay.mu.start + 2 * j + d] += dti * pa[j];
                dza[k * nt + j] += dti * pa[j] * (mu[j][d] - ti);
            }

            // marginalised space heating term
            let ws = f.weights.season.row(k);
            let wt = f.weights.setpoint.row(k);
            let lps = &c.lps[k * ns..(k + 1) * ns];
            let lpa = &c.lpa[k * nt..(k + 1) * nt];
            let lpt = &c.lpt[k * nt..(k + 1) * nt];
            for l in 0..nt {
                let gap_l = |kk: usize| zeta[l][f.day[kk]] - f.ambient[kk];
                d1l[l] = b1.iter().enumerate().map(|(j, b)| b * gap_l(k - j)).sum();
                d3l[l] = b3.iter().enumerate().map(|(j, b)| b * f.wind[k - j] * gap_l(k - j)).sum();
                el[l] = beta1 * d1l[l] + beta2 * d2 + beta3 * d3l[l];
            }
            let target_s = t.space[k];
            let mut idx = 0;
            for i in 0..ns {
                for j in 0..nt {
                    let base = eta[i] * mu[j][d];
                    for l in 0..nt {
                        let e3 = (target_s - (ar_s + base * el[l])) * inv;
                        let omega = ws[i] * wt[j] * wt[l];
                        ell[idx] =
                            ws[i] * lps[i] + wt[j] * lpa[j] + wt[l] * lpt[l] + omega * (-0.5 * e3 * e3 - ln_norm);
                        idx += 1;
                    }
                }
            }
            let lse = log_sum_exp(&ell);
            total.add(lse);
            gamma_s.iter_mut().for_each(|v| *v = 0.0);
            gamma_a.iter_mut().for_each(|v| *v = 0.0);
            gamma_t.iter_mut().for_each(|v| *v = 0.0);
            gel.iter_mut().for_each(|v| *v = 0.0);
            let mut d_ar = 0.0;
            let mut idx = 0;
            for i in 0..ns {
                for j in 0..nt {
                    let base = eta[i] * mu[j][d];
                    for l in 0..nt {
                        let w = (ell[idx] - lse).exp();
                        idx += 1;
                        let e3 = (target_s - (ar_s + base * el[l])) * inv;
                        let omega = ws[i] * wt[j] * wt[l];
                        let gm = w * omega * e3 * inv;
                        dsigma += w * omega * (e3 * e3 - 1.0) * inv;
                        gamma_s[i] += w * ws[i];
                        gamma_a[j] += w * wt[j];
                        gamma_t[l] += w * wt[l];
                        d_ar += gm;
                        g[lay.eta.start + i] += gm * mu[j][d] * el[l];
                        g[lay.mu.start + 2 * j + d] += gm * eta[i] * el[l];
                        gel[l] += gm * base;
                    }
                }
            }
            for j in 0..sp.a.len() {
                g[lay.space_a.start + j] += d_ar * t.space[k - j - 1];
            }
            for l in 0..nt {
                let ge = gel[l];
                g[lay.space_beta.start] += ge * d1l[l];
                g[lay.space_beta.start + 1] += ge * d2;
                g[lay.space_beta.start + 2] += ge * d3l[l];
                for (j, b) in b1.iter().enumerate() {
                    let kk = k - j;
                    g[lay.space_b[0].start + j] += ge * beta1 * (zeta[l][f.day[kk]] - f.ambient[kk]);
                    g[lay.zeta.start + 2 * l + f.day[kk]] += ge * beta1 * b;
                }
                for j in 0..b2.len() {
                    g[lay.space_b[1].start + j] -= ge * beta2 * f.radiance[k - j];
                }
                for (j, b) in b3.iter().enumerate() {
                    let kk = k - j;
                    let v = f.wind[kk];
                    g[lay.space_b[2].start + j] += ge * beta3 * v * (zeta[l][f.day[kk]] - f.ambient[kk]);
                    g[lay.zeta.start + 2 * l + f.day[kk]] += ge * beta3 * b * v;
                }
            }
            let pt = &c.pt[k * nt..(k + 1) * nt];
            softmax_adjoint(&gamma_s, ps, &mut dzs[k * ns..(k + 1) * ns]);
            softmax_adjoint(&gamma_a, pa, &mut dza[k * nt..(k + 1) * nt]);
            softmax_adjoint(&gamma_t, pt, &mut dzt[k * nt..(k + 1) * nt]);

            // marginalised hot water term
            let wu = f.weights.hot_water.row(k);
            let lpu = &c.lpu[k * nu..(k + 1) * nu];
            let target_w = t.hot_water[k];
            for u in 0..nu {
                let e4 = (target_w - hw.q[u] * corr) * inv;
                ellu[u] = wu[u] * (lpu[u] - 0.5 * e4 * e4 - ln_norm);
            }
            let lse = log_sum_exp(&ellu);
            total.add(lse);
            for u in 0..nu {
                let gamma = (ellu[u] - lse).exp() * wu[u];
                let e4 = (target_w - hw.q[u] * corr) * inv;
                dsigma += gamma * (e4 * e4 - 1.0) * inv;
                let gq = gamma * e4 * inv;
                g[lay.q.start + u] += gq * corr;
                g[lay.lambda] += gq * hw.q[u] * f.annual[k];
                gamma_u[u] = gamma;
            }
            softmax_adjoint(&gamma_u, pu, &mut dzu[k * nu..(k + 1) * nu]);
        }

        // setpoint adjoints collected at lag rows
        for k in 0..n {
            let a = d_tset[k];
            if a == 0.0 {
                continue;
            }
            let d = f.day[k];
            for ctx in 0..nt {
                let p = c.pt[k * nt + ctx];
                g[lay.zeta.start + 2 * ctx + d] += a * p;
                dzt[k * nt + ctx] += a * p * (zeta[ctx][d] - c.setpoint[k]);
            }
        }
        // logits back onto gate weights
        let dim = f.dim;
        for k in 0..n {
            let r = f.features(k);
            let d = f.day[k];
            for (dz, ctxs, start) in [
                (&dzt, nt, lay.setpoint_gate.start),
                (&dza, nt, lay.active_gate.start),
                (&dzu, nu, lay.hot_water_gate.start),
            ] {
                for ctx in 0..ctxs {
                    let v = dz[k * ctxs + ctx];
                    if v != 0.0 {
                        let o = start + (d * ctxs + ctx) * dim;
                        for (gw, ri) in g[o..o + dim].iter_mut().zip(r) {
                            *gw += v * ri;
                        }
                    }
                }
            }
            for i in 0..ns {
                let v = dzs[k * ns + i];
                if v != 0.0 {
                    g[lay.season_intercept.start + i] += v;
                    g[lay.season_slope.start + i] += v * f.season[k];
                }
            }
        }
        g[lay.sigma] += dsigma;

        let x = m.to_vector(&lay);
        for (i, (_, prior)) in lay.entries(priors).into_iter().enumerate() {
            total.add(prior.log_kernel(x[i]));
            g[i] += prior.d_log_kernel(x[i]);
        }

        let value = total.sum.sum();
        if !value.is_finite() {
            return Err(Error::NonFiniteObjective);
        }
        if let Some(index) = g.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteGradient { index });
        }
        Ok(Evaluation { value, gradient: g })
    }
}

#[derive(Default)]
struct Terms {
    sum: Neumaier,
    log: Option<Vec<f64>>,
}

impl Terms {
    fn add(&mut self, x: f64) {
        self.sum.add(x);
        if let Some(log) = &mut self.log {
            log.push(x);
        }
    }
}

/// `dz_m = γ_m − P_m Σγ` for adjoints `γ` of log-softmax outputs.
fn softmax_adjoint(gamma: &[f64], p: &[f64], dz: &mut [f64]) {
    let s: f64 = gamma.iter().sum();
    for ((z, g), p) in dz.iter_mut().zip(gamma).zip(p) {
        *z += g - p * s;
    }
}

/// Chain rule from constrained to unconstrained coordinates.
pub fn to_unconstrained_gradient(gradient: &[f64], u: &[f64], constraints: &[Constraint]) -> Vec<f64> {
    gradient.iter().zip(u).zip(constraints).map(|((g, u), c)| g * c.derivative(*u)).collect()
}

fn frame_with_weights(m: &HeliosModel, ds: &Dataset, weights: &ContextWeights) -> Result<Frame> {
    let mut frame = Frame::new(m, ds)?;
    for w in [&weights.setpoint, &weights.season, &weights.hot_water] {
        if w.rows != ds.len() {
            return Err(Error::AlignmentMismatch { expected: ds.len(), found: w.rows });
        }
    }
    frame.set_weights(weights.clone());
    Ok(frame)
}

/// Weighted log-posterior of `m` on every predictable row of `ds`, with the
/// component targets held at `targets`.
pub fn weighted_log_posterior(
    m: &HeliosModel,
    ds: &Dataset,
    targets: &ComponentTargets,
    priors: &PriorSpec,
    weights: &ContextWeights,
) -> Result<f64> {
    let frame = frame_with_weights(m, ds, weights)?;
    Objective::new(&frame, targets, frame.start)?.value(m, priors)
}

/// The additive terms of [`weighted_log_posterior`], see [`Objective::terms`].
pub fn log_posterior_terms(
    m: &HeliosModel,
    ds: &Dataset,
    targets: &ComponentTargets,
    priors: &PriorSpec,
    weights: &ContextWeights,
) -> Result<Vec<f64>> {
    let frame = frame_with_weights(m, ds, weights)?;
    Objective::new(&frame, targets, frame.start)?.terms(m, priors)
}

/// Gradient of [`weighted_log_posterior`] with respect to the unconstrained
/// parameters (logistic for unit-interval, softplus for non-negative ones).
pub fn objective_gradient(
    m: &HeliosModel,
    ds: &Dataset,
    targets: &ComponentTargets,
    priors: &PriorSpec,
    weights: &ContextWeights,
) -> Result<Vec<f64>> {
    let frame = frame_with_weights(m, ds, weights)?;
    let eval = Objective::new(&frame, targets, frame.start)?.evaluate(m, priors)?;
    let lay: Layout = m.layout();
    let constraints = lay.constraints();
    let u: Vec<f64> = m.to_vector(&lay).iter().zip(&constraints).map(|(x, c)| c.inverse(*x)).collect();
    Ok(to_unconstrained_gradient(&eval.gradient, &u, &constraints))
}
