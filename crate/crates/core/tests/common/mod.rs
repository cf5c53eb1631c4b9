// Shared fixtures and oracles for the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use helios_core::components::SpaceHeatingInputs;
use helios_core::contexts::{possibility_weight, ContextElement, ContextSet, ContextSets, PossibilityContext, Support};
use helios_core::data::Dataset;
use helios_core::evaluation::{generate_synthetic, SynthConfig};
use helios_core::features::{equivalent_pipe_temperature, ground_temperature};
use helios_core::model::{ComponentTargets, Constraint, HeliosModel, ModelConfig, PriorSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A small generated world: a handful of buildings, one year.
pub fn small_world(buildings: usize, seed: u64) -> Dataset {
    let cfg = SynthConfig { years: 1, buildings, seed, ..Default::default() };
    generate_synthetic(&cfg).unwrap().0
}

pub fn short_config(season_window: usize) -> ModelConfig {
    ModelConfig { season_window, ..Default::default() }
}

/// Two hot-water contexts so that every set has exactly two.
pub fn two_context_sets(alpha: f64) -> ContextSets {
    let mut sets = ContextSets::defaults(alpha);
    sets.hot_water = ContextSet::new(
        ContextElement::HotWater,
        vec![
            PossibilityContext::new("day", Support::hours(&[(6, 22)]), alpha),
            PossibilityContext::new("night", Support::hours(&[(22, 6)]), alpha),
        ],
    )
    .unwrap();
    sets
}

/// Five rows (four scored with a one-hour season window) starting where the
/// ambient temperature crosses the season threshold.
pub fn four_rows(ds: &Dataset) -> Dataset {
    let ta = ds.ambient_temperature();
    let k = (2000..ta.len()).find(|&k| (ta[k] - 10.0) * (ta[k + 2] - 10.0) < 0.0).unwrap();
    ds.slice(k..k + 5)
}

/// Parameters drawn uniformly from plausible ranges for every block.
pub fn random_model(
    ds: &Dataset,
    contexts: &ContextSets,
    priors: &PriorSpec,
    cfg: ModelConfig,
    seed: u64,
) -> HeliosModel {
    let mut m = HeliosModel::initialize(cfg, contexts.clone(), priors.clone(), ds, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x5eed));
    let lay = m.layout();
    let entries = lay.entries(priors);
    let mut x = vec![0.0; lay.len()];
    for (i, (c, _)) in entries.iter().enumerate() {
        x[i] = match c {
            Constraint::Real => rng.random_range(-1.0..1.0),
            Constraint::Unit => rng.random_range(0.05..0.95),
            Constraint::Positive => rng.random_range(0.05..1.0),
        };
    }
    for i in lay.zeta.clone() {
        x[i] = rng.random_range(14.0..22.0);
    }
    for i in lay.space_beta.clone().chain(std::iter::once(lay.loss_beta)) {
        x[i] = rng.random_range(0.5..3.0);
    }
    // radiance is in W/m², hundreds of times larger than the other inputs
    for i in lay.space_b[1].clone() {
        x[i] = rng.random_range(0.0..0.01);
    }
    for i in lay.q.clone() {
        x[i] = rng.random_range(1.0..10.0);
    }
    x[lay.lambda] = rng.random_range(0.0..0.4);
    x[lay.sigma] = rng.random_range(10.0..30.0);
    m.set_vector(&lay, &x);
    m
}

fn gauss(x: f64, mean: f64, sd: f64) -> f64 {
    let v = (-(x - mean) * (x - mean) / (2.0 * sd * sd)).exp() / (sd * (2.0 * PI).sqrt());
    // the direct products below are only meaningful without underflow
    assert!(v > 1e-250, "density underflow at x={x}, mean={mean}, sd={sd}");
    v
}

fn kernel(x: f64, p: &helios_core::model::Prior) -> f64 {
    let z = (x - p.location) / p.scale;
    -0.5 * z * z
}

/// Prior term summed block by block from the model fields.
pub fn prior_sum(m: &HeliosModel, priors: &PriorSpec) -> f64 {
    let mut s = 0.0;
    let gates = m
        .setpoint
        .gate
        .weights
        .iter()
        .chain(&m.active.time_gate.weights)
        .chain(&m.active.season_gate.intercept)
        .chain(&m.active.season_gate.slope)
        .chain(&m.hot_water.gate.weights);
    s += gates.map(|&w| kernel(w, &priors.gate)).sum::<f64>();
    for (l, z) in m.setpoint.zeta.iter().enumerate() {
        s += kernel(z[0], &priors.setpoint[l]) + kernel(z[1], &priors.setpoint[l]);
    }
    for (j, mu) in m.active.mu.iter().enumerate() {
        s += kernel(mu[0], &priors.time_effect[j]) + kernel(mu[1], &priors.time_effect[j]);
    }
    for (i, &e) in m.active.eta.iter().enumerate() {
        s += kernel(e, &priors.season_effect[i]);
    }
    for &b in m.space.beta.iter().chain(std::iter::once(&m.loss.beta)) {
        s += kernel(b, &priors.gain);
    }
    let arx = m.space.a.iter().chain(m.space.b.iter().flatten()).chain(&m.loss.a).chain(&m.loss.b);
    s += arx.map(|&a| kernel(a, &priors.arx)).sum::<f64>();
    s += kernel(m.hot_water.lambda, &priors.hot_water_amplitude);
    s += m.hot_water.q.iter().map(|&q| kernel(q, &priors.activity_level)).sum::<f64>();
    s + kernel(m.noise_scale, &priors.noise_scale)
}

/// Weighted log-posterior by direct enumeration of every context
/// combination, with plain products and sums (no log-space tricks).
pub fn brute_force_log_posterior(m: &HeliosModel, ds: &Dataset, t: &ComponentTargets, priors: &PriorSpec) -> f64 {
    let recs = ds.records();
    let n = recs.len();
    let w = m.config.season_window;
    let start = m.first_row();
    let ta: Vec<f64> = recs.iter().map(|r| r.weather.ambient_temperature).collect();
    let season = |k: usize| ta[k - w..k].iter().sum::<f64>() / w as f64;
    let hour = |k: usize| recs[k].calendar.hour;
    let day = |k: usize| recs[k].calendar.day_type;
    let doy = |k: usize| recs[k].calendar.day_of_year as f64;
    let drive = |k: usize| {
        let s = &recs[k].substation;
        equivalent_pipe_temperature(s.supply_temperature, s.return_temperature)
            - ground_temperature(doy(k), &m.loss.ground)
    };
    let sigma = m.noise_scale;
    let nb = m.space.b.iter().map(Vec::len).max().unwrap();

    let mut total = 0.0;
    for k in start..n {
        let (h, d, s) = (hour(k), day(k), season(k));
        let q = recs[k].substation.heat_load;
        let lagged_space: Vec<f64> = (1..=m.space.a.len()).map(|j| t.space[k - j]).collect();
        let radiance: Vec<f64> = (0..nb).map(|j| recs[k - j].weather.global_radiance).collect();
        let wind: Vec<f64> = (0..nb).map(|j| recs[k - j].weather.wind_speed).collect();
        let gap_with = |tset: &dyn Fn(usize) -> f64| -> Vec<f64> { (0..nb).map(|j| tset(k - j) - ta[k - j]).collect() };
        let space_at = |gap: &[f64], frac: f64| {
            let x = SpaceHeatingInputs {
                lagged_space: &lagged_space,
                setpoint_gap: gap,
                radiance: &radiance,
                wind: &wind,
                active_fraction: frac,
            };
            m.space.predict_raw(&x).unwrap()
        };

        let gap = gap_with(&|kk| m.setpoint.predict(hour(kk), day(kk)));
        let qs = space_at(&gap, m.active.predict(s, h, d));
        let qw = m.hot_water.predict(h, d, doy(k));
        let lagged_loss: Vec<f64> = (1..=m.loss.a.len()).map(|j| t.loss[k - j]).collect();
        let drives: Vec<f64> = (0..m.loss.b.len()).map(|j| drive(k - j)).collect();
        let ql = m.loss.predict_raw(&lagged_loss, &drives).unwrap();
        total += gauss(q, qs + qw + ql, sigma).ln() + gauss(t.loss[k], ql, sigma).ln();

        let pi = |ctx: &helios_core::contexts::PossibilityContext| possibility_weight(ctx, h, d, s);
        let ps = m.active.season_gate.probs(s);
        let pa = m.active.time_gate.probs(h, d);
        let pt = m.setpoint.gate.probs(h, d);
        let mut mix = 0.0;
        for (i, ci) in m.contexts.season.contexts.iter().enumerate() {
            for (j, cj) in m.contexts.setpoint.contexts.iter().enumerate() {
                for (l, cl) in m.contexts.setpoint.contexts.iter().enumerate() {
                    let (wi, wj, wl) = (pi(ci), pi(cj), pi(cl));
                    let gap_l = gap_with(&|kk| m.setpoint.zeta[l][day(kk).index()]);
                    let mean = space_at(&gap_l, m.active.eta[i] * m.active.mu[j][d.index()]);
                    mix += ps[i].powf(wi)
                        * pa[j].powf(wj)
                        * pt[l].powf(wl)
                        * gauss(t.space[k], mean, sigma).powf(wi * wj * wl);
                }
            }
        }
        total += mix.ln();

        let pu = m.hot_water.gate.probs(h, d);
        let corr = 1.0 + m.hot_water.lambda * (2.0 * PI * (doy(k) - m.hot_water.peak_day) / 365.0).cos();
        let mut mix = 0.0;
        for (u, cu) in m.contexts.hot_water.contexts.iter().enumerate() {
            let wu = pi(cu);
            mix += (pu[u] * gauss(t.hot_water[k], m.hot_water.q[u] * corr, sigma)).powf(wu);
        }
        total += mix.ln();
    }
    total + prior_sum(m, priors)
}

/// Worst coordinate of the analytic unconstrained gradient against central
/// finite differences: `(index, analytic, numeric)` and whether every
/// coordinate is within `rel` relative or `abs` absolute error.
pub fn gradient_check(
    m: &HeliosModel,
    ds: &Dataset,
    t: &ComponentTargets,
    step: f64,
    rel: f64,
    abs: f64,
) -> (bool, usize, f64, f64) {
    use helios_core::learning::{log_posterior_terms, objective_gradient};
    use helios_core::model::Frame;

    let priors = m.priors.clone();
    let weights = Frame::new(m, ds).unwrap().weights;
    let g = objective_gradient(m, ds, t, &priors, &weights).unwrap();
    let lay = m.layout();
    let cons = lay.constraints();
    let u: Vec<f64> = m.to_vector(&lay).iter().zip(&cons).map(|(x, c)| c.inverse(*x)).collect();
    let at = |u: &[f64]| {
        let x: Vec<f64> = u.iter().zip(&cons).map(|(u, c)| c.forward(*u)).collect();
        let mut mm = m.clone();
        mm.set_vector(&lay, &x);
        log_posterior_terms(&mm, ds, t, &priors, &weights).unwrap()
    };
    let mut ok = true;
    let mut worst = (0, 0.0, 0.0, -1.0);
    for i in 0..u.len() {
        let (mut up, mut dn) = (u.clone(), u.clone());
        up[i] += step;
        dn[i] -= step;
        // term by term, so the difference is not lost against the total
        let fd = at(&up).iter().zip(at(&dn)).map(|(a, b)| a - b).sum::<f64>() / (2.0 * step);
        let err = (g[i] - fd).abs();
        let scaled = err / g[i].abs().max(fd.abs()).max(f64::MIN_POSITIVE);
        if err > abs && scaled > rel {
            ok = false;
        }
        let score = if err <= abs { 0.0 } else { scaled };
        if score > worst.3 {
            worst = (i, g[i], fd, score);
        }
    }
    (ok, worst.0, worst.1, worst.2)
}
