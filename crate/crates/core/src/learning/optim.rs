//! Limited-memory BFGS ascent with Armijo backtracking.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LbfgsConfig {
    pub max_iterations: usize,
    pub memory: usize,
    /// Stop once the largest gradient component falls below this.
    pub gradient_tolerance: f64,
    /// Stop once an accepted step improves the value by less than this
    /// fraction of `max(1, |f|)`.
    pub value_tolerance: f64,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        Self { max_iterations: 200, memory: 10, gradient_tolerance: 1e-6, value_tolerance: 1e-13 }
    }
}

#[derive(Debug, Clone)]
pub struct LbfgsOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    pub iterations: usize,
    /// Gradient tolerance reached.
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 50;

/// Maximizes `f`, which returns the value and gradient at a point. Points
/// where `f` fails are treated as infeasible and the step is shortened; only
/// a failure at `x0` is reported.
pub fn maximize<F>(mut f: F, x0: &[f64], cfg: &LbfgsConfig) -> Result<LbfgsOutcome>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let mut x = x0.to_vec();
    let (mut fx, mut g) = f(&x)?;
    let mut memory: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(cfg.memory);
    let mut iterations = 0;
    let mut converged = false;

    while iterations < cfg.max_iterations {
        if max_abs(&g) < cfg.gradient_tolerance {
            converged = true;
            break;
        }
        // two-loop recursion on the ascent direction
        let mut d = g.clone();
        let mut alphas = Vec::with_capacity(memory.len());
        for (s, y, rho) in memory.iter().rev() {
            let a = rho * dot(s, &d);
            d.iter_mut().zip(y).for_each(|(di, yi)| *di -= a * yi);
            alphas.push(a);
        }
        if let Some((s, y, _)) = memory.back() {
            let gamma = dot(s, y) / dot(y, y);
            d.iter_mut().for_each(|di| *di *= gamma);
        }
        for ((s, y, rho), a) in memory.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &d);
            d.iter_mut().zip(s).for_each(|(di, si)| *di += (a - b) * si);
        }
        let mut slope = dot(&g, &d);
        if !(slope > 0.0) {
            memory.clear();
            d = g.clone();
            slope = dot(&g, &d);
        }
        let mut t = if memory.is_empty() { (1.0 / max_abs(&d)).min(1.0) } else { 1.0 };

        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + t * di).collect();
            if let Ok((ft, gt)) = f(&trial) {
                if ft >= fx + ARMIJO * t * slope {
                    accepted = Some((trial, ft, gt));
                    break;
                }
            }
            t *= 0.5;
        }
        iterations += 1;
        let Some((xn, fnew, gn)) = accepted else { break };

        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        // curvature pairs for the minimization of -f
        let y: Vec<f64> = g.iter().zip(&gn).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if memory.len() == cfg.memory {
                memory.pop_front();
            }
            memory.push_back((s, y, 1.0 / sy));
        }
        let gain = fnew - fx;
        x = xn;
        fx = fnew;
        g = gn;
        if gain <= cfg.value_tolerance * fx.abs().max(1.0) {
            converged = max_abs(&g) < cfg.gradient_tolerance;
            break;
        }
    }
    if !converged && max_abs(&g) < cfg.gradient_tolerance {
        converged = true;
    }
    Ok(LbfgsOutcome { x, value: fx, gradient: g, iterations, converged })
}
