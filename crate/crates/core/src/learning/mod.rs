//! MAP fitting: weighted objective, optimizer and the outer target-refresh loop.

mod fit;
mod objective;
mod optim;

pub use fit::{fit, fit_with_model, FitConfig, FitReport, TRACE_HEADER};
pub use objective::{
    log_posterior_terms, objective_gradient, to_unconstrained_gradient, weighted_log_posterior, Evaluation, Objective,
};
pub use optim::{maximize, LbfgsConfig, LbfgsOutcome};

/// Compensated (Neumaier) summation.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct Neumaier {
    sum: f64,
    carry: f64,
}

impl Neumaier {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn sum(&self) -> f64 {
        self.sum + self.carry
    }
}
