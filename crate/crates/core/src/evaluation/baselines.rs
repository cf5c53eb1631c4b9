//! Classical regression baselines on weather and calendar features.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Record};
use crate::error::{Error, Result};
use crate::features::fourier_into;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaselineKind {
    Lr,
    Ridge { strength: f64 },
    Lasso { strength: f64 },
    Arx { order: usize },
}

impl BaselineKind {
    pub fn name(&self) -> &'static str {
        match self {
            BaselineKind::Lr => "LR",
            BaselineKind::Ridge { .. } => "Ridge",
            BaselineKind::Lasso { .. } => "LASSO",
            BaselineKind::Arx { .. } => "ARX",
        }
    }

    /// The four baselines with their default settings.
    pub fn defaults() -> [BaselineKind; 4] {
        [
            BaselineKind::Lr,
            BaselineKind::Ridge { strength: 1.0 },
            BaselineKind::Lasso { strength: 0.1 },
            BaselineKind::Arx { order: 1 },
        ]
    }
}

/// Number of Fourier harmonic pairs in the baseline features.
pub const BASELINE_HARMONICS: usize = 3;

/// `[T_a, V_w, G, weekend, fourier(h)…, 1]`.
pub fn baseline_features(r: &Record) -> Vec<f64> {
    let mut f = vec![0.0; 4 + 2 * BASELINE_HARMONICS + 1];
    f[0] = r.weather.ambient_temperature;
    f[1] = r.weather.wind_speed;
    f[2] = r.weather.global_radiance;
    f[3] = r.calendar.day_type.index() as f64;
    fourier_into(r.calendar.hour as f64, &mut f[4..4 + 2 * BASELINE_HARMONICS]);
    *f.last_mut().unwrap() = 1.0;
    f
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineModel {
    pub kind: BaselineKind,
    /// Coefficients of the exogenous features; the last one is the intercept.
    pub coefficients: Vec<f64>,
    /// Autoregressive coefficients, `ar[j]` multiplies `y(k - 1 - j)`.
    pub ar: Vec<f64>,
}

fn design(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let p = rows[0].len();
    DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j])
}

/// Solves `(XᵀX + D) β = Xᵀy`, rejecting numerically singular systems.
fn solve_normal(x: &DMatrix<f64>, y: &DVector<f64>, penalty: &[f64]) -> Result<Vec<f64>> {
    let mut xtx = x.transpose() * x;
    for (i, p) in penalty.iter().enumerate() {
        xtx[(i, i)] += p;
    }
    let xty = x.transpose() * y;
    let sv = xtx.clone().singular_values();
    let (hi, lo) = (sv.max(), sv.min());
    if !(lo > 1e-12 * hi) {
        return Err(Error::SingularDesign);
    }
    let chol = xtx.cholesky().ok_or(Error::SingularDesign)?;
    Ok(chol.solve(&xty).iter().copied().collect())
}

/// Coordinate descent for `1/(2n) ‖y − Xβ‖² + λ‖β‖₁` on centred columns;
/// the intercept (last column) is recovered from the means.
fn lasso(rows: &[Vec<f64>], y: &[f64], strength: f64) -> Vec<f64> {
    let n = rows.len();
    let p = rows[0].len() - 1;
    let means: Vec<f64> = (0..p).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
    let y_mean = y.iter().sum::<f64>() / n as f64;
    let cols: Vec<Vec<f64>> = (0..p).map(|j| rows.iter().map(|r| r[j] - means[j]).collect()).collect();
    let norms: Vec<f64> = cols.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>() / n as f64).collect();
    let mut resid: Vec<f64> = y.iter().map(|v| v - y_mean).collect();
    let mut beta = vec![0.0; p];
    for _ in 0..100_000 {
        let mut max_change: f64 = 0.0;
        for j in 0..p {
            if norms[j] == 0.0 {
                continue;
            }
            let rho = cols[j].iter().zip(&resid).map(|(c, r)| c * r).sum::<f64>() / n as f64 + norms[j] * beta[j];
            let new = rho.signum() * (rho.abs() - strength).max(0.0) / norms[j];
            let delta = new - beta[j];
            if delta != 0.0 {
                resid.iter_mut().zip(&cols[j]).for_each(|(r, c)| *r -= delta * c);
                beta[j] = new;
                max_change = max_change.max(delta.abs() * norms[j].sqrt());
            }
        }
        if max_change < 1e-8 {
            break;
        }
    }
    let intercept = y_mean - beta.iter().zip(&means).map(|(b, m)| b * m).sum::<f64>();
    beta.push(intercept);
    beta
}

pub fn fit_baseline(kind: BaselineKind, train: &Dataset) -> Result<BaselineModel> {
    train.ensure_contiguous()?;
    let order = match kind {
        BaselineKind::Arx { order } => order,
        _ => 0,
    };
    if let BaselineKind::Ridge { strength } | BaselineKind::Lasso { strength } = kind {
        if !(strength >= 0.0) {
            return Err(Error::InvalidConfig("baseline regularization strength must be non-negative".into()));
        }
    }
    let recs = train.records();
    if recs.len() <= order + 1 {
        return Err(Error::InsufficientHistory { needed: order + 2, available: recs.len() });
    }
    let load = train.heat_load();
    let rows: Vec<Vec<f64>> = (order..recs.len())
        .map(|k| {
            let mut f: Vec<f64> = (1..=order).map(|j| load[k - j]).collect();
            f.extend(baseline_features(&recs[k]));
            f
        })
        .collect();
    let y: Vec<f64> = load[order..].to_vec();
    let p = rows[0].len();
    let beta = match kind {
        BaselineKind::Lr | BaselineKind::Arx { .. } => solve_normal(&design(&rows), &DVector::from_vec(y), &[])?,
        BaselineKind::Ridge { strength } => {
            // mean squared error loss, so the penalty scales with the row count
            let mut pen = vec![strength * rows.len() as f64; p];
            pen[p - 1] = 0.0;
            solve_normal(&design(&rows), &DVector::from_vec(y), &pen)?
        }
        BaselineKind::Lasso { strength } => lasso(&rows, &y, strength),
    };
    Ok(BaselineModel { kind, ar: beta[..order].to_vec(), coefficients: beta[order..].to_vec() })
}

impl BaselineModel {
    fn exogenous(&self, r: &Record) -> f64 {
        baseline_features(r).iter().zip(&self.coefficients).map(|(f, c)| f * c).sum()
    }

    /// Predictions for `data[origin..origin + horizon]`; measured loads are
    /// read only before `origin`, later lags are the model's own output.
    pub fn forecast_window(&self, data: &Dataset, origin: usize, horizon: usize) -> Vec<f64> {
        let recs = data.records();
        let end = (origin + horizon).min(recs.len());
        let mut out: Vec<f64> = Vec::with_capacity(end.saturating_sub(origin));
        for k in origin..end {
            let mut v = self.exogenous(&recs[k]);
            for (j, a) in self.ar.iter().enumerate() {
                let lag = k - j - 1;
                let y = if lag >= origin { out[lag - origin] } else { recs[lag].substation.heat_load };
                v += a * y;
            }
            out.push(v);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{derive_calendar, HolidayCalendar, SubstationRecord, WeatherRecord};
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};

    fn dataset(n: usize, load: impl Fn(usize, f64) -> f64, ambient: impl Fn(usize) -> f64) -> Dataset {
        let h = HolidayCalendar::default();
        let recs = (0..n)
            .map(|k| {
                let ts = 1_514_764_800 + 3600 * k as i64;
                let ta = ambient(k);
                Record {
                    calendar: derive_calendar(ts, &h),
                    weather: WeatherRecord {
                        ambient_temperature: ta,
                        global_radiance: ((k * 7919) % 600) as f64,
                        wind_speed: 1.0 + ((k * 104_729) % 13) as f64,
                    },
                    substation: SubstationRecord {
                        heat_load: load(k, ta),
                        supply_temperature: 70.0,
                        return_temperature: 40.0,
                    },
                }
            })
            .collect();
        Dataset::from_records(recs).unwrap()
    }

    fn wavy(k: usize) -> f64 {
        10.0 * (k as f64 / 97.0).sin() + 0.37 * ((k * 31) % 17) as f64
    }

    #[test]
    fn lr_interpolates_exact_linear_data() {
        let ds = dataset(500, |_, ta| 2.0 * ta + 1.0, wavy);
        let m = fit_baseline(BaselineKind::Lr, &ds).unwrap();
        assert!((m.coefficients[0] - 2.0).abs() < 1e-8);
        assert!((m.coefficients.last().unwrap() - 1.0).abs() < 1e-8);
        assert!(m.coefficients[1..m.coefficients.len() - 1].iter().all(|c| c.abs() < 1e-8));
        let pred = m.forecast_window(&ds, 0, ds.len());
        let y = ds.heat_load();
        let r = crate::evaluation::compute_metrics(&y, &pred).unwrap();
        assert!((r.r2 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn lr_rejects_rank_deficient_design() {
        // constant ambient temperature duplicates the intercept column
        let ds = dataset(300, |k, _| k as f64, |_| 4.0);
        assert!(matches!(fit_baseline(BaselineKind::Lr, &ds), Err(Error::SingularDesign)));
    }

    #[test]
    fn heavy_ridge_shrinks_to_zero() {
        let ds = dataset(500, |k, ta| 3.0 * ta + (k % 5) as f64, wavy);
        let m = fit_baseline(BaselineKind::Ridge { strength: 1e9 }, &ds).unwrap();
        let n = m.coefficients.len();
        assert!(m.coefficients[..n - 1].iter().all(|c| c.abs() < 1e-6), "{:?}", m.coefficients);
    }

    #[test]
    fn lasso_matches_lr_without_penalty_and_zeroes_with_large_penalty() {
        let ds = dataset(400, |k, ta| -1.5 * ta + 0.01 * (k % 7) as f64 + 20.0, wavy);
        let lr = fit_baseline(BaselineKind::Lr, &ds).unwrap();
        let free = fit_baseline(BaselineKind::Lasso { strength: 0.0 }, &ds).unwrap();
        for (a, b) in lr.coefficients.iter().zip(&free.coefficients) {
            assert!((a - b).abs() < 1e-4, "{a} vs {b}");
        }
        let heavy = fit_baseline(BaselineKind::Lasso { strength: 1e6 }, &ds).unwrap();
        let n = heavy.coefficients.len();
        assert!(heavy.coefficients[..n - 1].iter().all(|&c| c == 0.0));
    }

    #[test]
    fn arx_recovers_ar1() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let mut y = vec![0.0; 5000];
        for k in 1..5000 {
            y[k] = 0.5 * y[k - 1] + noise.sample(&mut rng);
        }
        let ds = dataset(5000, |k, _| y[k], wavy);
        let m = fit_baseline(BaselineKind::Arx { order: 1 }, &ds).unwrap();
        assert!((m.ar[0] - 0.5).abs() < 0.05, "{}", m.ar[0]);
    }
}
