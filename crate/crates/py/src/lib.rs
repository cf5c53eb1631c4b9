//! Python bindings: datasets, configuration, fitting, forecasting and
//! evaluation. Timestamps cross the boundary as Unix seconds.

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use helios_core::config::RunConfig as CoreConfig;
use helios_core::data::{ingest_csv, write_csv_file, Dataset as CoreDataset};
use helios_core::evaluation::{
    self as ev, fit_baseline, make_context_variants, ContextVariant, HeliosForecaster, Period, RollingForecaster,
};
use helios_core::learning::FitReport as CoreReport;
use helios_core::model::{self as md, DecompositionRow, HeliosModel, PredictionMode};
use helios_core::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(_) => PyIOError::new_err(e.to_string()),
        Error::NonFiniteObjective | Error::NonFiniteGradient { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(py_err)
}

/// Run configuration; the defaults are a complete setup.
#[pyclass(name = "RunConfig", skip_from_py_object)]
#[derive(Clone)]
struct RunConfig {
    inner: CoreConfig,
}

#[pymethods]
impl RunConfig {
    #[new]
    fn new() -> Self {
        Self { inner: CoreConfig::default() }
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        Ok(Self { inner: CoreConfig::from_toml_str(text).map_err(py_err)? })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self { inner: CoreConfig::load(path).map_err(py_err)? })
    }

    fn to_toml(&self) -> PyResult<String> {
        self.inner.to_toml_string().map_err(py_err)
    }

    /// Copy with one seed for generation, fitting and the context shuffle.
    fn with_seed(&self, seed: u64) -> Self {
        Self { inner: self.inner.clone().with_seed(seed) }
    }

    fn __repr__(&self) -> String {
        format!("RunConfig(seed={}, years={})", self.inner.fit.seed, self.inner.synth.years)
    }
}

fn config_or_default(config: Option<&RunConfig>) -> CoreConfig {
    config.map(|c| c.inner.clone()).unwrap_or_default()
}

/// Hourly substation and weather rows.
#[pyclass(name = "Dataset", skip_from_py_object)]
#[derive(Clone)]
struct Dataset {
    inner: CoreDataset,
}

#[pymethods]
impl Dataset {
    #[staticmethod]
    #[pyo3(signature = (path, config=None))]
    fn read_csv(path: &str, config: Option<&RunConfig>) -> PyResult<Self> {
        let cfg = config_or_default(config);
        Ok(Self { inner: ingest_csv(path, &cfg.columns, &cfg.holidays).map_err(py_err)? })
    }

    fn write_csv(&self, path: &str) -> PyResult<()> {
        write_csv_file(&self.inner, path).map_err(py_err)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// Rows `start..stop`.
    fn slice(&self, start: usize, stop: usize) -> PyResult<Self> {
        if start > stop || stop > self.inner.len() {
            return Err(PyValueError::new_err(format!("slice {start}..{stop} outside 0..{}", self.inner.len())));
        }
        Ok(Self { inner: self.inner.slice(start..stop) })
    }

    fn timestamps(&self) -> Vec<i64> {
        self.inner.timestamps()
    }

    fn heat_load(&self) -> Vec<f64> {
        self.inner.heat_load()
    }

    fn ambient_temperature(&self) -> Vec<f64> {
        self.inner.records().iter().map(|r| r.weather.ambient_temperature).collect()
    }

    fn __repr__(&self) -> String {
        format!("Dataset(rows={})", self.inner.len())
    }
}

/// Outcome of a fit.
#[pyclass(name = "FitReport", get_all, skip_from_py_object)]
struct FitReport {
    initial_objective: f64,
    trace: Vec<f64>,
    converged: bool,
    stalled: bool,
    noise_scale: f64,
}

impl From<CoreReport> for FitReport {
    fn from(r: CoreReport) -> Self {
        Self {
            initial_objective: r.initial_objective,
            trace: r.trace,
            converged: r.converged,
            stalled: r.stalled,
            noise_scale: r.noise_scale,
        }
    }
}

#[pymethods]
impl FitReport {
    fn __repr__(&self) -> String {
        format!(
            "FitReport(outer_iterations={}, converged={}, stalled={})",
            self.trace.len(),
            self.converged,
            self.stalled
        )
    }
}

fn rows_to_dict<'py>(py: Python<'py>, rows: &[DecompositionRow]) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("timestamp", rows.iter().map(|r| r.timestamp).collect::<Vec<_>>())?;
    d.set_item("total", rows.iter().map(|r| r.total).collect::<Vec<_>>())?;
    d.set_item("space", rows.iter().map(|r| r.space).collect::<Vec<_>>())?;
    d.set_item("hot_water", rows.iter().map(|r| r.hot_water).collect::<Vec<_>>())?;
    d.set_item("loss", rows.iter().map(|r| r.loss).collect::<Vec<_>>())?;
    Ok(d)
}

/// A fitted heat-load model.
#[pyclass(name = "Model", skip_from_py_object)]
#[derive(Clone)]
struct Model {
    inner: HeliosModel,
}

#[pymethods]
impl Model {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self { inner: md::load_model(path).map_err(py_err)? })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        md::save_model(&self.inner, path).map_err(py_err)
    }

    /// Annual amplitude of the hot-water demand.
    #[getter]
    fn hot_water_amplitude(&self) -> f64 {
        self.inner.hot_water.lambda
    }

    #[getter]
    fn noise_scale(&self) -> f64 {
        self.inner.noise_scale
    }

    /// Rows of the history the model needs before its first prediction.
    #[getter]
    fn first_row(&self) -> usize {
        self.inner.first_row()
    }

    /// Recursive forecast of `horizon` steps after `history`, driven by the
    /// weather and temperatures in `future`.
    fn forecast<'py>(
        &self,
        py: Python<'py>,
        history: &Dataset,
        horizon: usize,
        future: &Dataset,
    ) -> PyResult<Bound<'py, PyDict>> {
        let rows = md::forecast(&self.inner, &history.inner, horizon, &future.inner).map_err(py_err)?;
        rows_to_dict(py, &rows)
    }

    /// Component decomposition; `mode` is "teacher_forced" or "recursive".
    #[pyo3(signature = (data, mode="teacher_forced"))]
    fn decompose<'py>(&self, py: Python<'py>, data: &Dataset, mode: &str) -> PyResult<Bound<'py, PyDict>> {
        let mode = match mode {
            "teacher_forced" => PredictionMode::TeacherForced,
            "recursive" => PredictionMode::Recursive,
            other => return Err(PyValueError::new_err(format!("unknown mode `{other}`"))),
        };
        let rows = md::predict_decomposed(&self.inner, &data.inner, mode).map_err(py_err)?;
        rows_to_dict(py, &rows)
    }

    fn __repr__(&self) -> String {
        format!(
            "Model(hot_water_amplitude={:.4}, noise_scale={:.4})",
            self.inner.hot_water.lambda, self.inner.noise_scale
        )
    }
}

/// Synthetic dataset with its true components.
#[pyfunction]
#[pyo3(signature = (config=None))]
fn generate_synthetic<'py>(py: Python<'py>, config: Option<&RunConfig>) -> PyResult<(Dataset, Bound<'py, PyDict>)> {
    let cfg = config_or_default(config);
    let (ds, labels) = py.detach(|| ev::generate_synthetic(&cfg.synth)).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("space", labels.space)?;
    d.set_item("hot_water", labels.hot_water)?;
    d.set_item("loss", labels.loss)?;
    d.set_item("noise", labels.noise)?;
    d.set_item("active_fraction", labels.active_fraction)?;
    d.set_item("hot_water_amplitude", labels.hot_water_amplitude)?;
    Ok((Dataset { inner: ds }, d))
}

/// Fits a model; `variant` is "expert", "nc" or "wc".
#[pyfunction]
#[pyo3(signature = (data, config=None, variant="expert"))]
fn fit(py: Python<'_>, data: &Dataset, config: Option<&RunConfig>, variant: &str) -> PyResult<(Model, FitReport)> {
    let cfg = config_or_default(config);
    let variant: ContextVariant = parse(variant)?;
    let ds = &data.inner;
    let (m, report) = py
        .detach(|| {
            let contexts = make_context_variants(&cfg.contexts, variant, cfg.benchmark.variant_seed);
            helios_core::learning::fit(ds, &contexts, &cfg.priors, &cfg.model, &cfg.fit)
        })
        .map_err(py_err)?;
    Ok((Model { inner: m }, report.into()))
}

fn metrics_dict<'py>(py: Python<'py>, r: &ev::MetricsReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("r2", r.r2)?;
    d.set_item("rmse", r.rmse)?;
    d.set_item("mae", r.mae)?;
    d.set_item("mape", r.mape)?;
    d.set_item("count", r.count)?;
    Ok(d)
}

/// R², RMSE, MAE and MAPE (percent) of `predicted` against `actual`.
#[pyfunction]
fn compute_metrics<'py>(py: Python<'py>, actual: Vec<f64>, predicted: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
    let r = ev::compute_metrics(&actual, &predicted).map_err(py_err)?;
    metrics_dict(py, &r)
}

/// Fits the model variants and baselines on `train` and scores rolling
/// forecasts over `test`. Returns one dict per (model, period).
#[pyfunction]
#[pyo3(signature = (train, test, config=None, variants=None, periods=None))]
fn evaluate<'py>(
    py: Python<'py>,
    train: &Dataset,
    test: &Dataset,
    config: Option<&RunConfig>,
    variants: Option<Vec<String>>,
    periods: Option<Vec<String>>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let cfg = config_or_default(config);
    let variants = match variants {
        Some(v) => v.iter().map(|s| parse::<ContextVariant>(s)).collect::<PyResult<Vec<_>>>()?,
        None => ContextVariant::ALL.to_vec(),
    };
    let periods = match periods {
        Some(p) => p.iter().map(|s| parse::<Period>(s)).collect::<PyResult<Vec<_>>>()?,
        None => vec![Period::Hourly],
    };
    let horizon = cfg.benchmark.horizon;
    let (tr, te) = (&train.inner, &test.inner);
    let table = py
        .detach(|| -> helios_core::Result<Vec<(String, ev::MetricsReport)>> {
            let mut helios = Vec::new();
            for v in variants {
                let contexts = make_context_variants(&cfg.contexts, v, cfg.benchmark.variant_seed);
                let (m, _) = helios_core::learning::fit(tr, &contexts, &cfg.priors, &cfg.model, &cfg.fit)?;
                helios.push(HeliosForecaster { name: v.model_name().to_string(), model: m });
            }
            let baselines = cfg
                .benchmark
                .baselines
                .iter()
                .map(|&k| fit_baseline(k, tr))
                .collect::<helios_core::Result<Vec<_>>>()?;
            let models: Vec<&dyn RollingForecaster> = helios
                .iter()
                .map(|h| h as &dyn RollingForecaster)
                .chain(baselines.iter().map(|b| b as &dyn RollingForecaster))
                .collect();
            let results = ev::benchmark(&models, tr, te, horizon, cfg.benchmark.stride)?;
            let mut table = Vec::new();
            for &p in &periods {
                for r in &results {
                    table.push((r.name.clone(), r.aggregated(horizon, p)?));
                }
            }
            Ok(table)
        })
        .map_err(py_err)?;
    table
        .iter()
        .map(|(name, r)| {
            let d = metrics_dict(py, r)?;
            d.set_item("model", name)?;
            d.set_item("period", r.period.to_string())?;
            d.set_item("horizon", r.horizon)?;
            Ok(d)
        })
        .collect()
}

#[pymodule]
fn helios(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<RunConfig>()?;
    m.add_class::<Dataset>()?;
    m.add_class::<FitReport>()?;
    m.add_class::<Model>()?;
    m.add_function(wrap_pyfunction!(generate_synthetic, m)?)?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(compute_metrics, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    Ok(())
}
