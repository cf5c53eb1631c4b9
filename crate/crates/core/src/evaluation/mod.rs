//! Synthetic ground truth, baselines, metrics and the benchmark harness.

pub mod baselines;
pub mod benchmark;
pub mod metrics;
pub mod synth;
pub mod variants;

pub use baselines::{baseline_features, fit_baseline, BaselineKind, BaselineModel};
pub use benchmark::{
    benchmark, helios_rolling, write_predictions_csv, write_results_csv, HeliosForecaster, ModelResult, PredictionRow,
    RollingForecaster,
};
pub use metrics::{aggregate_horizon_metrics, compute_metrics, MetricsReport, Period};
pub use synth::{generate_synthetic, SynthConfig, SyntheticLabels, WeatherSettings, LABELS_HEADER};
pub use variants::{make_context_variants, ContextVariant};
