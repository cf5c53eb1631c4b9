//! `helios` command-line front end.
//!
//! Exit codes: 0 success, 1 configuration or usage error, 2 I/O or data file
//! error, 3 a fit ran out of outer iterations without converging.

use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use helios_core::config::RunConfig;
use helios_core::data::{ingest_csv, write_csv_file, Dataset};
use helios_core::evaluation::{
    benchmark, fit_baseline, generate_synthetic, make_context_variants, write_predictions_csv, write_results_csv,
    ContextVariant, HeliosForecaster, Period, RollingForecaster,
};
use helios_core::learning::{fit, FitReport};
use helios_core::model::{
    forecast, load_model, predict_decomposed, save_model, write_decomposition_csv, HeliosModel, PredictionMode,
};
use helios_core::Error;

#[derive(Parser)]
#[command(name = "helios", version, about = "Component-wise heat-load model for district heating substations")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for generation, fitting and the wrong-context shuffle.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset with known components.
    Generate {
        /// Dataset CSV (default: paths.data from the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Component labels CSV.
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        years: Option<usize>,
    },
    /// Split a dataset into training and test files at a row index.
    Split {
        #[arg(long)]
        data: PathBuf,
        /// Rows in the training file (default: one year of hours).
        #[arg(long, default_value_t = 8760)]
        train_rows: usize,
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        test: PathBuf,
    },
    /// Fit a model and write it with its objective trace.
    Train {
        /// Training data (default: paths.data).
        #[arg(long)]
        data: Option<PathBuf>,
        /// Model file (default: paths.model).
        #[arg(long)]
        model: Option<PathBuf>,
        /// Objective trace CSV (default: next to the model file).
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Variant::Expert)]
        variant: Variant,
        #[arg(long)]
        allow_nonconverged: bool,
    },
    /// Forecast the components over the rows of an exogenous file.
    Forecast {
        #[arg(long)]
        model: PathBuf,
        /// Observed rows up to the forecast origin.
        #[arg(long)]
        history: PathBuf,
        /// Weather and supply/return temperatures for the forecast steps;
        /// its heat_load column is ignored.
        #[arg(long)]
        exogenous: PathBuf,
        #[arg(long)]
        horizon: Option<usize>,
        /// Output CSV (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit the model variants and baselines and score rolling forecasts.
    Evaluate {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long)]
        horizon: Option<usize>,
        /// Restrict the model variants (default: all three).
        #[arg(long, value_enum)]
        variant: Vec<Variant>,
        /// Aggregation periods of the results table (default: hourly).
        #[arg(long, value_enum)]
        period: Vec<PeriodArg>,
        /// Directory for results.csv and predictions.csv (default: paths.output_dir or .).
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long)]
        allow_nonconverged: bool,
    },
    /// Component decomposition of a dataset, for plotting.
    Decompose {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Predict from observed lags, or run freely from the first row.
        #[arg(long, value_enum, default_value_t = Mode::TeacherForced)]
        mode: Mode,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Configuration utilities.
    Config {
        #[command(subcommand)]
        action: ConfigAction,
    },
}

#[derive(Subcommand)]
enum ConfigAction {
    /// Print the effective configuration.
    Dump {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Variant {
    Expert,
    Nc,
    Wc,
}

impl From<Variant> for ContextVariant {
    fn from(v: Variant) -> Self {
        match v {
            Variant::Expert => ContextVariant::Expert,
            Variant::Nc => ContextVariant::Nc,
            Variant::Wc => ContextVariant::Wc,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PeriodArg {
    Hourly,
    Daily,
    Weekly,
    Monthly,
    Biannual,
}

impl From<PeriodArg> for Period {
    fn from(p: PeriodArg) -> Self {
        match p {
            PeriodArg::Hourly => Period::Hourly,
            PeriodArg::Daily => Period::Daily,
            PeriodArg::Weekly => Period::Weekly,
            PeriodArg::Monthly => Period::Monthly,
            PeriodArg::Biannual => Period::Biannual,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    TeacherForced,
    Recursive,
}

/// A fit that used up its outer iterations.
#[derive(Debug)]
struct NotConverged(String);

impl fmt::Display for NotConverged {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} did not converge (pass --allow-nonconverged to keep it)", self.0)
    }
}

impl std::error::Error for NotConverged {}

/// Usage problems detected after argument parsing.
#[derive(Debug)]
struct Usage(String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<NotConverged>().is_some() {
        return 3;
    }
    if e.downcast_ref::<io::Error>().is_some() {
        return 2;
    }
    match e.downcast_ref::<Error>() {
        Some(
            Error::Io(_)
            | Error::MissingColumn(_)
            | Error::UnparsableRow { .. }
            | Error::NonMonotonicTimestamps { .. }
            | Error::DatasetHasGaps { .. }
            | Error::NonFiniteInput
            | Error::SchemaVersionMismatch { .. },
        ) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn load_config(common: &Common) -> Result<RunConfig> {
    let cfg = match &common.config {
        Some(path) => RunConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
        None => RunConfig::default(),
    };
    Ok(match common.seed {
        Some(seed) => cfg.with_seed(seed),
        None => cfg,
    })
}

fn required(flag: Option<PathBuf>, fallback: &Option<PathBuf>, what: &str) -> Result<PathBuf> {
    match flag.or_else(|| fallback.clone()) {
        Some(p) => Ok(p),
        None => Err(Usage(format!("no {what} path: pass it on the command line or set it in the config")).into()),
    }
}

fn read_data(path: &Path, cfg: &RunConfig) -> Result<Dataset> {
    let ds = ingest_csv(path, &cfg.columns, &cfg.holidays).with_context(|| format!("reading {}", path.display()))?;
    for w in ds.warnings() {
        eprintln!("warning: {}: {w}", path.display());
    }
    Ok(ds)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

/// Stdout when no path is given.
fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

fn check_converged(name: &str, report: &FitReport, allow: bool) -> Result<()> {
    // a stalled fit stopped at a point no step could improve: usable
    if report.converged || report.stalled {
        return Ok(());
    }
    if allow {
        eprintln!("warning: {name} did not converge; keeping it");
        return Ok(());
    }
    Err(NotConverged(name.to_string()).into())
}

fn status(report: &FitReport) -> &'static str {
    match (report.converged, report.stalled) {
        (true, _) => "converged",
        (false, true) => "stalled",
        _ => "not converged",
    }
}

fn fit_variant(cfg: &RunConfig, train: &Dataset, variant: ContextVariant) -> Result<(HeliosModel, FitReport)> {
    let contexts = make_context_variants(&cfg.contexts, variant, cfg.benchmark.variant_seed);
    fit(train, &contexts, &cfg.priors, &cfg.model, &cfg.fit)
        .with_context(|| format!("fitting {}", variant.model_name()))
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = load_config(&cli.common)?;
    match cli.command {
        Command::Generate { out, labels, years } => {
            if let Some(y) = years {
                cfg.synth.years = y;
                cfg.synth.validate()?;
            }
            let out = required(out, &cfg.paths.data, "output")?;
            let (ds, truth) = generate_synthetic(&cfg.synth)?;
            write_csv_file(&ds, &out).with_context(|| format!("writing {}", out.display()))?;
            if let Some(path) = labels {
                let mut w = create(&path)?;
                truth.write_csv(&ds, &mut w).with_context(|| format!("writing {}", path.display()))?;
                w.flush()?;
            }
            println!("seed {} rows {} -> {}", cfg.synth.seed, ds.len(), out.display());
        }
        Command::Split { data, train_rows, train, test } => {
            let ds = read_data(&data, &cfg)?;
            if train_rows == 0 || train_rows >= ds.len() {
                return Err(Usage(format!("--train-rows must be between 1 and {}", ds.len() - 1)).into());
            }
            write_csv_file(&ds.slice(0..train_rows), &train)?;
            write_csv_file(&ds.slice(train_rows..ds.len()), &test)?;
            println!("train {} rows, test {} rows", train_rows, ds.len() - train_rows);
        }
        Command::Train { data, model, trace, variant, allow_nonconverged } => {
            let data = required(data, &cfg.paths.data, "data")?;
            let model_path = required(model, &cfg.paths.model, "model")?;
            let ds = read_data(&data, &cfg)?;
            let variant = ContextVariant::from(variant);
            let (m, report) = fit_variant(&cfg, &ds, variant)?;
            let trace = trace.unwrap_or_else(|| model_path.with_extension("trace.csv"));
            // the trace is written either way so a failed run can be inspected
            let mut w = create(&trace)?;
            report.write_trace_csv(&mut w)?;
            w.flush()?;
            println!(
                "{}: {} after {} outer iterations, objective {:.6} -> {:.6}",
                variant.model_name(),
                status(&report),
                report.trace.len(),
                report.initial_objective,
                report.trace.last().copied().unwrap_or(report.initial_objective)
            );
            check_converged(variant.model_name(), &report, allow_nonconverged)?;
            if let Some(dir) = model_path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            save_model(&m, &model_path).with_context(|| format!("writing {}", model_path.display()))?;
            println!("model -> {}, trace -> {}", model_path.display(), trace.display());
        }
        Command::Forecast { model, history, exogenous, horizon, out } => {
            let horizon = horizon.unwrap_or(cfg.benchmark.horizon);
            if horizon == 0 {
                return Err(Usage("--horizon must be >= 1".into()).into());
            }
            let m = load_model(&model).with_context(|| format!("loading {}", model.display()))?;
            let history = read_data(&history, &cfg)?;
            let future = read_data(&exogenous, &cfg)?;
            let rows = forecast(&m, &history, horizon, &future)?;
            let mut w = output(out.as_deref())?;
            write_decomposition_csv(&rows, &mut w)?;
            w.flush()?;
        }
        Command::Evaluate { train, test, horizon, variant, period, out_dir, allow_nonconverged } => {
            if let Some(h) = horizon {
                cfg.benchmark.horizon = h;
            }
            cfg.validate()?;
            let horizon = cfg.benchmark.horizon;
            let out_dir = out_dir.or_else(|| cfg.paths.output_dir.clone()).unwrap_or_else(|| PathBuf::from("."));
            let train = read_data(&train, &cfg)?;
            let test = read_data(&test, &cfg)?;
            let variants: Vec<ContextVariant> = if variant.is_empty() {
                ContextVariant::ALL.to_vec()
            } else {
                variant.into_iter().map(Into::into).collect()
            };
            let periods: Vec<Period> =
                if period.is_empty() { vec![Period::Hourly] } else { period.into_iter().map(Into::into).collect() };

            let mut helios = Vec::new();
            for v in variants {
                let (m, report) = fit_variant(&cfg, &train, v)?;
                eprintln!("{}: {} after {} outer iterations", v.model_name(), status(&report), report.trace.len());
                check_converged(v.model_name(), &report, allow_nonconverged)?;
                helios.push(HeliosForecaster { name: v.model_name().to_string(), model: m });
            }
            let baselines =
                cfg.benchmark.baselines.iter().map(|&k| fit_baseline(k, &train)).collect::<Result<Vec<_>, _>>()?;
            let models: Vec<&dyn RollingForecaster> = helios
                .iter()
                .map(|h| h as &dyn RollingForecaster)
                .chain(baselines.iter().map(|b| b as &dyn RollingForecaster))
                .collect();
            let results = benchmark(&models, &train, &test, horizon, cfg.benchmark.stride)?;

            let mut table = Vec::new();
            for &p in &periods {
                for r in &results {
                    table.push((r.name.clone(), r.aggregated(horizon, p)?));
                }
            }
            let results_path = out_dir.join("results.csv");
            let predictions_path = out_dir.join("predictions.csv");
            let mut w = create(&results_path)?;
            write_results_csv(&table, &mut w)?;
            w.flush()?;
            let mut w = create(&predictions_path)?;
            write_predictions_csv(&results, &mut w)?;
            w.flush()?;

            println!("{:<10} {:<9} {:>8} {:>10} {:>10} {:>9}", "model", "period", "r2", "rmse", "mae", "mape");
            for (name, r) in &table {
                println!("{:<10} {:<9} {:>8.4} {:>10.3} {:>10.3} {:>9.3}", name, r.period, r.r2, r.rmse, r.mae, r.mape);
            }
            println!("results -> {}, predictions -> {}", results_path.display(), predictions_path.display());
        }
        Command::Decompose { model, data, mode, out } => {
            let m = load_model(&model).with_context(|| format!("loading {}", model.display()))?;
            let ds = read_data(&data, &cfg)?;
            let mode = match mode {
                Mode::TeacherForced => PredictionMode::TeacherForced,
                Mode::Recursive => PredictionMode::Recursive,
            };
            let rows = predict_decomposed(&m, &ds, mode)?;
            let mut w = output(out.as_deref())?;
            write_decomposition_csv(&rows, &mut w)?;
            w.flush()?;
        }
        Command::Config { action: ConfigAction::Dump { out } } => {
            let text = cfg.to_toml_string()?;
            let mut w = output(out.as_deref())?;
            w.write_all(text.as_bytes())?;
            w.flush()?;
        }
    }
    Ok(())
}
