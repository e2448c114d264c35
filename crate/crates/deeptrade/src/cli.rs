//! Command-line pipeline: ingestion, backtests, grid search, report
//! comparison and plotting.
//!
//! Exit codes are a stable contract: 0 success, 2 configuration error,
//! 3 data error, 4 numeric failure.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::analytics::{
    diebold_mariano, error_metrics, pesaran_timmermann, error_table, report_table, LossFunction,
    PerformanceReport, TestOutcome,
};
use crate::baselines::{rolling_forecast, select_order};
use crate::error::{Error, Result};
use crate::gridsearch::{enumerate, results_to_csv, run_grid, select_best, GridRun, GridSpec};
use crate::lstm::NetworkConfig;
use crate::market_data::{
    build_features, parse_csv, write_csv, CsvSchema, DateRange, FeatureFrame, PeriodSplit,
    PriceSeries,
};
use crate::policy::{compute_a_max, optimal_allocations, AllocationPolicy, PolicyConfig};
use crate::predictor::{naive_persistence, rolling_predict, write_records_csv, PredictionRecord};
use crate::simulator::{
    buy_and_hold, run_backtest, up_down_strategy, write_equity_csv, write_trades_csv,
    BacktestInput, BacktestOutput, DatedSnapshot, EquityPoint, ExecutionTiming,
};
use crate::util::{fingerprint, write_atomic};

/// Which model/strategy combination a backtest runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// LSTM predictions under the bin-allocation policy.
    Proposed,
    /// LSTM predictions under the directional baseline.
    UpDown,
    BuyAndHold,
    /// ARIMA predictions; trading style set by `arima.trading`.
    Arima,
    /// Persistence predictor; scored on accuracy only, never trades.
    Naive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TradingStyle {
    #[default]
    Proposed,
    UpDown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArimaOptions {
    pub max_order: usize,
    /// Re-estimate coefficients daily on the growing window.
    pub reestimate: bool,
    pub trading: TradingStyle,
}

impl Default for ArimaOptions {
    fn default() -> Self {
        ArimaOptions {
            max_order: 3,
            reestimate: true,
            trading: TradingStyle::Proposed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    /// Series the model predicts (index or asset).
    pub predicted_csv: PathBuf,
    /// Optional proxy actually traded (e.g. a tracking ETF).
    #[serde(default)]
    pub traded_csv: Option<PathBuf>,
    #[serde(default)]
    pub schema: CsvSchema,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_version() -> u32 {
    1
}

/// One JSON document drives a run; CLI flags override file values and
/// unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_version")]
    pub version: u32,
    pub data: DataConfig,
    pub periods: PeriodSplit,
    #[serde(default)]
    pub network: NetworkConfig,
    #[serde(default)]
    pub policy: PolicyConfig,
    pub strategy: Strategy,
    #[serde(default)]
    pub arima: ArimaOptions,
    #[serde(default)]
    pub execution: ExecutionTiming,
    pub capital: f64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    /// Fixed allocation size; derived from capital at period start when
    /// absent.
    #[serde(default)]
    pub a_max_units: Option<u64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let body = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config: RunConfig =
            serde_json::from_str(&body).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != 1 {
            return Err(Error::Config(format!(
                "unsupported config version {}",
                self.version
            )));
        }
        self.periods.validate()?;
        self.network.validate()?;
        self.policy.validate()?;
        if !(self.capital.is_finite() && self.capital > 0.0) {
            return Err(Error::Config("capital must be positive".into()));
        }
        Ok(())
    }

    /// Stable hash of the whole (post-override) configuration; stamped
    /// into every output file.
    pub fn fingerprint(&self) -> String {
        fingerprint(&serde_json::to_string(self).expect("config serializes"))
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "deeptrade",
    about = "Walk-forward LSTM price prediction and distribution-binned trading backtests",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate an OHLC CSV file and report its shape.
    Ingest(IngestArgs),
    /// Run a full backtest for the configured strategy.
    Backtest(BacktestArgs),
    /// Evaluate the hyperparameter grid and pick the most profitable config.
    Gridsearch(GridsearchArgs),
    /// Compare two or more report files side by side.
    Compare(CompareArgs),
    /// Render equity curves to an SVG chart.
    Plot(PlotArgs),
}

#[derive(Args, Debug)]
struct IngestArgs {
    /// OHLC CSV file to validate.
    #[arg(long)]
    input: PathBuf,
    /// Write a normalized copy here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BacktestArgs {
    /// Run configuration (JSON).
    #[arg(long, env = "DEEPTRADE_CONFIG")]
    config: PathBuf,
    /// Override the global seed.
    #[arg(long, env = "DEEPTRADE_SEED")]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long, env = "DEEPTRADE_OUT")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GridsearchArgs {
    #[arg(long, env = "DEEPTRADE_CONFIG")]
    config: PathBuf,
    #[arg(long, env = "DEEPTRADE_SEED")]
    seed: Option<u64>,
    #[arg(long, env = "DEEPTRADE_OUT")]
    out: Option<PathBuf>,
    /// Concurrent configuration evaluations.
    #[arg(long, env = "DEEPTRADE_WORKERS", default_value_t = 1)]
    workers: usize,
    /// Reuse results from an interrupted run's progress manifest.
    #[arg(long)]
    resume: bool,
}

#[derive(Args, Debug)]
struct CompareArgs {
    /// Report JSON files (two or more).
    #[arg(required = true, num_args = 2..)]
    reports: Vec<PathBuf>,
    /// Also write the comparison table here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PlotArgs {
    /// Equity CSV files.
    #[arg(required = true, num_args = 1..)]
    equity: Vec<PathBuf>,
    /// Output SVG path.
    #[arg(long)]
    out: PathBuf,
}

/// Parses argv and runs the selected command; returns the process exit code.
pub fn main_entry() -> i32 {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Ingest(args) => cmd_ingest(&args.input, args.out.as_deref()),
        Command::Backtest(args) => {
            cmd_backtest(&args.config, args.seed, args.out.as_deref()).map(|_| ())
        }
        Command::Gridsearch(args) => cmd_gridsearch(
            &args.config,
            args.seed,
            args.out.as_deref(),
            args.workers,
            args.resume,
        )
        .map(|_| ()),
        Command::Compare(args) => cmd_compare(&args.reports, args.out.as_deref()).map(|_| ()),
        Command::Plot(args) => cmd_plot(&args.equity, &args.out),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Validates an input file and prints a one-paragraph summary.
pub fn cmd_ingest(input: &Path, out: Option<&Path>) -> Result<()> {
    let series = parse_csv(input, &CsvSchema::default())?;
    println!(
        "{}: {} bars, {} .. {}",
        input.display(),
        series.len(),
        series.first_date().expect("non-empty"),
        series.last_date().expect("non-empty")
    );
    if series.skipped_rows > 0 {
        println!("  dropped {} rows with missing price fields", series.skipped_rows);
    }
    if series.adj_close_fallback {
        println!("  no adjusted-close column; close used as the prediction target");
    }
    if let Some(out) = out {
        write_csv(&series, out)?;
        println!("  normalized copy written to {}", out.display());
    }
    Ok(())
}

struct LoadedData {
    signal: PriceSeries,
    traded: Option<PriceSeries>,
    frame: FeatureFrame,
}

fn load_data(config: &RunConfig) -> Result<LoadedData> {
    let signal = parse_csv(&config.data.predicted_csv, &config.data.schema)?;
    let traded = match &config.data.traded_csv {
        Some(path) => Some(parse_csv(path, &config.data.schema)?),
        None => None,
    };
    let frame = build_features(&signal)?;
    Ok(LoadedData {
        frame,
        signal,
        traded,
    })
}

fn slice_records(records: &[PredictionRecord], range: &DateRange) -> Vec<PredictionRecord> {
    records
        .iter()
        .filter(|r| range.contains(r.date))
        .cloned()
        .collect()
}

/// Builds the full prediction stream (policy build through out-of-sample)
/// for the configured model, plus a label for reports.
fn model_records(
    config: &RunConfig,
    data: &LoadedData,
) -> Result<(Vec<PredictionRecord>, String, Vec<String>)> {
    let mut warnings = Vec::new();
    match config.strategy {
        Strategy::Arima => {
            let in_sample_range = DateRange::new(
                config.periods.policy_build.start,
                config.periods.hyper_select.end,
            )?;
            let in_sample_idx = data.signal.indices_in(&in_sample_range);
            if in_sample_idx.is_empty() {
                return Err(Error::InsufficientData(
                    "no in-sample days for ARIMA order selection".into(),
                ));
            }
            let closes: Vec<f64> = data.signal.bars[..=*in_sample_idx.last().expect("non-empty")]
                .iter()
                .map(|b| b.adj_close)
                .collect();
            let selected = select_order(&closes, config.arima.max_order)?;
            if selected.fallback_non_significant {
                warnings.push(
                    "no ARIMA candidate had all coefficients significant at 5%; using lowest-AIC"
                        .into(),
                );
            }
            let orders = selected.model.orders;
            let span = DateRange::new(
                config.periods.policy_build.start,
                config.periods.out_of_sample.end,
            )?;
            let (records, fit_warnings) =
                rolling_forecast(orders, &data.signal, &span, config.arima.reestimate)?;
            warnings.extend(fit_warnings);
            Ok((records, format!("ARIMA{orders}"), warnings))
        }
        Strategy::Naive => {
            let records = naive_persistence(&data.signal, &config.periods.out_of_sample)?;
            Ok((records, "naive".into(), warnings))
        }
        _ => {
            let build = rolling_predict(
                &data.frame,
                &config.network,
                &config.periods.policy_build,
                None,
            )?;
            let select = rolling_predict(
                &data.frame,
                &config.network,
                &config.periods.hyper_select,
                Some(build.params),
            )?;
            let oos = rolling_predict(
                &data.frame,
                &config.network,
                &config.periods.out_of_sample,
                Some(select.params),
            )?;
            warnings.extend(
                build
                    .skipped
                    .iter()
                    .chain(select.skipped.iter())
                    .chain(oos.skipped.iter())
                    .map(|(d, why)| format!("{d}: {why}")),
            );
            let mut records = build.records;
            records.extend(select.records);
            records.extend(oos.records);
            Ok((records, "LSTM".into(), warnings))
        }
    }
}

/// Runs the in-sample phases, then the out-of-sample backtest with the
/// cutoff window re-seeded from the bootstrap tail and the accumulated
/// per-bin sums carried forward.
fn proposed_pipeline(
    config: &RunConfig,
    data: &LoadedData,
    records_all: &[PredictionRecord],
) -> Result<(BacktestOutput, Vec<String>)> {
    let policy_cfg = &config.policy;
    let build_records = slice_records(records_all, &config.periods.policy_build);
    let select_records = slice_records(records_all, &config.periods.hyper_select);
    let oos_records = slice_records(records_all, &config.periods.out_of_sample);
    if oos_records.is_empty() {
        return Err(Error::InsufficientData(
            "no out-of-sample predictions".into(),
        ));
    }
    let mut warnings = Vec::new();

    // Phase 1: seed cutoffs and per-bin sums from the build period.
    let seeded = crate::gridsearch::seed_policy(&build_records, policy_cfg)?;
    warnings.extend(seeded.warnings.clone());

    let exec_series = data.traded.as_ref().unwrap_or(&data.signal);

    // Phase 2: hyper-select backtest evolves the policy.
    let select_days = exec_series.indices_in(&config.periods.hyper_select);
    if select_days.is_empty() {
        return Err(Error::InsufficientData(
            "no trading days in the hyper-select period".into(),
        ));
    }
    let select_amax = config.a_max_units.map(Ok).unwrap_or_else(|| {
        compute_a_max(config.capital, exec_series.bars[select_days[0]].adj_close)
    })?;
    let select_cfg = PolicyConfig {
        a_max: select_amax.max(1),
        ..policy_cfg.clone()
    };
    let allocations = optimal_allocations(&seeded.stats, &select_cfg);
    let policy = AllocationPolicy::new(
        seeded.cutoffs,
        allocations,
        seeded.stats,
        seeded.return_history,
    )?;
    let select_out = run_backtest(BacktestInput {
        signal_series: &data.signal,
        traded_series: data.traded.as_ref(),
        predictions: &select_records,
        range: config.periods.hyper_select,
        policy,
        policy_config: select_cfg,
        initial_cash: config.capital,
        timing: config.execution,
        record_snapshots: false,
    })?;
    warnings.extend(select_out.warnings.clone());

    // Phase 3: out-of-sample run. The cutoff window restarts from the
    // bootstrap tail of predictions made before the period; the per-bin
    // sums keep their full history.
    let oos_days = exec_series.indices_in(&config.periods.out_of_sample);
    if oos_days.is_empty() {
        return Err(Error::InsufficientData(
            "no trading days in the out-of-sample period".into(),
        ));
    }
    let oos_amax = config.a_max_units.map(Ok).unwrap_or_else(|| {
        compute_a_max(config.capital, exec_series.bars[oos_days[0]].adj_close)
    })?;
    if oos_amax == 0 {
        warnings.push("capital cannot buy a single unit at the period start".into());
    }
    let oos_cfg = PolicyConfig {
        a_max: oos_amax.max(1),
        ..policy_cfg.clone()
    };
    let before_oos: Vec<f64> = records_all
        .iter()
        .filter(|r| r.date < config.periods.out_of_sample.start)
        .map(|r| r.r_hat)
        .collect();
    let bootstrap: Vec<f64> = before_oos
        .iter()
        .rev()
        .take(policy_cfg.bootstrap_steps)
        .rev()
        .copied()
        .collect();
    let stats = select_out.policy.stats.clone();
    let cutoffs = if bootstrap.len() >= 10 {
        crate::policy::compute_cutoffs(&bootstrap, &oos_cfg)?
    } else {
        warnings.push(format!(
            "bootstrap window has only {} returns; carrying in-sample cutoffs",
            bootstrap.len()
        ));
        select_out.policy.cutoffs.clone()
    };
    let allocations = optimal_allocations(&stats, &oos_cfg);
    let oos_policy = AllocationPolicy::new(cutoffs, allocations, stats, bootstrap)?;
    let oos_out = run_backtest(BacktestInput {
        signal_series: &data.signal,
        traded_series: data.traded.as_ref(),
        predictions: &oos_records,
        range: config.periods.out_of_sample,
        policy: oos_policy,
        policy_config: oos_cfg,
        initial_cash: config.capital,
        timing: config.execution,
        record_snapshots: true,
    })?;
    warnings.extend(oos_out.warnings.clone());
    Ok((oos_out, warnings))
}

fn snapshots_to_csv(snapshots: &[DatedSnapshot], fp: Option<&str>) -> String {
    let mut out = String::new();
    if let Some(fp) = fp {
        out.push_str(&format!("# config {fp}\n"));
    }
    out.push_str("date,bin,lower,upper,delta,cycles,allocation\n");
    for snap in snapshots {
        for row in &snap.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                snap.date,
                row.bin,
                if row.lower.is_finite() {
                    row.lower.to_string()
                } else {
                    String::new()
                },
                row.upper.map(|u| u.to_string()).unwrap_or_default(),
                row.delta,
                row.cycles,
                row.allocation,
            ));
        }
    }
    out
}

/// Artifact paths produced by a backtest run.
pub struct BacktestArtifacts {
    pub report: PerformanceReport,
    pub report_json: PathBuf,
    pub trades_csv: PathBuf,
    pub equity_csv: PathBuf,
}

/// Runs the configured strategy end to end and writes the trade log,
/// equity curve, report (JSON and text), prediction stream and policy
/// snapshots under the output directory.
pub fn cmd_backtest(
    config_path: &Path,
    seed_override: Option<u64>,
    out_override: Option<&Path>,
) -> Result<BacktestArtifacts> {
    let mut config = RunConfig::load(config_path)?;
    if let Some(seed) = seed_override {
        config.network.seed = seed;
    }
    if let Some(out) = out_override {
        config.out_dir = out.to_path_buf();
    }
    run_backtest_config(&config)
}

/// `cmd_backtest` on an already-loaded configuration.
pub fn run_backtest_config(config: &RunConfig) -> Result<BacktestArtifacts> {
    config.validate()?;
    let fp = config.fingerprint();
    let data = load_data(config)?;
    let out_dir = &config.out_dir;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let oos_range = config.periods.out_of_sample;
    let exec_series = data.traded.as_ref().unwrap_or(&data.signal);

    let (records_all, model_label, mut warnings) = match config.strategy {
        Strategy::BuyAndHold => (Vec::new(), "buy-and-hold".to_string(), Vec::new()),
        _ => model_records(config, &data)?,
    };
    let oos_records = slice_records(&records_all, &oos_range);

    let (strategy_label, trades, equity, snapshots): (
        String,
        Vec<crate::simulator::TradeEvent>,
        Vec<EquityPoint>,
        Vec<DatedSnapshot>,
    ) = match config.strategy {
        Strategy::BuyAndHold => {
            let (trades, equity, _) = buy_and_hold(exec_series, &oos_range, config.capital)?;
            ("buy-and-hold".into(), trades, equity, Vec::new())
        }
        Strategy::Naive => {
            // accuracy baseline only: flat capital, no trades
            let equity: Vec<EquityPoint> = exec_series
                .indices_in(&oos_range)
                .iter()
                .map(|&i| EquityPoint {
                    date: exec_series.bars[i].date,
                    equity: config.capital,
                })
                .collect();
            if equity.is_empty() {
                return Err(Error::InsufficientData(
                    "no out-of-sample trading days".into(),
                ));
            }
            ("naive".into(), Vec::new(), equity, Vec::new())
        }
        Strategy::UpDown => {
            let out = up_down_strategy(
                &data.signal,
                data.traded.as_ref(),
                &oos_records,
                &oos_range,
                config.capital,
                config.execution,
            )?;
            warnings.extend(out.warnings);
            (
                format!("{model_label} up-down"),
                out.trades,
                out.equity,
                Vec::new(),
            )
        }
        Strategy::Arima if config.arima.trading == TradingStyle::UpDown => {
            let out = up_down_strategy(
                &data.signal,
                data.traded.as_ref(),
                &oos_records,
                &oos_range,
                config.capital,
                config.execution,
            )?;
            warnings.extend(out.warnings);
            (
                format!("{model_label} up-down"),
                out.trades,
                out.equity,
                Vec::new(),
            )
        }
        Strategy::Proposed | Strategy::Arima => {
            let (out, run_warnings) = proposed_pipeline(config, &data, &records_all)?;
            warnings.extend(run_warnings);
            (
                format!("{model_label} proposed"),
                out.trades,
                out.equity,
                out.snapshots,
            )
        }
    };

    // Forecast scores and tests, when a prediction stream exists.
    let errors = if oos_records.is_empty() {
        None
    } else {
        Some(error_metrics(&oos_records)?)
    };
    let pt = if oos_records.is_empty() {
        None
    } else {
        match pesaran_timmermann(&oos_records) {
            Ok(outcome) => Some(outcome),
            Err(Error::InsufficientData(why)) => {
                warnings.push(format!("PT test skipped: {why}"));
                None
            }
            Err(e) => return Err(e),
        }
    };
    let dm = if config.strategy == Strategy::Naive || oos_records.is_empty() {
        None
    } else {
        let naive = naive_persistence(&data.signal, &oos_range)?;
        match diebold_mariano(&oos_records, &naive, LossFunction::SquaredError) {
            Ok(outcome) => Some(outcome),
            Err(Error::InsufficientData(why)) => {
                warnings.push(format!("DM test skipped: {why}"));
                None
            }
            Err(e) => return Err(e),
        }
    };

    let mut report = PerformanceReport::build(
        &strategy_label,
        &fp,
        config.network.seed,
        config.execution,
        config.capital,
        &equity,
        trades.len(),
        errors.as_ref(),
        pt,
        warnings,
    )?;
    report.dm_vs_baseline = dm;

    let trades_csv = out_dir.join("trades.csv");
    let equity_csv = out_dir.join("equity.csv");
    let report_json = out_dir.join("report.json");
    write_trades_csv(&trades, &trades_csv, Some(&fp))?;
    write_equity_csv(&equity, &equity_csv, Some(&fp))?;
    if !oos_records.is_empty() {
        let predictions_csv = out_dir.join("predictions.csv");
        write_records_csv(&oos_records, &predictions_csv, Some(&fp))?;
        report.predictions_csv = Some(predictions_csv.display().to_string());
    }
    if !snapshots.is_empty() {
        write_atomic(
            &out_dir.join("policy.csv"),
            snapshots_to_csv(&snapshots, Some(&fp)).as_bytes(),
        )?;
    }
    write_atomic(&report_json, report.to_json()?.as_bytes())?;
    write_atomic(
        &out_dir.join("report.txt"),
        report_table(&[&report]).as_bytes(),
    )?;

    println!("{}", report_table(&[&report]));
    println!("artifacts written to {}", out_dir.display());
    Ok(BacktestArtifacts {
        report,
        report_json,
        trades_csv,
        equity_csv,
    })
}

/// Runs the grid search and writes `gridsearch.csv` plus the winning
/// configuration.
pub fn cmd_gridsearch(
    config_path: &Path,
    seed_override: Option<u64>,
    out_override: Option<&Path>,
    workers: usize,
    resume: bool,
) -> Result<PathBuf> {
    let mut config = RunConfig::load(config_path)?;
    if let Some(seed) = seed_override {
        config.network.seed = seed;
    }
    if let Some(out) = out_override {
        config.out_dir = out.to_path_buf();
    }
    let fp = config.fingerprint();
    let data = load_data(&config)?;
    let out_dir = &config.out_dir;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let spec = config.grid.clone().unwrap_or_default();
    let configs = enumerate(&spec, &config.network)?;
    let progress_path = out_dir.join("gridsearch.progress.jsonl");
    if !resume && progress_path.exists() {
        std::fs::remove_file(&progress_path).map_err(|e| Error::io(&progress_path, e))?;
    }

    let results = run_grid(
        &configs,
        &GridRun {
            frame: &data.frame,
            signal_series: &data.signal,
            traded_series: data.traded.as_ref(),
            split: &config.periods,
            policy_config: &config.policy,
            capital: config.capital,
            timing: config.execution,
            workers: workers.max(1),
            progress_path: Some(&progress_path),
        },
    )?;

    let results_path = out_dir.join("gridsearch.csv");
    write_atomic(&results_path, results_to_csv(&results, Some(&fp)).as_bytes())?;

    let best = select_best(&results)?;
    let best_path = out_dir.join("best_config.json");
    let best_body = serde_json::to_string_pretty(&serde_json::json!({
        "config_fingerprint": fp,
        "grid_fingerprint": best.fingerprint,
        "cr": best.cr,
        "network": best.config,
    }))
    .map_err(|e| Error::Config(format!("best-config json: {e}")))?;
    write_atomic(&best_path, best_body.as_bytes())?;

    println!(
        "{} configurations evaluated; best: layers={} hidden={} window={} dropout={} (CR {:.2}%)",
        results.len(),
        best.config.num_layers,
        best.config.hidden_size,
        best.config.window,
        best.config.dropout,
        best.cr.expect("selected result succeeded") * 100.0
    );
    println!("results written to {}", results_path.display());
    Ok(results_path)
}

/// Builds the side-by-side comparison of two or more reports, with a
/// pairwise forecast-accuracy test where prediction streams are available.
pub fn build_comparison(reports: &[PerformanceReport]) -> Result<String> {
    if reports.len() < 2 {
        return Err(Error::Config("need at least two reports".into()));
    }
    let (start, end) = (reports[0].period_start, reports[0].period_end);
    for r in &reports[1..] {
        if r.period_start != start || r.period_end != end {
            return Err(Error::DateMisalignment(format!(
                "report {} covers {} .. {}, expected {} .. {}",
                r.strategy, r.period_start, r.period_end, start, end
            )));
        }
    }
    let refs: Vec<&PerformanceReport> = reports.iter().collect();
    let mut out = String::new();
    out.push_str(&format!("Period {start} .. {end}\n\n"));
    out.push_str(&report_table(&refs));
    out.push('\n');
    if refs.iter().any(|r| r.mda.is_some()) {
        out.push_str(&error_table(&refs));
        out.push('\n');
    }

    // pairwise forecast comparison over shared prediction streams
    let streams: Vec<(String, Vec<PredictionRecord>)> = reports
        .iter()
        .filter_map(|r| {
            r.predictions_csv.as_ref().and_then(|p| {
                crate::predictor::read_records_csv(Path::new(p))
                    .ok()
                    .map(|records| (r.strategy.clone(), records))
            })
        })
        .collect();
    for i in 0..streams.len() {
        for j in i + 1..streams.len() {
            let (name_a, a) = &streams[i];
            let (name_b, b) = &streams[j];
            match diebold_mariano(a, b, LossFunction::SquaredError) {
                Ok(TestOutcome::Computed { statistic, p_value }) => {
                    out.push_str(&format!(
                        "DM({name_a} vs {name_b}): statistic {statistic:.4}, one-sided p {p_value:.4}\n"
                    ));
                }
                Ok(TestOutcome::Undefined { reason }) => {
                    out.push_str(&format!("DM({name_a} vs {name_b}): undefined ({reason})\n"));
                }
                Err(Error::InsufficientData(why)) | Err(Error::DateMisalignment(why)) => {
                    out.push_str(&format!("DM({name_a} vs {name_b}): not computed ({why})\n"));
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok(out)
}

pub fn cmd_compare(report_paths: &[PathBuf], out: Option<&Path>) -> Result<String> {
    let mut reports = Vec::with_capacity(report_paths.len());
    for path in report_paths {
        let body = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        reports.push(PerformanceReport::from_json(&body)?);
    }
    let table = build_comparison(&reports)?;
    println!("{table}");
    if let Some(out) = out {
        write_atomic(out, table.as_bytes())?;
    }
    Ok(table)
}

/// Reads equity CSVs and renders them, normalized to a common start, into
/// an SVG chart.
pub fn cmd_plot(equity_paths: &[PathBuf], out: &Path) -> Result<()> {
    let mut curves = Vec::with_capacity(equity_paths.len());
    for path in equity_paths {
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        curves.push((name, crate::simulator::read_equity_csv(path)?));
    }
    let payload = curves
        .iter()
        .map(|(n, pts)| format!("{n}:{}", pts.len()))
        .collect::<Vec<_>>()
        .join(",");
    let svg = crate::plot::render_equity_svg(&curves, Some(&fingerprint(&payload)))?;
    write_atomic(out, svg.as_bytes())?;
    println!("chart written to {}", out.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_config_rejects_unknown_keys_and_bad_version() {
        let body = r#"{
            "version": 1,
            "data": {"predicted_csv": "x.csv"},
            "periods": {
                "policy_build": {"start": "2005-01-01", "end": "2008-01-01"},
                "hyper_select": {"start": "2008-01-02", "end": "2009-12-31"},
                "out_of_sample": {"start": "2010-01-04", "end": "2018-05-01"}
            },
            "strategy": "proposed",
            "capital": 28365.0,
            "surprise": true
        }"#;
        assert!(serde_json::from_str::<RunConfig>(body).is_err());

        let versioned = body.replace("\"surprise\": true\n", "");
        let body2 = versioned.replace("\"version\": 1", "\"version\": 9").replace(",\n            \"surprise\": true", "");
        let parsed = serde_json::from_str::<RunConfig>(&body2);
        if let Ok(config) = parsed {
            assert!(config.validate().is_err());
        }
    }

    #[test]
    fn run_config_defaults_fill_in() {
        let body = r#"{
            "data": {"predicted_csv": "x.csv"},
            "periods": {
                "policy_build": {"start": "2005-01-01", "end": "2008-01-01"},
                "hyper_select": {"start": "2008-01-02", "end": "2009-12-31"},
                "out_of_sample": {"start": "2010-01-04", "end": "2018-05-01"}
            },
            "strategy": "proposed",
            "capital": 28365.0
        }"#;
        let config: RunConfig = serde_json::from_str(body).unwrap();
        config.validate().unwrap();
        assert_eq!(config.version, 1);
        assert_eq!(config.network.iterations, 1600);
        assert_eq!(config.policy.bootstrap_steps, 120);
        assert_eq!(config.execution, ExecutionTiming::NextClose);
        assert_eq!(config.out_dir, PathBuf::from("out"));
        // fingerprint is stable
        assert_eq!(config.fingerprint(), config.fingerprint());
    }
}
