//! Hyperparameter grid search: enumerate the grid, run the two-phase
//! in-sample pipeline per configuration, rank by realized profit.
//!
//! Phase 1 rolls the predictor over the policy-build period and seeds the
//! allocation policy from its predicted-return distribution and replayed
//! buy-sell cycles. Phase 2 continues the same weight trajectory over the
//! hyper-select period and runs the daily-updating backtest; the
//! cumulative return of that phase ranks the configuration.

use std::io::Write as _;
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::analytics::ErrorMetrics;
use crate::error::{Error, Result};
use crate::lstm::NetworkConfig;
use crate::market_data::{FeatureFrame, PeriodSplit, PriceSeries};
use crate::policy::{
    compute_cutoffs, optimal_allocations, record_trade_outcome, AllocationPolicy, BinStats,
    CutoffSet, PolicyConfig,
};
use crate::predictor::{rolling_predict, PredictionRecord};
use crate::simulator::{run_backtest, BacktestInput, BacktestOutput, ExecutionTiming};
use crate::util::derive_seed;

/// The four grid axes. Defaults are the standard search values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub layers: Vec<usize>,
    pub hidden: Vec<usize>,
    pub window: Vec<usize>,
    pub dropout: Vec<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            layers: vec![2, 3],
            hidden: vec![32, 64, 128],
            window: vec![11, 22, 44],
            dropout: vec![0.0, 0.5, 0.7],
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty()
            || self.hidden.is_empty()
            || self.window.is_empty()
            || self.dropout.is_empty()
        {
            return Err(Error::Config("grid axes must be non-empty".into()));
        }
        Ok(())
    }
}

/// Enumerates the cartesian product in lexicographic order over
/// (layers, hidden, window, dropout), each axis sorted ascending. Every
/// config gets a seed derived from the base seed and its own axes.
pub fn enumerate(spec: &GridSpec, base: &NetworkConfig) -> Result<Vec<NetworkConfig>> {
    spec.validate()?;
    let mut layers = spec.layers.clone();
    let mut hidden = spec.hidden.clone();
    let mut window = spec.window.clone();
    let mut dropout = spec.dropout.clone();
    layers.sort_unstable();
    layers.dedup();
    hidden.sort_unstable();
    hidden.dedup();
    window.sort_unstable();
    window.dedup();
    dropout.sort_by(|a, b| a.partial_cmp(b).expect("finite dropout"));
    dropout.dedup();

    let mut out = Vec::with_capacity(layers.len() * hidden.len() * window.len() * dropout.len());
    for &l in &layers {
        for &h in &hidden {
            for &t in &window {
                for &p in &dropout {
                    let label = format!("layers={l} hidden={h} window={t} dropout={p}");
                    let config = NetworkConfig {
                        num_layers: l,
                        hidden_size: h,
                        window: t,
                        dropout: p,
                        seed: derive_seed(base.seed, &label),
                        ..base.clone()
                    };
                    config.validate()?;
                    out.push(config);
                }
            }
        }
    }
    Ok(out)
}

/// Cutoffs, per-bin sums and the return history produced by the
/// policy-build phase.
#[derive(Debug)]
pub struct SeededPolicy {
    pub cutoffs: CutoffSet,
    pub stats: BinStats,
    /// Every predicted return of the build phase, in order.
    pub return_history: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Derives the initial allocation policy from the policy-build
/// predictions: cutoffs from the whole phase's return distribution, and
/// per-bin price-difference sums from replaying the trading strategy over
/// the phase with every non-sell bin treated as a buy.
pub fn seed_policy(
    records: &[PredictionRecord],
    config: &PolicyConfig,
) -> Result<SeededPolicy> {
    let returns: Vec<f64> = records.iter().map(|r| r.r_hat).collect();
    let cutoffs = compute_cutoffs(&returns, config)?;
    let mut warnings = Vec::new();
    if cutoffs.merged {
        warnings.push("tied cutoffs in the build-phase distribution merged bins".into());
    }

    let mut stats = BinStats::new(cutoffs.bin_count());
    let mut open: Option<(usize, f64)> = None; // (entry bin, entry price)
    for record in records {
        let bin = crate::policy::classify(record.r_hat, &cutoffs);
        if bin == 1 {
            if let Some((entry_bin, entry_price)) = open.take() {
                record_trade_outcome(&mut stats, entry_bin, entry_price, record.y_t, config.epsilon)?;
            }
        } else if open.is_none() {
            open = Some((bin, record.y_t));
        }
    }
    // a cycle still open at the phase boundary contributes nothing

    Ok(SeededPolicy {
        cutoffs,
        stats,
        return_history: returns,
        warnings,
    })
}

/// Everything the two-phase in-sample pipeline produces.
#[derive(Debug)]
pub struct InSampleOutcome {
    pub build_records: Vec<PredictionRecord>,
    pub select_records: Vec<PredictionRecord>,
    pub params: crate::lstm::NetworkParams,
    pub select_backtest: BacktestOutput,
    /// Cumulative return over the hyper-select phase.
    pub cr: f64,
    pub warnings: Vec<String>,
}

/// Runs phase 1 (policy build) and phase 2 (hyper-select backtest with the
/// policy evolving daily) for one network configuration.
pub fn run_in_sample(
    frame: &FeatureFrame,
    signal_series: &PriceSeries,
    traded_series: Option<&PriceSeries>,
    config: &NetworkConfig,
    split: &PeriodSplit,
    policy_config: &PolicyConfig,
    capital: f64,
    timing: ExecutionTiming,
) -> Result<InSampleOutcome> {
    split.validate()?;
    let build = rolling_predict(frame, config, &split.policy_build, None)?;
    let seeded = seed_policy(&build.records, policy_config)?;
    let select = rolling_predict(frame, config, &split.hyper_select, Some(build.params))?;

    let exec_series = traded_series.unwrap_or(signal_series);
    let select_days = exec_series.indices_in(&split.hyper_select);
    if select_days.is_empty() {
        return Err(Error::InsufficientData(
            "no trading days in the hyper-select period".into(),
        ));
    }
    let start_price = exec_series.bars[select_days[0]].adj_close;
    let a_max = crate::policy::compute_a_max(capital, start_price)?;
    let mut warnings: Vec<String> = Vec::new();
    if a_max == 0 {
        warnings.push(format!(
            "capital {capital} cannot buy one unit at {start_price}; allocations are zero"
        ));
    }
    let run_policy_config = PolicyConfig {
        a_max: a_max.max(1),
        ..policy_config.clone()
    };
    let allocations = optimal_allocations(&seeded.stats, &run_policy_config);
    let policy = AllocationPolicy::new(
        seeded.cutoffs,
        allocations,
        seeded.stats,
        // the growing cutoff window stretches back to the build start
        seeded.return_history,
    )?;

    let select_backtest = run_backtest(BacktestInput {
        signal_series,
        traded_series,
        predictions: &select.records,
        range: split.hyper_select,
        policy,
        policy_config: run_policy_config,
        initial_cash: capital,
        timing,
        record_snapshots: false,
    })?;
    let cr = select_backtest.equity.last().expect("non-empty").equity / capital - 1.0;

    warnings.extend(seeded.warnings);
    warnings.extend(
        build
            .skipped
            .iter()
            .chain(select.skipped.iter())
            .map(|(d, why)| format!("{d}: {why}")),
    );
    warnings.extend(select_backtest.warnings.clone());

    Ok(InSampleOutcome {
        build_records: build.records,
        select_records: select.records,
        params: select.params,
        select_backtest,
        cr,
        warnings,
    })
}

/// One grid cell's outcome. `runtime_secs` is informational and excluded
/// from equality (parallel and serial runs must otherwise agree exactly).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridResult {
    pub config: NetworkConfig,
    pub fingerprint: String,
    pub seed: u64,
    /// Hyper-select cumulative return; absent when the run failed.
    pub cr: Option<f64>,
    pub error_metrics: Option<ErrorMetrics>,
    pub trade_count: Option<usize>,
    pub failure: Option<String>,
    pub runtime_secs: f64,
}

impl PartialEq for GridResult {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config
            && self.fingerprint == other.fingerprint
            && self.seed == other.seed
            && self.cr == other.cr
            && self.error_metrics == other.error_metrics
            && self.trade_count == other.trade_count
            && self.failure == other.failure
    }
}

/// Evaluates one configuration, converting failures into a failed result
/// instead of aborting the whole search.
pub fn evaluate_config(
    frame: &FeatureFrame,
    signal_series: &PriceSeries,
    traded_series: Option<&PriceSeries>,
    config: &NetworkConfig,
    split: &PeriodSplit,
    policy_config: &PolicyConfig,
    capital: f64,
    timing: ExecutionTiming,
) -> GridResult {
    let started = std::time::Instant::now();
    let fingerprint = config.fingerprint();
    match run_in_sample(
        frame,
        signal_series,
        traded_series,
        config,
        split,
        policy_config,
        capital,
        timing,
    ) {
        Ok(outcome) => GridResult {
            config: config.clone(),
            fingerprint,
            seed: config.seed,
            cr: Some(outcome.cr),
            error_metrics: crate::analytics::error_metrics(&outcome.select_records).ok(),
            trade_count: Some(outcome.select_backtest.trades.len()),
            failure: None,
            runtime_secs: started.elapsed().as_secs_f64(),
        },
        Err(e) => GridResult {
            config: config.clone(),
            fingerprint,
            seed: config.seed,
            cr: None,
            error_metrics: None,
            trade_count: None,
            failure: Some(e.to_string()),
            runtime_secs: started.elapsed().as_secs_f64(),
        },
    }
}

/// Grid execution settings.
pub struct GridRun<'a> {
    pub frame: &'a FeatureFrame,
    pub signal_series: &'a PriceSeries,
    pub traded_series: Option<&'a PriceSeries>,
    pub split: &'a PeriodSplit,
    pub policy_config: &'a PolicyConfig,
    pub capital: f64,
    pub timing: ExecutionTiming,
    pub workers: usize,
    /// Progress manifest (JSON lines keyed by config fingerprint);
    /// existing entries are reused on resume.
    pub progress_path: Option<&'a Path>,
}

/// Runs every configuration (resuming from the manifest when present) and
/// returns results in enumeration order regardless of worker count.
pub fn run_grid(configs: &[NetworkConfig], run: &GridRun<'_>) -> Result<Vec<GridResult>> {
    let mut done: std::collections::HashMap<String, GridResult> = std::collections::HashMap::new();
    if let Some(path) = run.progress_path {
        if path.exists() {
            let body = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            for line in body.lines().filter(|l| !l.trim().is_empty()) {
                let result: GridResult = serde_json::from_str(line).map_err(|e| {
                    Error::Config(format!("corrupt progress manifest {}: {e}", path.display()))
                })?;
                done.insert(result.fingerprint.clone(), result);
            }
        }
    }

    let pending: Vec<&NetworkConfig> = configs
        .iter()
        .filter(|c| !done.contains_key(&c.fingerprint()))
        .collect();

    let progress_file = match run.progress_path {
        Some(path) => {
            if let Some(dir) = path.parent() {
                std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
            let file = std::fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .map_err(|e| Error::io(path, e))?;
            Some(Mutex::new(file))
        }
        None => None,
    };

    let evaluate = |config: &NetworkConfig| -> Result<GridResult> {
        let result = evaluate_config(
            run.frame,
            run.signal_series,
            run.traded_series,
            config,
            run.split,
            run.policy_config,
            run.capital,
            run.timing,
        );
        if let Some(file) = &progress_file {
            let line = serde_json::to_string(&result)
                .map_err(|e| Error::Config(format!("progress serialization: {e}")))?;
            let mut guard = file.lock().expect("progress file lock");
            writeln!(guard, "{line}").map_err(|e| {
                Error::io(run.progress_path.expect("progress path exists"), e)
            })?;
        }
        Ok(result)
    };

    let fresh: Vec<GridResult> = if run.workers <= 1 {
        let mut out = Vec::with_capacity(pending.len());
        for config in &pending {
            out.push(evaluate(config)?);
        }
        out
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(run.workers)
            .build()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
        pool.install(|| {
            use rayon::prelude::*;
            pending
                .par_iter()
                .map(|config| evaluate(config))
                .collect::<Result<Vec<GridResult>>>()
        })?
    };
    for result in fresh {
        done.insert(result.fingerprint.clone(), result);
    }

    configs
        .iter()
        .map(|c| {
            done.remove(&c.fingerprint()).ok_or_else(|| {
                Error::Config(format!("missing grid result for {}", c.fingerprint()))
            })
        })
        .collect()
}

/// Picks the most profitable configuration: highest hyper-select CR, ties
/// broken by smaller parameter count, then lexicographic axis order.
pub fn select_best(results: &[GridResult]) -> Result<&GridResult> {
    results
        .iter()
        .filter(|r| r.cr.is_some())
        .min_by(|a, b| {
            let cr_a = a.cr.expect("filtered");
            let cr_b = b.cr.expect("filtered");
            // descending CR, ascending size, ascending axes
            cr_b.partial_cmp(&cr_a)
                .expect("finite cr")
                .then(a.config.param_count().cmp(&b.config.param_count()))
                .then_with(|| {
                    let key = |c: &NetworkConfig| {
                        (c.num_layers, c.hidden_size, c.window)
                    };
                    key(&a.config).cmp(&key(&b.config)).then(
                        a.config
                            .dropout
                            .partial_cmp(&b.config.dropout)
                            .expect("finite dropout"),
                    )
                })
        })
        .ok_or_else(|| Error::Estimation("every grid configuration failed".into()))
}

const RESULTS_HEADER: &str =
    "fingerprint,layers,hidden,window,dropout,seed,cr,mda,mape_pct,mae,mse,trades,failure";

/// Results table, one row per configuration in enumeration order.
/// Runtimes are deliberately omitted so reruns are byte-identical.
pub fn results_to_csv(results: &[GridResult], fingerprint: Option<&str>) -> String {
    let mut out = String::new();
    if let Some(fp) = fingerprint {
        out.push_str(&format!("# config {fp}\n"));
    }
    out.push_str(RESULTS_HEADER);
    out.push('\n');
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in results {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.fingerprint,
            r.config.num_layers,
            r.config.hidden_size,
            r.config.window,
            r.config.dropout,
            r.seed,
            opt(r.cr),
            opt(r.error_metrics.as_ref().map(|m| m.mda)),
            opt(r.error_metrics.as_ref().map(|m| m.mape_pct)),
            opt(r.error_metrics.as_ref().map(|m| m.mae)),
            opt(r.error_metrics.as_ref().map(|m| m.mse)),
            r.trade_count.map(|t| t.to_string()).unwrap_or_default(),
            r.failure.clone().map(|f| f.replace(',', ";")).unwrap_or_default(),
        ));
    }
    out
}
