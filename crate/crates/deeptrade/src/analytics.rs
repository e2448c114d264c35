//! Forecast-accuracy metrics, profitability/risk metrics, the
//! Pesaran-Timmermann and Diebold-Mariano tests, and report assembly.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::predictor::PredictionRecord;
use crate::simulator::{EquityPoint, ExecutionTiming};

/// Nominal trading days per calendar year.
pub const TRADING_DAYS_PER_YEAR: f64 = 252.0;

fn std_normal_cdf(x: f64) -> f64 {
    Normal::new(0.0, 1.0).expect("valid normal").cdf(x)
}

/// Forecast-accuracy metrics over a prediction stream.
///
/// `r2_paper` is the correlation-coefficient form (the cross-moment ratio
/// of realized and predicted prices), not the coefficient of
/// determination; it is reported under this name to avoid conflation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorMetrics {
    /// Fraction of days where predicted and realized direction agree
    /// (strictly positive product; flat days count as misses).
    pub mda: f64,
    /// Mean absolute percentage error, in percent.
    pub mape_pct: f64,
    pub mae: f64,
    pub mse: f64,
    pub r2_paper: Option<f64>,
    /// Number of (prediction, realized) pairs evaluated.
    pub n: usize,
}

/// Computes MDA/MAPE/MAE/MSE/R2 over records with a realized next price.
pub fn error_metrics(records: &[PredictionRecord]) -> Result<ErrorMetrics> {
    let pairs: Vec<(&PredictionRecord, f64)> = records
        .iter()
        .filter_map(|r| r.y_next.map(|y| (r, y)))
        .collect();
    if pairs.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} realized prediction pairs; need at least 2",
            pairs.len()
        )));
    }
    let n = pairs.len() as f64;

    let mut hits = 0usize;
    let mut abs_sum = 0.0;
    let mut sq_sum = 0.0;
    let mut pct_sum = 0.0;
    for (r, y_next) in &pairs {
        let err = y_next - r.y_hat_next;
        abs_sum += err.abs();
        sq_sum += err * err;
        pct_sum += err.abs() / y_next;
        if (r.y_hat_next - r.y_t) * (y_next - r.y_t) > 0.0 {
            hits += 1;
        }
    }

    // Pearson correlation between realized and predicted price sequences.
    let mean_y = pairs.iter().map(|(_, y)| *y).sum::<f64>() / n;
    let mean_hat = pairs.iter().map(|(r, _)| r.y_hat_next).sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_y = 0.0;
    let mut var_hat = 0.0;
    for (r, y_next) in &pairs {
        let dy = y_next - mean_y;
        let dh = r.y_hat_next - mean_hat;
        cov += dy * dh;
        var_y += dy * dy;
        var_hat += dh * dh;
    }
    let r2_paper = if var_y > 0.0 && var_hat > 0.0 {
        Some(cov / (var_y.sqrt() * var_hat.sqrt()))
    } else {
        None
    };

    Ok(ErrorMetrics {
        mda: hits as f64 / n,
        mape_pct: 100.0 * pct_sum / n,
        mae: abs_sum / n,
        mse: sq_sum / n,
        r2_paper,
        n: pairs.len(),
    })
}

/// Profitability and risk metrics of an equity curve. Ratios are fractions
/// (0.10 = 10%); `dd` is non-positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnMetrics {
    /// Cumulative return: product of gross daily returns minus one.
    pub cr: f64,
    /// Annualized (geometric per-year) return implied by `cr`.
    pub ar: f64,
    /// Annualized volatility: stdev of daily returns times sqrt(252).
    pub av: f64,
    /// Sharpe ratio (AR - risk-free)/AV; absent when volatility is zero.
    pub sr: Option<f64>,
    /// Largest peak-to-trough decline (non-positive).
    pub dd: f64,
    /// Number of daily returns the curve contains.
    pub n_returns: usize,
}

/// Geometric annualization of a cumulative return over `n_returns` days.
pub fn annualized_return(cr: f64, n_returns: usize, periods_per_year: f64) -> f64 {
    (1.0 + cr).powf(periods_per_year / n_returns as f64) - 1.0
}

/// Arithmetic mean of the curve's daily returns (not a capital-growth
/// measure; reported for contrast with `cr`).
pub fn arithmetic_mean_return(equity: &[EquityPoint]) -> f64 {
    let returns: Vec<f64> = equity
        .windows(2)
        .map(|w| w[1].equity / w[0].equity - 1.0)
        .collect();
    returns.iter().sum::<f64>() / returns.len() as f64
}

pub fn return_metrics(
    equity: &[EquityPoint],
    periods_per_year: f64,
    risk_free: f64,
) -> Result<ReturnMetrics> {
    if equity.len() < 2 {
        return Err(Error::InsufficientData(
            "equity curve needs at least 2 points".into(),
        ));
    }
    if equity.iter().any(|p| !(p.equity.is_finite() && p.equity > 0.0)) {
        return Err(Error::NonFinite("equity curve".into()));
    }

    let returns: Vec<f64> = equity
        .windows(2)
        .map(|w| w[1].equity / w[0].equity - 1.0)
        .collect();
    let n = returns.len();
    let cr = equity.last().unwrap().equity / equity[0].equity - 1.0;
    let ar = annualized_return(cr, n, periods_per_year);

    let mean = returns.iter().sum::<f64>() / n as f64;
    let av = if n >= 2 {
        let var = returns.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (n - 1) as f64;
        var.sqrt() * periods_per_year.sqrt()
    } else {
        0.0
    };
    let sr = if av > 0.0 {
        Some((ar - risk_free) / av)
    } else {
        None
    };

    let mut peak = equity[0].equity;
    let mut dd = 0.0f64;
    for p in &equity[1..] {
        peak = peak.max(p.equity);
        dd = dd.min(p.equity / peak - 1.0);
    }

    Ok(ReturnMetrics {
        cr,
        ar,
        av,
        sr,
        dd,
        n_returns: n,
    })
}

/// Result of a statistical test; `Undefined` carries the reason the
/// statistic does not exist for these inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TestOutcome {
    Computed { statistic: f64, p_value: f64 },
    Undefined { reason: String },
}

impl TestOutcome {
    pub fn statistic(&self) -> Option<f64> {
        match self {
            TestOutcome::Computed { statistic, .. } => Some(*statistic),
            TestOutcome::Undefined { .. } => None,
        }
    }

    pub fn p_value(&self) -> Option<f64> {
        match self {
            TestOutcome::Computed { p_value, .. } => Some(*p_value),
            TestOutcome::Undefined { .. } => None,
        }
    }
}

/// Pesaran-Timmermann test of directional predictive independence.
///
/// Directions are "up" when the change is strictly positive. The one-sided
/// p-value comes from the standard normal upper tail: small p means the
/// forecasts track realized direction better than independence allows.
pub fn pesaran_timmermann(records: &[PredictionRecord]) -> Result<TestOutcome> {
    let pairs: Vec<(bool, bool)> = records
        .iter()
        .filter_map(|r| {
            r.y_next
                .map(|y_next| (r.y_hat_next - r.y_t > 0.0, y_next - r.y_t > 0.0))
        })
        .collect();
    let n = pairs.len();
    if n < 30 {
        return Err(Error::InsufficientData(format!(
            "{n} direction pairs; need at least 30"
        )));
    }
    let nf = n as f64;
    let p_pred = pairs.iter().filter(|(pred, _)| *pred).count() as f64 / nf;
    let p_real = pairs.iter().filter(|(_, real)| *real).count() as f64 / nf;
    if p_pred <= 0.0 || p_pred >= 1.0 || p_real <= 0.0 || p_real >= 1.0 {
        return Ok(TestOutcome::Undefined {
            reason: "degenerate direction marginals (all up or all down)".into(),
        });
    }

    let p_hit = pairs.iter().filter(|(pred, real)| pred == real).count() as f64 / nf;
    let p_star = p_real * p_pred + (1.0 - p_real) * (1.0 - p_pred);
    let var_hit = p_star * (1.0 - p_star) / nf;
    let var_star = (2.0 * p_real - 1.0).powi(2) * p_pred * (1.0 - p_pred) / nf
        + (2.0 * p_pred - 1.0).powi(2) * p_real * (1.0 - p_real) / nf
        + 4.0 * p_real * p_pred * (1.0 - p_real) * (1.0 - p_pred) / (nf * nf);
    let var_diff = var_hit - var_star;
    if var_diff <= 0.0 {
        return Ok(TestOutcome::Undefined {
            reason: "non-positive variance difference".into(),
        });
    }
    let statistic = (p_hit - p_star) / var_diff.sqrt();
    Ok(TestOutcome::Computed {
        statistic,
        p_value: 1.0 - std_normal_cdf(statistic),
    })
}

/// Loss function for forecast-error comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossFunction {
    SquaredError,
    AbsoluteError,
}

impl LossFunction {
    fn apply(&self, error: f64) -> f64 {
        match self {
            LossFunction::SquaredError => error * error,
            LossFunction::AbsoluteError => error.abs(),
        }
    }
}

/// Diebold-Mariano test on one-step forecasts (lag-0 variance).
///
/// The loss differential is L(a) - L(b); the one-sided p-value is the
/// lower normal tail, so a small p rejects "b is at least as accurate as
/// a" in favor of a.
pub fn diebold_mariano(
    pred_a: &[PredictionRecord],
    pred_b: &[PredictionRecord],
    loss: LossFunction,
) -> Result<TestOutcome> {
    let by_date: std::collections::HashMap<NaiveDate, &PredictionRecord> =
        pred_b.iter().map(|r| (r.date, r)).collect();
    let mut diffs = Vec::new();
    for a in pred_a {
        let (Some(b), Some(y_a)) = (by_date.get(&a.date), a.y_next) else {
            continue;
        };
        let Some(y_b) = b.y_next else { continue };
        if (y_a - y_b).abs() > 1e-9 * y_a.abs().max(1.0) {
            return Err(Error::DateMisalignment(format!(
                "realized values disagree on {}: {} vs {}",
                a.date, y_a, y_b
            )));
        }
        let e_a = y_a - a.y_hat_next;
        let e_b = y_b - b.y_hat_next;
        diffs.push(loss.apply(e_a) - loss.apply(e_b));
    }
    let n = diffs.len();
    if n < 30 {
        return Err(Error::InsufficientData(format!(
            "{n} aligned forecast pairs; need at least 30"
        )));
    }
    let nf = n as f64;
    let mean = diffs.iter().sum::<f64>() / nf;
    let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / nf;
    if var == 0.0 {
        return Ok(TestOutcome::Undefined {
            reason: "indistinguishable forecasts (zero loss-differential variance)".into(),
        });
    }
    let statistic = mean / (var / nf).sqrt();
    Ok(TestOutcome::Computed {
        statistic,
        p_value: std_normal_cdf(statistic),
    })
}

/// The full per-run scorecard, serialized as JSON and printable as an
/// aligned table. Ratio metrics are stored in percent, mirroring how the
/// summary tables are conventionally read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceReport {
    pub strategy: String,
    pub config_fingerprint: String,
    pub seed: u64,
    pub period_start: NaiveDate,
    pub period_end: NaiveDate,
    pub execution_timing: ExecutionTiming,
    pub initial_capital: f64,
    pub final_equity: f64,
    pub trade_count: usize,
    pub n_days: usize,

    pub cr_pct: f64,
    pub ar_pct: f64,
    pub av_pct: f64,
    pub sr: Option<f64>,
    pub dd_pct: f64,

    pub mda: Option<f64>,
    pub mape_pct: Option<f64>,
    pub mae: Option<f64>,
    pub mse: Option<f64>,
    pub r2_paper: Option<f64>,

    pub pt: Option<TestOutcome>,
    pub dm_vs_baseline: Option<TestOutcome>,

    /// Path of the prediction stream backing this report, when one exists;
    /// lets report comparison re-run forecast tests.
    pub predictions_csv: Option<String>,
    pub warnings: Vec<String>,
}

impl PerformanceReport {
    pub fn build(
        strategy: &str,
        config_fingerprint: &str,
        seed: u64,
        timing: ExecutionTiming,
        initial_capital: f64,
        equity: &[EquityPoint],
        trade_count: usize,
        errors: Option<&ErrorMetrics>,
        pt: Option<TestOutcome>,
        warnings: Vec<String>,
    ) -> Result<PerformanceReport> {
        let returns = return_metrics(equity, TRADING_DAYS_PER_YEAR, 0.0)?;
        Ok(PerformanceReport {
            strategy: strategy.to_string(),
            config_fingerprint: config_fingerprint.to_string(),
            seed,
            period_start: equity[0].date,
            period_end: equity.last().unwrap().date,
            execution_timing: timing,
            initial_capital,
            final_equity: equity.last().unwrap().equity,
            trade_count,
            n_days: returns.n_returns,
            cr_pct: returns.cr * 100.0,
            ar_pct: returns.ar * 100.0,
            av_pct: returns.av * 100.0,
            sr: returns.sr,
            dd_pct: returns.dd * 100.0,
            mda: errors.map(|e| e.mda),
            mape_pct: errors.map(|e| e.mape_pct),
            mae: errors.map(|e| e.mae),
            mse: errors.map(|e| e.mse),
            r2_paper: errors.and_then(|e| e.r2_paper),
            pt,
            dm_vs_baseline: None,
            predictions_csv: None,
            warnings,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Config(format!("report json: {e}")))
    }

    pub fn from_json(body: &str) -> Result<PerformanceReport> {
        serde_json::from_str(body).map_err(|e| Error::Config(format!("report json: {e}")))
    }
}

fn fmt_opt(v: Option<f64>, width: usize, precision: usize) -> String {
    match v {
        Some(v) => format!("{v:>width$.precision$}"),
        None => format!("{:>width$}", "-"),
    }
}

/// Aligned plain-text table over one or more reports: one row per
/// strategy, profitability and risk columns.
pub fn report_table(reports: &[&PerformanceReport]) -> String {
    let mut out = String::new();
    let name_width = reports
        .iter()
        .map(|r| r.strategy.len())
        .chain(std::iter::once("Strategy".len()))
        .max()
        .unwrap_or(8)
        + 2;
    out.push_str(&format!(
        "{:<name_width$} {:>9} {:>9} {:>9} {:>7} {:>9} {:>7}\n",
        "Strategy", "CR %", "AR %", "AV %", "SR", "DD %", "Trades"
    ));
    for r in reports {
        out.push_str(&format!(
            "{:<name_width$} {:>9.2} {:>9.2} {:>9.2} {} {:>9.2} {:>7}\n",
            r.strategy,
            r.cr_pct,
            r.ar_pct,
            r.av_pct,
            fmt_opt(r.sr, 7, 2),
            r.dd_pct,
            r.trade_count
        ));
    }
    out
}

/// Error-metric comparison table (one row per report that carries them).
pub fn error_table(reports: &[&PerformanceReport]) -> String {
    let mut out = String::new();
    let name_width = reports
        .iter()
        .map(|r| r.strategy.len())
        .chain(std::iter::once("Strategy".len()))
        .max()
        .unwrap_or(8)
        + 2;
    out.push_str(&format!(
        "{:<name_width$} {:>8} {:>9} {:>11} {:>13} {:>9}\n",
        "Strategy", "MDA %", "MAPE %", "MAE", "MSE", "R2 %"
    ));
    for r in reports {
        out.push_str(&format!(
            "{:<name_width$} {} {} {} {} {}\n",
            r.strategy,
            fmt_opt(r.mda.map(|v| v * 100.0), 8, 2),
            fmt_opt(r.mape_pct, 9, 3),
            fmt_opt(r.mae, 11, 4),
            fmt_opt(r.mse, 13, 3),
            fmt_opt(r.r2_paper.map(|v| v * 100.0), 9, 2),
        ));
    }
    out
}
