//! Rolling train-then-predict protocol: each trading day the network is
//! trained on the most recent T-day window, then asked for the next day's
//! price.

use std::path::Path;

use chrono::NaiveDate;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lstm::{self, NetworkConfig, NetworkParams};
use crate::market_data::{DateRange, FeatureFrame, PriceSeries, WindowMode};
use crate::util::derive_seed;

/// One day of the prediction stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub date: NaiveDate,
    /// Adjusted close on the signal day.
    pub y_t: f64,
    /// Predicted next-day adjusted close.
    pub y_hat_next: f64,
    /// Realized next-day adjusted close (absent on the final day).
    pub y_next: Option<f64>,
    /// Predicted return `y_hat_next / y_t - 1`.
    pub r_hat: f64,
}

/// Output of a rolling run: the record stream, the final weights (for
/// warm-starting a later range) and any skipped days.
#[derive(Debug)]
pub struct RollingOutcome {
    pub records: Vec<PredictionRecord>,
    pub params: NetworkParams,
    /// Days whose training diverged, with the failure description.
    pub skipped: Vec<(NaiveDate, String)>,
}

/// Runs the day-by-day protocol over `range`.
///
/// For each day t in the range the network trains on inputs
/// `x_{t-T}..x_{t-1}` against targets `y_{t-T+1}..y_t`, then predicts on
/// `x_{t-T+1}..x_t`; the last output is the next-day prediction. Weights
/// carry forward across days (or re-initialize per day when `warm_start`
/// is off). Per-day RNG streams derive from the seed and the date, so a
/// run can resume mid-range from a checkpoint bit-exactly.
pub fn rolling_predict(
    frame: &FeatureFrame,
    config: &NetworkConfig,
    range: &DateRange,
    params_in: Option<NetworkParams>,
) -> Result<RollingOutcome> {
    config.validate()?;
    let day_indices = frame.indices_in(range);
    if day_indices.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no trading days in {} .. {}",
            range.start, range.end
        )));
    }
    if day_indices[0] < config.window {
        return Err(Error::InsufficientHistory(format!(
            "first day {} needs {} days of history, have {}",
            frame.day(day_indices[0]).date,
            config.window,
            day_indices[0]
        )));
    }

    let mut params = match params_in {
        Some(p) => {
            if p.config != *config {
                return Err(Error::Config(
                    "carried-in parameters were built for a different network config".into(),
                ));
            }
            p
        }
        None => lstm::init_glorot(config, config.seed)?,
    };

    let mut records = Vec::with_capacity(day_indices.len());
    let mut skipped = Vec::new();

    for &t in &day_indices {
        let day = frame.day(t);
        let day_seed = derive_seed(config.seed, &day.date.to_string());
        let mut rng = ChaCha8Rng::seed_from_u64(day_seed);

        if !config.warm_start {
            params = lstm::init_glorot(config, day_seed)?;
        }

        let train_window =
            crate::market_data::make_window(frame, t, config.window, WindowMode::Train)?;
        match lstm::train_on_window(&mut params, &train_window, &mut rng) {
            Ok(_) => {}
            Err(Error::Divergence {
                last_finite_iteration,
            }) => {
                skipped.push((
                    day.date,
                    format!("training diverged at iteration {last_finite_iteration}"),
                ));
                continue;
            }
            Err(e) => return Err(e),
        }

        let predict_window =
            crate::market_data::make_window(frame, t, config.window, WindowMode::Predict)?;
        let outputs = match lstm::predict_window(&params, &predict_window) {
            Ok(o) => o,
            Err(Error::NonFinite(what)) => {
                skipped.push((day.date, format!("non-finite prediction ({what})")));
                continue;
            }
            Err(e) => return Err(e),
        };
        let y_hat_next = *outputs.last().expect("window is non-empty");
        let y_next = if t + 1 < frame.len() {
            Some(frame.day(t + 1).adj_close)
        } else {
            None
        };
        records.push(PredictionRecord {
            date: day.date,
            y_t: day.adj_close,
            y_hat_next,
            y_next,
            r_hat: y_hat_next / day.adj_close - 1.0,
        });
    }

    Ok(RollingOutcome {
        records,
        params,
        skipped,
    })
}

/// The model that "predicts" tomorrow's price to equal today's.
pub fn naive_persistence(series: &PriceSeries, range: &DateRange) -> Result<Vec<PredictionRecord>> {
    let indices = series.indices_in(range);
    if indices.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no trading days in {} .. {}",
            range.start, range.end
        )));
    }
    Ok(indices
        .iter()
        .map(|&i| {
            let bar = &series.bars[i];
            PredictionRecord {
                date: bar.date,
                y_t: bar.adj_close,
                y_hat_next: bar.adj_close,
                y_next: series.bars.get(i + 1).map(|b| b.adj_close),
                r_hat: 0.0,
            }
        })
        .collect())
}

const CSV_HEADER: &str = "date,y_t,y_hat_next,y_next,r_hat";

/// Serializes a record stream as `date,y_t,y_hat_next,y_next,r_hat`
/// (empty `y_next` on the final day). A fingerprint, when given, goes into
/// a leading `#` comment so downstream tools can trace provenance.
pub fn records_to_csv(records: &[PredictionRecord], fingerprint: Option<&str>) -> String {
    let mut out = String::new();
    if let Some(fp) = fingerprint {
        out.push_str(&format!("# config {fp}\n"));
    }
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        let y_next = r.y_next.map(|v| v.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.date, r.y_t, r.y_hat_next, y_next, r.r_hat
        ));
    }
    out
}

pub fn write_records_csv(
    records: &[PredictionRecord],
    path: &Path,
    fingerprint: Option<&str>,
) -> Result<()> {
    crate::util::write_atomic(path, records_to_csv(records, fingerprint).as_bytes())
}

pub fn read_records_csv(path: &Path) -> Result<Vec<PredictionRecord>> {
    let body = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let path_str = path.display().to_string();
    let mut records = Vec::new();
    let mut saw_header = false;
    for (idx, line) in body.lines().enumerate() {
        let line_no = idx + 1;
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        if !saw_header {
            if line != CSV_HEADER {
                return Err(Error::ParseRow {
                    path: path_str,
                    line: line_no,
                    reason: format!("expected header {CSV_HEADER:?}"),
                });
            }
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::ParseRow {
                path: path_str,
                line: line_no,
                reason: "expected 5 fields".into(),
            });
        }
        let parse_f = |s: &str, what: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|_| Error::ParseRow {
                path: path.display().to_string(),
                line: line_no,
                reason: format!("bad {what} {s:?}"),
            })
        };
        records.push(PredictionRecord {
            date: NaiveDate::parse_from_str(fields[0], "%Y-%m-%d").map_err(|_| {
                Error::ParseRow {
                    path: path.display().to_string(),
                    line: line_no,
                    reason: format!("bad date {:?}", fields[0]),
                }
            })?,
            y_t: parse_f(fields[1], "y_t")?,
            y_hat_next: parse_f(fields[2], "y_hat_next")?,
            y_next: if fields[3].is_empty() {
                None
            } else {
                Some(parse_f(fields[3], "y_next")?)
            },
            r_hat: parse_f(fields[4], "r_hat")?,
        });
    }
    if !saw_header {
        return Err(Error::NoData { path: path_str });
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_data::{build_features, Bar, PriceSeries};

    fn series_from(prices: &[f64]) -> PriceSeries {
        let bars: Vec<Bar> = prices
            .iter()
            .enumerate()
            .map(|(i, &p)| Bar {
                date: NaiveDate::from_ymd_opt(2020, 1, 1).unwrap() + chrono::Days::new(i as u64),
                open: p,
                high: p,
                low: p,
                close: p,
                adj_close: p,
                volume: 0,
            })
            .collect();
        PriceSeries::new(bars).unwrap()
    }

    fn tiny_config() -> NetworkConfig {
        NetworkConfig {
            num_layers: 1,
            hidden_size: 6,
            window: 5,
            dropout: 0.0,
            iterations: 60,
            seed: 3,
            ..NetworkConfig::default()
        }
    }

    fn day_range(series: &PriceSeries, from: usize, to: usize) -> DateRange {
        DateRange::new(series.bars[from].date, series.bars[to].date).unwrap()
    }

    #[test]
    fn single_day_range_yields_one_consistent_record() {
        let series = series_from(&(0..30).map(|i| 100.0 + i as f64).collect::<Vec<_>>());
        let frame = build_features(&series).unwrap();
        let range = day_range(&series, 20, 20);
        let out = rolling_predict(&frame, &tiny_config(), &range, None).unwrap();
        assert_eq!(out.records.len(), 1);
        let r = &out.records[0];
        approx::assert_relative_eq!(r.r_hat, r.y_hat_next / r.y_t - 1.0, max_relative = 1e-12);
        assert_eq!(r.y_next, Some(series.bars[21].adj_close));
    }

    #[test]
    fn constant_series_prediction_converges_to_constant() {
        let series = series_from(&vec![250.0; 40]);
        let frame = build_features(&series).unwrap();
        let config = NetworkConfig {
            iterations: 500,
            ..tiny_config()
        };
        let range = day_range(&series, 30, 30);
        let out = rolling_predict(&frame, &config, &range, None).unwrap();
        let r = &out.records[0];
        assert!(
            (r.y_hat_next - 250.0).abs() / 250.0 < 0.01,
            "prediction {} strays more than 1% from 250",
            r.y_hat_next
        );
    }

    #[test]
    fn records_are_ordered_and_unique() {
        let series = series_from(
            &(0..40)
                .map(|i| 100.0 + (i as f64 * 0.7).sin())
                .collect::<Vec<_>>(),
        );
        let frame = build_features(&series).unwrap();
        let range = day_range(&series, 10, 25);
        let out = rolling_predict(&frame, &tiny_config(), &range, None).unwrap();
        assert_eq!(out.records.len(), 16);
        for pair in out.records.windows(2) {
            assert!(pair[0].date < pair[1].date);
        }
    }

    #[test]
    fn no_lookahead_truncation_check() {
        let prices: Vec<f64> = (0..40)
            .map(|i| 100.0 + 3.0 * ((i as f64) * 0.5).sin() + i as f64 * 0.2)
            .collect();
        let series = series_from(&prices);
        let frame = build_features(&series).unwrap();
        let range = day_range(&series, 10, 20);
        let full = rolling_predict(&frame, &tiny_config(), &range, None).unwrap();

        // rerun on a series truncated right after day 20
        let truncated = series_from(&prices[..22]);
        let t_frame = build_features(&truncated).unwrap();
        let t_out = rolling_predict(&t_frame, &tiny_config(), &range, None).unwrap();

        assert_eq!(full.records.len(), t_out.records.len());
        for (a, b) in full.records.iter().zip(t_out.records.iter()) {
            assert_eq!(a.date, b.date);
            assert_eq!(a.y_hat_next, b.y_hat_next, "lookahead at {}", a.date);
        }
    }

    #[test]
    fn same_seed_same_records() {
        let series = series_from(
            &(0..35)
                .map(|i| 120.0 + (i as f64 * 0.9).cos())
                .collect::<Vec<_>>(),
        );
        let frame = build_features(&series).unwrap();
        let cfg = NetworkConfig {
            dropout: 0.5,
            ..tiny_config()
        };
        let range = day_range(&series, 12, 22);
        let a = rolling_predict(&frame, &cfg, &range, None).unwrap();
        let b = rolling_predict(&frame, &cfg, &range, None).unwrap();
        assert_eq!(a.records, b.records);
    }

    #[test]
    fn naive_persistence_has_zero_predicted_returns() {
        let series = series_from(&(0..20).map(|i| 90.0 + i as f64).collect::<Vec<_>>());
        let range = day_range(&series, 5, 15);
        let records = naive_persistence(&series, &range).unwrap();
        assert_eq!(records.len(), 11);
        assert!(records.iter().all(|r| r.r_hat == 0.0));
        assert!(records.iter().all(|r| r.y_hat_next == r.y_t));
        assert_eq!(records[0].y_next, Some(series.bars[6].adj_close));
    }

    #[test]
    fn record_csv_round_trip() {
        let series = series_from(&(0..20).map(|i| 90.0 + i as f64 * 1.1).collect::<Vec<_>>());
        let range = day_range(&series, 2, 19); // last day has no y_next
        let records = naive_persistence(&series, &range).unwrap();
        assert!(records.last().unwrap().y_next.is_none());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("preds.csv");
        write_records_csv(&records, &path, Some("deadbeef")).unwrap();
        let loaded = read_records_csv(&path).unwrap();
        assert_eq!(records, loaded);
    }

    #[test]
    fn insufficient_history_is_an_error() {
        let series = series_from(&(0..10).map(|i| 100.0 + i as f64).collect::<Vec<_>>());
        let frame = build_features(&series).unwrap();
        let range = day_range(&series, 3, 5);
        let err = rolling_predict(&frame, &tiny_config(), &range, None).unwrap_err();
        assert!(matches!(err, Error::InsufficientHistory(_)));
    }
}
