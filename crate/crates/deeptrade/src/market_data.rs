//! Daily OHLC ingestion, feature vectors and rolling-window slicing.
//!
//! Trading days are exactly the rows present in the input file; there is no
//! calendar arithmetic. All prices are `f64`.

use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;
use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of input features per day: adjusted close, open, low, high, close,
/// previous adjusted close.
pub const FEATURE_COUNT: usize = 6;

/// One trading day of OHLC data plus adjusted close.
#[derive(Debug, Clone, PartialEq)]
pub struct Bar {
    pub date: NaiveDate,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
    pub adj_close: f64,
    pub volume: u64,
}

impl Bar {
    fn validate(&self) -> std::result::Result<(), String> {
        let prices = [self.open, self.high, self.low, self.close, self.adj_close];
        if prices.iter().any(|p| !p.is_finite() || *p <= 0.0) {
            return Err("non-positive or non-finite price".into());
        }
        if self.low > self.open.min(self.close) {
            return Err("low above min(open, close)".into());
        }
        if self.high < self.open.max(self.close) {
            return Err("high below max(open, close)".into());
        }
        Ok(())
    }
}

/// An ordered series of daily bars for one asset.
#[derive(Debug, Clone)]
pub struct PriceSeries {
    pub bars: Vec<Bar>,
    /// True when the input had no adjusted-close column and `close` was used.
    pub adj_close_fallback: bool,
    /// Rows dropped because a price field was empty/null.
    pub skipped_rows: usize,
}

impl PriceSeries {
    pub fn new(bars: Vec<Bar>) -> Result<Self> {
        let series = PriceSeries {
            bars,
            adj_close_fallback: false,
            skipped_rows: 0,
        };
        series.check_dates("<memory>")?;
        Ok(series)
    }

    fn check_dates(&self, path: &str) -> Result<()> {
        for pair in self.bars.windows(2) {
            if pair[1].date == pair[0].date {
                return Err(Error::DuplicateDate {
                    path: path.to_string(),
                    date: pair[0].date.to_string(),
                });
            }
            if pair[1].date < pair[0].date {
                return Err(Error::NonMonotoneDates {
                    path: path.to_string(),
                    line: 0,
                });
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.bars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bars.is_empty()
    }

    pub fn first_date(&self) -> Option<NaiveDate> {
        self.bars.first().map(|b| b.date)
    }

    pub fn last_date(&self) -> Option<NaiveDate> {
        self.bars.last().map(|b| b.date)
    }

    /// Index of the bar at `date`, if present.
    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        self.bars.binary_search_by_key(&date, |b| b.date).ok()
    }

    /// Bar indices whose dates fall inside `range` (inclusive).
    pub fn indices_in(&self, range: &DateRange) -> Vec<usize> {
        self.bars
            .iter()
            .enumerate()
            .filter(|(_, b)| range.contains(b.date))
            .map(|(i, _)| i)
            .collect()
    }
}

/// Column mapping for CSV parsing; defaults follow the
/// `Date,Open,High,Low,Close,Adj Close,Volume` header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CsvSchema {
    pub date: String,
    pub open: String,
    pub high: String,
    pub low: String,
    pub close: String,
    pub adj_close: String,
    pub volume: String,
}

impl Default for CsvSchema {
    fn default() -> Self {
        CsvSchema {
            date: "Date".into(),
            open: "Open".into(),
            high: "High".into(),
            low: "Low".into(),
            close: "Close".into(),
            adj_close: "Adj Close".into(),
            volume: "Volume".into(),
        }
    }
}

/// Parses a daily OHLC CSV file.
///
/// Rows with an empty/`null` price field are dropped (and counted). A file
/// in strictly descending date order is accepted and reversed; anything
/// else non-monotone is an error, as are duplicate dates.
pub fn parse_csv(path: &Path, schema: &CsvSchema) -> Result<PriceSeries> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_csv_reader(file, &path.display().to_string(), schema)
}

pub fn parse_csv_reader<R: Read>(reader: R, path: &str, schema: &CsvSchema) -> Result<PriceSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(reader);

    let headers = rdr
        .headers()
        .map_err(|e| Error::ParseRow {
            path: path.to_string(),
            line: 1,
            reason: e.to_string(),
        })?
        .clone();
    let col = |name: &str| -> Option<usize> { headers.iter().position(|h| h == name) };

    let date_idx = col(&schema.date).ok_or_else(|| Error::ParseRow {
        path: path.to_string(),
        line: 1,
        reason: format!("missing column {:?}", schema.date),
    })?;
    let need = |name: &String| -> Result<usize> {
        col(name).ok_or_else(|| Error::ParseRow {
            path: path.to_string(),
            line: 1,
            reason: format!("missing column {name:?}"),
        })
    };
    let open_idx = need(&schema.open)?;
    let high_idx = need(&schema.high)?;
    let low_idx = need(&schema.low)?;
    let close_idx = need(&schema.close)?;
    let volume_idx = need(&schema.volume)?;
    // Adjusted close may be absent; fall back to close with a flag.
    let adj_idx = col(&schema.adj_close);

    let mut bars = Vec::new();
    let mut skipped = 0usize;
    for (row_num, record) in rdr.records().enumerate() {
        let line = row_num + 2; // header is line 1
        let record = record.map_err(|e| Error::ParseRow {
            path: path.to_string(),
            line,
            reason: e.to_string(),
        })?;
        let field = |idx: usize| record.get(idx).unwrap_or("");

        let price_fields = {
            let mut v = vec![
                field(open_idx),
                field(high_idx),
                field(low_idx),
                field(close_idx),
            ];
            if let Some(a) = adj_idx {
                v.push(field(a));
            }
            v
        };
        if price_fields
            .iter()
            .any(|f| f.is_empty() || f.eq_ignore_ascii_case("null") || f.eq_ignore_ascii_case("nan"))
        {
            skipped += 1;
            continue;
        }

        let parse_price = |idx: usize, name: &str| -> Result<f64> {
            field(idx).parse::<f64>().map_err(|_| Error::ParseRow {
                path: path.to_string(),
                line,
                reason: format!("bad {name} {:?}", field(idx)),
            })
        };
        let date = NaiveDate::parse_from_str(field(date_idx), "%Y-%m-%d").map_err(|_| {
            Error::ParseRow {
                path: path.to_string(),
                line,
                reason: format!("bad date {:?}", field(date_idx)),
            }
        })?;
        let open = parse_price(open_idx, "open")?;
        let high = parse_price(high_idx, "high")?;
        let low = parse_price(low_idx, "low")?;
        let close = parse_price(close_idx, "close")?;
        let adj_close = match adj_idx {
            Some(idx) => parse_price(idx, "adj close")?,
            None => close,
        };
        let volume_field = field(volume_idx);
        let volume = if volume_field.is_empty() || volume_field.eq_ignore_ascii_case("null") {
            0
        } else {
            volume_field
                .parse::<f64>()
                .ok()
                .filter(|v| *v >= 0.0 && v.is_finite())
                .map(|v| v as u64)
                .ok_or_else(|| Error::ParseRow {
                    path: path.to_string(),
                    line,
                    reason: format!("bad volume {volume_field:?}"),
                })?
        };

        let bar = Bar {
            date,
            open,
            high,
            low,
            close,
            adj_close,
            volume,
        };
        bar.validate().map_err(|reason| Error::ParseRow {
            path: path.to_string(),
            line,
            reason,
        })?;
        bars.push(bar);
    }

    if bars.is_empty() {
        return Err(Error::NoData {
            path: path.to_string(),
        });
    }

    // Accept a file exported newest-first.
    if bars.len() >= 2 && bars.windows(2).all(|p| p[1].date < p[0].date) {
        bars.reverse();
    }

    let series = PriceSeries {
        bars,
        adj_close_fallback: adj_idx.is_none(),
        skipped_rows: skipped,
    };
    series.check_dates(path)?;
    Ok(series)
}

/// Writes a series back out in the standard column order.
pub fn write_csv(series: &PriceSeries, path: &Path) -> Result<()> {
    let mut out = String::from("Date,Open,High,Low,Close,Adj Close,Volume\n");
    for b in &series.bars {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            b.date, b.open, b.high, b.low, b.close, b.adj_close, b.volume
        ));
    }
    crate::util::write_atomic(path, out.as_bytes())
}

/// Length-6 feature vector for one day:
/// `[y_t, open_t, low_t, high_t, close_t, y_{t-1}]` with `y` = adjusted close.
pub type FeatureVector = [f64; FEATURE_COUNT];

/// One day that has a feature vector: the bar plus the previous adjusted
/// close. Day indices on a `FeatureFrame` start at the series' second bar.
#[derive(Debug, Clone)]
pub struct FrameDay {
    pub date: NaiveDate,
    pub features: FeatureVector,
    pub adj_close: f64,
}

/// The per-day feature vectors of a series, indexed by "day" (0 = the
/// second bar of the raw series, which is the first day with a previous
/// close available).
#[derive(Debug, Clone)]
pub struct FeatureFrame {
    days: Vec<FrameDay>,
}

impl FeatureFrame {
    pub fn len(&self) -> usize {
        self.days.len()
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }

    pub fn day(&self, idx: usize) -> &FrameDay {
        &self.days[idx]
    }

    pub fn days(&self) -> &[FrameDay] {
        &self.days
    }

    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        self.days.binary_search_by_key(&date, |d| d.date).ok()
    }

    /// Day indices within `range` (inclusive).
    pub fn indices_in(&self, range: &DateRange) -> Vec<usize> {
        self.days
            .iter()
            .enumerate()
            .filter(|(_, d)| range.contains(d.date))
            .map(|(i, _)| i)
            .collect()
    }
}

/// Builds one feature vector per day starting from the series' second day.
pub fn build_features(series: &PriceSeries) -> Result<FeatureFrame> {
    if series.len() < 2 {
        return Err(Error::InsufficientData(
            "need at least 2 bars to build features".into(),
        ));
    }
    let days = series
        .bars
        .windows(2)
        .map(|pair| {
            let prev = &pair[0];
            let bar = &pair[1];
            FrameDay {
                date: bar.date,
                features: [
                    bar.adj_close,
                    bar.open,
                    bar.low,
                    bar.high,
                    bar.close,
                    prev.adj_close,
                ],
                adj_close: bar.adj_close,
            }
        })
        .collect();
    Ok(FeatureFrame { days })
}

/// Whether a window is for training (has targets) or next-day prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowMode {
    Train,
    Predict,
}

/// A contiguous T-day slice of features, with next-day targets in train
/// mode. `scale` is the adjusted close of the last input row; windows are
/// normalized by it before training when enabled.
#[derive(Debug, Clone)]
pub struct WindowSample {
    /// T×I inputs, one row per day.
    pub inputs: Array2<f64>,
    /// Length-T next-day targets (train mode only).
    pub targets: Option<Array1<f64>>,
    /// Adjusted close of the last input row.
    pub scale: f64,
    pub mode: WindowMode,
}

/// Slices the window ending at day `t`.
///
/// Train mode: inputs are days `t-T .. t-1` and targets the adjusted closes
/// of days `t-T+1 .. t` (shift-by-one alignment). Predict mode: inputs are
/// days `t-T+1 .. t`.
pub fn make_window(frame: &FeatureFrame, t: usize, window: usize, mode: WindowMode) -> Result<WindowSample> {
    if window == 0 {
        return Err(Error::Config("window length must be positive".into()));
    }
    if t >= frame.len() {
        return Err(Error::InsufficientHistory(format!(
            "day index {t} outside frame of {} days",
            frame.len()
        )));
    }
    let start = match mode {
        WindowMode::Train => {
            if t < window {
                return Err(Error::InsufficientHistory(format!(
                    "train window at day {t} needs day {}",
                    t as i64 - window as i64
                )));
            }
            t - window
        }
        WindowMode::Predict => {
            if t + 1 < window {
                return Err(Error::InsufficientHistory(format!(
                    "predict window at day {t} needs day {}",
                    t as i64 + 1 - window as i64
                )));
            }
            t + 1 - window
        }
    };

    let mut inputs = Array2::zeros((window, FEATURE_COUNT));
    for (row, day) in frame.days[start..start + window].iter().enumerate() {
        for (col, v) in day.features.iter().enumerate() {
            inputs[[row, col]] = *v;
        }
    }
    let scale = frame.days[start + window - 1].adj_close;

    let targets = match mode {
        WindowMode::Train => {
            let t_vals: Vec<f64> = frame.days[start + 1..start + window + 1]
                .iter()
                .map(|d| d.adj_close)
                .collect();
            Some(Array1::from_vec(t_vals))
        }
        WindowMode::Predict => None,
    };

    Ok(WindowSample {
        inputs,
        targets,
        scale,
        mode,
    })
}

/// Inclusive date range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateRange {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateRange {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<Self> {
        if end < start {
            return Err(Error::Config(format!(
                "date range end {end} before start {start}"
            )));
        }
        Ok(DateRange { start, end })
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        date >= self.start && date <= self.end
    }
}

/// The three chronological evaluation periods of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodSplit {
    pub policy_build: DateRange,
    pub hyper_select: DateRange,
    pub out_of_sample: DateRange,
}

impl PeriodSplit {
    pub fn validate(&self) -> Result<()> {
        for r in [&self.policy_build, &self.hyper_select, &self.out_of_sample] {
            DateRange::new(r.start, r.end)?;
        }
        if self.policy_build.end >= self.hyper_select.start
            || self.hyper_select.end >= self.out_of_sample.start
        {
            return Err(Error::Config(
                "periods must be disjoint and chronological".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn date(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    fn flat_bar(d: &str, price: f64) -> Bar {
        Bar {
            date: date(d),
            open: price,
            high: price,
            low: price,
            close: price,
            adj_close: price,
            volume: 0,
        }
    }

    const SAMPLE: &str = "\
Date,Open,High,Low,Close,Adj Close,Volume
2010-01-04,1116.56,1133.87,1116.56,1132.99,1132.99,3991400000
2010-01-05,1132.66,1136.63,1129.66,1136.52,1136.52,2491020000
2010-01-06,1135.71,1139.19,1133.95,1137.14,1137.14,4972660000
";

    #[test]
    fn parses_standard_header() {
        let series = parse_csv_reader(SAMPLE.as_bytes(), "sample", &CsvSchema::default()).unwrap();
        assert_eq!(series.len(), 3);
        assert_eq!(series.bars[0].adj_close, 1132.99);
        assert_eq!(series.bars[0].volume, 3_991_400_000);
        assert!(!series.adj_close_fallback);
    }

    #[test]
    fn empty_file_is_no_data() {
        let err = parse_csv_reader(
            "Date,Open,High,Low,Close,Adj Close,Volume\n".as_bytes(),
            "empty",
            &CsvSchema::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::NoData { .. }));
    }

    #[test]
    fn duplicate_dates_rejected() {
        let txt = "Date,Open,High,Low,Close,Adj Close,Volume\n\
                   2010-01-04,1,1,1,1,1,0\n2010-01-04,1,1,1,1,1,0\n";
        let err = parse_csv_reader(txt.as_bytes(), "dup", &CsvSchema::default()).unwrap_err();
        assert!(matches!(err, Error::DuplicateDate { .. }));
    }

    #[test]
    fn shuffled_dates_rejected_but_descending_reversed() {
        let descending = "Date,Open,High,Low,Close,Adj Close,Volume\n\
                          2010-01-06,1,1,1,1,1,0\n2010-01-05,1,1,1,1,1,0\n2010-01-04,1,1,1,1,1,0\n";
        let series =
            parse_csv_reader(descending.as_bytes(), "desc", &CsvSchema::default()).unwrap();
        assert_eq!(series.first_date().unwrap(), date("2010-01-04"));

        let shuffled = "Date,Open,High,Low,Close,Adj Close,Volume\n\
                        2010-01-05,1,1,1,1,1,0\n2010-01-04,1,1,1,1,1,0\n2010-01-06,1,1,1,1,1,0\n";
        let err = parse_csv_reader(shuffled.as_bytes(), "shuf", &CsvSchema::default()).unwrap_err();
        assert!(matches!(err, Error::NonMonotoneDates { .. }));
    }

    #[test]
    fn null_price_rows_dropped() {
        let txt = "Date,Open,High,Low,Close,Adj Close,Volume\n\
                   2010-01-04,1,1,1,1,1,0\n2010-01-05,null,null,null,null,null,0\n\
                   2010-01-06,1,1,1,1,1,0\n";
        let series = parse_csv_reader(txt.as_bytes(), "nulls", &CsvSchema::default()).unwrap();
        assert_eq!(series.len(), 2);
        assert_eq!(series.skipped_rows, 1);
    }

    #[test]
    fn bad_price_reports_line() {
        let txt = "Date,Open,High,Low,Close,Adj Close,Volume\n\
                   2010-01-04,1,1,1,1,1,0\n2010-01-05,abc,1,1,1,1,0\n";
        match parse_csv_reader(txt.as_bytes(), "bad", &CsvSchema::default()).unwrap_err() {
            Error::ParseRow { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn missing_adj_close_falls_back_to_close() {
        let txt = "Date,Open,High,Low,Close,Volume\n2010-01-04,1,2,0.5,1.5,0\n\
                   2010-01-05,1,2,0.5,1.2,0\n";
        let series = parse_csv_reader(txt.as_bytes(), "noadj", &CsvSchema::default()).unwrap();
        assert!(series.adj_close_fallback);
        assert_eq!(series.bars[0].adj_close, 1.5);
    }

    #[test]
    fn ohlc_invariant_enforced() {
        let txt = "Date,Open,High,Low,Close,Adj Close,Volume\n2010-01-04,10,9,8,9.5,9.5,0\n";
        let err = parse_csv_reader(txt.as_bytes(), "bad-ohlc", &CsvSchema::default()).unwrap_err();
        assert!(matches!(err, Error::ParseRow { .. }));
    }

    #[test]
    fn parse_serialize_parse_is_identity() {
        let series = parse_csv_reader(SAMPLE.as_bytes(), "sample", &CsvSchema::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("roundtrip.csv");
        write_csv(&series, &path).unwrap();
        let again = parse_csv(&path, &CsvSchema::default()).unwrap();
        assert_eq!(series.bars, again.bars);
    }

    #[test]
    fn features_from_two_bars() {
        let series = PriceSeries::new(vec![flat_bar("2020-01-01", 10.0), flat_bar("2020-01-02", 11.0)]).unwrap();
        let frame = build_features(&series).unwrap();
        assert_eq!(frame.len(), 1);
        assert_eq!(frame.day(0).features[5], 10.0);
    }

    #[test]
    fn feature_count_is_len_minus_one() {
        let bars: Vec<Bar> = (0..100u64)
            .map(|i| {
                let d = date("2020-01-01") + chrono::Days::new(i);
                flat_bar(&d.to_string(), 100.0 + i as f64)
            })
            .collect();
        let series = PriceSeries::new(bars).unwrap();
        assert_eq!(build_features(&series).unwrap().len(), 99);
    }

    #[test]
    fn hand_built_three_bar_features() {
        let mk = |d: &str, o: f64, h: f64, l: f64, c: f64, a: f64| Bar {
            date: date(d),
            open: o,
            high: h,
            low: l,
            close: c,
            adj_close: a,
            volume: 1,
        };
        let series = PriceSeries::new(vec![
            mk("2020-01-01", 10.0, 12.0, 9.0, 11.0, 11.5),
            mk("2020-01-02", 11.0, 13.0, 10.0, 12.0, 12.5),
            mk("2020-01-03", 12.0, 14.0, 11.0, 13.0, 13.5),
        ])
        .unwrap();
        let frame = build_features(&series).unwrap();
        // ordering: [y_t, open, low, high, close, y_{t-1}]
        assert_eq!(frame.day(0).features, [12.5, 11.0, 10.0, 13.0, 12.0, 11.5]);
        assert_eq!(frame.day(1).features, [13.5, 12.0, 11.0, 14.0, 13.0, 12.5]);
    }

    fn ramp_frame(n: usize) -> FeatureFrame {
        let bars: Vec<Bar> = (0..n)
            .map(|i| flat_bar(&(date("2020-01-01") + chrono::Days::new(i as u64)).to_string(), 100.0 + i as f64))
            .collect();
        build_features(&PriceSeries::new(bars).unwrap()).unwrap()
    }

    #[test]
    fn train_window_rows_and_targets() {
        let frame = ramp_frame(40);
        // day k has adj_close 101 + k
        let w = make_window(&frame, 30, 22, WindowMode::Train).unwrap();
        assert_eq!(w.inputs.nrows(), 22);
        // first input row is day 8, last is day 29
        assert_eq!(w.inputs[[0, 0]], 101.0 + 8.0);
        assert_eq!(w.inputs[[21, 0]], 101.0 + 29.0);
        let targets = w.targets.unwrap();
        assert_eq!(targets[0], 101.0 + 9.0);
        assert_eq!(targets[21], 101.0 + 30.0);
        assert_eq!(w.scale, 101.0 + 29.0);
    }

    #[test]
    fn train_window_boundary_errors() {
        let frame = ramp_frame(40);
        assert!(make_window(&frame, 4, 5, WindowMode::Train).is_err());
        assert!(make_window(&frame, 5, 5, WindowMode::Train).is_ok());
    }

    #[test]
    fn predict_window_rows() {
        let frame = ramp_frame(40);
        let w = make_window(&frame, 11, 11, WindowMode::Predict).unwrap();
        assert_eq!(w.inputs[[0, 0]], 101.0 + 1.0);
        assert_eq!(w.inputs[[10, 0]], 101.0 + 11.0);
        assert!(w.targets.is_none());
        assert_eq!(w.scale, 101.0 + 11.0);
        assert!(make_window(&frame, 9, 11, WindowMode::Predict).is_err());
        assert!(make_window(&frame, 10, 11, WindowMode::Predict).is_ok());
    }

    #[test]
    fn shift_by_one_alignment_over_random_windows() {
        let frame = ramp_frame(120);
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            state >> 33
        };
        for _ in 0..200 {
            let t = (next() % (frame.len() as u64)) as usize;
            let window = 1 + (next() % 30) as usize;
            if let Ok(w) = make_window(&frame, t, window, WindowMode::Train) {
                let targets = w.targets.as_ref().unwrap();
                let start = t - window;
                for k in 0..window {
                    assert_eq!(w.inputs[[k, 0]], frame.day(start + k).adj_close);
                    assert_eq!(targets[k], frame.day(start + k + 1).adj_close);
                }
            }
        }
    }

    #[test]
    fn period_split_validation() {
        let ok = PeriodSplit {
            policy_build: DateRange::new(date("2005-01-01"), date("2008-01-01")).unwrap(),
            hyper_select: DateRange::new(date("2008-01-02"), date("2009-12-31")).unwrap(),
            out_of_sample: DateRange::new(date("2010-01-04"), date("2018-05-01")).unwrap(),
        };
        ok.validate().unwrap();
        let bad = PeriodSplit {
            policy_build: ok.policy_build,
            hyper_select: DateRange::new(date("2007-12-31"), date("2009-12-31")).unwrap(),
            out_of_sample: ok.out_of_sample,
        };
        assert!(bad.validate().is_err());
    }
}
