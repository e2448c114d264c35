//! Parse a daily OHLC CSV, validate it and slice feature windows.
//!
//! ```bash
//! cargo run -p deeptrade --example ingest_csv
//! ```

use deeptrade::market_data::{
    build_features, make_window, parse_csv_reader, write_csv, CsvSchema, WindowMode,
};

const SAMPLE: &str = "\
Date,Open,High,Low,Close,Adj Close,Volume
2010-01-04,1116.56,1133.87,1116.56,1132.99,1132.99,3991400000
2010-01-05,1132.66,1136.63,1129.66,1136.52,1136.52,2491020000
2010-01-06,1135.71,1139.19,1133.95,1137.14,1137.14,4972660000
2010-01-07,1136.27,1142.46,1131.32,1141.69,1141.69,5270680000
2010-01-08,1140.52,1145.39,1136.22,1144.98,1144.98,4389590000
2010-01-11,1145.96,1149.74,1142.02,1146.98,1146.98,4255780000
2010-01-12,1143.81,1143.81,1131.77,1136.22,1136.22,4716160000
2010-01-13,1137.31,1148.40,1133.18,1145.68,1145.68,4170360000
";

fn main() -> deeptrade::Result<()> {
    let series = parse_csv_reader(SAMPLE.as_bytes(), "<sample>", &CsvSchema::default())?;
    println!(
        "parsed {} bars covering {} .. {}",
        series.len(),
        series.first_date().unwrap(),
        series.last_date().unwrap()
    );

    let frame = build_features(&series)?;
    println!("built {} feature vectors (first day needs a previous close)", frame.len());
    let day = frame.day(0);
    println!(
        "day {}: [y, open, low, high, close, y_prev] = {:?}",
        day.date, day.features
    );

    // a 5-day training window ending at the last day
    let window = make_window(&frame, frame.len() - 1, 5, WindowMode::Train)?;
    println!(
        "train window: {} rows, scale {:.2}, targets are next-day closes",
        window.inputs.nrows(),
        window.scale
    );

    let out = std::env::temp_dir().join("deeptrade_ingest_example.csv");
    write_csv(&series, &out)?;
    println!("normalized copy written to {}", out.display());
    Ok(())
}
