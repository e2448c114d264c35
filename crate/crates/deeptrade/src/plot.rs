//! Deterministic SVG line charts of equity curves (growth of one unit).

use crate::error::{Error, Result};
use crate::simulator::EquityPoint;

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 24.0;
const MARGIN_BOTTOM: f64 = 56.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

/// Renders one or more equity curves, each normalized so its first value
/// is 1, onto a shared date axis. Identical inputs produce identical
/// bytes.
pub fn render_equity_svg(
    curves: &[(String, Vec<EquityPoint>)],
    fingerprint: Option<&str>,
) -> Result<String> {
    if curves.is_empty() {
        return Err(Error::Config("no curves to plot".into()));
    }
    for (name, points) in curves {
        if points.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "curve {name:?} has fewer than 2 points"
            )));
        }
        if points.iter().any(|p| !(p.equity.is_finite() && p.equity > 0.0)) {
            return Err(Error::NonFinite(format!("curve {name:?}")));
        }
    }

    let date_min = curves
        .iter()
        .map(|(_, pts)| pts.first().expect("non-empty").date)
        .min()
        .expect("non-empty");
    let date_max = curves
        .iter()
        .map(|(_, pts)| pts.last().expect("non-empty").date)
        .max()
        .expect("non-empty");
    let span_days = (date_max - date_min).num_days().max(1) as f64;

    let normalized: Vec<(String, Vec<(f64, f64)>)> = curves
        .iter()
        .map(|(name, pts)| {
            let base = pts[0].equity;
            let series = pts
                .iter()
                .map(|p| {
                    let x = (p.date - date_min).num_days() as f64 / span_days;
                    (x, p.equity / base)
                })
                .collect();
            (name.clone(), series)
        })
        .collect();

    let mut y_min = f64::MAX;
    let mut y_max = f64::MIN;
    for (_, series) in &normalized {
        for (_, y) in series {
            y_min = y_min.min(*y);
            y_max = y_max.max(*y);
        }
    }
    if (y_max - y_min).abs() < 1e-12 {
        y_min -= 0.05;
        y_max += 0.05;
    }
    let pad = 0.04 * (y_max - y_min);
    y_min -= pad;
    y_max += pad;

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let to_px = |x: f64, y: f64| -> (f64, f64) {
        (
            MARGIN_LEFT + x * plot_w,
            MARGIN_TOP + (1.0 - (y - y_min) / (y_max - y_min)) * plot_h,
        )
    };

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    if let Some(fp) = fingerprint {
        svg.push_str(&format!("<!-- config {fp} -->\n"));
    }
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");

    // axes
    let (x0, y0) = (MARGIN_LEFT, MARGIN_TOP + plot_h);
    svg.push_str(&format!(
        "<line x1=\"{x0:.2}\" y1=\"{y0:.2}\" x2=\"{:.2}\" y2=\"{y0:.2}\" stroke=\"black\" stroke-width=\"1\"/>\n",
        MARGIN_LEFT + plot_w
    ));
    svg.push_str(&format!(
        "<line x1=\"{x0:.2}\" y1=\"{:.2}\" x2=\"{x0:.2}\" y2=\"{y0:.2}\" stroke=\"black\" stroke-width=\"1\"/>\n",
        MARGIN_TOP
    ));

    // y ticks
    for k in 0..=5 {
        let value = y_min + (y_max - y_min) * k as f64 / 5.0;
        let (_, py) = to_px(0.0, value);
        svg.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{py:.2}\" x2=\"{:.2}\" y2=\"{py:.2}\" stroke=\"#cccccc\" stroke-width=\"0.5\"/>\n",
            MARGIN_LEFT,
            MARGIN_LEFT + plot_w
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"monospace\" font-size=\"11\" text-anchor=\"end\">{value:.3}</text>\n",
            MARGIN_LEFT - 6.0,
            py + 4.0
        ));
    }

    // x ticks: evenly spaced dates
    for k in 0..=5 {
        let frac = k as f64 / 5.0;
        let date = date_min + chrono::Days::new((frac * span_days).round() as u64);
        let (px, _) = to_px(frac, y_min);
        svg.push_str(&format!(
            "<text x=\"{px:.2}\" y=\"{:.2}\" font-family=\"monospace\" font-size=\"11\" text-anchor=\"middle\">{date}</text>\n",
            y0 + 18.0
        ));
    }

    for (idx, (_, series)) in normalized.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let mut path = String::from("<polyline fill=\"none\" stroke=\"");
        path.push_str(color);
        path.push_str("\" stroke-width=\"1.5\" points=\"");
        for (x, y) in series {
            let (px, py) = to_px(*x, *y);
            path.push_str(&format!("{px:.2},{py:.2} "));
        }
        path.push_str("\"/>\n");
        svg.push_str(&path);
    }

    // legend
    for (idx, (name, _)) in normalized.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let ly = MARGIN_TOP + 16.0 + idx as f64 * 16.0;
        svg.push_str(&format!(
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"12\" height=\"3\" fill=\"{color}\"/>\n",
            MARGIN_LEFT + 10.0,
            ly - 4.0
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{ly:.2}\" font-family=\"monospace\" font-size=\"12\">{}</text>\n",
            MARGIN_LEFT + 28.0,
            xml_escape(name)
        ));
    }

    svg.push_str("</svg>\n");
    Ok(svg)
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn curve(name: &str, values: &[f64]) -> (String, Vec<EquityPoint>) {
        (
            name.to_string(),
            values
                .iter()
                .enumerate()
                .map(|(i, &v)| EquityPoint {
                    date: NaiveDate::from_ymd_opt(2020, 1, 1).unwrap()
                        + chrono::Days::new(i as u64),
                    equity: v,
                })
                .collect(),
        )
    }

    #[test]
    fn flat_curve_renders_horizontal_line_at_one() {
        let svg = render_equity_svg(&[curve("flat", &[100.0, 100.0, 100.0])], None).unwrap();
        assert!(svg.contains("flat"));
        // normalized flat curve: every polyline y coordinate is identical
        let points = svg
            .split("points=\"")
            .nth(1)
            .unwrap()
            .split('"')
            .next()
            .unwrap();
        let ys: Vec<&str> = points
            .split_whitespace()
            .map(|pair| pair.split(',').nth(1).unwrap())
            .collect();
        assert!(ys.len() >= 3);
        assert!(ys.iter().all(|y| *y == ys[0]));
    }

    #[test]
    fn two_curves_two_paths_two_legend_entries() {
        let svg = render_equity_svg(
            &[curve("a", &[1.0, 1.1, 1.2]), curve("b", &[50.0, 49.0, 51.0])],
            Some("fp"),
        )
        .unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains(">a</text>"));
        assert!(svg.contains(">b</text>"));
        assert!(svg.contains("<!-- config fp -->"));
    }

    #[test]
    fn identical_inputs_identical_bytes() {
        let curves = vec![curve("x", &[10.0, 11.0, 10.5, 12.0])];
        let a = render_equity_svg(&curves, Some("fp")).unwrap();
        let b = render_equity_svg(&curves, Some("fp")).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_curve_is_rejected() {
        assert!(render_equity_svg(&[curve("short", &[1.0])], None).is_err());
        assert!(render_equity_svg(&[], None).is_err());
    }
}
