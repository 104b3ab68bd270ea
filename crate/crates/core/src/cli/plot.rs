//! Minimal SVG line plots with the underlying data written as CSV.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::Result;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

pub struct Series<'a> {
    pub label: &'a str,
    pub values: &'a [f64],
}

/// Plots each series against its index on a log10 y axis. Non-positive
/// values are clamped to the smallest positive value present.
pub fn log_plot_svg(title: &str, x_label: &str, y_label: &str, series: &[Series<'_>]) -> String {
    let floor = series
        .iter()
        .flat_map(|s| s.values.iter().copied())
        .filter(|v| v.is_finite() && *v > 0.0)
        .fold(f64::INFINITY, f64::min);
    let floor = if floor.is_finite() { floor } else { 1.0 };
    let logs: Vec<Vec<f64>> = series
        .iter()
        .map(|s| {
            s.values
                .iter()
                .map(|v| {
                    if v.is_finite() && *v > floor {
                        v.log10()
                    } else {
                        floor.log10()
                    }
                })
                .collect()
        })
        .collect();
    let mut lo = logs.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    let mut hi = logs.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    lo = lo.floor();
    hi = hi.ceil().max(lo + 1.0);
    let n = series.iter().map(|s| s.values.len()).max().unwrap_or(0).max(2);

    let px = |i: usize| MARGIN + (WIDTH - 2.0 * MARGIN) * i as f64 / (n - 1) as f64;
    let py = |v: f64| HEIGHT - MARGIN - (HEIGHT - 2.0 * MARGIN) * (v - lo) / (hi - lo);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let (x0, x1, y0, y1) = (MARGIN, WIDTH - MARGIN, HEIGHT - MARGIN, MARGIN);
    let _ = writeln!(
        svg,
        r#"<path d="M{x0},{y1} L{x0},{y0} L{x1},{y0}" fill="none" stroke="black"/>"#
    );
    for e in lo as i64..=hi as i64 {
        let y = py(e as f64);
        let _ = writeln!(
            svg,
            r##"<line x1="{x0}" y1="{y:.1}" x2="{x1}" y2="{y:.1}" stroke="#ddd"/>"##
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{:.1}" text-anchor="end">1e{e}</text>"#,
            x0 - 6.0,
            y + 4.0
        );
    }
    for i in 0..n {
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">{i}</text>"#,
            px(i),
            y0 + 16.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 16.0,
        escape(x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    );
    for (k, (s, ls)) in series.iter().zip(&logs).enumerate() {
        let color = COLORS[k % COLORS.len()];
        let points: Vec<String> = ls
            .iter()
            .enumerate()
            .map(|(i, v)| format!("{:.1},{:.1}", px(i), py(*v)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            points.join(" ")
        );
        for p in &points {
            let (cx, cy) = p.split_once(',').unwrap_or(("0", "0"));
            let _ = writeln!(svg, r#"<circle cx="{cx}" cy="{cy}" r="3" fill="{color}"/>"#);
        }
        let ly = MARGIN + 16.0 * k as f64;
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{ly}" fill="{color}" text-anchor="end">{}</text>"#,
            x1,
            escape(s.label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// CSV with an `index` column and one column per series; short series
/// leave empty cells.
pub fn series_csv(series: &[Series<'_>]) -> String {
    let n = series.iter().map(|s| s.values.len()).max().unwrap_or(0);
    let mut out = String::from("index");
    for s in series {
        out.push(',');
        out.push_str(s.label);
    }
    out.push('\n');
    for i in 0..n {
        out.push_str(&i.to_string());
        for s in series {
            out.push(',');
            if let Some(v) = s.values.get(i) {
                out.push_str(&v.to_string());
            }
        }
        out.push('\n');
    }
    out
}

/// Writes `<stem>.svg` and `<stem>.csv` into `dir`.
pub fn emit(dir: &Path, stem: &str, title: &str, x_label: &str, y_label: &str, series: &[Series<'_>]) -> Result<()> {
    fs::write(
        dir.join(format!("{stem}.svg")),
        log_plot_svg(title, x_label, y_label, series),
    )?;
    fs::write(dir.join(format!("{stem}.csv")), series_csv(series))?;
    Ok(())
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_pads_short_series() {
        let a = [1.0, 0.5, 0.25];
        let b = [2.0];
        let csv = series_csv(&[Series { label: "a", values: &a }, Series { label: "b", values: &b }]);
        assert_eq!(csv, "index,a,b\n0,1,2\n1,0.5,\n2,0.25,\n");
    }

    #[test]
    fn svg_is_well_formed_with_zeros() {
        let a = [1.0, 1e-3, 0.0];
        let svg = log_plot_svg("t <1>", "x", "y", &[Series { label: "a", values: &a }]);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(svg.contains("t &lt;1&gt;"));
        assert_eq!(svg.matches("<circle").count(), 3);
        assert!(!svg.contains("NaN") && !svg.contains("inf"));
    }
}
