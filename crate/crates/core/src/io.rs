//! Reports, CSV traces and SVG plots.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::Result;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Criterion {
    pub name: String,
    pub value: f64,
    /// Human-readable acceptance condition, e.g. `"<= 0.05"`.
    pub threshold: String,
    pub pass: bool,
}

/// Threshold display: rounded to 12 significant digits, exponent form for
/// small magnitudes.
fn show(v: f64) -> String {
    let r: f64 = format!("{v:.11e}").parse().unwrap_or(v);
    if r != 0.0 && r.abs() < 1e-3 {
        format!("{r:e}")
    } else {
        format!("{r}")
    }
}

impl Criterion {
    pub fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Criterion {
            name: name.into(),
            value,
            threshold: format!("<= {}", show(limit)),
            pass: value <= limit,
        }
    }

    pub fn at_least(name: &str, value: f64, limit: f64) -> Self {
        Criterion {
            name: name.into(),
            value,
            threshold: format!(">= {}", show(limit)),
            pass: value >= limit,
        }
    }

    pub fn positive(name: &str, value: f64) -> Self {
        Criterion {
            name: name.into(),
            value,
            threshold: "> 0".into(),
            pass: value > 0.0,
        }
    }

    pub fn within(name: &str, value: f64, lo: f64, hi: f64) -> Self {
        Criterion {
            name: name.into(),
            value,
            threshold: format!("in [{}, {}]", show(lo), show(hi)),
            pass: value >= lo && value <= hi,
        }
    }

    pub fn flag(name: &str, ok: bool) -> Self {
        Criterion {
            name: name.into(),
            value: if ok { 1.0 } else { 0.0 },
            threshold: "== 1".into(),
            pass: ok,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub scenario: String,
    pub experiment: String,
    pub criteria: Vec<Criterion>,
    /// Experiment-specific numbers (fitted constants, solver statistics).
    #[serde(default)]
    pub details: Value,
}

impl Report {
    pub fn new(scenario: &str, experiment: &str) -> Self {
        Report {
            schema_version: SCHEMA_VERSION,
            scenario: scenario.into(),
            experiment: experiment.into(),
            criteria: Vec::new(),
            details: Value::Null,
        }
    }

    pub fn passed(&self) -> bool {
        self.criteria.iter().all(|c| c.pass)
    }
}

/// Writes `text` to `dir/name`, creating `dir` as needed.
pub fn write_file(dir: &Path, name: &str, text: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), text)?;
    Ok(())
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_file(dir, name, &text)
}

/// CSV with a header row; numbers in `{:.12e}`.
pub fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.12e}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(label: &str, points: Vec<(f64, f64)>) -> Self {
        Series {
            label: label.into(),
            points,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Axes {
    pub log_x: bool,
    pub log_y: bool,
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const PAD: f64 = 56.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn ticks(lo: f64, hi: f64, log: bool) -> Vec<f64> {
    if log {
        let (a, b) = (lo.floor() as i32, hi.ceil() as i32);
        let step = ((b - a) / 6).max(1);
        (a..=b).step_by(step as usize).map(f64::from).filter(|t| *t >= lo - 1e-9 && *t <= hi + 1e-9).collect()
    } else {
        (0..=5).map(|i| lo + (hi - lo) * i as f64 / 5.0).collect()
    }
}

fn label(v: f64, log: bool) -> String {
    if log {
        format!("1e{}", v.round() as i32)
    } else if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e4) {
        format!("{v:.1e}")
    } else {
        format!("{v:.3}")
    }
}

/// Line plot of one or more series. Points that cannot be shown on a log
/// axis are dropped.
pub fn line_plot(title: &str, x_label: &str, y_label: &str, series: &[Series], axes: Axes) -> String {
    let tx = |x: f64| if axes.log_x { x.log10() } else { x };
    let ty = |y: f64| if axes.log_y { y.log10() } else { y };
    let mapped: Vec<Vec<(f64, f64)>> = series
        .iter()
        .map(|s| {
            s.points
                .iter()
                .filter(|(x, y)| (!axes.log_x || *x > 0.0) && (!axes.log_y || *y > 0.0) && x.is_finite() && y.is_finite())
                .map(|&(x, y)| (tx(x), ty(y)))
                .collect()
        })
        .collect();
    let all = mapped.iter().flatten();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-12 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 < 1e-12 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let px = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let py = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
    let _ = writeln!(
        svg,
        r#"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    for t in ticks(x0, x1, axes.log_x) {
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, px(t), H - PAD + 16.0, label(t, axes.log_x));
    }
    for t in ticks(y0, y1, axes.log_y) {
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, PAD - 4.0, py(t) + 4.0, label(t, axes.log_y));
    }
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 12.0, escape(x_label));
    let _ = writeln!(
        svg,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(y_label)
    );
    for (i, (s, pts)) in series.iter().zip(&mapped).enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let _ = writeln!(svg, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, path.join(" "));
        let ly = PAD + 16.0 + 16.0 * i as f64;
        let _ = writeln!(svg, r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, W - PAD - 150.0, W - PAD - 130.0);
        let _ = writeln!(svg, r#"<text x="{}" y="{}">{}</text>"#, W - PAD - 125.0, ly + 4.0, escape(&s.label));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Heatmap of values on an `nx x ny` node grid (row-major in `x`), with
/// `NaN` cells left blank.
pub fn heatmap(title: &str, nx: usize, ny: usize, values: &[f64]) -> String {
    let finite = values.iter().filter(|v| v.is_finite());
    let lo = finite.clone().cloned().fold(f64::INFINITY, f64::min);
    let hi = finite.cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let cw = (W - 2.0 * PAD) / nx as f64;
    let ch = (H - 2.0 * PAD) / ny as f64;
    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
    for j in 0..ny {
        for i in 0..nx {
            let v = values[j * nx + i];
            if !v.is_finite() {
                continue;
            }
            let t = (v - lo) / span;
            let (r, g, b) = ((255.0 * t) as u8, (80.0 + 120.0 * (1.0 - (2.0 * t - 1.0).abs())) as u8, (255.0 * (1.0 - t)) as u8);
            let _ = writeln!(
                svg,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="rgb({r},{g},{b})"/>"#,
                PAD + i as f64 * cw,
                H - PAD - (j + 1) as f64 * ch,
                cw + 0.05,
                ch + 0.05
            );
        }
    }
    let _ = writeln!(svg, r#"<text x="{PAD}" y="{}">min {} max {}</text>"#, H - 20.0, label(lo, false), label(hi, false));
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thresholds_print_without_float_noise() {
        assert_eq!(Criterion::within("x", 0.5, 0.5 - 0.07, 0.5 + 0.07).threshold, "in [0.43, 0.57]");
        assert_eq!(Criterion::at_most("x", 0.0, 1e-12).threshold, "<= 1e-12");
        assert_eq!(Criterion::at_most("x", 0.0, 600.0).threshold, "<= 600");
    }

    #[test]
    fn report_round_trips_with_schema_version() {
        let mut r = Report::new("demo", "barrier");
        r.criteria.push(Criterion::within("slope_fit", 0.5, 0.47, 0.53));
        let text = serde_json::to_string(&r).unwrap();
        let back: Report = serde_json::from_str(&text).unwrap();
        assert_eq!(back.schema_version, SCHEMA_VERSION);
        assert!(back.passed());
        assert_eq!(back.criteria, r.criteria);
    }

    #[test]
    fn plots_are_well_formed() {
        let s = Series::new("t^s", (1..50).map(|i| (i as f64 * 0.1, (i as f64 * 0.1).sqrt())).collect());
        let svg = line_plot("b", "t", "b(t)", &[s], Axes { log_x: true, log_y: true });
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 1);
        let hm = heatmap("u", 3, 2, &[0.0, 1.0, 2.0, f64::NAN, 4.0, 5.0]);
        assert_eq!(hm.matches("<rect").count(), 1 + 5);
    }
}
