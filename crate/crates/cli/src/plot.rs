//! Minimal SVG scatter plots with least-squares lines.

use std::fmt::Write as _;
use std::path::Path;

use paretolab_core::fit_loglog;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotStyle {
    LogLog,
    Linear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(label: impl Into<String>, xs: &[f64], ys: &[f64]) -> Self {
        Series {
            label: label.into(),
            points: xs.iter().copied().zip(ys.iter().copied()).collect(),
        }
    }
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Slope and intercept in plot coordinates, when the points determine a line.
fn line_fit(points: &[(f64, f64)], style: PlotStyle) -> Option<(f64, f64)> {
    let distinct = points.iter().any(|p| p.0 != points[0].0);
    if points.len() < 2 || !distinct {
        return None;
    }
    if style == PlotStyle::LogLog && points.len() >= 3 {
        let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().copied().unzip();
        return fit_loglog(&xs, &ys)
            .ok()
            .map(|f| (f.slope, f.intercept / std::f64::consts::LN_10));
    }
    let t: Vec<(f64, f64)> = points.iter().map(|&(x, y)| transform(x, y, style)).collect();
    let n = t.len() as f64;
    let mx = t.iter().map(|p| p.0).sum::<f64>() / n;
    let my = t.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = t.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = t.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

fn transform(x: f64, y: f64, style: PlotStyle) -> (f64, f64) {
    match style {
        PlotStyle::LogLog => (x.log10(), y.log10()),
        PlotStyle::Linear => (x, y),
    }
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

fn ticks(lo: f64, hi: f64, style: PlotStyle) -> Vec<f64> {
    match style {
        PlotStyle::LogLog => {
            let (a, b) = (lo.ceil() as i64, hi.floor() as i64);
            if b >= a {
                (a..=b).map(|k| k as f64).collect()
            } else {
                vec![(lo + hi) / 2.0]
            }
        }
        PlotStyle::Linear => (0..=4).map(|k| lo + (hi - lo) * k as f64 / 4.0).collect(),
    }
}

fn tick_label(v: f64, style: PlotStyle) -> String {
    match style {
        PlotStyle::LogLog if v.fract() == 0.0 => format!("1e{v}"),
        PlotStyle::LogLog => format!("{:.3}", 10f64.powf(v)),
        PlotStyle::Linear => format!("{v:.3}"),
    }
}

/// Writes an SVG with one scatter, fitted line and legend entry per series.
pub fn emit_plot(series: &[Series], style: PlotStyle, path: &Path) -> CliResult<()> {
    if series.is_empty() || series.iter().any(|s| s.points.is_empty()) {
        return Err(CliError::EmptySeries);
    }
    let all: Vec<(f64, f64)> = series.iter().flat_map(|s| s.points.iter().copied()).collect();
    if all.iter().any(|p| !(p.0.is_finite() && p.1.is_finite())) {
        return Err(CliError::Numeric("plot data must be finite".into()));
    }
    if style == PlotStyle::LogLog && all.iter().any(|p| p.0 <= 0.0 || p.1 <= 0.0) {
        return Err(CliError::Numeric("log-log plot needs positive data".into()));
    }
    let t: Vec<(f64, f64)> = all.iter().map(|&(x, y)| transform(x, y, style)).collect();
    let fold = |f: fn(&(f64, f64)) -> f64| {
        let v: Vec<f64> = t.iter().map(f).collect();
        (
            v.iter().cloned().fold(f64::INFINITY, f64::min),
            v.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        )
    };
    let (x0, x1) = padded(fold(|p| p.0).0, fold(|p| p.0).1);
    let (y0, y1) = padded(fold(|p| p.1).0, fold(|p| p.1).1);
    let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * (WIDTH - LEFT - RIGHT);
    let py = |y: f64| HEIGHT - BOTTOM - (y - y0) / (y1 - y0) * (HEIGHT - TOP - BOTTOM);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<rect x="{LEFT}" y="{TOP}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        WIDTH - LEFT - RIGHT,
        HEIGHT - TOP - BOTTOM
    );
    for v in ticks(x0, x1, style) {
        let x = px(v);
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.2}" y1="{b:.2}" x2="{x:.2}" y2="{c:.2}" stroke="black"/><text x="{x:.2}" y="{t:.2}" text-anchor="middle">{}</text>"#,
            tick_label(v, style),
            b = HEIGHT - BOTTOM,
            c = HEIGHT - BOTTOM + 5.0,
            t = HEIGHT - BOTTOM + 20.0
        );
    }
    for v in ticks(y0, y1, style) {
        let y = py(v);
        let _ = writeln!(
            svg,
            r#"<line x1="{a:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/><text x="{t:.2}" y="{y:.2}" text-anchor="end" dominant-baseline="middle">{}</text>"#,
            tick_label(v, style),
            a = LEFT - 5.0,
            t = LEFT - 8.0
        );
    }
    for (k, s) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        for &(x, y) in &s.points {
            let (tx, ty) = transform(x, y, style);
            let _ = writeln!(
                svg,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="{color}"/>"#,
                px(tx),
                py(ty)
            );
        }
        let fit = line_fit(&s.points, style);
        if let Some((slope, icpt)) = fit {
            let (a, b) = s
                .points
                .iter()
                .map(|&(x, y)| transform(x, y, style).0)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                    (lo.min(v), hi.max(v))
                });
            let _ = writeln!(
                svg,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-dasharray="6 3"/>"#,
                px(a),
                py(icpt + slope * a),
                px(b),
                py(icpt + slope * b)
            );
        }
        let label = match fit {
            Some((slope, _)) => format!("{} (slope {slope:.3})", escape(&s.label)),
            None => escape(&s.label),
        };
        let ly = TOP + 16.0 + 18.0 * k as f64;
        let _ = writeln!(
            svg,
            r#"<g class="legend"><rect x="{:.2}" y="{:.2}" width="10" height="10" fill="{color}"/><text x="{:.2}" y="{:.2}">{label}</text></g>"#,
            LEFT + 12.0,
            ly - 9.0,
            LEFT + 28.0,
            ly
        );
    }
    let _ = writeln!(svg, "</svg>");
    std::fs::write(path, svg).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
