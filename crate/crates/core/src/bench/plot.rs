//! SVG line chart of mean ratio against the sweep parameter.

use std::fmt::Write as _;

use super::{row_order, summarize, ResultRow};
use crate::error::BenchError;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesPoint {
    pub x: f64,
    pub mean: f64,
    pub low: f64,
    pub high: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<SeriesPoint>,
}

/// One series per (algo, alpha), points ordered by sweep value.
pub fn series(rows: &[ResultRow]) -> Result<Vec<Series>, BenchError> {
    if rows.is_empty() {
        return Err(BenchError::EmptyCsv);
    }
    let mut sorted = rows.to_vec();
    sorted.sort_by(row_order);
    let mut out: Vec<Series> = Vec::new();
    for cell in summarize(&sorted) {
        let label = match cell.alpha {
            Some(a) => format!("{} a={a}", cell.algo),
            None => cell.algo.clone(),
        };
        let p = SeriesPoint { x: cell.sweep_param, mean: cell.mean_ratio, low: cell.ci_low, high: cell.ci_high };
        match out.last_mut() {
            Some(s) if s.label == label => s.points.push(p),
            _ => out.push(Series { label, points: vec![p] }),
        }
    }
    Ok(out)
}

fn log_x(xs: &[f64]) -> bool {
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    lo > 0.0 && hi / lo >= 1e3
}

fn span(lo: f64, hi: f64) -> (f64, f64) {
    if hi - lo > 1e-12 {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn plot_svg(rows: &[ResultRow], title: &str) -> Result<String, BenchError> {
    let all = series(rows)?;
    let xs: Vec<f64> = all.iter().flat_map(|s| s.points.iter().map(|p| p.x)).collect();
    let log = log_x(&xs);
    let tx = |x: f64| if log { x.log10() } else { x };
    let (x0, x1) = span(
        xs.iter().map(|&x| tx(x)).fold(f64::INFINITY, f64::min),
        xs.iter().map(|&x| tx(x)).fold(f64::NEG_INFINITY, f64::max),
    );
    let pts = all.iter().flat_map(|s| s.points.iter());
    let (y0, y1) = span(
        pts.clone().map(|p| p.low).fold(f64::INFINITY, f64::min).min(1.0),
        pts.map(|p| p.high).fold(f64::NEG_INFINITY, f64::max),
    );
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + (tx(x) - x0) / (x1 - x0) * plot_w;
    let py = |y: f64| TOP + (1.0 - (y - y0) / (y1 - y0)) * plot_h;

    let mut svg = String::new();
    let w = &mut svg;
    let _ = writeln!(w, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(w, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(w, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, LEFT + plot_w / 2.0, escape(title));
    let _ = writeln!(
        w,
        r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let yv = y0 + f * (y1 - y0);
        let xv = x0 + f * (x1 - x0);
        let xl = if log { 10f64.powf(xv) } else { xv };
        let gx = LEFT + f * plot_w;
        let gy = py(yv);
        let _ = writeln!(w, r##"<line x1="{LEFT}" y1="{gy:.2}" x2="{}" y2="{gy:.2}" stroke="#ddd"/>"##, LEFT + plot_w);
        let _ = writeln!(w, r#"<text x="{}" y="{:.2}" text-anchor="end">{yv:.3}</text>"#, LEFT - 6.0, gy + 4.0);
        let _ = writeln!(w, r#"<text x="{gx:.2}" y="{}" text-anchor="middle">{}</text>"#, TOP + plot_h + 16.0, fmt_tick(xl));
    }
    let xlabel = if log { "sweep parameter (log scale)" } else { "sweep parameter" };
    let _ = writeln!(w, r#"<text x="{}" y="{}" text-anchor="middle">{xlabel}</text>"#, LEFT + plot_w / 2.0, HEIGHT - 16.0);
    let _ = writeln!(
        w,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">mean empirical ratio</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    for (k, s) in all.iter().enumerate() {
        let c = COLORS[k % COLORS.len()];
        let path: Vec<String> = s.points.iter().map(|p| format!("{:.2},{:.2}", px(p.x), py(p.mean))).collect();
        let _ = writeln!(w, r#"<g class="series" data-label="{}">"#, escape(&s.label));
        let _ = writeln!(w, r#"<polyline points="{}" fill="none" stroke="{c}" stroke-width="1.5"/>"#, path.join(" "));
        for p in &s.points {
            let (cx, lo, hi) = (px(p.x), py(p.low), py(p.high));
            let _ = writeln!(w, r#"<line class="whisker" x1="{cx:.2}" y1="{lo:.2}" x2="{cx:.2}" y2="{hi:.2}" stroke="{c}"/>"#);
            let _ = writeln!(w, r#"<circle class="point" cx="{cx:.2}" cy="{:.2}" r="3" fill="{c}"/>"#, py(p.mean));
        }
        let _ = writeln!(w, "</g>");
        let ly = TOP + 14.0 + 18.0 * k as f64;
        let lx = LEFT + plot_w + 14.0;
        let _ = writeln!(w, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{c}" stroke-width="2"/>"#, lx + 18.0);
        let _ = writeln!(w, r#"<text x="{}" y="{}">{}</text>"#, lx + 24.0, ly + 4.0, escape(&s.label));
    }
    let _ = writeln!(w, "</svg>");
    Ok(svg)
}

fn fmt_tick(x: f64) -> String {
    if x != 0.0 && (x.abs() >= 1e4 || x.abs() < 1e-2) {
        format!("{x:.1e}")
    } else {
        format!("{x:.3}")
    }
}
