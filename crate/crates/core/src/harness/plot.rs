// SPDX-License-Identifier: Apache-2.0

//! Static SVG charts. Output depends only on the input data, so identical
//! inputs give byte-identical files.

use std::fmt::Write as _;
use std::io::Read;

use super::sweep::{Metric, SweepResult};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesStyle {
    /// Polyline with a marker at every point.
    Line,
    /// Small dots only.
    Markers,
    /// Dashed polyline, no markers.
    Dashed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub style: SeriesStyle,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChartLabels {
    pub title: String,
    pub x: String,
    pub y: String,
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 30.0;
const MARGIN_TOP: f64 = 50.0;
const MARGIN_BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#7f7f7f",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn padded_range(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        let pad = if lo == 0.0 { 0.5 } else { 0.1 * lo.abs() };
        (lo - pad, hi + pad)
    }
}

/// Render series into an SVG document with axes, ticks and a legend.
pub fn render_svg(series: &[Series], labels: &ChartLabels) -> Result<String> {
    let finite = |p: &&(f64, f64)| p.0.is_finite() && p.1.is_finite();
    let all: Vec<(f64, f64)> = series.iter().flat_map(|s| s.points.iter().filter(finite).copied()).collect();
    if all.is_empty() {
        return Err(Error::Empty("plot data"));
    }
    let fold = |f: fn(&(f64, f64)) -> f64| {
        all.iter()
            .map(f)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    };
    let (x0, x1) = { let (a, b) = fold(|p| p.0); padded_range(a, b) };
    let (y0, y1) = { let (a, b) = fold(|p| p.1); padded_range(a, b) };
    let pw = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let ph = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let sx = |x: f64| MARGIN_LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| MARGIN_TOP + ph - (y - y0) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="28" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(&labels.title)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for k in 0..=5 {
        let t = k as f64 / 5.0;
        let (xv, yv) = (x0 + t * (x1 - x0), y0 + t * (y1 - y0));
        let (px, py) = (sx(xv), sy(yv));
        let base = MARGIN_TOP + ph;
        let _ = writeln!(
            s,
            r#"<line x1="{px:.2}" y1="{base:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{xv:.3}</text>"#,
            base + 5.0,
            base + 20.0
        );
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{py:.2}" x2="{MARGIN_LEFT}" y2="{py:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{yv:.3}</text>"#,
            MARGIN_LEFT - 5.0,
            MARGIN_LEFT - 8.0,
            py + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + pw / 2.0,
        HEIGHT - 15.0,
        escape(&labels.x)
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">{}</text>"#,
        MARGIN_TOP + ph / 2.0,
        MARGIN_TOP + ph / 2.0,
        escape(&labels.y)
    );

    for (k, series) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let pts: Vec<(f64, f64)> = series.points.iter().filter(finite).map(|&(x, y)| (sx(x), sy(y))).collect();
        let path: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        match series.style {
            SeriesStyle::Line | SeriesStyle::Dashed if pts.len() > 1 => {
                let dash = if series.style == SeriesStyle::Dashed { r#" stroke-dasharray="6 4""# } else { "" };
                let _ = writeln!(
                    s,
                    r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.8"{dash}/>"#,
                    path.join(" ")
                );
            }
            _ => {}
        }
        if series.style != SeriesStyle::Dashed || pts.len() == 1 {
            let r = if series.style == SeriesStyle::Markers { 1.5 } else { 3.5 };
            for (x, y) in &pts {
                let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="{r}" fill="{color}"/>"#);
            }
        }
        let ly = MARGIN_TOP + 18.0 + 18.0 * k as f64;
        let lx = MARGIN_LEFT + pw - 170.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2.5"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 22.0,
            lx + 28.0,
            ly + 4.0,
            escape(&series.label)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// One line per `(α, β)` of seed-averaged `metric` against `C`.
pub fn sweep_series(result: &SweepResult, metric: Metric) -> Vec<Series> {
    result
        .summarize(metric)
        .into_iter()
        .map(|curve| Series {
            label: curve.label(),
            points: curve.points.iter().filter_map(|p| p.mean().map(|m| (p.c, m))).collect(),
            style: SeriesStyle::Line,
        })
        .collect()
}

/// Lower bound `d̂ = d` and upper bound `d̂ = (1 + R̃/R) d + 2R` on the hop estimate.
pub fn hop_bound_overlays(range: f64, r_tilde: f64, max_distance: f64) -> Vec<Series> {
    vec![
        Series {
            label: "lower bound".into(),
            points: vec![(0.0, 0.0), (max_distance, max_distance)],
            style: SeriesStyle::Dashed,
        },
        Series {
            label: "upper bound".into(),
            points: vec![
                (0.0, 2.0 * range),
                (max_distance, (1.0 + r_tilde / range) * max_distance + 2.0 * range),
            ],
            style: SeriesStyle::Dashed,
        },
    ]
}

/// Read `true_distance,estimate` rows.
pub fn read_scatter_csv<R: Read>(input: R) -> Result<Vec<(f64, f64)>> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for (k, row) in rdr.records().enumerate() {
        let row = row?;
        let parse = |i: usize| -> Result<f64> {
            row.get(i).and_then(|v| v.parse().ok()).ok_or(Error::Parse {
                line: k + 2,
                message: "expected two numbers".into(),
            })
        };
        out.push((parse(0)?, parse(1)?));
    }
    Ok(out)
}
