//! Plot data: a long-format hypervolume CSV and one SVG strip plot per
//! (dataset, metric pair), one column of jittered points per method with a
//! median bar.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::Serialize;

use super::output::RunSummary;
use super::{HarnessError, Result};
use crate::seed;
use crate::stats::Method;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlotRow {
    pub dataset: String,
    pub metric_pair: String,
    pub method: Method,
    pub replicate: usize,
    pub hypervolume: f64,
}

const WIDTH: f64 = 420.0;
const HEIGHT: f64 = 320.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 40.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// A self-contained SVG strip plot. Jitter is seeded, so output is stable.
pub fn strip_plot_svg(title: &str, columns: &[(Method, Vec<f64>)]) -> String {
    let all: Vec<f64> = columns.iter().flat_map(|c| c.1.iter().copied()).collect();
    let (mut lo, mut hi) = all
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    let pad = ((hi - lo) * 0.1).max(0.005);
    lo = (lo - pad).max(0.0);
    hi = (hi + pad).min(1.0);
    if hi <= lo {
        hi = lo + 0.01;
    }
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let y_of = |v: f64| TOP + plot_h * (1.0 - (v - lo) / (hi - lo));
    let band = plot_w / columns.len().max(1) as f64;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        s,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="13">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    // Axes.
    let _ = writeln!(
        s,
        r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{}" stroke="black"/>"#,
        TOP + plot_h
    );
    let _ = writeln!(
        s,
        r#"<line x1="{LEFT}" y1="{y}" x2="{}" y2="{y}" stroke="black"/>"#,
        LEFT + plot_w,
        y = TOP + plot_h
    );
    for t in 0..=4 {
        let v = lo + (hi - lo) * t as f64 / 4.0;
        let y = y_of(v);
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/><text x="{}" y="{:.2}" text-anchor="end">{v:.3}</text>"#,
            LEFT - 4.0,
            LEFT - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">hypervolume</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    let mut rng = seed::rng(seed::derive_label(0, title));
    for (i, (method, values)) in columns.iter().enumerate() {
        let cx = LEFT + band * (i as f64 + 0.5);
        let _ = writeln!(
            s,
            r#"<text x="{cx:.2}" y="{}" text-anchor="middle">{method}</text>"#,
            TOP + plot_h + 18.0
        );
        for &v in values {
            let jitter = rng.random_range(-0.25..0.25) * band;
            let _ = writeln!(
                s,
                r##"<circle cx="{:.2}" cy="{:.2}" r="3" fill="#1f77b4" fill-opacity="0.6"/>"##,
                cx + jitter,
                y_of(v)
            );
        }
        if !values.is_empty() {
            let y = y_of(median(values));
            let _ = writeln!(
                s,
                r#"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="crimson" stroke-width="2"/>"#,
                cx - band * 0.35,
                cx + band * 0.35
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

/// Writes `hypervolume_points.csv` and one SVG per run set into `out`.
/// Returns the written paths.
pub fn emit_plots(sets: &[Vec<RunSummary>], out: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out).map_err(|e| HarnessError::io(out, e))?;
    let mut rows = Vec::new();
    let mut written = Vec::new();
    for runs in sets {
        let Some(first) = runs.first() else { continue };
        let mut ordered: Vec<&RunSummary> = runs.iter().collect();
        ordered.sort_by_key(|r| r.config.method);
        let pair = first.config.metric_pair;
        let columns: Vec<(Method, Vec<f64>)> = ordered
            .iter()
            .map(|r| {
                (
                    r.config.method,
                    r.hypervolumes.iter().map(|h| h.hypervolume).collect(),
                )
            })
            .collect();
        for r in &ordered {
            rows.extend(r.hypervolumes.iter().map(|h| PlotRow {
                dataset: r.config.dataset_name.clone(),
                metric_pair: pair.to_string(),
                method: r.config.method,
                replicate: h.replicate,
                hypervolume: h.hypervolume,
            }));
        }
        let title = format!("{} {}", first.config.dataset_name, pair);
        let path = out.join(format!("{}_{}.svg", first.config.dataset_name, pair.slug()));
        fs::write(&path, strip_plot_svg(&title, &columns))
            .map_err(|e| HarnessError::io(&path, e))?;
        written.push(path);
    }
    let csv_path = out.join("hypervolume_points.csv");
    let mut w =
        csv::Writer::from_path(&csv_path).map_err(|e| HarnessError::Runtime(e.to_string()))?;
    for row in &rows {
        w.serialize(row)
            .map_err(|e| HarnessError::Runtime(e.to_string()))?;
    }
    w.flush().map_err(|e| HarnessError::io(&csv_path, e))?;
    written.insert(0, csv_path);
    Ok(written)
}
