//! Litmus plots (sign as colour, normalized magnitude as opacity) and
//! score-distribution line plots.

use std::fmt::Write as _;
use std::path::Path;

use super::results::RunResults;
use crate::error::{Error, Result};
use crate::gpa::ScoreDistribution;

const RED: &str = "#d62728";
const BLUE: &str = "#1f77b4";
const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

/// Divides a row by its largest magnitude; an all-zero row stays zero.
pub fn normalize_row(scores: &[f64]) -> Vec<f64> {
    let peak = scores.iter().fold(0.0f64, |a, s| a.max(s.abs()));
    if peak == 0.0 {
        return vec![0.0; scores.len()];
    }
    scores.iter().map(|s| s / peak).collect()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// One row per method, one column per variable.
pub fn litmus_svg(methods: &[(&str, &[f64])], variables: &[String]) -> Result<String> {
    if methods.is_empty() || variables.is_empty() {
        return Err(Error::InvalidConfig(
            "litmus plot needs at least one method and one variable".into(),
        ));
    }
    let cell = 40.0;
    let left = 90.0;
    let top = 60.0;
    let width = left + cell * variables.len() as f64 + 10.0;
    let height = top + cell * methods.len() as f64 + 10.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>"#
    );
    for (j, name) in variables.iter().enumerate() {
        let x = left + cell * (j as f64 + 0.5);
        let _ = writeln!(
            s,
            r#"<text class="variable" x="{x}" y="{}" font-size="11" text-anchor="end" transform="rotate(-45 {x} {})">{}</text>"#,
            top - 6.0,
            top - 6.0,
            escape(name)
        );
    }
    for (i, (method, scores)) in methods.iter().enumerate() {
        if scores.len() != variables.len() {
            return Err(Error::DimensionMismatch {
                expected: variables.len(),
                got: scores.len(),
            });
        }
        let y = top + cell * i as f64;
        let _ = writeln!(
            s,
            r#"<text class="method" x="{}" y="{}" font-size="12" text-anchor="end">{}</text>"#,
            left - 8.0,
            y + cell * 0.6,
            escape(method)
        );
        for (j, v) in normalize_row(scores).iter().enumerate() {
            let x = left + cell * j as f64;
            let colour = if *v < 0.0 { BLUE } else { RED };
            let _ = writeln!(
                s,
                r#"<rect class="cell" x="{x}" y="{y}" width="{cell}" height="{cell}" fill="{colour}" fill-opacity="{:.6}" stroke="lightgray"/>"#,
                v.abs()
            );
        }
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn emit_litmus_svg(results: &RunResults, path: impl AsRef<Path>) -> Result<()> {
    let rows: Vec<(&str, &[f64])> = results
        .ordered_methods()
        .into_iter()
        .map(|m| (m, results.methods[m].scores.as_slice()))
        .collect();
    let names = if results.variable_names.is_empty() {
        let m = rows.first().map_or(0, |r| r.1.len());
        (1..=m).map(|i| format!("x{i}")).collect()
    } else {
        results.variable_names.clone()
    };
    std::fs::write(path, litmus_svg(&rows, &names)?)?;
    Ok(())
}

/// One curve per variable on shared axes, with the MAP value marked.
pub fn distribution_svg(dists: &[ScoreDistribution<f64>], map_point: &[f64], names: &[String]) -> Result<String> {
    let Some(first) = dists.first() else {
        return Err(Error::InvalidConfig("no distributions to plot".into()));
    };
    if map_point.len() != dists.len() {
        return Err(Error::DimensionMismatch {
            expected: dists.len(),
            got: map_point.len(),
        });
    }
    let lo = first.grid[0];
    let hi = first.grid[first.grid.len() - 1];
    if dists.iter().any(|d| d.grid[0] != lo || d.grid[d.grid.len() - 1] != hi) {
        return Err(Error::InvalidConfig("distributions must share one grid range".into()));
    }
    let pmax = dists.iter().flat_map(|d| d.probs.iter()).fold(0.0f64, |a, &p| a.max(p));
    let pmax = if pmax > 0.0 { pmax * 1.05 } else { 1.0 };
    let (w, h) = (640.0, 400.0);
    let (left, right, top, bottom) = (60.0, 150.0, 20.0, 40.0);
    let px = |v: f64| left + (v - lo) / (hi - lo) * (w - left - right);
    let py = |p: f64| h - bottom - p / pmax * (h - top - bottom);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<line class="axis" x1="{left}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        h - bottom,
        w - right,
        h - bottom
    );
    let _ = writeln!(
        s,
        r#"<line class="axis" x1="{left}" y1="{top}" x2="{left}" y2="{}" stroke="black"/>"#,
        h - bottom
    );
    for (v, anchor) in [(lo, "start"), (0.0, "middle"), (hi, "end")] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="11" text-anchor="{anchor}">{v:.3}</text>"#,
            px(v),
            h - bottom + 16.0
        );
    }
    for (k, d) in dists.iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        let points: Vec<String> = d
            .grid
            .iter()
            .zip(&d.probs)
            .map(|(&g, &p)| format!("{:.3},{:.3}", px(g), py(p)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline class="curve" fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#,
            points.join(" ")
        );
        let mx = px(map_point[k].clamp(lo, hi));
        let _ = writeln!(
            s,
            r#"<line class="map" x1="{mx:.3}" y1="{top}" x2="{mx:.3}" y2="{}" stroke="{colour}" stroke-dasharray="4 3"/>"#,
            h - bottom
        );
        let name = names.get(k).cloned().unwrap_or_else(|| format!("x{}", k + 1));
        let ly = top + 16.0 * (k as f64 + 1.0);
        let _ = writeln!(
            s,
            r#"<text class="legend" x="{}" y="{ly}" font-size="11" fill="{colour}">{}</text>"#,
            w - right + 12.0,
            escape(&name)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn emit_distribution_svg(
    dists: &[ScoreDistribution<f64>],
    map_point: &[f64],
    names: &[String],
    path: impl AsRef<Path>,
) -> Result<()> {
    std::fs::write(path, distribution_svg(dists, map_point, names)?)?;
    Ok(())
}
