//! Minimal SVG line plots.

use std::fmt::Write;

const WIDTH: f64 = 800.0;
const PANEL_HEIGHT: f64 = 240.0;
const MARGIN: f64 = 50.0;
const MAX_POINTS: usize = 2000;

pub struct Series<'a> {
    pub label: &'a str,
    pub unit: &'a str,
    pub values: &'a [f64],
}

fn range(values: &[f64]) -> (f64, f64) {
    let (lo, hi) = values
        .iter()
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| {
            (l.min(v), h.max(v))
        });
    if !lo.is_finite() {
        return (-1.0, 1.0);
    }
    if hi - lo < 1e-12 * hi.abs().max(1.0) {
        return (lo - 1.0, hi + 1.0);
    }
    (lo, hi)
}

/// One stacked panel per series, sharing the time axis.
pub fn plot(t: &[f64], series: &[Series<'_>]) -> String {
    let height = MARGIN + series.len() as f64 * (PANEL_HEIGHT + MARGIN);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (t0, t1) = range(t);
    let stride = t.len().div_ceil(MAX_POINTS).max(1);
    let plot_w = WIDTH - 2.0 * MARGIN;

    for (k, s) in series.iter().enumerate() {
        let top = MARGIN + k as f64 * (PANEL_HEIGHT + MARGIN);
        let (lo, hi) = range(s.values);
        let x = |tv: f64| MARGIN + (tv - t0) / (t1 - t0) * plot_w;
        let y = |v: f64| top + PANEL_HEIGHT - (v - lo) / (hi - lo) * PANEL_HEIGHT;
        let _ = writeln!(
            out,
            r#"<rect x="{MARGIN}" y="{top}" width="{plot_w}" height="{PANEL_HEIGHT}" fill="none" stroke="black"/>"#
        );
        let _ = writeln!(
            out,
            r#"<text x="{MARGIN}" y="{:.1}">{} [{}]</text>"#,
            top - 8.0,
            s.label,
            s.unit
        );
        let _ = writeln!(
            out,
            r#"<text x="5" y="{:.1}">{hi:.4}</text><text x="5" y="{:.1}">{lo:.4}</text>"#,
            top + 12.0,
            top + PANEL_HEIGHT
        );
        let _ = writeln!(
            out,
            r#"<text x="{MARGIN}" y="{:.1}">{t0:.3} s</text><text x="{:.1}" y="{:.1}" text-anchor="end">{t1:.3} s</text>"#,
            top + PANEL_HEIGHT + 15.0,
            WIDTH - MARGIN,
            top + PANEL_HEIGHT + 15.0
        );
        out.push_str(r#"<polyline fill="none" stroke="steelblue" stroke-width="1" points=""#);
        for (tv, v) in t.iter().zip(s.values).step_by(stride) {
            if v.is_finite() {
                let _ = write!(out, "{:.2},{:.2} ", x(*tv), y(*v));
            }
        }
        out.push_str("\"/>\n");
    }
    out.push_str("</svg>\n");
    out
}
