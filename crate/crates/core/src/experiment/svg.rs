//! Minimal SVG line charts: one row per record, panels for NMSE, misses and extras.

use std::fmt::Write as _;

use super::harness::{AggregateRecord, AggregateSeries};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvgOptions {
    pub log_nmse: bool,
    pub panel_width: f64,
    pub panel_height: f64,
}

impl Default for SvgOptions {
    fn default() -> Self {
        SvgOptions { log_nmse: true, panel_width: 320.0, panel_height: 220.0 }
    }
}

const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
const MARGIN: f64 = 40.0;

fn panel_values(s: &AggregateSeries, panel: usize) -> &[f64] {
    match panel {
        0 => &s.nmse,
        1 => &s.misses,
        _ => &s.extras,
    }
}

fn transform(v: f64, log: bool) -> Option<f64> {
    if log {
        (v > 0.0).then(|| v.log10())
    } else {
        v.is_finite().then_some(v)
    }
}

pub fn render_svg(records: &[&AggregateRecord], opts: &SvgOptions) -> String {
    let w = opts.panel_width;
    let h = opts.panel_height;
    let total_w = 3.0 * (w + MARGIN) + MARGIN;
    let total_h = records.len().max(1) as f64 * (h + MARGIN) + MARGIN;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{total_w}" height="{total_h}" font-family="sans-serif" font-size="10">"#
    );
    for (row, rec) in records.iter().enumerate() {
        let cfg = &rec.config;
        let _ = writeln!(out, r#"<g class="regime" data-r="{}" data-d="{}">"#, cfg.r, cfg.d);
        for panel in 0..3 {
            let x0 = MARGIN + panel as f64 * (w + MARGIN);
            let y0 = MARGIN + row as f64 * (h + MARGIN);
            let log = panel == 0 && opts.log_nmse;
            let title = match panel {
                0 if log => "log10 NMSE",
                0 => "NMSE",
                1 => "misses",
                _ => "extras",
            };
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for s in &rec.series {
                for v in panel_values(s, panel).iter().filter_map(|v| transform(*v, log)) {
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
            if !lo.is_finite() {
                lo = 0.0;
                hi = 1.0;
            }
            if hi - lo < 1e-12 {
                hi = lo + 1.0;
            }
            let _ = writeln!(out, r#"<g class="panel" data-metric="{title}" transform="translate({x0},{y0})">"#);
            let _ = writeln!(out, r#"<rect width="{w}" height="{h}" fill="none" stroke="black"/>"#);
            let _ = writeln!(out, r#"<text x="0" y="-6">{title} (r={}, d={})</text>"#, cfg.r, cfg.d);
            let _ = writeln!(out, r#"<text x="-4" y="10" text-anchor="end">{hi:.3}</text>"#);
            let _ = writeln!(out, r#"<text x="-4" y="{h}" text-anchor="end">{lo:.3}</text>"#);
            let horizon = rec.horizon.max(2) as f64 - 1.0;
            for (k, s) in rec.series.iter().enumerate() {
                let mut pts = String::new();
                for (t, v) in panel_values(s, panel).iter().enumerate() {
                    if let Some(v) = transform(*v, log) {
                        let px = t as f64 / horizon * w;
                        let py = h - (v - lo) / (hi - lo) * h;
                        let _ = write!(pts, "{px:.2},{py:.2} ");
                    }
                }
                let color = COLORS[k % COLORS.len()];
                let _ = writeln!(
                    out,
                    r#"<polyline class="series" data-algorithm="{}" fill="none" stroke="{color}" points="{}"/>"#,
                    s.algorithm,
                    pts.trim_end()
                );
                if panel == 0 {
                    let _ = writeln!(out, r#"<text x="{}" y="{}" fill="{color}">{}</text>"#, w - 70.0, 14.0 + 12.0 * k as f64, s.algorithm);
                }
            }
            out.push_str("</g>\n");
        }
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    out
}
