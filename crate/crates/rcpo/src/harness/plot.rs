//! Learning-curve figures: a two-panel SVG (reward and constraint vs
//! environment steps) assembled by hand so identical inputs produce
//! byte-identical output.

use super::run::read_metrics_csv;
use crate::agents::MetricsRow;
use crate::error::{Error, Result};
use std::fmt::Write as _;
use std::path::Path;

const WIDTH: f64 = 900.0;
const PANEL_HEIGHT: f64 = 260.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 30.0;
const MARGIN_TOP: f64 = 34.0;
const PANEL_GAP: f64 = 56.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

struct Curve {
    label: String,
    rows: Vec<MetricsRow>,
}

/// Linear map from data space to pixel space.
struct Scale {
    lo: f64,
    span: f64,
    pix_lo: f64,
    pix_span: f64,
}

impl Scale {
    /// `flip` inverts the pixel direction (SVG y grows downward).
    fn new(lo: f64, hi: f64, pix_lo: f64, pix_span: f64, flip: bool) -> Self {
        let span = if hi > lo { hi - lo } else { 1.0 };
        if flip {
            Self {
                lo,
                span,
                pix_lo: pix_lo + pix_span,
                pix_span: -pix_span,
            }
        } else {
            Self {
                lo,
                span,
                pix_lo,
                pix_span,
            }
        }
    }

    fn at(&self, v: f64) -> f64 {
        self.pix_lo + (v - self.lo) / self.span * self.pix_span
    }
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo > hi {
        (0.0, 1.0)
    } else {
        (lo, hi)
    }
}

fn pad(lo: f64, hi: f64) -> (f64, f64) {
    let margin = 0.05 * (hi - lo).max(1e-9);
    (lo - margin, hi + margin)
}

fn fmt(v: f64) -> String {
    format!("{v:.4}")
}

#[allow(clippy::too_many_arguments)]
fn panel(
    out: &mut String,
    curves: &[Curve],
    value: impl Fn(&MetricsRow) -> f64,
    x: &Scale,
    top: f64,
    title: &str,
    dashed_at: Option<f64>,
) {
    let (mut lo, mut hi) = bounds(
        curves
            .iter()
            .flat_map(|c| c.rows.iter().map(&value)),
    );
    if let Some(a) = dashed_at {
        lo = lo.min(a);
        hi = hi.max(a);
    }
    let (lo, hi) = pad(lo, hi);
    let y = Scale::new(lo, hi, top, PANEL_HEIGHT, true);
    let (x0, x1) = (MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
    let (y0, y1) = (top + PANEL_HEIGHT, top);

    let _ = writeln!(
        out,
        r##"<rect x="{x0}" y="{y1}" width="{}" height="{PANEL_HEIGHT}" fill="none" stroke="#888" stroke-width="1"/>"##,
        x1 - x0
    );
    let _ = writeln!(
        out,
        r##"<text x="{x0}" y="{}" font-size="14" fill="#333">{title}</text>"##,
        y1 - 8.0
    );
    // Axis extremes as tick labels.
    let _ = writeln!(
        out,
        r##"<text x="{}" y="{}" font-size="11" fill="#555" text-anchor="end">{}</text>"##,
        x0 - 6.0,
        y0 + 4.0,
        fmt(lo)
    );
    let _ = writeln!(
        out,
        r##"<text x="{}" y="{}" font-size="11" fill="#555" text-anchor="end">{}</text>"##,
        x0 - 6.0,
        y1 + 4.0,
        fmt(hi)
    );
    if let Some(a) = dashed_at {
        let ya = y.at(a);
        let _ = writeln!(
            out,
            r##"<line x1="{x0}" y1="{ya:.2}" x2="{x1}" y2="{ya:.2}" stroke="#333" stroke-width="1.5" stroke-dasharray="7,5"/>"##
        );
        let _ = writeln!(
            out,
            r##"<text x="{}" y="{}" font-size="11" fill="#333">α={}</text>"##,
            x1 - 64.0,
            ya - 5.0,
            a
        );
    }
    for (i, curve) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut points = String::new();
        for row in &curve.rows {
            let _ = write!(
                points,
                "{:.2},{:.2} ",
                x.at(row.step as f64),
                y.at(value(row))
            );
        }
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.8"/>"#,
            points.trim_end()
        );
    }
}

/// Renders every CSV as one curve per panel: evaluation reward on top,
/// constraint below with a dashed line at `alpha`. Identical inputs yield
/// byte-identical SVG.
pub fn emit_plots(csv_paths: &[impl AsRef<Path>], out_path: &Path, alpha: Option<f64>) -> Result<()> {
    if csv_paths.is_empty() {
        return Err(Error::Empty("no metrics CSVs to plot".into()));
    }
    let mut curves = Vec::with_capacity(csv_paths.len());
    for p in csv_paths {
        let p = p.as_ref();
        let rows = read_metrics_csv(p)?;
        if rows.is_empty() {
            return Err(Error::Empty(format!("{} has no data rows", p.display())));
        }
        // Label curves by their distinguishing path component: the file
        // stem unless every input shares it (seed directories do).
        curves.push(Curve {
            label: curve_label(p),
            rows,
        });
    }

    let (step_lo, step_hi) = bounds(
        curves
            .iter()
            .flat_map(|c| c.rows.iter().map(|r| r.step as f64)),
    );
    let x = Scale::new(
        step_lo,
        step_hi,
        MARGIN_LEFT,
        WIDTH - MARGIN_LEFT - MARGIN_RIGHT,
        false,
    );

    let total_height = MARGIN_TOP + 2.0 * PANEL_HEIGHT + PANEL_GAP + 40.0;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{total_height}" viewBox="0 0 {WIDTH} {total_height}">"#
    );
    let _ = writeln!(
        svg,
        r#"<rect width="{WIDTH}" height="{total_height}" fill="white"/>"#
    );
    panel(
        &mut svg,
        &curves,
        |r| r.eval_reward_mean,
        &x,
        MARGIN_TOP,
        "evaluation reward vs steps",
        None,
    );
    let second_top = MARGIN_TOP + PANEL_HEIGHT + PANEL_GAP;
    panel(
        &mut svg,
        &curves,
        |r| r.eval_constraint_mean,
        &x,
        second_top,
        "evaluation constraint vs steps",
        alpha,
    );
    // Legend under the second panel.
    let legend_y = second_top + PANEL_HEIGHT + 24.0;
    let mut legend_x = MARGIN_LEFT;
    for (i, curve) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(
            svg,
            r#"<line x1="{legend_x}" y1="{}" x2="{}" y2="{}" stroke="{color}" stroke-width="3"/>"#,
            legend_y - 4.0,
            legend_x + 22.0,
            legend_y - 4.0
        );
        let _ = writeln!(
            svg,
            r##"<text x="{}" y="{legend_y}" font-size="12" fill="#333">{}</text>"##,
            legend_x + 28.0,
            xml_escape(&curve.label)
        );
        legend_x += 36.0 + 8.0 * curve.label.len() as f64;
    }
    let _ = writeln!(
        svg,
        r##"<text x="{}" y="{}" font-size="12" fill="#555" text-anchor="middle">environment steps</text>"##,
        (MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2.0,
        second_top + PANEL_HEIGHT + 42.0
    );
    svg.push_str("</svg>\n");
    std::fs::write(out_path, svg)?;
    Ok(())
}

/// File stem, qualified by the parent directory when that is what differs
/// (per-seed artifacts are all named `metrics.csv`).
fn curve_label(path: &Path) -> String {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    match path.parent().and_then(|p| p.file_name()) {
        Some(dir) => format!("{}/{stem}", dir.to_string_lossy()),
        None => stem,
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
