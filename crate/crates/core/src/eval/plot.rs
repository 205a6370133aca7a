//! Self-contained SVG chart: four panels (translation and rotation, each in
//! both selection modes), one color-coded line per noise level.

use std::fmt::Write;

use super::{ErrorMetric, PrecisionCurve, SelectionMode};

const PANEL_W: f64 = 420.0;
const PANEL_H: f64 = 300.0;
const MARGIN: f64 = 55.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#2ca02c", "#bcbd22", "#ff7f0e", "#d62728", "#9467bd"];

fn color(i: usize, n: usize) -> String {
    if n <= PALETTE.len() {
        PALETTE[i].to_string()
    } else {
        let hue = 240.0 * (1.0 - i as f64 / (n - 1) as f64);
        format!("hsl({hue:.0},70%,45%)")
    }
}

fn panel_title(metric: ErrorMetric, mode: SelectionMode) -> &'static str {
    match (metric, mode) {
        (ErrorMetric::TranslationRel, SelectionMode::AllDetections) => "(a) translation, all detections",
        (ErrorMetric::TranslationRel, SelectionMode::MaxVotesOnly) => "(b) translation, most votes",
        (ErrorMetric::RotationDeg, SelectionMode::AllDetections) => "(c) rotation, all detections",
        (ErrorMetric::RotationDeg, SelectionMode::MaxVotesOnly) => "(d) rotation, most votes",
    }
}

fn x_label(metric: ErrorMetric) -> &'static str {
    match metric {
        ErrorMetric::TranslationRel => "translation threshold [% of diameter]",
        ErrorMetric::RotationDeg => "rotation threshold [deg]",
    }
}

fn x_scale(metric: ErrorMetric) -> f64 {
    match metric {
        ErrorMetric::TranslationRel => 100.0,
        ErrorMetric::RotationDeg => 1.0,
    }
}

/// Renders the curves as one SVG document. `diameter` converts sigma to a
/// percentage for the legend.
pub fn render_svg(curves: &[PrecisionCurve], diameter: f64) -> String {
    let mut sigmas: Vec<f64> = curves.iter().map(|c| c.noise_sigma).collect();
    sigmas.sort_by(f64::total_cmp);
    sigmas.dedup();

    let width = 2.0 * (PANEL_W + 2.0 * MARGIN) + 160.0;
    let height = 2.0 * (PANEL_H + 2.0 * MARGIN);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);

    let layout = [
        (ErrorMetric::TranslationRel, SelectionMode::AllDetections, 0, 0),
        (ErrorMetric::TranslationRel, SelectionMode::MaxVotesOnly, 1, 0),
        (ErrorMetric::RotationDeg, SelectionMode::AllDetections, 0, 1),
        (ErrorMetric::RotationDeg, SelectionMode::MaxVotesOnly, 1, 1),
    ];
    for (metric, mode, col, row) in layout {
        let ox = col as f64 * (PANEL_W + 2.0 * MARGIN) + MARGIN;
        let oy = row as f64 * (PANEL_H + 2.0 * MARGIN) + MARGIN;
        let panel: Vec<&PrecisionCurve> = curves
            .iter()
            .filter(|c| c.metric == metric && c.selection_mode == mode)
            .collect();
        let k = x_scale(metric);
        let (lo, hi) = panel
            .iter()
            .flat_map(|c| c.thresholds.iter())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &t| (a.min(t), b.max(t)));
        let (lo, hi) = if lo.is_finite() && hi > lo { (lo * k, hi * k) } else { (0.0, 1.0) };
        let px = |x: f64| ox + (x * k - lo) / (hi - lo) * PANEL_W;
        let py = |y: f64| oy + (1.0 - y) * PANEL_H;

        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-weight="bold">{}</text>"#,
            ox,
            oy - 12.0,
            panel_title(metric, mode)
        );
        let _ = writeln!(
            s,
            r##"<rect x="{ox:.1}" y="{oy:.1}" width="{PANEL_W}" height="{PANEL_H}" fill="none" stroke="#333"/>"##
        );
        for i in 0..=5 {
            let v = i as f64 / 5.0;
            let y = py(v);
            let _ = writeln!(
                s,
                r##"<line x1="{ox:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">{v:.1}</text>"##,
                ox + PANEL_W,
                ox - 6.0,
                y + 4.0
            );
            let xv = lo + v * (hi - lo);
            let x = ox + v * PANEL_W;
            let _ = writeln!(
                s,
                r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">{xv:.1}</text>"#,
                oy + PANEL_H + 16.0
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            ox + PANEL_W / 2.0,
            oy + PANEL_H + 34.0,
            x_label(metric)
        );
        let _ = writeln!(
            s,
            r#"<text transform="translate({:.1},{:.1}) rotate(-90)" text-anchor="middle">precision</text>"#,
            ox - 38.0,
            oy + PANEL_H / 2.0
        );
        for c in panel {
            let i = sigmas.iter().position(|&x| x == c.noise_sigma).unwrap_or(0);
            let points: Vec<String> = c
                .thresholds
                .iter()
                .zip(&c.precision)
                .map(|(&t, &p)| format!("{:.2},{:.2}", px(t), py(p)))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{}" stroke-width="2" points="{}"/>"#,
                color(i, sigmas.len()),
                points.join(" ")
            );
        }
    }

    let lx = 2.0 * (PANEL_W + 2.0 * MARGIN) + 10.0;
    let _ = writeln!(s, r#"<text x="{lx:.1}" y="{MARGIN:.1}" font-weight="bold">noise sigma</text>"#);
    for (i, sigma) in sigmas.iter().enumerate() {
        let y = MARGIN + 20.0 * (i + 1) as f64;
        let label = if diameter > 0.0 {
            format!("{:.1}% ({sigma:.4})", 100.0 * sigma / diameter)
        } else {
            format!("{sigma:.4}")
        };
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{}" stroke-width="3"/><text x="{:.1}" y="{y:.1}">{label}</text>"#,
            y - 4.0,
            lx + 24.0,
            y - 4.0,
            color(i, sigmas.len()),
            lx + 30.0
        );
    }
    s.push_str("</svg>\n");
    s
}
