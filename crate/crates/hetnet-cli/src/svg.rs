//! Minimal standalone SVG renderer for time-series and pentacle plots.

use std::fmt::Write as _;

const WIDTH: f64 = 880.0;
const HEIGHT: f64 = 520.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 120.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 50.0;
const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];
/// Log plots clamp values below this.
pub const LOG_FLOOR: f64 = 1e-16;

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

fn axis_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        if v.is_finite() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if !lo.is_finite() || !hi.is_finite() {
        (0.0, 1.0)
    } else if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        let pad = 0.03 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

fn ticks(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..=count)
        .map(|i| lo + (hi - lo) * i as f64 / count as f64)
        .collect()
}

/// Render line series on shared axes. `provenance` is embedded as a
/// comment so outputs carry their scenario hash and seed.
pub fn line_plot(
    series: &[Series],
    x_label: &str,
    y_label: &str,
    log_y: bool,
    provenance: &str,
) -> String {
    let (x_lo, x_hi) = axis_range(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let transform = |v: f64| if log_y { v.max(LOG_FLOOR).log10() } else { v };
    let (y_lo, y_hi) = axis_range(
        series
            .iter()
            .flat_map(|s| s.points.iter().map(|p| transform(p.1))),
    );
    let px = |x: f64| MARGIN_L + (x - x_lo) / (x_hi - x_lo) * (WIDTH - MARGIN_L - MARGIN_R);
    let py = |y: f64| HEIGHT - MARGIN_B - (y - y_lo) / (y_hi - y_lo) * (HEIGHT - MARGIN_T - MARGIN_B);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = writeln!(svg, "<!-- {provenance} -->");
    let _ = writeln!(
        svg,
        "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>"
    );
    // Axes.
    let _ = writeln!(
        svg,
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        MARGIN_L,
        HEIGHT - MARGIN_B,
        WIDTH - MARGIN_R,
        HEIGHT - MARGIN_B
    );
    let _ = writeln!(
        svg,
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        MARGIN_L,
        MARGIN_T,
        MARGIN_L,
        HEIGHT - MARGIN_B
    );
    for t in ticks(x_lo, x_hi, 6) {
        let x = px(t);
        let _ = writeln!(
            svg,
            "<line x1=\"{x}\" y1=\"{}\" x2=\"{x}\" y2=\"{}\" stroke=\"black\"/>",
            HEIGHT - MARGIN_B,
            HEIGHT - MARGIN_B + 5.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{x}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">{t:.0}</text>",
            HEIGHT - MARGIN_B + 20.0
        );
    }
    for t in ticks(y_lo, y_hi, 6) {
        let y = py(t);
        let label = if log_y {
            format!("1e{t:.0}")
        } else {
            format!("{t:.2}")
        };
        let _ = writeln!(
            svg,
            "<line x1=\"{}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"black\"/>",
            MARGIN_L - 5.0,
            MARGIN_L
        );
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"end\">{label}</text>",
            MARGIN_L - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\">{x_label}</text>",
        (MARGIN_L + WIDTH - MARGIN_R) / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(
        svg,
        "<text x=\"16\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{y_label}</text>",
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    // Series, downsampled to a bounded path length.
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let stride = (s.points.len() / 4000).max(1);
        let mut path = String::new();
        for (q, (x, y)) in s.points.iter().enumerate() {
            if q % stride != 0 && q != s.points.len() - 1 {
                continue;
            }
            let cmd = if path.is_empty() { 'M' } else { 'L' };
            let _ = write!(path, "{cmd}{:.2} {:.2} ", px(*x), py(transform(*y)));
        }
        let _ = writeln!(
            svg,
            "<path d=\"{path}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.2\"/>"
        );
        let ly = MARGIN_T + 18.0 * i as f64;
        let _ = writeln!(
            svg,
            "<line x1=\"{}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"3\"/>",
            WIDTH - MARGIN_R + 10.0,
            WIDTH - MARGIN_R + 34.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-size=\"12\">{}</text>",
            WIDTH - MARGIN_R + 40.0,
            ly + 4.0,
            s.label
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Pentacle path plot: the projected trajectory plus the five projected
/// axis equilibria on the unit pentagon.
pub fn pentacle_plot(points: &[(f64, f64)], provenance: &str) -> String {
    let size = HEIGHT;
    let scale = (size / 2.0 - 40.0) / 1.1;
    let cx = size / 2.0;
    let cy = size / 2.0;
    let px = |x: f64| cx + x * scale;
    let py = |y: f64| cy - y * scale;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{size}\" height=\"{size}\" viewBox=\"0 0 {size} {size}\">"
    );
    let _ = writeln!(svg, "<!-- {provenance} -->");
    let _ = writeln!(svg, "<rect width=\"{size}\" height=\"{size}\" fill=\"white\"/>");
    for j in 1..=5 {
        let angle = std::f64::consts::TAU * j as f64 / 5.0;
        let (x, y) = (px(angle.cos()), py(angle.sin()));
        let _ = writeln!(svg, "<circle cx=\"{x:.1}\" cy=\"{y:.1}\" r=\"4\" fill=\"#333\"/>");
        let _ = writeln!(
            svg,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"13\" text-anchor=\"middle\">xi{j}</text>",
            px(1.08 * angle.cos()),
            py(1.08 * angle.sin()) + 4.0
        );
    }
    let stride = (points.len() / 8000).max(1);
    let mut path = String::new();
    for (q, (x, y)) in points.iter().enumerate() {
        if q % stride != 0 && q != points.len() - 1 {
            continue;
        }
        let cmd = if path.is_empty() { 'M' } else { 'L' };
        let _ = write!(path, "{cmd}{:.2} {:.2} ", px(*x), py(*y));
    }
    let _ = writeln!(
        svg,
        "<path d=\"{path}\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"0.8\"/>"
    );
    svg.push_str("</svg>\n");
    svg
}
