//! Hand-rolled SVG emission: a line chart for profiles along the membrane
//! and a flat-shaded triangle colormap for bulk fields. Self-contained
//! documents, no external viewer dependencies.

use super::HarnessError;
use crate::geometry::Vec2;

pub struct Curve {
    pub label: String,
    /// CSS color, e.g. `#1f77b4`.
    pub color: String,
    pub points: Vec<(f64, f64)>,
}

const W: f64 = 720.0;
const H: f64 = 480.0;
const ML: f64 = 74.0;
const MR: f64 = 150.0;
const MT: f64 = 42.0;
const MB: f64 = 52.0;

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (1e-3..1e4).contains(&a) {
        format!("{v:.3}")
    } else {
        format!("{v:.2e}")
    }
}

/// Linear interpolation between two RGB colors, t in [0, 1].
pub(super) fn blend_color(from: (u8, u8, u8), to: (u8, u8, u8), t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let c = |a: u8, b: u8| (a as f64 + (b as f64 - a as f64) * t).round() as u8;
    format!("rgb({},{},{})", c(from.0, to.0), c(from.1, to.1), c(from.2, to.2))
}

fn padded_range(lo: f64, hi: f64) -> (f64, f64) {
    if hi - lo > 1e-12 {
        (lo, hi)
    } else {
        // Flat data still gets a visible band.
        let pad = lo.abs().max(1.0) * 0.1;
        (lo - pad, hi + pad)
    }
}

/// Renders labeled curves into a complete SVG document. Errors when there is
/// no data point at all.
pub fn line_chart(
    title: &str,
    x_label: &str,
    y_label: &str,
    curves: &[Curve],
) -> Result<String, HarnessError> {
    let pts = || curves.iter().flat_map(|c| c.points.iter());
    if pts().count() == 0 {
        return Err(HarnessError::Config("no data to plot".into()));
    }
    let (mut x_lo, mut x_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_lo, mut y_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts() {
        if !(x.is_finite() && y.is_finite()) {
            return Err(HarnessError::Config("non-finite data point".into()));
        }
        x_lo = x_lo.min(x);
        x_hi = x_hi.max(x);
        y_lo = y_lo.min(y);
        y_hi = y_hi.max(y);
    }
    let (x_lo, x_hi) = padded_range(x_lo, x_hi);
    let (y_lo, y_hi) = padded_range(y_lo, y_hi);
    let sx = |x: f64| ML + (x - x_lo) / (x_hi - x_lo) * (W - ML - MR);
    let sy = |y: f64| H - MB - (y - y_lo) / (y_hi - y_lo) * (H - MT - MB);

    let mut svg = String::with_capacity(16 * 1024);
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\">\n"
    ));
    svg.push_str(&format!("<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n"));
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">{}</text>\n",
        (ML + W - MR) / 2.0,
        esc(title)
    ));

    // Frame and ticks.
    svg.push_str(&format!(
        "<rect x=\"{ML}\" y=\"{MT}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" stroke=\"#444\"/>\n",
        W - ML - MR,
        H - MT - MB
    ));
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let xv = x_lo + f * (x_hi - x_lo);
        let yv = y_lo + f * (y_hi - y_lo);
        let px = sx(xv);
        let py = sy(yv);
        svg.push_str(&format!(
            "<line x1=\"{px:.1}\" y1=\"{:.1}\" x2=\"{px:.1}\" y2=\"{:.1}\" stroke=\"#444\"/>\n",
            H - MB,
            H - MB + 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{px:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"11\">{}</text>\n",
            H - MB + 18.0,
            fmt_tick(xv)
        ));
        svg.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{py:.1}\" x2=\"{ML}\" y2=\"{py:.1}\" stroke=\"#444\"/>\n",
            ML - 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" font-size=\"11\">{}</text>\n",
            ML - 8.0,
            py + 4.0,
            fmt_tick(yv)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"13\">{}</text>\n",
        (ML + W - MR) / 2.0,
        H - 14.0,
        esc(x_label)
    ));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{:.1}\" font-size=\"13\" transform=\"rotate(-90 16 {:.1})\" \
         text-anchor=\"middle\">{}</text>\n",
        (MT + H - MB) / 2.0,
        (MT + H - MB) / 2.0,
        esc(y_label)
    ));

    for c in curves {
        if c.points.is_empty() {
            continue;
        }
        let mut points = String::with_capacity(c.points.len() * 12);
        for &(x, y) in &c.points {
            let _ = std::fmt::Write::write_fmt(
                &mut points,
                format_args!("{:.2},{:.2} ", sx(x), sy(y)),
            );
        }
        svg.push_str(&format!(
            "<polyline class=\"profile\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" \
             points=\"{}\"/>\n",
            c.color,
            points.trim_end()
        ));
    }

    // Legend column on the right.
    for (i, c) in curves.iter().enumerate() {
        let y = MT + 14.0 + i as f64 * 18.0;
        svg.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"{}\" stroke-width=\"2\"/>\n",
            W - MR + 12.0,
            W - MR + 34.0,
            c.color
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\">{}</text>\n",
            W - MR + 40.0,
            y + 4.0,
            esc(&c.label)
        ));
    }

    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Diverging color for a normalized value t in [0, 1]: blue through white
/// to red.
fn diverging(t: f64) -> String {
    if t < 0.5 {
        blend_color((49, 54, 149), (247, 247, 247), t * 2.0)
    } else {
        blend_color((247, 247, 247), (165, 0, 38), (t - 0.5) * 2.0)
    }
}

/// Flat-shaded colormap of a per-vertex field on a triangle mesh, with a
/// colorbar. The field length must match the vertex count.
pub fn triangle_colormap(
    vertices: &[Vec2],
    triangles: &[[usize; 3]],
    vertex_values: &[f64],
    title: &str,
) -> Result<String, HarnessError> {
    if triangles.is_empty() || vertices.is_empty() {
        return Err(HarnessError::Config("empty mesh".into()));
    }
    if vertex_values.len() != vertices.len() {
        return Err(HarnessError::Config(format!(
            "field length {} does not match vertex count {}",
            vertex_values.len(),
            vertices.len()
        )));
    }

    let (mut x_lo, mut x_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_lo, mut y_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in vertices {
        x_lo = x_lo.min(v[0]);
        x_hi = x_hi.max(v[0]);
        y_lo = y_lo.min(v[1]);
        y_hi = y_hi.max(v[1]);
    }
    let (v_lo, v_hi) = padded_range(
        vertex_values.iter().copied().fold(f64::INFINITY, f64::min),
        vertex_values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    );

    let plot_w = 600.0;
    let margin = 40.0;
    let scale = ((plot_w - 2.0 * margin) / (x_hi - x_lo))
        .min((plot_w - 2.0 * margin) / (y_hi - y_lo).max(1e-12));
    let height = (y_hi - y_lo) * scale + 2.0 * margin + 30.0;
    let width = plot_w + 110.0;
    let sx = |x: f64| margin + (x - x_lo) * scale;
    let sy = |y: f64| height - margin - (y - y_lo) * scale;

    let mut svg = String::with_capacity(triangles.len() * 64);
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" \
         viewBox=\"0 0 {width:.0} {height:.0}\" font-family=\"sans-serif\">\n"
    ));
    svg.push_str(&format!("<rect width=\"{width:.0}\" height=\"{height:.0}\" fill=\"white\"/>\n"));
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"22\" text-anchor=\"middle\" font-size=\"16\">{}</text>\n",
        plot_w / 2.0,
        esc(title)
    ));

    for tri in triangles {
        let mean = (vertex_values[tri[0]] + vertex_values[tri[1]] + vertex_values[tri[2]]) / 3.0;
        let t = (mean - v_lo) / (v_hi - v_lo);
        let mut points = String::with_capacity(40);
        for &i in tri {
            let _ = std::fmt::Write::write_fmt(
                &mut points,
                format_args!("{:.1},{:.1} ", sx(vertices[i][0]), sy(vertices[i][1])),
            );
        }
        svg.push_str(&format!(
            "<polygon points=\"{}\" fill=\"{}\" stroke=\"{}\" stroke-width=\"0.3\"/>\n",
            points.trim_end(),
            diverging(t),
            diverging(t)
        ));
    }

    // Colorbar.
    let bar_x = plot_w + 20.0;
    let bar_h = height - 2.0 * margin - 30.0;
    let n_rect = 24;
    for k in 0..n_rect {
        let t = 1.0 - (k as f64 + 0.5) / n_rect as f64;
        svg.push_str(&format!(
            "<rect x=\"{bar_x:.1}\" y=\"{:.1}\" width=\"18\" height=\"{:.2}\" fill=\"{}\"/>\n",
            margin + 20.0 + bar_h * k as f64 / n_rect as f64,
            bar_h / n_rect as f64 + 0.5,
            diverging(t)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\">{}</text>\n",
        bar_x + 24.0,
        margin + 26.0,
        fmt_tick(v_hi)
    ));
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\">{}</text>\n",
        bar_x + 24.0,
        margin + 22.0 + bar_h,
        fmt_tick(v_lo)
    ));

    svg.push_str("</svg>\n");
    Ok(svg)
}
