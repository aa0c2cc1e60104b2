//! Minimal SVG scatter plots for two-dimensional sample sets.
//!
//! No plotting dependency is warranted for one figure kind: the output is a
//! fixed-size scatter with points colored by a scalar (low = blue, high =
//! red) and a short legend. Only `dim == 2` data is plottable; callers skip
//! the figure for anything else.

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 40.0;

/// Renders points colored by `values` (same length). Returns the SVG text.
/// Panics on length mismatch; an empty batch yields an empty plot frame.
pub fn scatter_svg(points: &[Vec<f64>], values: &[f64], title: &str) -> String {
    assert_eq!(points.len(), values.len(), "one value per point");
    assert!(
        points.iter().all(|p| p.len() == 2),
        "scatter plots need 2-d points"
    );

    let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in points {
        x_min = x_min.min(p[0]);
        x_max = x_max.max(p[0]);
        y_min = y_min.min(p[1]);
        y_max = y_max.max(p[1]);
    }
    if points.is_empty() {
        (x_min, x_max, y_min, y_max) = (-1.0, 1.0, -1.0, 1.0);
    }
    // Equal padding keeps degenerate (constant-coordinate) batches visible.
    let pad = |lo: &mut f64, hi: &mut f64| {
        let span = *hi - *lo;
        let pad = if span > 0.0 { 0.05 * span } else { 1.0 };
        *lo -= pad;
        *hi += pad;
    };
    pad(&mut x_min, &mut x_max);
    pad(&mut y_min, &mut y_max);

    let (v_min, v_max) = values.iter().fold(
        (f64::INFINITY, f64::NEG_INFINITY),
        |(lo, hi), &v| (lo.min(v), hi.max(v)),
    );

    let sx = |x: f64| MARGIN + (x - x_min) / (x_max - x_min) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y_min) / (y_max - y_min) * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{}\" height=\"{}\" fill=\"none\" \
         stroke=\"#888\" stroke-width=\"1\"/>\n",
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\" \
         text-anchor=\"middle\">{}</text>\n",
        WIDTH / 2.0,
        xml_escape(title)
    ));

    for (p, &v) in points.iter().zip(values) {
        let t = if v_max > v_min {
            (v - v_min) / (v_max - v_min)
        } else {
            0.5
        };
        svg.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{}\" fill-opacity=\"0.8\"/>\n",
            sx(p[0]),
            sy(p[1]),
            ramp(t)
        ));
    }

    if points.is_empty() {
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" \
             text-anchor=\"middle\" fill=\"#888\">no points</text>\n",
            WIDTH / 2.0,
            HEIGHT / 2.0
        ));
    } else {
        svg.push_str(&format!(
            "<text x=\"{MARGIN}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" \
             fill=\"#444\">low {} / high {}</text>\n",
            HEIGHT - 12.0,
            ramp(0.0),
            ramp(1.0)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Two-stop linear color ramp: blue at 0, red at 1.
fn ramp(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        lerp(0x2c as f64, 0xd7 as f64),
        lerp(0x7b as f64, 0x19 as f64),
        lerp(0xb6 as f64, 0x1c as f64)
    )
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
