//! Static SVG rendering of trajectories in the Cartesian plane.

use std::fmt::Write;

use singrad_core::Point;

const SIZE: f64 = 800.0;

/// One polyline per trajectory, the unit circle, and a marker at the origin.
pub fn render(paths: &[Vec<Point>], title: &str) -> String {
    let extent = paths
        .iter()
        .flatten()
        .map(|p| p[0].abs().max(p[1].abs()))
        .filter(|v| v.is_finite())
        .fold(1.0f64, f64::max)
        * 1.05;
    let scale = SIZE / (2.0 * extent);
    let map = |p: &Point| (SIZE / 2.0 + p[0] * scale, SIZE / 2.0 - p[1] * scale);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(s, "<title>{}</title>", escape(title));
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let c = SIZE / 2.0;
    let _ = writeln!(
        s,
        r##"<circle cx="{c}" cy="{c}" r="{:.3}" fill="none" stroke="#888" stroke-dasharray="4 3"/>"##,
        scale
    );
    for (i, path) in paths.iter().enumerate() {
        let hue = (i * 360) / paths.len().max(1);
        let _ = write!(
            s,
            r#"<polyline fill="none" stroke="hsl({hue},70%,40%)" stroke-width="1" points=""#
        );
        for p in path.iter().filter(|p| p[0].is_finite() && p[1].is_finite()) {
            let (x, y) = map(p);
            let _ = write!(s, "{x:.3},{y:.3} ");
        }
        let _ = writeln!(s, r#""/>"#);
    }
    let _ = writeln!(s, r#"<circle cx="{c}" cy="{c}" r="3" fill="red"/>"#);
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn draws_every_element() {
        let svg = render(
            &[vec![[0.5, 0.0], [0.0, 0.4]], vec![[2.0, 0.0]]],
            "S3 <test>",
        );
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert_eq!(svg.matches("<circle").count(), 2);
        assert!(svg.contains("S3 &lt;test&gt;"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }
}
