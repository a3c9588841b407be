//! Minimal SVG scatter plots of landmark maps.
//!
//! Each map is drawn in its own square panel with equal axis scaling, one
//! dot and one id label per landmark. 3-D maps are projected onto `x-y`.
//! Coordinates are printed with fixed precision so the output is stable.

use std::fmt::Write;

use landmark2vec::LandmarkMap;

const PANEL: f64 = 420.0;
const PAD: f64 = 40.0;
const TITLE_H: f64 = 28.0;

fn panel(out: &mut String, title: &str, map: &LandmarkMap, x0: f64) {
    let (mut min_x, mut max_x) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut min_y, mut max_y) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in map.coords() {
        min_x = min_x.min(p[0]);
        max_x = max_x.max(p[0]);
        min_y = min_y.min(p[1]);
        max_y = max_y.max(p[1]);
    }
    let span = (max_x - min_x).max(max_y - min_y);
    let span = if span > 0.0 { span } else { 1.0 };
    let inner = PANEL - 2.0 * PAD;
    let k = inner / span;
    // center the data inside the panel
    let off_x = x0 + PAD + (inner - (max_x - min_x) * k) / 2.0;
    let off_y = TITLE_H + PAD + (inner - (max_y - min_y) * k) / 2.0;

    let _ = writeln!(
        out,
        r##"  <rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#bbbbbb"/>"##,
        x0 + 4.0,
        TITLE_H,
        PANEL - 8.0,
        PANEL - 4.0
    );
    let _ = writeln!(
        out,
        r#"  <text x="{:.2}" y="20" text-anchor="middle" font-family="sans-serif" font-size="15">{}</text>"#,
        x0 + PANEL / 2.0,
        escape(title)
    );
    for (id, p) in map.ids().iter().zip(map.coords()) {
        let sx = off_x + (p[0] - min_x) * k;
        // SVG y grows downwards
        let sy = off_y + (max_y - p[1]) * k;
        let _ = writeln!(
            out,
            r##"  <circle cx="{sx:.2}" cy="{sy:.2}" r="4" fill="#dd3355"/>"##
        );
        let _ = writeln!(
            out,
            r#"  <text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11">{id}</text>"#,
            sx + 6.0,
            sy - 6.0
        );
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Renders one panel per `(title, map)`, left to right.
pub fn render_svg(panels: &[(&str, &LandmarkMap)]) -> String {
    let width = PANEL * panels.len() as f64;
    let height = PANEL + TITLE_H;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}">"#
    );
    let _ = writeln!(out, r#"  <rect width="100%" height="100%" fill="white"/>"#);
    for (i, (title, map)) in panels.iter().enumerate() {
        panel(&mut out, title, map, i as f64 * PANEL);
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use landmark2vec::{make_layout, Layout};

    #[test]
    fn one_dot_and_label_per_landmark() {
        let map = make_layout(&Layout::circle(30, 10.0)).unwrap();
        let svg = render_svg(&[("true", &map)]);
        assert_eq!(svg.matches("<circle").count(), 30);
        for id in 0..30 {
            assert!(svg.contains(&format!(">{id}</text>")));
        }
        assert_eq!(svg, render_svg(&[("true", &map)]));
    }

    #[test]
    fn two_panels_side_by_side() {
        let map = make_layout(&Layout::circle(5, 1.0)).unwrap();
        let svg = render_svg(&[("true", &map), ("estimated <1>", &map)]);
        assert!(svg.contains(r#"width="840""#));
        assert_eq!(svg.matches("<circle").count(), 10);
        assert!(svg.contains("estimated &lt;1&gt;"));
    }

    #[test]
    fn single_point_does_not_divide_by_zero() {
        let map = LandmarkMap::new(2, vec![vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let svg = render_svg(&[("flat", &map)]);
        assert!(!svg.contains("NaN") && !svg.contains("inf"));
    }
}
