//! Polyline sketches of walk paths. Sphere paths are drawn through the
//! embedding, viewed along the first ambient axis.

use std::fmt::Write;

use geowalk_core::atlas::ChartAtlas;
use geowalk_core::walk::WalkPath;

const SIZE: f64 = 480.0;
const MARGIN: f64 = 16.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn project(atlas: &ChartAtlas, path: &WalkPath) -> Vec<(f64, f64)> {
    path.records
        .iter()
        .filter_map(|r| {
            if atlas.is_sphere() {
                atlas.embed(&r.point).map(|e| (e[1], e[2]))
            } else {
                let c = r.point.coords.as_slice();
                Some((c[0], c.get(1).copied().unwrap_or(r.t)))
            }
        })
        .collect()
}

pub fn render(atlas: &ChartAtlas, paths: &[(u64, WalkPath)]) -> String {
    let lines: Vec<Vec<(f64, f64)>> = paths.iter().map(|(_, p)| project(atlas, p)).collect();
    let (mut lo, mut hi) = ((f64::INFINITY, f64::INFINITY), (f64::NEG_INFINITY, f64::NEG_INFINITY));
    if atlas.is_sphere() {
        (lo, hi) = ((-1.0, -1.0), (1.0, 1.0));
    }
    for &(x, y) in lines.iter().flatten() {
        lo = (lo.0.min(x), lo.1.min(y));
        hi = (hi.0.max(x), hi.1.max(y));
    }
    let span = (hi.0 - lo.0).max(hi.1 - lo.1).max(1e-12);
    let scale = (SIZE - 2.0 * MARGIN) / span;
    let to_px = |(x, y): (f64, f64)| (MARGIN + (x - lo.0) * scale, SIZE - MARGIN - (y - lo.1) * scale);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    if atlas.is_sphere() {
        let (cx, cy) = to_px((0.0, 0.0));
        let _ = writeln!(out, r##"<circle cx="{cx:.2}" cy="{cy:.2}" r="{:.2}" fill="none" stroke="#999"/>"##, scale);
    }
    for (i, line) in lines.iter().enumerate() {
        let pts: Vec<String> = line
            .iter()
            .map(|&q| {
                let (x, y) = to_px(q);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{}" stroke-width="1" points="{}"/>"#,
            COLORS[i % COLORS.len()],
            pts.join(" ")
        );
    }
    out.push_str("</svg>\n");
    out
}
