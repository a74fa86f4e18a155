use std::fmt::Write;

use crate::marks::Mark;

use super::{Tessellation, VertexKind};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SvgStyle {
    pub width: f64,
    pub height: f64,
    pub stroke: f64,
    pub dot: f64,
    pub legend: bool,
}

impl Default for SvgStyle {
    fn default() -> Self {
        Self { width: 600.0, height: 600.0, stroke: 1.0, dot: 3.5, legend: false }
    }
}

/// Stable fill colour from the bits of a mark.
fn colour(m: &Mark) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in m.rho1.to_bits().to_le_bytes().iter().chain(&m.rho2.to_bits().to_le_bytes()) {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    format!("hsl({},{}%,{}%)", h % 360, 45 + (h >> 16) % 30, 62 + (h >> 32) % 18)
}

/// Renders cells, edges and interior vertices; the second coordinate points up.
pub fn render_svg(t: &Tessellation, style: &SvgStyle) -> String {
    let (w, h) = (style.width, style.height);
    let win = &t.window;
    let sx = w / (win.hi[0] - win.lo[0]);
    let sy = h / (win.hi[1] - win.lo[1]);
    let px = |p: [f64; 2]| ((p[0] - win.lo[0]) * sx, h - (p[1] - win.lo[1]) * sy);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.3} {h:.3}">"#
    );
    if !t.cells.is_empty() {
        let _ = writeln!(out, r#"<g class="cells" stroke="none">"#);
        for c in &t.cells {
            let pts: Vec<String> = c.polygon.iter().map(|p| {
                let (x, y) = px(*p);
                format!("{x:.3},{y:.3}")
            }).collect();
            let _ = writeln!(
                out,
                r#"<polygon class="cell" data-mark="{} {}" fill="{}" points="{}"/>"#,
                c.mark.rho1,
                c.mark.rho2,
                colour(&c.mark),
                pts.join(" ")
            );
        }
        let _ = writeln!(out, "</g>");
    }
    if !t.edges.is_empty() {
        let _ = writeln!(out, r#"<g class="edges" stroke="black" stroke-width="{:.3}">"#, style.stroke);
        for e in &t.edges {
            let (x1, y1) = px(e.segment[0]);
            let (x2, y2) = px(e.segment[1]);
            let _ = writeln!(out, r#"<line class="edge" x1="{x1:.3}" y1="{y1:.3}" x2="{x2:.3}" y2="{y2:.3}"/>"#);
        }
        let _ = writeln!(out, "</g>");
    }
    let dots: Vec<_> = t.vertices.iter().filter(|v| v.kind != VertexKind::Boundary).collect();
    if !dots.is_empty() {
        let _ = writeln!(out, r#"<g class="vertices">"#);
        for v in dots {
            let (class, fill) = match v.kind {
                VertexKind::Coagulation => ("coagulation", "#1f4fd8"),
                VertexKind::Fragmentation => ("fragmentation", "#d8321f"),
                _ => ("irregular", "black"),
            };
            let (x, y) = px(v.point);
            let _ = writeln!(out, r#"<circle class="vertex {class}" cx="{x:.3}" cy="{y:.3}" r="{:.3}" fill="{fill}"/>"#, style.dot);
        }
        let _ = writeln!(out, "</g>");
    }
    if style.legend && !t.cells.is_empty() {
        let _ = writeln!(out, r#"<g class="legend" font-family="monospace" font-size="11">"#);
        for (k, c) in t.cells.iter().enumerate() {
            let y = 8.0 + 14.0 * k as f64;
            let _ = writeln!(
                out,
                r#"<rect x="8" y="{y:.1}" width="10" height="10" fill="{}" stroke="black" stroke-width="0.5"/><text x="22" y="{:.1}">({}, {})</text>"#,
                colour(&c.mark),
                y + 9.0,
                c.mark.rho1,
                c.mark.rho2
            );
        }
        let _ = writeln!(out, "</g>");
    }
    out.push_str("</svg>\n");
    out
}
