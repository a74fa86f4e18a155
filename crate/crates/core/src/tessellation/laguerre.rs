use crate::error::Result;

use super::geom::{self, Point};
use super::plc::PLCFunction;
use super::{assemble_vertices, mark_order, Cell, Edge, Tessellation, Window, VERTEX_TOL};

/// Cells below this fraction of the window area count as empty.
pub(crate) const EMPTY_AREA: f64 = 1e-12;

/// The max-region of mark `i` inside the window.
pub(crate) fn clip_cell(g: &PLCFunction, i: usize, window: &Window) -> Vec<Point> {
    let r = g.marks[i];
    let mut poly = window.polygon();
    for (j, s) in g.marks.iter().enumerate() {
        if j == i || poly.is_empty() {
            continue;
        }
        let n = [r.rho1 - s.rho1, r.rho2 - s.rho2];
        if n == [0.0, 0.0] {
            // duplicate slope: the lower intercept wins, ties go to the first index
            let (ci, cj) = (g.intercepts[i], g.intercepts[j]);
            if ci > cj || (ci == cj && j < i) {
                poly.clear();
            }
            continue;
        }
        poly = geom::clip_halfplane(&poly, n, g.intercepts[i] - g.intercepts[j]);
    }
    poly
}

/// Cells `{x : x·ρ − g*(ρ) maximal}` clipped to the window.
pub fn laguerre_cells(g: &PLCFunction, window: &Window) -> Result<Tessellation> {
    let window = Window::new(window.lo, window.hi)?;
    let floor = EMPTY_AREA * window.area();
    let mut cells: Vec<Cell> = (0..g.len())
        .filter_map(|i| {
            let poly = clip_cell(g, i, &window);
            let poly = geom::convex_hull(&poly, VERTEX_TOL * window.scale().max(1.0) * 1e-3);
            (geom::area(&poly) > floor).then(|| Cell { mark: g.marks[i], label: None, polygon: poly })
        })
        .collect();
    cells.sort_by(|a, b| mark_order(&a.mark, &b.mark));
    let edges = assemble_edges(&window, &cells);
    let vertices = assemble_vertices(&window, &cells);
    Ok(Tessellation { window, cells, edges, vertices })
}

/// Shared sides of cell pairs, excluding the window boundary.
pub(crate) fn assemble_edges(window: &Window, cells: &[Cell]) -> Vec<Edge> {
    let tol = VERTEX_TOL * window.scale().max(1.0);
    let mut edges = Vec::new();
    for (i, a) in cells.iter().enumerate() {
        for b in &cells[i + 1..] {
            let n = a.polygon.len();
            for k in 0..n {
                let (p, q) = (a.polygon[k], a.polygon[(k + 1) % n]);
                if geom::dist(p, q) <= tol {
                    continue;
                }
                let mid = [(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0];
                if window.on_boundary(mid, tol) {
                    continue;
                }
                if geom::dist_point_convex(p, &b.polygon) <= tol && geom::dist_point_convex(q, &b.polygon) <= tol {
                    let (minus, plus) =
                        if mark_order(&a.mark, &b.mark).is_lt() { (a.mark, b.mark) } else { (b.mark, a.mark) };
                    let segment = if p[1] <= q[1] { [p, q] } else { [q, p] };
                    edges.push(Edge { minus, plus, segment });
                }
            }
        }
    }
    edges
}
