use serde::{Deserialize, Serialize};

use super::geom;
use super::{Tessellation, VertexKind};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub pass: bool,
    /// Worst violation found (zero when nothing was measured).
    pub worst: f64,
    pub checked: usize,
}

impl CheckResult {
    fn new(worst: f64, checked: usize, tol: f64) -> Self {
        Self { pass: worst <= tol, worst, checked }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenericReport {
    /// Convex cells covering the window without overlap.
    pub tiling: CheckResult,
    /// Edges orthogonal to `ρ⁺ − ρ⁻` (normalized cosine).
    pub orthogonality: CheckResult,
    /// `ρ⁺ − ρ⁻` points from the `ρ⁻` cell to the `ρ⁺` cell.
    pub orientation: CheckResult,
    /// Every interior vertex meets exactly three cells, so three cells share at most a point.
    pub degree: CheckResult,
}

impl GenericReport {
    pub fn all_pass(&self) -> bool {
        self.tiling.pass && self.orthogonality.pass && self.orientation.pass && self.degree.pass
    }
}

/// Checks the generic Laguerre tessellation conditions at slack `tol`.
pub fn validate_generic(t: &Tessellation, tol: f64) -> GenericReport {
    let wa = t.window.area();
    let scale = t.window.scale().max(1.0);

    let mut tiling: f64 = (t.area() - wa).abs() / wa;
    for c in &t.cells {
        if !geom::is_convex(&c.polygon, tol) || geom::area(&c.polygon) <= 0.0 {
            tiling = f64::INFINITY;
        }
        if c.polygon.iter().any(|p| !t.window.contains(*p, tol * scale)) {
            tiling = tiling.max(1.0);
        }
    }
    for (i, a) in t.cells.iter().enumerate() {
        for b in &t.cells[i + 1..] {
            if a.mark == b.mark {
                tiling = f64::INFINITY;
                continue;
            }
            tiling = tiling.max(overlap(&a.polygon, &b.polygon) / wa);
        }
    }
    let tiling = CheckResult::new(tiling, t.cells.len(), 1e-6f64.max(tol));

    let mut ortho: f64 = 0.0;
    let mut orient: f64 = 0.0;
    let mut misoriented = 0usize;
    for e in &t.edges {
        let d = geom::sub(e.segment[1], e.segment[0]);
        let n = [e.plus.rho1 - e.minus.rho1, e.plus.rho2 - e.minus.rho2];
        let (ld, ln) = (geom::norm(d), geom::norm(n));
        if ld == 0.0 || ln == 0.0 {
            ortho = f64::INFINITY;
            continue;
        }
        ortho = ortho.max(geom::dot(d, n).abs() / (ld * ln));
        let mid = [(e.segment[0][0] + e.segment[1][0]) / 2.0, (e.segment[0][1] + e.segment[1][1]) / 2.0];
        let side = |m| t.cell(m).map(|c| geom::dot(geom::sub(geom::centroid(&c.polygon), mid), n) / ln);
        if !super::mark_order(&e.minus, &e.plus).is_lt() {
            misoriented += 1;
            orient = f64::INFINITY;
            continue;
        }
        match (side(&e.minus), side(&e.plus)) {
            // a correctly oriented edge has the minus cell behind and the plus cell ahead
            (Some(lo), Some(hi)) => {
                if !(lo < 0.0 && hi > 0.0) {
                    misoriented += 1;
                    orient = orient.max(lo.max(-hi));
                }
            }
            _ => {
                misoriented += 1;
                orient = f64::INFINITY;
            }
        }
    }
    let orthogonality = CheckResult::new(ortho, t.edges.len(), tol);
    let orientation = CheckResult { pass: misoriented == 0, worst: orient, checked: t.edges.len() };

    let interior: Vec<_> = t.vertices.iter().filter(|v| v.kind != VertexKind::Boundary).collect();
    let bad = interior.iter().filter(|v| v.marks.len() != 3).count();
    let degree = CheckResult { pass: bad == 0, worst: bad as f64, checked: interior.len() };
    GenericReport { tiling, orthogonality, orientation, degree }
}

fn overlap(a: &[geom::Point], b: &[geom::Point]) -> f64 {
    let mut poly = a.to_vec();
    let n = b.len();
    for i in 0..n {
        if poly.is_empty() {
            break;
        }
        let (p, q) = (b[i], b[(i + 1) % n]);
        let d = geom::sub(q, p);
        // inward normal of a counter-clockwise edge
        let nrm = [-d[1], d[0]];
        poly = geom::clip_halfplane(&poly, nrm, geom::dot(nrm, p));
    }
    geom::area(&poly).max(0.0)
}
