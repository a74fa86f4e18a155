use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampler::{Segment, Trajectory};

use super::geom::{self, Point};
use super::plc::PLCFunction;
use super::{assemble_vertices, mark_order, Cell, Edge, Tessellation, Window, VERTEX_TOL};

/// Ties with an event within this distance are moved off by [`NUDGE`].
const TIE: f64 = 1e-12;
const NUDGE: f64 = 1e-10;

/// Cells are the per-label hulls of the particle paths bounding them; edges are
/// the path segments; vertices come from the cell corners.
pub fn build_tessellation(traj: &Trajectory, window: &Window) -> Result<Tessellation> {
    let own = Window::of(traj)?;
    let tol = VERTEX_TOL * own.scale().max(1.0);
    if (0..2).any(|k| (window.lo[k] - own.lo[k]).abs() > tol || (window.hi[k] - own.hi[k]).abs() > tol) {
        return Err(Error::Precondition("the window must be the trajectory's box".into()));
    }
    let segments = traj.segments()?;
    let nl = traj.marks.len();
    let mut points: Vec<Vec<Point>> = vec![Vec::new(); nl];
    for s in &segments {
        for l in [s.minus, s.plus] {
            points[l].push(s.start);
            points[l].push(s.end);
        }
    }
    let (q0, q1) = (&traj.initial, &traj.final_config);
    points[q0.labels[0]].push(own.lo);
    points[q0.labels[q0.n()]].push([own.hi[0], own.lo[1]]);
    points[q1.labels[q1.n()]].push(own.hi);
    points[q1.labels[0]].push([own.lo[0], own.hi[1]]);

    let mut cells = Vec::new();
    for (label, pts) in points.iter().enumerate() {
        if pts.is_empty() {
            continue;
        }
        let poly = geom::convex_hull(pts, tol * 1e-3);
        if geom::area(&poly) > 0.0 {
            cells.push(Cell { mark: traj.marks.atom(label), label: Some(label), polygon: poly });
        }
    }
    let edges = segments
        .iter()
        .map(|s| Edge { minus: traj.marks.atom(s.minus), plus: traj.marks.atom(s.plus), segment: [s.start, s.end] })
        .collect();
    let vertices = assemble_vertices(&own, &cells);
    Ok(Tessellation { window: own, cells, edges, vertices })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    /// Fixed second coordinate, varying first.
    Horizontal,
    /// Fixed first coordinate, varying second.
    Vertical,
}

/// Right-continuous piecewise-constant labels along a line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepFunction {
    pub axis: Axis,
    /// The fixed coordinate actually used (after tie-breaking).
    pub coordinate: f64,
    pub range: [f64; 2],
    pub breaks: Vec<f64>,
    /// One more than `breaks`; `labels[k]` holds on `[breaks[k-1], breaks[k])`.
    pub labels: Vec<usize>,
}

impl StepFunction {
    pub fn label_at(&self, s: f64) -> usize {
        self.labels[self.breaks.partition_point(|b| *b <= s)]
    }

    /// `(position, label before, label after)` per jump.
    pub fn jumps(&self) -> Vec<(f64, usize, usize)> {
        self.breaks.iter().enumerate().map(|(k, b)| (*b, self.labels[k], self.labels[k + 1])).collect()
    }

    /// `∫ φ(label)` over `[a, b]` (signed when `b < a`).
    pub fn integrate(&self, a: f64, b: f64, phi: impl Fn(usize) -> f64) -> f64 {
        if b < a {
            return -self.integrate(b, a, phi);
        }
        let mut total = 0.0;
        let mut left = a;
        let start = self.breaks.partition_point(|x| *x <= a);
        for k in start..=self.breaks.len() {
            let right = if k < self.breaks.len() { self.breaks[k].min(b) } else { b };
            if right > left {
                total += (right - left) * phi(self.labels[k]);
                left = right;
            }
            if left >= b {
                break;
            }
        }
        total
    }
}

/// The label field restricted to a horizontal (`t` fixed) or vertical (`x` fixed) line.
pub fn slice(traj: &Trajectory, axis: Axis, coordinate: f64) -> Result<StepFunction> {
    match axis {
        Axis::Horizontal => {
            let [t0, t1] = traj.horizon;
            if !(coordinate >= t0 && coordinate <= t1) {
                return Err(Error::Range(format!("t = {coordinate} outside the horizon")));
            }
            let mut t = coordinate;
            if t < t1 && traj.events.iter().any(|e| (e.t - t).abs() <= TIE) {
                t = (t + NUDGE).min(t1);
            }
            let q = traj.config_at(t)?;
            Ok(StepFunction { axis, coordinate: t, range: traj.window, breaks: q.z, labels: q.labels })
        }
        Axis::Vertical => slice_along(traj, coordinate, 0.0),
    }
}

/// Labels along the line `x = x₀ + c (t − t₀)` as a function of `t`.
///
/// With `c = 0` this is the vertical slice. A jump is recorded each time a
/// particle path crosses the line; the line must stay inside the window.
pub fn slice_along(traj: &Trajectory, x0: f64, c: f64) -> Result<StepFunction> {
    let [a, b] = traj.window;
    let [t0, t1] = traj.horizon;
    let reach = c * (t1 - t0);
    if !(x0 >= a && x0 <= b && x0 + reach >= a && x0 + reach <= b) || !c.is_finite() {
        return Err(Error::Range(format!("line from x = {x0} with speed {c} leaves the window")));
    }
    let segments = traj.segments()?;
    let mut x = x0;
    // paths ending on a wall would be missed by the half-open crossing rule
    if x - a <= TIE || x + reach - a <= TIE {
        x += NUDGE;
    } else if b - x <= TIE || b - x - reach <= TIE {
        x -= NUDGE;
    }
    let at = |s: &Segment, x: f64| {
        let line = |t: f64| x + c * (t - t0);
        (s.start[0] - line(s.start[1])).abs() <= TIE || (s.end[0] - line(s.end[1])).abs() <= TIE
    };
    if segments.iter().any(|s| at(s, x)) {
        x += if x + reach + NUDGE < b { NUDGE } else { -NUDGE };
    }
    let mut crossings: Vec<(f64, usize, usize)> = Vec::new();
    for s in &segments {
        let (dx, dt) = (s.end[0] - s.start[0], s.end[1] - s.start[1]);
        if dt <= 0.0 {
            continue;
        }
        // relative velocity of the path with respect to the line
        let rel = dx / dt - c;
        if rel == 0.0 {
            continue;
        }
        let gap = x + c * (s.start[1] - t0) - s.start[0];
        let tc = s.start[1] + gap / rel;
        if tc >= s.start[1] && tc < s.end[1] {
            // the line overtakes a path moving left relative to it: ρ⁻ to ρ⁺
            if rel < 0.0 {
                crossings.push((tc, s.minus, s.plus));
            } else {
                crossings.push((tc, s.plus, s.minus));
            }
        }
    }
    crossings.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut labels = vec![traj.initial.label_at(x)];
    let mut breaks = Vec::with_capacity(crossings.len());
    for (tc, from, to) in crossings {
        if *labels.last().unwrap() != from {
            return Err(Error::Corruption(format!("slice along x = {x} + {c} t: label mismatch at t = {tc}")));
        }
        breaks.push(tc);
        labels.push(to);
    }
    Ok(StepFunction { axis: Axis::Vertical, coordinate: x, range: traj.horizon, breaks, labels })
}

/// Height function recovered from a trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct Reconstruction {
    pub g: PLCFunction,
    /// Largest disagreement between the two staircase integrals to a cell.
    pub curl: f64,
}

/// Integrates `ρ` from the lower-left corner (where `g` equals `base`) to a point
/// of every cell along two staircases and reads off the intercepts.
pub fn reconstruct_g(traj: &Trajectory, base: f64) -> Result<Reconstruction> {
    let window = Window::of(traj)?;
    let tess = build_tessellation(traj, &window)?;
    let set = &traj.marks;
    let rho1 = |l: usize| set.atom(l).rho1;
    let rho2 = |l: usize| set.atom(l).rho2;
    let bottom = slice(traj, Axis::Horizontal, window.lo[1])?;
    let xm = 0.5 * (window.lo[0] + window.hi[0]);
    let middle = slice(traj, Axis::Vertical, xm)?;
    let mut marks = Vec::with_capacity(tess.cells.len());
    let mut intercepts = Vec::with_capacity(tess.cells.len());
    let mut curl: f64 = 0.0;
    let mut cells = tess.cells.clone();
    cells.sort_by(|a, b| mark_order(&a.mark, &b.mark));
    for cell in &cells {
        let p = geom::centroid(&cell.polygon);
        let up = slice(traj, Axis::Vertical, p[0])?;
        let across = slice(traj, Axis::Horizontal, p[1])?;
        let g1 = base + bottom.integrate(window.lo[0], p[0], rho1) + up.integrate(window.lo[1], p[1], rho2);
        let g2 = base
            + bottom.integrate(window.lo[0], xm, rho1)
            + middle.integrate(window.lo[1], p[1], rho2)
            + across.integrate(xm, p[0], rho1);
        curl = curl.max((g1 - g2).abs());
        let label = cell.label.expect("trajectory cells carry labels");
        if across.label_at(p[0]) != label || up.label_at(p[1]) != label {
            return Err(Error::Corruption(format!("cell {label} does not contain its centroid")));
        }
        marks.push(cell.mark);
        intercepts.push(cell.mark.dot(p) - g1);
    }
    if curl > 1e-6 {
        return Err(Error::NonGradient { curl });
    }
    Ok(Reconstruction { g: PLCFunction::new(marks, intercepts)?, curl })
}

/// Interior coagulation and fragmentation points of the event log.
#[cfg(test)]
pub(crate) fn event_vertices(traj: &Trajectory) -> Vec<(Point, crate::sampler::EventKind)> {
    traj.events
        .iter()
        .filter(|e| matches!(e.kind, crate::sampler::EventKind::Coagulation | crate::sampler::EventKind::Fragmentation))
        .map(|e| ([e.z, e.t], e.kind))
        .collect()
}
