//! Tessellations of the box: construction from particle paths, validation,
//! height functions, Legendre duality and Hamilton–Jacobi evolution.

mod build;
pub mod geom;
mod hopf;
mod laguerre;
mod plc;
mod svg;
mod validate;

#[cfg(test)]
mod tests;

pub use build::{build_tessellation, reconstruct_g, slice, slice_along, Axis, Reconstruction, StepFunction};
pub use hopf::{hopf_evolve, hopf_lax_value, HopfLaxGrid, HopfLaxValue};
pub use laguerre::laguerre_cells;
pub use plc::{inverse_legendre, legendre_transform, LegendreTable, PLCFunction};
pub use svg::{render_svg, SvgStyle};
pub use validate::{validate_generic, CheckResult, GenericReport};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::marks::Mark;
use crate::sampler::Trajectory;
use geom::Point;

/// Merging distance for vertices and incidence tests.
pub const VERTEX_TOL: f64 = 1e-9;

/// Axis-aligned rectangle `[lo₀, hi₀] × [lo₁, hi₁]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub lo: Point,
    pub hi: Point,
}

impl Window {
    pub fn new(lo: Point, hi: Point) -> Result<Self> {
        let w = Self { lo, hi };
        if !(lo.iter().chain(&hi).all(|v| v.is_finite()) && lo[0] < hi[0] && lo[1] < hi[1]) {
            return Err(Error::Domain(format!("empty window {lo:?}–{hi:?}")));
        }
        Ok(w)
    }

    /// The space-time box of a trajectory.
    pub fn of(traj: &Trajectory) -> Result<Self> {
        Self::new([traj.window[0], traj.horizon[0]], [traj.window[1], traj.horizon[1]])
    }

    pub fn area(&self) -> f64 {
        (self.hi[0] - self.lo[0]) * (self.hi[1] - self.lo[1])
    }

    pub fn scale(&self) -> f64 {
        (self.hi[0] - self.lo[0]).max(self.hi[1] - self.lo[1])
    }

    /// Counter-clockwise corners starting at `lo`.
    pub fn polygon(&self) -> Vec<Point> {
        vec![self.lo, [self.hi[0], self.lo[1]], self.hi, [self.lo[0], self.hi[1]]]
    }

    pub fn on_boundary(&self, p: Point, tol: f64) -> bool {
        (p[0] - self.lo[0]).abs() <= tol
            || (p[0] - self.hi[0]).abs() <= tol
            || (p[1] - self.lo[1]).abs() <= tol
            || (p[1] - self.hi[1]).abs() <= tol
    }

    pub fn contains(&self, p: Point, tol: f64) -> bool {
        p[0] >= self.lo[0] - tol && p[0] <= self.hi[0] + tol && p[1] >= self.lo[1] - tol && p[1] <= self.hi[1] + tol
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub mark: Mark,
    /// Atom index when the cell comes from a trajectory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<usize>,
    /// Counter-clockwise vertex loop.
    pub polygon: Vec<Point>,
}

/// Boundary piece between the cells of `minus ≺ plus`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub minus: Mark,
    pub plus: Mark,
    pub segment: [Point; 2],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VertexKind {
    /// Two edges merge into one going up.
    Coagulation,
    /// One edge splits into two going up.
    Fragmentation,
    /// Interior point where the incidence is not three.
    Irregular,
    Boundary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub point: Point,
    /// Incident cell marks in `≺` order.
    pub marks: Vec<Mark>,
    pub kind: VertexKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tessellation {
    pub window: Window,
    pub cells: Vec<Cell>,
    pub edges: Vec<Edge>,
    pub vertices: Vec<Vertex>,
}

impl Tessellation {
    pub fn empty(window: Window) -> Self {
        Self { window, cells: Vec::new(), edges: Vec::new(), vertices: Vec::new() }
    }

    pub fn cell(&self, mark: &Mark) -> Option<&Cell> {
        self.cells.iter().find(|c| c.mark == *mark)
    }

    pub fn area(&self) -> f64 {
        self.cells.iter().map(|c| geom::area(&c.polygon)).sum()
    }

    pub fn interior_vertices(&self) -> impl Iterator<Item = &Vertex> {
        self.vertices.iter().filter(|v| v.kind != VertexKind::Boundary)
    }

    pub fn count(&self, kind: VertexKind) -> usize {
        self.vertices.iter().filter(|v| v.kind == kind).count()
    }

    /// `V − E + F` of the planar graph made of the edges, the subdivided window
    /// boundary and the cells; a tiling of a rectangle gives 1.
    pub fn euler_characteristic(&self) -> i64 {
        let boundary = self.vertices.iter().filter(|v| v.kind == VertexKind::Boundary).count() as i64;
        let v = self.vertices.len() as i64;
        let e = self.edges.len() as i64 + boundary;
        v - e + self.cells.len() as i64
    }
}

/// `≺` with a tie-break on the second coordinate.
pub(crate) fn mark_order(a: &Mark, b: &Mark) -> std::cmp::Ordering {
    a.rho1.total_cmp(&b.rho1).then(a.rho2.total_cmp(&b.rho2))
}

/// Derives the vertex list from the cells: every polygon corner, merged at
/// [`VERTEX_TOL`], with the cells touching it.
pub(crate) fn assemble_vertices(window: &Window, cells: &[Cell]) -> Vec<Vertex> {
    let tol = VERTEX_TOL * window.scale().max(1.0);
    let mut points: Vec<Point> = Vec::new();
    for c in cells {
        for p in &c.polygon {
            if !points.iter().any(|q| geom::dist(*p, *q) <= tol) {
                points.push(*p);
            }
        }
    }
    points.sort_by(|a, b| a[1].total_cmp(&b[1]).then(a[0].total_cmp(&b[0])));
    points
        .into_iter()
        .map(|p| {
            let incident: Vec<&Cell> = cells.iter().filter(|c| geom::dist_point_convex(p, &c.polygon) <= tol).collect();
            let mut marks: Vec<Mark> = incident.iter().map(|c| c.mark).collect();
            marks.sort_by(mark_order);
            let kind = if window.on_boundary(p, tol) {
                VertexKind::Boundary
            } else if marks.len() == 3 {
                let mid = incident.iter().find(|c| c.mark == marks[1]).expect("incident cell");
                if geom::centroid(&mid.polygon)[1] < p[1] {
                    VertexKind::Coagulation
                } else {
                    VertexKind::Fragmentation
                }
            } else {
                VertexKind::Irregular
            };
            Vertex { point: p, marks, kind }
        })
        .collect()
}
