use crate::error::{Error, Result};
use crate::kinetic::HamiltonianSpec;

use super::geom::Point;
use super::plc::PLCFunction;

/// Hopf formula for piecewise-linear convex data: intercepts `g*(ρ) − tH(ρ)`,
/// then marks that lost their cell everywhere in the plane are dropped.
pub fn hopf_evolve(g: &PLCFunction, h: &HamiltonianSpec, t: f64) -> Result<PLCFunction> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("t = {t} must be nonnegative")));
    }
    if t == 0.0 {
        return Ok(g.clone());
    }
    let intercepts = g.marks.iter().zip(&g.intercepts).map(|(m, c)| c - t * h.eval(m)).collect();
    Ok(PLCFunction::new(g.marks.clone(), intercepts)?.pruned())
}

/// Search grids for the Hopf–Lax oracle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HopfLaxGrid {
    /// Points per axis of the `y` grid (odd keeps the centre on the grid).
    pub n: usize,
    /// Points per axis of the slope grid used for `L = H*`.
    pub slopes: usize,
    /// Extra slope range around the marks' bounding box.
    pub slope_margin: f64,
}

impl Default for HopfLaxGrid {
    fn default() -> Self {
        Self { n: 401, slopes: 4001, slope_margin: 1.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HopfLaxValue {
    pub value: f64,
    pub argmax: Point,
    /// Largest `y` grid step.
    pub spacing: f64,
    /// The sup sat on the edge of the `y` grid, so the domain may be too small.
    pub on_boundary: bool,
}

/// `sup_y (g(y) − t L((y − x)/t))` by grid search, `L` the finite Legendre
/// transform of `H` over a slope box containing the marks.
pub fn hopf_lax_value(g: &PLCFunction, h: &HamiltonianSpec, x: Point, t: f64, grid: &HopfLaxGrid) -> Result<HopfLaxValue> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("t = {t} must be positive")));
    }
    if grid.n < 3 || grid.slopes < 2 {
        return Err(Error::Config("Hopf–Lax grids need at least 3 points".into()));
    }
    let polys = [&h.h1, &h.h2];
    let mut lines: Vec<Vec<f64>> = Vec::with_capacity(2);
    let mut conj: Vec<Vec<f64>> = Vec::with_capacity(2);
    let mut spacing: f64 = 0.0;
    for k in 0..2 {
        let coord = |m: &crate::marks::Mark| if k == 0 { m.rho1 } else { m.rho2 };
        let (rlo, rhi) = g.marks.iter().map(coord).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), r| (a.min(r), b.max(r)));
        let slopes: Vec<f64> = (0..grid.slopes)
            .map(|i| rlo - grid.slope_margin + (rhi - rlo + 2.0 * grid.slope_margin) * i as f64 / (grid.slopes - 1) as f64)
            .collect();
        // optimal displacements are t·∇H at the active marks
        let d = polys[k].derivative();
        let (vlo, vhi) = g.marks.iter().map(|m| d.eval(coord(m))).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        let centre = x[k] + t * (vlo + vhi) / 2.0;
        let half = t * (0.6 * (vhi - vlo) + 0.1 * (1.0 + vhi.abs().max(vlo.abs())));
        let step = 2.0 * half / (grid.n - 1) as f64;
        spacing = spacing.max(step);
        let ys: Vec<f64> = (0..grid.n).map(|i| centre - half + step * i as f64).collect();
        let ls: Vec<f64> = ys.iter().map(|y| t * HamiltonianSpec::conjugate_1d(polys[k], (y - x[k]) / t, &slopes)).collect();
        lines.push(ys);
        conj.push(ls);
    }
    let mut best = (f64::NEG_INFINITY, 0, 0);
    for (i, y0) in lines[0].iter().enumerate() {
        for (j, y1) in lines[1].iter().enumerate() {
            let v = g.eval([*y0, *y1]) - conj[0][i] - conj[1][j];
            if v > best.0 {
                best = (v, i, j);
            }
        }
    }
    let last = grid.n - 1;
    let on_boundary = best.1 == 0 || best.1 == last || best.2 == 0 || best.2 == last;
    Ok(HopfLaxValue { value: best.0, argmax: [lines[0][best.1], lines[1][best.2]], spacing, on_boundary })
}
