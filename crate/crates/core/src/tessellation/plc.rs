use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::marks::Mark;

use super::geom::{self, Point};
use super::laguerre::{clip_cell, EMPTY_AREA};
use super::Window;

/// Piecewise-linear convex function `g(x) = max_ρ (x·ρ − g*(ρ))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PLCFunction {
    pub marks: Vec<Mark>,
    /// `g*(ρ)` per mark.
    pub intercepts: Vec<f64>,
}

impl PLCFunction {
    pub fn new(marks: Vec<Mark>, intercepts: Vec<f64>) -> Result<Self> {
        if marks.is_empty() || marks.len() != intercepts.len() {
            return Err(Error::Shape(format!("{} marks with {} intercepts", marks.len(), intercepts.len())));
        }
        if marks.iter().any(|m| !(m.rho1.is_finite() && m.rho2.is_finite())) || intercepts.iter().any(|c| !c.is_finite()) {
            return Err(Error::Invalid("non-finite mark or intercept".into()));
        }
        Ok(Self { marks, intercepts })
    }

    pub fn len(&self) -> usize {
        self.marks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.marks.is_empty()
    }

    pub fn piece(&self, i: usize, x: Point) -> f64 {
        self.marks[i].dot(x) - self.intercepts[i]
    }

    pub fn eval(&self, x: Point) -> f64 {
        (0..self.len()).map(|i| self.piece(i, x)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Index of the active mark (first one on ties).
    pub fn argmax(&self, x: Point) -> usize {
        let mut best = 0;
        for i in 1..self.len() {
            if self.piece(i, x) > self.piece(best, x) {
                best = i;
            }
        }
        best
    }

    /// `g + c`.
    pub fn shifted(&self, c: f64) -> Self {
        Self { marks: self.marks.clone(), intercepts: self.intercepts.iter().map(|v| v - c).collect() }
    }

    /// Drops marks that achieve the max on no open subset of the plane.
    pub fn pruned(&self) -> Self {
        let keep: Vec<usize> = (0..self.len()).filter(|&i| !self.redundant(i)).collect();
        Self {
            marks: keep.iter().map(|&i| self.marks[i]).collect(),
            intercepts: keep.iter().map(|&i| self.intercepts[i]).collect(),
        }
    }

    /// Drops marks whose cell misses the window.
    pub fn restricted(&self, window: &Window) -> Self {
        let floor = EMPTY_AREA * window.area();
        let keep: Vec<usize> = (0..self.len()).filter(|&i| geom::area(&clip_cell(self, i, window)) > floor).collect();
        Self {
            marks: keep.iter().map(|&i| self.marks[i]).collect(),
            intercepts: keep.iter().map(|&i| self.intercepts[i]).collect(),
        }
    }

    pub(crate) fn redundant(&self, i: usize) -> bool {
        let c = self.intercepts[i];
        let slack = 1e-12 * (1.0 + c.abs());
        let others: Vec<usize> = (0..self.len()).filter(|&j| j != i).collect();
        if others.iter().any(|&j| self.marks[j] == self.marks[i] && (self.intercepts[j] < c || (self.intercepts[j] == c && j < i))) {
            return true;
        }
        envelope_excluding(&self.marks, &self.intercepts, i).is_some_and(|e| e <= c + slack)
    }
}

/// Lowest convex combination of the other intercepts that reproduces `marks[i]`.
fn envelope_excluding(marks: &[Mark], c: &[f64], i: usize) -> Option<f64> {
    let all: Vec<usize> = (0..marks.len()).collect();
    envelope_over(marks, c, i, &all)
}

/// As [`envelope_excluding`], drawing only on the atoms in `pool`.
fn envelope_over(marks: &[Mark], c: &[f64], i: usize, pool: &[usize]) -> Option<f64> {
    let r = [marks[i].rho1, marks[i].rho2];
    let p = |k: usize| [marks[pool[k]].rho1, marks[pool[k]].rho2];
    let c = |k: usize| c[pool[k]];
    let i = pool.iter().position(|&k| k == i).unwrap_or(usize::MAX);
    let n = pool.len();
    let mut best: Option<f64> = None;
    let mut offer = |v: f64| best = Some(best.map_or(v, |b: f64| b.min(v)));
    let eps = 1e-14;
    for a in (0..n).filter(|&a| a != i) {
        for b in (a + 1..n).filter(|&b| b != i) {
            let (pa, pb) = (p(a), p(b));
            let ab = geom::sub(pb, pa);
            let l2 = geom::dot(ab, ab);
            if l2 > 0.0 && geom::cross(ab, geom::sub(r, pa)).abs() <= eps * l2.sqrt() * (1.0 + geom::norm(r)) {
                let s = geom::dot(geom::sub(r, pa), ab) / l2;
                if (-eps..=1.0 + eps).contains(&s) {
                    offer((1.0 - s) * c(a) + s * c(b));
                }
            }
            for d in (b + 1..n).filter(|&d| d != i) {
                let pd = p(d);
                let det = geom::cross(geom::sub(pb, pa), geom::sub(pd, pa));
                if det.abs() <= eps {
                    continue;
                }
                let lb = geom::cross(geom::sub(r, pa), geom::sub(pd, pa)) / det;
                let ld = geom::cross(geom::sub(pb, pa), geom::sub(r, pa)) / det;
                let la = 1.0 - lb - ld;
                if la >= -eps && lb >= -eps && ld >= -eps {
                    offer(la * c(a) + lb * c(b) + ld * c(d));
                }
            }
        }
    }
    best
}

/// The conjugate `g*` on the stored marks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LegendreTable {
    pub marks: Vec<Mark>,
    pub values: Vec<f64>,
}

/// `g*(ρ) = sup_x (x·ρ − g(x))` at each stored mark: the lower convex envelope
/// of the intercepts, which equals the stored intercept unless the mark is redundant.
/// Redundant marks are evaluated from the live ones only, so a second pass
/// reproduces the table bit for bit.
pub fn legendre_transform(g: &PLCFunction) -> LegendreTable {
    let live: Vec<usize> = (0..g.len()).filter(|&i| !g.redundant(i)).collect();
    let values = (0..g.len())
        .map(|i| {
            let c = g.intercepts[i];
            if live.contains(&i) {
                c
            } else {
                envelope_over(&g.marks, &g.intercepts, i, &live).map_or(c, |e| e.min(c))
            }
        })
        .collect();
    LegendreTable { marks: g.marks.clone(), values }
}

/// `g(x) = sup_ρ (x·ρ − g*(ρ))` from a table.
pub fn inverse_legendre(table: &LegendreTable) -> Result<PLCFunction> {
    PLCFunction::new(table.marks.clone(), table.values.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn hinge() -> PLCFunction {
        PLCFunction::new(vec![Mark::new(0., 0.), Mark::new(1., 0.)], vec![0., 0.]).unwrap()
    }

    #[test]
    fn hinge_transform() {
        let t = legendre_transform(&hinge());
        assert_eq!(t.values, vec![0.0, 0.0]);
        assert_eq!(hinge().eval([-2.0, 5.0]), 0.0);
        assert_eq!(hinge().eval([3.0, 5.0]), 3.0);
    }

    #[test]
    fn shift_moves_all_intercepts() {
        let t = legendre_transform(&hinge().shifted(2.5));
        assert_eq!(t.values, vec![-2.5, -2.5]);
        assert_eq!(t.marks, hinge().marks);
    }

    #[test]
    fn redundant_mark_is_lowered_and_pruned() {
        // (0.5, 0) lies between the hinge slopes; intercept 1 keeps it below the max everywhere
        let g = PLCFunction::new(vec![Mark::new(0., 0.), Mark::new(0.5, 0.), Mark::new(1., 0.)], vec![0., 1., 0.]).unwrap();
        assert_eq!(legendre_transform(&g).values, vec![0., 0., 0.]);
        assert_eq!(g.pruned().marks.len(), 2);
        let live = PLCFunction::new(g.marks.clone(), vec![0., -0.1, 0.]).unwrap();
        assert_eq!(live.pruned().len(), 3);
    }

    proptest! {
        #[test]
        fn double_transform_is_identity(
            pts in proptest::collection::vec((-3.0f64..3.0, -3.0f64..3.0, -2.0f64..2.0), 5),
        ) {
            let g = PLCFunction::new(
                pts.iter().map(|p| Mark::new(p.0, p.1)).collect(),
                pts.iter().map(|p| p.2).collect(),
            ).unwrap();
            let once = legendre_transform(&g);
            let back = inverse_legendre(&once).unwrap();
            let twice = legendre_transform(&back);
            prop_assert_eq!(&once, &twice);
            for x in [[0.3, -0.7], [2.0, 1.0], [-5.0, 4.0]] {
                prop_assert!((back.eval(x) - g.eval(x)).abs() <= 1e-12 * (1.0 + g.eval(x).abs()));
            }
            let kept = g.pruned();
            let lt = legendre_transform(&kept);
            prop_assert_eq!(&lt.values, &kept.intercepts);
        }

        #[test]
        fn midpoint_convex(
            pts in proptest::collection::vec((-3.0f64..3.0, -3.0f64..3.0, -2.0f64..2.0), 1..8),
            a in (-2.0f64..2.0, -2.0f64..2.0),
            b in (-2.0f64..2.0, -2.0f64..2.0),
        ) {
            let g = PLCFunction::new(
                pts.iter().map(|p| Mark::new(p.0, p.1)).collect(),
                pts.iter().map(|p| p.2).collect(),
            ).unwrap();
            let (a, b) = ([a.0, a.1], [b.0, b.1]);
            let m = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
            prop_assert!(g.eval(m) <= (g.eval(a) + g.eval(b)) / 2.0 + 1e-12);
        }
    }
}
