use super::{Mark, MarkSet, PairTable};
use crate::error::{Error, Result};
use crate::kinetic::tstar;
use serde::{Deserialize, Serialize};

/// Nodes `x0, x0 + dx, …, x0 + (n-1) dx`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformGrid {
    pub x0: f64,
    pub dx: f64,
    pub n: usize,
}

impl UniformGrid {
    pub fn new(x0: f64, dx: f64, n: usize) -> Result<Self> {
        if n == 0 || !x0.is_finite() || !dx.is_finite() || (n > 1 && dx <= 0.0) {
            return Err(Error::Invalid(format!("bad grid x0={x0} dx={dx} n={n}")));
        }
        if !(x0 + dx * (n - 1) as f64).is_finite() {
            return Err(Error::Invalid("grid end overflows".into()));
        }
        Ok(Self { x0, dx, n })
    }

    /// Grid with spacing at most `dx` whose nodes include `lo` and `hi`, padded by
    /// at least `pad` on both sides with the same spacing.
    pub fn padded(lo: f64, hi: f64, dx: f64, pad: f64) -> Result<Self> {
        if !(hi > lo && dx > 0.0 && pad >= 0.0) {
            return Err(Error::Invalid("bad padded grid request".into()));
        }
        let cells = ((hi - lo) / dx).ceil().max(1.0) as usize;
        let h = (hi - lo) / cells as f64;
        let extra = (pad / h - 1e-9).ceil().max(0.0) as usize;
        Self::new(lo - extra as f64 * h, h, cells + 2 * extra + 1)
    }

    pub fn node(&self, k: usize) -> f64 {
        self.x0 + k as f64 * self.dx
    }

    pub fn end(&self) -> f64 {
        self.node(self.n - 1)
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|k| self.node(k))
    }

    fn slop(&self) -> f64 {
        1e-9 * (self.dx.max(1e-300)).min(1.0) + 1e-12 * (self.x0.abs() + self.end().abs())
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.x0 - self.slop() && x <= self.end() + self.slop()
    }

    /// Cell index `k` and fraction `θ` with `x = (1-θ) node(k) + θ node(k+1)`.
    pub fn locate(&self, x: f64) -> Option<(usize, f64)> {
        if !x.is_finite() || !self.contains(x) {
            return None;
        }
        if self.n == 1 {
            return Some((0, 0.0));
        }
        let s = ((x - self.x0) / self.dx).clamp(0.0, (self.n - 1) as f64);
        let k = (s.floor() as usize).min(self.n - 2);
        Some((k, (s - k as f64).clamp(0.0, 1.0)))
    }

    /// Index of the node within `tol` of `x`.
    pub fn node_index(&self, x: f64, tol: f64) -> Option<usize> {
        let (k, th) = self.locate(x)?;
        let k = if th > 0.5 { k + 1 } else { k };
        ((self.node(k) - x).abs() <= tol).then_some(k)
    }
}

/// Locate `t` among sorted times: slice index and fraction toward the next slice.
pub(crate) fn locate_time(times: &[f64], t: f64) -> Option<(usize, f64)> {
    let n = times.len();
    let first = *times.first()?;
    let last = times[n - 1];
    let slop = 1e-12 * (1.0 + first.abs().max(last.abs()));
    if !t.is_finite() || t < first - slop || t > last + slop {
        return None;
    }
    if n == 1 {
        return Some((0, 0.0));
    }
    let t = t.clamp(first, last);
    let s = times.partition_point(|&x| x <= t).clamp(1, n - 1) - 1;
    let th = (t - times[s]) / (times[s + 1] - times[s]);
    Some((s, th.clamp(0.0, 1.0)))
}

/// Jump-rate density on an `x` grid times a list of time slices, one value per
/// ordered pair of atoms.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    marks: MarkSet,
    pairs: PairTable,
    delta0: f64,
    m0: f64,
    grid: UniformGrid,
    times: Vec<f64>,
    values: Vec<f64>,
}

impl Kernel {
    /// `values` are laid out slice-major, then node, then pair.
    pub fn new(
        marks: MarkSet,
        v_inf: f64,
        delta0: f64,
        grid: UniformGrid,
        times: Vec<f64>,
        values: Vec<f64>,
    ) -> Result<Self> {
        let pairs = PairTable::new(&marks, v_inf)?;
        if !(delta0.is_finite() && delta0 > 0.0) {
            return Err(Error::Domain(format!("delta0 = {delta0} must be positive")));
        }
        if times.is_empty() || times.iter().any(|t| !t.is_finite()) {
            return Err(Error::Invalid("need finite slice times".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Invalid("slice times must increase".into()));
        }
        let np = pairs.len();
        let expected = times.len().checked_mul(grid.n).and_then(|v| v.checked_mul(np));
        if expected != Some(values.len()) {
            return Err(Error::Shape(format!(
                "{} values for {} slices x {} nodes x {} pairs",
                values.len(),
                times.len(),
                grid.n,
                np
            )));
        }
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() || *v < 0.0 {
                return Err(Error::Invalid(format!("kernel value {v} must be finite and nonnegative")));
            }
            if np > 0 && !pairs.in_cone(i % np) && *v != 0.0 {
                return Err(Error::Invalid(format!(
                    "pair {:?} lies outside the cone but carries {v}",
                    pairs.pair(i % np)
                )));
            }
        }
        let m0 = values[..grid.n * np].iter().copied().fold(0.0, f64::max);
        Ok(Self { marks, pairs, delta0, m0, grid, times, values })
    }

    /// `c` on every pair inside the cone, zero elsewhere.
    pub fn constant(
        marks: MarkSet,
        v_inf: f64,
        delta0: f64,
        grid: UniformGrid,
        times: Vec<f64>,
        c: f64,
    ) -> Result<Self> {
        Self::from_fn(marks, v_inf, delta0, grid, times, |_, _, _| c)
    }

    /// Values from `f(x, t, pair)`; pairs outside the cone are set to zero.
    pub fn from_fn(
        marks: MarkSet,
        v_inf: f64,
        delta0: f64,
        grid: UniformGrid,
        times: Vec<f64>,
        f: impl Fn(f64, f64, usize) -> f64,
    ) -> Result<Self> {
        let pairs = PairTable::new(&marks, v_inf)?;
        let mut values = Vec::with_capacity(times.len() * grid.n * pairs.len());
        for &t in &times {
            for x in grid.nodes() {
                for p in 0..pairs.len() {
                    values.push(if pairs.in_cone(p) { f(x, t, p) } else { 0.0 });
                }
            }
        }
        Self::new(marks, v_inf, delta0, grid, times, values)
    }

    /// Same marks, constants and grids with new values.
    pub fn with_values(&self, grid: UniformGrid, times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let mut k = Self::new(self.marks.clone(), self.v_inf(), self.delta0, grid, times, values)?;
        k.m0 = self.m0;
        Ok(k)
    }

    /// Overrides the recorded upper bound `M₀`.
    pub fn with_m0(mut self, m0: f64) -> Result<Self> {
        if !(m0.is_finite() && m0 >= 0.0) {
            return Err(Error::Domain(format!("M0 = {m0}")));
        }
        self.m0 = m0;
        Ok(self)
    }

    pub fn marks(&self) -> &MarkSet {
        &self.marks
    }

    pub fn pairs(&self) -> &PairTable {
        &self.pairs
    }

    pub fn v_inf(&self) -> f64 {
        self.pairs.v_inf()
    }

    pub fn delta0(&self) -> f64 {
        self.delta0
    }

    pub fn m0(&self) -> f64 {
        self.m0
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn npairs(&self) -> usize {
        self.pairs.len()
    }

    /// Validity horizon of this kernel as initial datum.
    pub fn tstar(&self) -> Result<f64> {
        if self.m0 == 0.0 {
            return Ok(f64::INFINITY);
        }
        tstar(self.v_inf(), self.m0, self.delta0)
    }

    pub fn slice(&self, s: usize) -> &[f64] {
        let w = self.grid.n * self.npairs();
        &self.values[s * w..(s + 1) * w]
    }

    /// Pair values at slice `s`, node `k`.
    pub fn node(&self, s: usize, k: usize) -> &[f64] {
        let np = self.npairs();
        let o = (s * self.grid.n + k) * np;
        &self.values[o..o + np]
    }

    fn locate(&self, x: f64, t: f64) -> Result<((usize, f64), (usize, f64))> {
        let xl = self
            .grid
            .locate(x)
            .ok_or_else(|| Error::Range(format!("x = {x} outside [{}, {}]", self.grid.x0, self.grid.end())))?;
        let tl = locate_time(&self.times, t).ok_or_else(|| {
            Error::Range(format!(
                "t = {t} outside [{}, {}]",
                self.times[0],
                self.times[self.times.len() - 1]
            ))
        })?;
        Ok((xl, tl))
    }

    /// Bilinear value for pair index `p`.
    pub fn eval(&self, x: f64, t: f64, p: usize) -> Result<f64> {
        let ((k, a), (s, b)) = self.locate(x, t)?;
        if !self.pairs.in_cone(p) {
            return Ok(0.0);
        }
        Ok(self.blend(k, a, s, b, p))
    }

    /// Value on a pair of marks; pairs that are not ordered or not in the set give zero.
    pub fn eval_marks(&self, x: f64, t: f64, lo: &Mark, hi: &Mark) -> Result<f64> {
        let (i, j) = match (self.marks.index_of(lo), self.marks.index_of(hi)) {
            (Some(i), Some(j)) if i < j => (i, j),
            _ => {
                self.locate(x, t)?;
                return Ok(0.0);
            }
        };
        self.eval(x, t, self.pairs.index(i, j))
    }

    /// All pair values at `(x, t)`.
    pub fn eval_all(&self, x: f64, t: f64, out: &mut [f64]) -> Result<()> {
        let ((k, a), (s, b)) = self.locate(x, t)?;
        for (p, o) in out.iter_mut().enumerate().take(self.npairs()) {
            *o = self.blend(k, a, s, b, p);
        }
        Ok(())
    }

    fn blend(&self, k: usize, a: f64, s: usize, b: f64, p: usize) -> f64 {
        let nx = self.grid.n;
        let np = self.npairs();
        let at = |s: usize, k: usize| self.values[(s * nx + k) * np + p];
        let row = |s: usize| {
            if a == 0.0 || nx == 1 {
                at(s, k)
            } else {
                (1.0 - a) * at(s, k) + a * at(s, k + 1)
            }
        };
        if b == 0.0 || self.times.len() == 1 {
            row(s)
        } else {
            (1.0 - b) * row(s) + b * row(s + 1)
        }
    }

    /// True when every slice is constant across nodes to `tol`.
    pub fn is_x_independent(&self, tol: f64) -> bool {
        (0..self.times.len()).all(|s| {
            let first = self.node(s, 0);
            (1..self.grid.n).all(|k| {
                self.node(s, k)
                    .iter()
                    .zip(first)
                    .all(|(a, b)| (a - b).abs() <= tol)
            })
        })
    }

    /// Nodes inside `[lo, hi]`, which must both lie on the grid.
    pub fn restrict_x(&self, lo: f64, hi: f64) -> Result<Self> {
        let tol = 1e-9 * self.grid.dx.max(1e-12);
        let (k0, k1) = match (self.grid.node_index(lo, tol), self.grid.node_index(hi, tol)) {
            (Some(a), Some(b)) if a <= b => (a, b),
            _ => return Err(Error::Range(format!("[{lo}, {hi}] is not spanned by grid nodes"))),
        };
        let grid = UniformGrid::new(self.grid.node(k0), self.grid.dx, k1 - k0 + 1)?;
        let mut values = Vec::with_capacity(self.times.len() * grid.n * self.npairs());
        for s in 0..self.times.len() {
            for k in k0..=k1 {
                values.extend_from_slice(self.node(s, k));
            }
        }
        self.with_values(grid, self.times.clone(), values)
    }

    /// Minimum value over pairs inside the cone.
    pub fn cone_min(&self) -> f64 {
        let np = self.npairs();
        self.values
            .iter()
            .enumerate()
            .filter(|(i, _)| self.pairs.in_cone(i % np))
            .map(|(_, v)| *v)
            .fold(f64::INFINITY, f64::min)
    }

    /// Maximum value over all entries.
    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn marks() -> MarkSet {
        MarkSet::new(
            [-5.0, 5.0],
            vec![Mark::new(0., 0.), Mark::new(1., 0.), Mark::new(2., 1.)],
            vec![1.0; 3],
        )
        .unwrap()
    }

    #[test]
    fn constant_kernel_eval() {
        let g = UniformGrid::new(-1.0, 0.5, 7).unwrap();
        let k = Kernel::constant(marks(), 1.0, 2.0, g, vec![0.0, 1.0], 2.0).unwrap();
        assert_eq!(k.eval(0.3, 0.7, 1).unwrap(), 2.0);
        assert_eq!(
            k.eval_marks(0.0, 0.0, &Mark::new(0., 0.), &Mark::new(2., 1.)).unwrap(),
            2.0
        );
        assert!(matches!(k.eval(5.0, 0.0, 0), Err(Error::Range(_))));
        assert!(matches!(k.eval(0.0, 1.5, 0), Err(Error::Range(_))));
        assert_eq!(k.m0(), 2.0);
        assert!((k.tstar().unwrap() - 1.0 / 96.0).abs() < 1e-15);
    }

    #[test]
    fn interpolation() {
        let g = UniformGrid::new(0.0, 1.0, 2).unwrap();
        let k = Kernel::from_fn(marks(), 1.0, 1.0, g, vec![0.0, 1.0], |x, t, _| 1.0 + 2.0 * x + 4.0 * t)
            .unwrap();
        assert_eq!(k.eval(0.5, 0.0, 0).unwrap(), 2.0);
        assert_eq!(k.eval(1.0, 1.0, 2).unwrap(), 7.0);
        assert_eq!(k.eval(0.25, 0.5, 2).unwrap(), 3.5);
    }

    #[test]
    fn outside_cone_is_zero() {
        let g = UniformGrid::new(0.0, 1.0, 2).unwrap();
        let k = Kernel::constant(marks(), 0.75, 1.0, g, vec![0.0], 3.0).unwrap();
        assert_eq!(k.eval(0.5, 0.0, 2).unwrap(), 0.0);
        assert_eq!(k.eval(0.5, 0.0, 0).unwrap(), 3.0);
        let mut v = k.values().to_vec();
        v[2] = 1.0;
        assert!(Kernel::new(marks(), 0.75, 1.0, g, vec![0.0], v).is_err());
    }

    #[test]
    fn padded_grid_contains_edges() {
        let g = UniformGrid::padded(0.0, 1.0, 0.1, 0.25).unwrap();
        assert!(g.node_index(0.0, 1e-12).is_some());
        assert!(g.node_index(1.0, 1e-12).is_some());
        assert!(g.x0 <= -0.25 + 1e-12 && g.end() >= 1.25 - 1e-12);
    }

    #[test]
    fn restrict() {
        let g = UniformGrid::new(-1.0, 0.5, 7).unwrap();
        let k = Kernel::from_fn(marks(), 1.0, 1.0, g, vec![0.0], |x, _, _| 2.0 + x).unwrap();
        let r = k.restrict_x(0.0, 1.0).unwrap();
        assert_eq!(r.grid().n, 3);
        assert_eq!(r.node(0, 2)[0], 3.0);
    }

    #[test]
    fn time_lookup() {
        assert_eq!(locate_time(&[0.0, 1.0, 3.0], 2.0), Some((1, 0.5)));
        assert_eq!(locate_time(&[0.0, 1.0, 3.0], 3.0), Some((1, 1.0)));
        assert_eq!(locate_time(&[0.0], 0.0), Some((0, 0.0)));
        assert_eq!(locate_time(&[0.0, 1.0], 1.5), None);
    }
}
