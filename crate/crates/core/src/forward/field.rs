use crate::error::{Error, Result};
use crate::marks::locate_time;
use crate::marks::{MarkSet, UniformGrid};

/// One-point marginal `ℓ(x, t, ρ)`, laid out slice-major, then node, then atom.
#[derive(Clone, Debug, PartialEq)]
pub struct MarginalField {
    marks: MarkSet,
    grid: UniformGrid,
    times: Vec<f64>,
    values: Vec<f64>,
    floor: f64,
}

impl MarginalField {
    pub fn new(marks: MarkSet, grid: UniformGrid, times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.is_empty() || times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Invalid("slice times must be finite and increasing".into()));
        }
        let expected = times.len().checked_mul(grid.n).and_then(|v| v.checked_mul(marks.len()));
        if expected != Some(values.len()) {
            return Err(Error::Shape(format!(
                "{} values for {} slices x {} nodes x {} atoms",
                values.len(),
                times.len(),
                grid.n,
                marks.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("non-finite marginal value".into()));
        }
        let floor = values.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(Self { marks, grid, times, values, floor })
    }

    /// The same `ℓ⁰` at every node and slice.
    pub fn uniform(marks: MarkSet, grid: UniformGrid, times: Vec<f64>, ell0: &[f64]) -> Result<Self> {
        let n = times.len() * grid.n;
        let values = (0..n).flat_map(|_| ell0.iter().copied()).collect();
        Self::new(marks, grid, times, values)
    }

    pub fn marks(&self) -> &MarkSet {
        &self.marks
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

    /// Smallest stored value.
    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn node(&self, s: usize, k: usize) -> &[f64] {
        let na = self.marks.len();
        let o = (s * self.grid.n + k) * na;
        &self.values[o..o + na]
    }

    /// Bilinear value for every atom at `(x, t)`.
    pub fn eval_all(&self, x: f64, t: f64, out: &mut [f64]) -> Result<()> {
        let (k, a) = self
            .grid
            .locate(x)
            .ok_or_else(|| Error::Range(format!("x = {x} outside the marginal grid")))?;
        let (s, b) = locate_time(&self.times, t).ok_or_else(|| Error::Range(format!("t = {t} outside the marginal slices")))?;
        let nx = self.grid.n;
        let k1 = if nx > 1 { k + 1 } else { k };
        let s1 = if self.times.len() > 1 { s + 1 } else { s };
        for (i, o) in out.iter_mut().enumerate().take(self.marks.len()) {
            let row = |s: usize| (1.0 - a) * self.node(s, k)[i] + a * self.node(s, k1)[i];
            *o = (1.0 - b) * row(s) + b * row(s1);
        }
        Ok(())
    }

    pub fn eval(&self, x: f64, t: f64, atom: usize) -> Result<f64> {
        let mut out = vec![0.0; self.marks.len()];
        self.eval_all(x, t, &mut out)?;
        Ok(out[atom])
    }

    /// Largest deviation of `Σ ℓ β` from one over all nodes.
    pub fn mass_error(&self) -> f64 {
        let na = self.marks.len();
        self.values
            .chunks(na)
            .map(|c| (c.iter().zip(self.marks.weights()).map(|(l, w)| l * w).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}
