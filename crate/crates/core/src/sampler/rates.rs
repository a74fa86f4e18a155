use crate::error::{Error, Result};
use crate::forward::MarginalField;
use crate::marks::Kernel;

use super::config::ParticleConfig;

/// Decomposed jump rates of a configuration, β-weighted per candidate atom.
#[derive(Clone, Debug, PartialEq)]
pub struct Rates {
    /// `𝔠₋(ρ*, ρ⁰) β(ρ*)` per candidate `ρ*`.
    pub create_left: Vec<f64>,
    /// Per particle, `𝔣(z_k, ρᵏ, ρ*, ρᵏ⁺¹) β(ρ*)` per candidate `ρ*`.
    pub fragment: Vec<Vec<f64>>,
    /// `𝔠₊(ρⁿ, ρ*) β(ρ*)` per candidate `ρ*`.
    pub create_right: Vec<f64>,
    pub total_left: f64,
    pub total_fragment: Vec<f64>,
    pub total_right: f64,
    pub total: f64,
}

/// Reusable evaluator for the particle rate `𝔯`.
pub(crate) struct RateEval<'a> {
    f: &'a Kernel,
    ell: &'a MarginalField,
    window: [f64; 2],
    fv: Vec<f64>,
    lv: Vec<f64>,
}

impl<'a> RateEval<'a> {
    pub(crate) fn new(f: &'a Kernel, ell: &'a MarginalField, window: [f64; 2]) -> Self {
        Self { f, ell, window, fv: vec![0.0; f.npairs()], lv: vec![0.0; f.marks().len()] }
    }

    /// `𝔠₋(ρ*, ρ⁰)β(ρ*)` into `out` (when given); returns the sum.
    fn left(&mut self, t: f64, rho0: usize, mut out: Option<&mut Vec<f64>>) -> Result<f64> {
        let pairs = self.f.pairs();
        let set = self.f.marks();
        if let Some(o) = out.as_deref_mut() {
            o.clear();
            o.resize(set.len(), 0.0);
        }
        if (0..rho0).all(|i| pairs.alpha_ij(i, rho0) >= 0.0) {
            return Ok(0.0);
        }
        self.f.eval_all(self.window[0], t, &mut self.fv)?;
        self.ell.eval_all(self.window[0], t, &mut self.lv)?;
        let l0 = self.lv[rho0];
        if l0 <= 0.0 {
            return Err(Error::DivisionGuard { value: l0, guard: 0.0 });
        }
        let mut sum = 0.0;
        for i in 0..rho0 {
            let p = pairs.index(i, rho0);
            let neg = (-pairs.alpha(p)).max(0.0);
            let r = neg * self.lv[i] * self.fv[p] / l0 * set.weight(i);
            sum += r;
            if let Some(o) = out.as_deref_mut() {
                o[i] = r;
            }
        }
        Ok(sum)
    }

    fn right(&mut self, t: f64, top: usize, mut out: Option<&mut Vec<f64>>) -> Result<f64> {
        let pairs = self.f.pairs();
        let set = self.f.marks();
        if let Some(o) = out.as_deref_mut() {
            o.clear();
            o.resize(set.len(), 0.0);
        }
        if (top + 1..set.len()).all(|j| pairs.alpha_ij(top, j) <= 0.0) {
            return Ok(0.0);
        }
        self.f.eval_all(self.window[1], t, &mut self.fv)?;
        let mut sum = 0.0;
        for j in top + 1..set.len() {
            let p = pairs.index(top, j);
            let r = pairs.alpha(p).max(0.0) * self.fv[p] * set.weight(j);
            sum += r;
            if let Some(o) = out.as_deref_mut() {
                o[j] = r;
            }
        }
        Ok(sum)
    }

    fn fragment(&mut self, z: f64, t: f64, lo: usize, hi: usize, mut out: Option<&mut Vec<f64>>) -> Result<f64> {
        let pairs = self.f.pairs();
        let set = self.f.marks();
        if let Some(o) = out.as_deref_mut() {
            o.clear();
            o.resize(set.len(), 0.0);
        }
        if (lo + 1..hi).all(|m| pairs.alpha_ij(m, hi) - pairs.alpha_ij(lo, m) >= 0.0) {
            return Ok(0.0);
        }
        self.f.eval_all(z, t, &mut self.fv)?;
        let base = self.fv[pairs.index(lo, hi)];
        let mut sum = 0.0;
        for m in lo + 1..hi {
            let s = pairs.alpha_ij(m, hi) - pairs.alpha_ij(lo, m);
            if s >= 0.0 {
                continue;
            }
            let num = self.fv[pairs.index(lo, m)] * self.fv[pairs.index(m, hi)];
            if num == 0.0 {
                continue;
            }
            if base <= 0.0 {
                return Err(Error::DegenerateRate { minus: lo, plus: hi });
            }
            let r = -s * num / base * set.weight(m);
            sum += r;
            if let Some(o) = out.as_deref_mut() {
                o[m] = r;
            }
        }
        Ok(sum)
    }

    /// `𝔯(t, q)` with particle positions `z`.
    pub(crate) fn total(&mut self, q: &ParticleConfig, z: &[f64], t: f64) -> Result<f64> {
        let n = q.n();
        let mut r = self.left(t, q.labels[0], None)? + self.right(t, q.labels[n], None)?;
        for k in 0..n {
            r += self.fragment(z[k], t, q.labels[k], q.labels[k + 1], None)?;
        }
        Ok(r)
    }

    pub(crate) fn decompose(&mut self, q: &ParticleConfig, t: f64) -> Result<Rates> {
        let n = q.n();
        let mut create_left = Vec::new();
        let mut create_right = Vec::new();
        let total_left = self.left(t, q.labels[0], Some(&mut create_left))?;
        let total_right = self.right(t, q.labels[n], Some(&mut create_right))?;
        let mut fragment = Vec::with_capacity(n);
        let mut total_fragment = Vec::with_capacity(n);
        for k in 0..n {
            let mut v = Vec::new();
            total_fragment.push(self.fragment(q.z[k], t, q.labels[k], q.labels[k + 1], Some(&mut v))?);
            fragment.push(v);
        }
        let total = total_left + total_right + total_fragment.iter().sum::<f64>();
        Ok(Rates { create_left, fragment, create_right, total_left, total_fragment, total_right, total })
    }
}

/// Creation, fragmentation and total rates of `q` at time `t`.
///
/// The window is `[a⁻, a⁺]`; `ell` supplies `ℓ(a⁻, t, ·)` for left creations.
pub fn total_rate(q: &ParticleConfig, f: &Kernel, ell: &MarginalField, window: [f64; 2], t: f64) -> Result<Rates> {
    let mut q = q.clone();
    q.advance(f.pairs(), t);
    RateEval::new(f, ell, window).decompose(&q, t)
}
