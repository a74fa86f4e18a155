//! The one-point marginal: forward equations in `x` and `t`, the staged box
//! construction and the compatibility residual.

mod field;

pub use field::MarginalField;

use crate::error::{Error, Result};
use crate::marks::{Kernel, MarkSet, PairTable};

/// Order in which the two forward flows are composed by [`build_ell_box`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SweepOrder {
    /// Evolve the left edge in `t`, then sweep each slice in `x`.
    #[default]
    EdgeThenX,
    /// Sweep the bottom edge in `x`, then evolve each node in `t`.
    BaseThenT,
}

/// Which positivity argument a box construction relied on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Positivity {
    /// All rates of `f` have nonnegative bracket.
    PlusCone,
    /// Initial marginal at least 1/6, tilted construction.
    Tilted,
}

/// Step-size controls for [`build_ell_box`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EllBoxOptions {
    /// Largest Euler step in either direction; `None` picks `min(1/(4M₀), T*/50)`.
    pub max_step: Option<f64>,
    pub order: SweepOrder,
}

impl Default for EllBoxOptions {
    fn default() -> Self {
        Self { max_step: None, order: SweepOrder::EdgeThenX }
    }
}

/// `out = G(ℓ)` for per-pair jump rates: mass enters `ρ⁺` from `ρ⁻` at `r ℓ(ρ⁻) β(ρ⁻)`.
fn generator(set: &MarkSet, pairs: &PairTable, rates: &[f64], ell: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|o| *o = 0.0);
    for (p, &(i, j)) in pairs.pairs().iter().enumerate() {
        let r = rates[p] * ell[i];
        out[j] += r * set.weight(i);
        out[i] -= r * set.weight(j);
    }
}

struct Stepper<'a> {
    f: &'a Kernel,
    vals: Vec<f64>,
    rates: Vec<f64>,
    g: Vec<f64>,
}

impl<'a> Stepper<'a> {
    fn new(f: &'a Kernel) -> Self {
        Self {
            f,
            vals: vec![0.0; f.npairs()],
            rates: vec![0.0; f.npairs()],
            g: vec![0.0; f.marks().len()],
        }
    }

    /// One Euler step of size `h` (negative allowed) in `x` at fixed `t`.
    fn step_x(&mut self, ell: &mut [f64], x: f64, t: f64, h: f64) -> Result<()> {
        self.f.eval_all(x, t, &mut self.vals)?;
        self.rates.copy_from_slice(&self.vals);
        self.apply(ell, h);
        Ok(())
    }

    /// One Euler step in `t` with rates `(α + shift) f(x + shift (t - t_ref), t)`.
    fn step_t(&mut self, ell: &mut [f64], x: f64, t: f64, h: f64, shift: f64) -> Result<()> {
        self.f.eval_all(x, t, &mut self.vals)?;
        for p in 0..self.vals.len() {
            let r = (self.f.pairs().alpha(p) + shift) * self.vals[p];
            if r < 0.0 {
                let (i, j) = self.f.pairs().pair(p);
                return Err(Error::RateSign { minus: i, plus: j, rate: r });
            }
            self.rates[p] = r;
        }
        self.apply(ell, h);
        Ok(())
    }

    fn apply(&mut self, ell: &mut [f64], h: f64) {
        generator(self.f.marks(), self.f.pairs(), &self.rates, ell, &mut self.g);
        for (l, g) in ell.iter_mut().zip(&self.g) {
            *l += h * g;
        }
    }
}

fn check_ell0(f: &Kernel, ell0: &[f64]) -> Result<()> {
    let set = f.marks();
    if ell0.len() != set.len() {
        return Err(Error::Shape(format!("ell0 has {} entries for {} atoms", ell0.len(), set.len())));
    }
    if ell0.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::Precondition("ell0 must be nonnegative".into()));
    }
    let mass: f64 = ell0.iter().zip(set.weights()).map(|(l, w)| l * w).sum();
    if (mass - 1.0).abs() > 1e-9 {
        return Err(Error::Precondition(format!("ell0 has mass {mass}, expected 1")));
    }
    Ok(())
}

fn lambda_sup(f: &Kernel) -> f64 {
    f.max_value() * f.marks().mass()
}

fn t_rate_sup(f: &Kernel, shift: f64) -> f64 {
    let amax = f.pairs().alphas().iter().map(|a| (a + shift).abs()).fold(0.0, f64::max);
    amax * lambda_sup(f)
}

/// Forward equation in `x` at fixed `t`: `ℓ_x = ℓ*f − λℓ`, `n` Euler steps over `span`.
///
/// Returns the `n + 1` states.
pub fn solve_ell_x(f: &Kernel, ell0: &[f64], t: f64, span: [f64; 2], n: usize) -> Result<Vec<Vec<f64>>> {
    check_ell0(f, ell0)?;
    if n == 0 || !(span[1] > span[0]) {
        return Err(Error::Domain("need n > 0 and a⁻ < a⁺".into()));
    }
    let h = (span[1] - span[0]) / n as f64;
    let bound = lambda_sup(f);
    if h * bound > 1.0 {
        return Err(Error::Stability { step: h, bound: 1.0 / bound });
    }
    let mut st = Stepper::new(f);
    let mut ell = ell0.to_vec();
    let mut out = Vec::with_capacity(n + 1);
    out.push(ell.clone());
    for k in 0..n {
        st.step_x(&mut ell, span[0] + k as f64 * h, t, h)?;
        out.push(ell.clone());
    }
    Ok(out)
}

/// Forward equation in `t` at fixed `x`: `ℓ_t = ℓ*((α+s)f̃) − (A + sλ)ℓ` with
/// `f̃(t) = f(x + s (t − t₀), t)`. `shift = 0` gives the plain equation.
pub fn solve_ell_t(
    f: &Kernel,
    ell0: &[f64],
    x: f64,
    span: [f64; 2],
    n: usize,
    shift: f64,
) -> Result<Vec<Vec<f64>>> {
    check_ell0(f, ell0)?;
    if n == 0 || !(span[1] > span[0]) {
        return Err(Error::Domain("need n > 0 and t₀ < t₁".into()));
    }
    let h = (span[1] - span[0]) / n as f64;
    let bound = t_rate_sup(f, shift);
    if h * bound > 1.0 {
        return Err(Error::Stability { step: h, bound: 1.0 / bound });
    }
    let mut st = Stepper::new(f);
    let mut ell = ell0.to_vec();
    let mut out = Vec::with_capacity(n + 1);
    out.push(ell.clone());
    for k in 0..n {
        let t = span[0] + k as f64 * h;
        st.step_t(&mut ell, x + shift * (t - span[0]), t, h, shift)?;
        out.push(ell.clone());
    }
    Ok(out)
}

/// Which positivity hypothesis applies to `(f, ell0)`.
pub fn positivity_hypothesis(f: &Kernel, ell0: &[f64]) -> Result<Positivity> {
    let np = f.npairs();
    let mut used = vec![false; np];
    for (i, v) in f.values().iter().enumerate() {
        if *v != 0.0 {
            used[i % np] = true;
        }
    }
    if (0..np).all(|p| !used[p] || f.pairs().alpha(p) >= 0.0) {
        return Ok(Positivity::PlusCone);
    }
    let low = ell0.iter().copied().fold(f64::INFINITY, f64::min);
    if low >= 1.0 / 6.0 {
        return Ok(Positivity::Tilted);
    }
    Err(Error::Hypothesis(format!(
        "mixed-sign brackets and min ell0 = {low} < 1/6"
    )))
}

/// Builds `ℓ` on `[a⁻,a⁺] × [t₀,t₁]`, co-gridded with `f`.
///
/// `box_` is `[a⁻, a⁺, t₀, t₁]`; all four must be grid nodes or slice times of `f`.
pub fn build_ell_box(f: &Kernel, ell0: &[f64], box_: [f64; 4], opts: EllBoxOptions) -> Result<MarginalField> {
    check_ell0(f, ell0)?;
    let [a_lo, a_hi, t_lo, t_hi] = box_;
    if !(a_hi > a_lo && t_hi > t_lo) {
        return Err(Error::Domain("empty box".into()));
    }
    let grid = *f.grid();
    let tol = 1e-9 * grid.dx.max(1e-12);
    let (k0, k1) = match (grid.node_index(a_lo, tol), grid.node_index(a_hi, tol)) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::Range("box sides must be kernel grid nodes".into())),
    };
    let times = f.times();
    let ttol = 1e-12 * (1.0 + t_hi.abs());
    let s0 = times.iter().position(|t| (t - t_lo).abs() <= ttol);
    let s1 = times.iter().position(|t| (t - t_hi).abs() <= ttol);
    let (s0, s1) = match (s0, s1) {
        (Some(a), Some(b)) if a < b => (a, b),
        _ => return Err(Error::Range("box bottom and top must be kernel slice times".into())),
    };
    let mode = positivity_hypothesis(f, ell0)?;
    let horizon = f.tstar()?;
    if mode == Positivity::Tilted && t_hi - t_lo > horizon * (1.0 + 1e-12) {
        return Err(Error::Horizon { t: t_hi - t_lo, tstar: horizon });
    }
    let shift = match mode {
        Positivity::PlusCone => 0.0,
        Positivity::Tilted => f.v_inf(),
    };
    let max_step = match opts.max_step {
        Some(h) if h > 0.0 => h,
        Some(h) => return Err(Error::Domain(format!("max_step {h} must be positive"))),
        None => {
            let m0 = f.m0().max(1e-300);
            let mut h = 1.0 / (4.0 * m0);
            if horizon.is_finite() {
                h = h.min(horizon / 50.0);
            }
            h
        }
    };
    let x_bound = lambda_sup(f);
    if max_step * x_bound > 1.0 {
        return Err(Error::Stability { step: max_step, bound: 1.0 / x_bound });
    }
    let t_bound = t_rate_sup(f, shift);
    if max_step * t_bound > 1.0 {
        return Err(Error::Stability { step: max_step, bound: 1.0 / t_bound });
    }

    let na = f.marks().len();
    let nx = k1 - k0 + 1;
    let slices: Vec<f64> = times[s0..=s1].to_vec();
    let ns = slices.len();
    let mut values = vec![0.0; ns * nx * na];
    let mut st = Stepper::new(f);
    let sub = |len: f64| ((len / max_step) * (1.0 - 1e-12)).ceil().max(1.0) as usize;

    match (opts.order, mode) {
        (SweepOrder::EdgeThenX, _) => {
            let y0 = a_lo - shift * (t_hi - t_lo);
            let mut edge = ell0.to_vec();
            if shift > 0.0 {
                // Extend the bottom edge backward from a⁻ to y0.
                let n = sub(a_lo - y0);
                let h = (a_lo - y0) / n as f64;
                for k in 0..n {
                    st.step_x(&mut edge, a_lo - k as f64 * h, t_lo, -h)?;
                }
                if let Some(v) = edge.iter().find(|v| **v <= 0.0) {
                    return Err(Error::PositivityLoss { t: t_lo, value: *v });
                }
            }
            for (si, &ts) in slices.iter().enumerate() {
                if si > 0 {
                    let tp = slices[si - 1];
                    let n = sub(ts - tp);
                    let h = (ts - tp) / n as f64;
                    for k in 0..n {
                        let t = tp + k as f64 * h;
                        st.step_t(&mut edge, y0 + shift * (t - t_lo), t, h, shift)?;
                    }
                }
                let mut ell = edge.clone();
                let mut x = y0 + shift * (ts - t_lo);
                if a_lo - x > 0.0 {
                    let n = sub(a_lo - x);
                    let h = (a_lo - x) / n as f64;
                    for k in 0..n {
                        st.step_x(&mut ell, x + k as f64 * h, ts, h)?;
                    }
                }
                x = a_lo;
                let row = &mut values[si * nx * na..(si + 1) * nx * na];
                row[..na].copy_from_slice(&ell);
                for kk in 1..nx {
                    let xn = grid.node(k0 + kk);
                    let n = sub(xn - x);
                    let h = (xn - x) / n as f64;
                    for k in 0..n {
                        st.step_x(&mut ell, x + k as f64 * h, ts, h)?;
                    }
                    x = xn;
                    row[kk * na..(kk + 1) * na].copy_from_slice(&ell);
                }
            }
        }
        (SweepOrder::BaseThenT, Positivity::PlusCone) => {
            let mut base = vec![ell0.to_vec()];
            let mut ell = ell0.to_vec();
            let mut x = a_lo;
            for kk in 1..nx {
                let xn = grid.node(k0 + kk);
                let n = sub(xn - x);
                let h = (xn - x) / n as f64;
                for k in 0..n {
                    st.step_x(&mut ell, x + k as f64 * h, t_lo, h)?;
                }
                x = xn;
                base.push(ell.clone());
            }
            for (kk, b) in base.into_iter().enumerate() {
                let xn = grid.node(k0 + kk);
                let mut ell = b;
                values[kk * na..(kk + 1) * na].copy_from_slice(&ell);
                for si in 1..ns {
                    let (tp, ts) = (slices[si - 1], slices[si]);
                    let n = sub(ts - tp);
                    let h = (ts - tp) / n as f64;
                    for k in 0..n {
                        st.step_t(&mut ell, xn, tp + k as f64 * h, h, 0.0)?;
                    }
                    let o = (si * nx + kk) * na;
                    values[o..o + na].copy_from_slice(&ell);
                }
            }
        }
        (SweepOrder::BaseThenT, Positivity::Tilted) => {
            return Err(Error::Hypothesis("base-first order needs nonnegative brackets".into()));
        }
    }
    let out_grid = crate::marks::UniformGrid::new(grid.node(k0), grid.dx, nx)?;
    let field = MarginalField::new(f.marks().clone(), out_grid, slices, values)?;
    if field.floor() <= 0.0 {
        return Err(Error::PositivityLoss { t: t_lo, value: field.floor() });
    }
    Ok(field)
}

/// Max-norm of `ξ = ℓ_t − ℓ*(αf) + Aℓ` over interior slices of `ell`.
pub fn xi_residual(f: &Kernel, ell: &MarginalField) -> Result<f64> {
    if f.marks() != ell.marks() {
        return Err(Error::Shape("kernel and marginal use different marks".into()));
    }
    let ns = ell.times().len();
    if ns < 3 {
        return Err(Error::Shape("need at least three slices".into()));
    }
    let grid = *ell.grid();
    let fg = f.grid();
    if (grid.dx - fg.dx).abs() > 1e-12 * fg.dx || fg.node_index(grid.x0, 1e-9 * fg.dx).is_none() {
        return Err(Error::Shape("marginal grid is not a sub-grid of the kernel".into()));
    }
    let set = f.marks();
    let pairs = f.pairs();
    let na = set.len();
    let mut vals = vec![0.0; f.npairs()];
    let mut rates = vec![0.0; f.npairs()];
    let mut g = vec![0.0; na];
    let mut worst: f64 = 0.0;
    for s in 1..ns - 1 {
        let (tm, t, tp) = (ell.times()[s - 1], ell.times()[s], ell.times()[s + 1]);
        for k in 0..grid.n {
            let x = grid.node(k);
            f.eval_all(x, t, &mut vals)?;
            for p in 0..vals.len() {
                rates[p] = pairs.alpha(p) * vals[p];
            }
            generator(set, pairs, &rates, ell.node(s, k), &mut g);
            for a in 0..na {
                let lt = (ell.node(s + 1, k)[a] - ell.node(s - 1, k)[a]) / (tp - tm);
                worst = worst.max((lt - g[a]).abs());
            }
        }
    }
    Ok(worst)
}
