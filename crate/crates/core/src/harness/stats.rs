//! Goodness of fit of sampled step functions against a predicted jump law.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::forward::MarginalField;
use crate::marks::{alpha, Kernel};
use crate::tessellation::StepFunction;

use super::{TestReport, TestStat, Thresholds};

/// Fewest slices accepted by [`fit_slice_law`].
pub const MIN_SLICES: usize = 1000;

/// Expected count below which chi-square categories are pooled.
const CHI_POOL: f64 = 5.0;

/// Predicted law of a label process along a line: piecewise-linear jump
/// intensities per transition and, optionally, the one-point marginal.
#[derive(Clone, Debug, PartialEq)]
pub struct LineLaw {
    pub atoms: usize,
    pub nodes: Vec<f64>,
    pub transitions: Vec<(usize, usize)>,
    /// `rates[k][r]`: intensity of transition `r` at node `k`.
    pub rates: Vec<Vec<f64>>,
    /// `marginal[k][i]`: probability of atom `i` at node `k`.
    pub marginal: Option<Vec<Vec<f64>>>,
    cumulative: Vec<Vec<f64>>,
}

impl LineLaw {
    pub fn new(
        atoms: usize,
        nodes: Vec<f64>,
        transitions: Vec<(usize, usize)>,
        rates: Vec<Vec<f64>>,
        marginal: Option<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        if nodes.len() < 2 || nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Shape("law nodes must be strictly increasing, at least two".into()));
        }
        if rates.len() != nodes.len() || rates.iter().any(|r| r.len() != transitions.len()) {
            return Err(Error::Shape("rates must have one row per node and one column per transition".into()));
        }
        if rates.iter().flatten().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(Error::Domain("rates must be finite and nonnegative".into()));
        }
        if transitions.iter().any(|&(a, b)| a >= atoms || b >= atoms || a == b) {
            return Err(Error::Shape("transition outside the atoms".into()));
        }
        if let Some(m) = &marginal {
            if m.len() != nodes.len() || m.iter().any(|row| row.len() != atoms) {
                return Err(Error::Shape("marginal must have one row of atoms per node".into()));
            }
        }
        let mut cumulative = vec![vec![0.0; nodes.len()]; transitions.len()];
        for (r, cum) in cumulative.iter_mut().enumerate() {
            for k in 1..nodes.len() {
                cum[k] = cum[k - 1] + 0.5 * (rates[k - 1][r] + rates[k][r]) * (nodes[k] - nodes[k - 1]);
            }
        }
        Ok(Self { atoms, nodes, transitions, rates, marginal, cumulative })
    }

    pub fn range(&self) -> [f64; 2] {
        [self.nodes[0], self.nodes[self.nodes.len() - 1]]
    }

    /// Same law with every intensity multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Result<Self> {
        let rates = self.rates.iter().map(|row| row.iter().map(|r| r * k).collect()).collect();
        Self::new(self.atoms, self.nodes.clone(), self.transitions.clone(), rates, self.marginal.clone())
    }

    fn cell(&self, s: f64) -> (usize, f64) {
        let k = self.nodes.partition_point(|x| *x <= s).clamp(1, self.nodes.len() - 1) - 1;
        let a = ((s - self.nodes[k]) / (self.nodes[k + 1] - self.nodes[k])).clamp(0.0, 1.0);
        (k, a)
    }

    pub fn rate(&self, r: usize, s: f64) -> f64 {
        let (k, a) = self.cell(s);
        (1.0 - a) * self.rates[k][r] + a * self.rates[k + 1][r]
    }

    /// `∫ rate` from the first node to `s`; exact for the linear pieces.
    pub fn integral(&self, r: usize, s: f64) -> f64 {
        let s = s.clamp(self.nodes[0], self.nodes[self.nodes.len() - 1]);
        let (k, _) = self.cell(s);
        let left = self.rates[k][r];
        self.cumulative[r][k] + 0.5 * (left + self.rate(r, s)) * (s - self.nodes[k])
    }

    pub fn marginal_at(&self, s: f64) -> Option<Vec<f64>> {
        let m = self.marginal.as_ref()?;
        let (k, a) = self.cell(s);
        Some((0..self.atoms).map(|i| (1.0 - a) * m[k][i] + a * m[k + 1][i]).collect())
    }
}

/// Merges node lists, keeps those inside `[lo, hi]` and adds the endpoints.
fn nodes_in(lists: &[&[f64]], lo: f64, hi: f64, extra: usize) -> Vec<f64> {
    let mut nodes: Vec<f64> = lists.iter().flat_map(|l| l.iter().copied()).filter(|x| *x > lo && *x < hi).collect();
    nodes.extend((0..=extra).map(|k| lo + (hi - lo) * k as f64 / extra.max(1) as f64));
    nodes.sort_by(f64::total_cmp);
    let tol = 1e-12 * (hi - lo).abs().max(1.0);
    nodes.dedup_by(|a, b| (*a - *b).abs() <= tol);
    nodes
}

fn all_transitions(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
}

/// Law of `x ↦ ρ(x, t)` on `window`: intensity `f(x, t, ρ, ρ*) β(ρ*)`, marginal `ℓ β`.
pub fn horizontal_law(f: &Kernel, ell: Option<&MarginalField>, t: f64, window: [f64; 2]) -> Result<LineLaw> {
    let set = f.marks();
    let n = set.len();
    let fx: Vec<f64> = f.grid().nodes().collect();
    let lx: Vec<f64> = ell.map(|e| e.grid().nodes().collect()).unwrap_or_default();
    let nodes = nodes_in(&[&fx, &lx], window[0], window[1], 1);
    let transitions = all_transitions(n);
    let mut buf = vec![0.0; f.npairs()];
    let mut rates = Vec::with_capacity(nodes.len());
    for &x in &nodes {
        f.eval_all(x, t, &mut buf)?;
        rates.push(transitions.iter().map(|&(i, j)| buf[f.pairs().index(i, j)] * set.weight(j)).collect());
    }
    let marginal = match ell {
        Some(e) => Some(marginal_rows(e, nodes.iter().map(|&x| (x, t)))?),
        None => None,
    };
    LineLaw::new(n, nodes, transitions, rates, marginal)
}

fn marginal_rows(ell: &MarginalField, points: impl Iterator<Item = (f64, f64)>) -> Result<Vec<Vec<f64>>> {
    let set = ell.marks();
    let mut out = vec![0.0; set.len()];
    points
        .map(|(x, t)| {
            ell.eval_all(x, t, &mut out)?;
            Ok(out.iter().zip(set.weights()).map(|(l, w)| l * w).collect())
        })
        .collect()
}

/// Law of `t ↦ ρ(x, t)` over `horizon`: intensity `α(ρ, ρ*) f(x, t, ρ, ρ*) β(ρ*)`.
///
/// The marginal is read at `(x + drift (t − t₀), t)`, which serves slanted
/// lines when `f` is a sheared kernel. Every pair charged by `f` must have a
/// positive bracket.
pub fn vertical_law(
    f: &Kernel,
    ell: Option<&MarginalField>,
    x: f64,
    drift: f64,
    horizon: [f64; 2],
) -> Result<LineLaw> {
    let set = f.marks();
    let brackets: Vec<f64> =
        f.pairs().pairs().iter().map(|&(i, j)| alpha(&set.atom(i), &set.atom(j))).collect::<Result<_>>()?;
    velocity_law(f, &brackets, ell, x, drift, horizon)
}

/// As [`vertical_law`] with per-pair velocities `vel` in place of the brackets.
pub fn velocity_law(
    f: &Kernel,
    vel: &[f64],
    ell: Option<&MarginalField>,
    x: f64,
    drift: f64,
    horizon: [f64; 2],
) -> Result<LineLaw> {
    let set = f.marks();
    let n = set.len();
    if vel.len() != f.npairs() {
        return Err(Error::Shape("velocity table does not match pairs".into()));
    }
    let transitions = all_transitions(n);
    let [t0, t1] = horizon;
    let lt: Vec<f64> = ell.map(|e| e.times().to_vec()).unwrap_or_default();
    let nodes = nodes_in(&[f.times(), &lt], t0, t1, 64);
    let mut buf = vec![0.0; f.npairs()];
    let mut rates = Vec::with_capacity(nodes.len());
    for &t in &nodes {
        f.eval_all(x, t, &mut buf)?;
        let mut row = Vec::with_capacity(transitions.len());
        for &(i, j) in &transitions {
            let p = f.pairs().index(i, j);
            if buf[p] > 0.0 && vel[p] <= 0.0 {
                return Err(Error::Config(format!(
                    "kernel charges pair ({i}, {j}) with velocity {} at x = {x}; vertical laws need positive velocities",
                    vel[p]
                )));
            }
            row.push(vel[p].max(0.0) * buf[p] * set.weight(j));
        }
        rates.push(row);
    }
    let marginal = match ell {
        Some(e) => Some(marginal_rows(e, nodes.iter().map(|&t| (x + drift * (t - t0), t)))?),
        None => None,
    };
    LineLaw::new(n, nodes, transitions, rates, marginal)
}

/// Binning and thresholds for [`fit_slice_law`].
#[derive(Clone, Debug, PartialEq)]
pub struct FitOptions {
    pub bins: usize,
    pub thresholds: Thresholds,
    /// Prefix for the report rows.
    pub label: String,
    /// Skip the marginal test even when the law carries one.
    pub skip_marginal: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { bins: 8, thresholds: Thresholds::default(), label: "slice".into(), skip_marginal: false }
    }
}

/// Compares sampled slices with `law`.
///
/// Rows: a chi-square `p` per bin for the marginal at the bin midpoint; a `z`
/// per pooled (bins, transition) cell comparing jump counts with the
/// compensator `Σ ∫ rate · 1{label = from}`, plus one over all cells; a lag
/// `z` per adjacent bin pair for the correlation of compensated counts.
pub fn fit_slice_law(slices: &[StepFunction], law: &LineLaw, opts: &FitOptions) -> Result<TestReport> {
    if slices.len() < MIN_SLICES {
        return Err(Error::Power { got: slices.len(), need: MIN_SLICES });
    }
    if opts.bins == 0 {
        return Err(Error::Config("at least one bin is needed".into()));
    }
    let [lo, hi] = law.range();
    let tol = 1e-9 * (hi - lo).abs().max(1.0);
    for s in slices {
        if (s.range[0] - lo).abs() > tol || (s.range[1] - hi).abs() > tol {
            return Err(Error::Precondition(format!(
                "slice range {:?} differs from the law range {:?}",
                s.range,
                [lo, hi]
            )));
        }
        if s.labels.iter().any(|l| *l >= law.atoms) {
            return Err(Error::Shape("slice label outside the atoms".into()));
        }
    }
    let nb = opts.bins;
    let nt = law.transitions.len();
    let edges: Vec<f64> = (0..=nb).map(|b| lo + (hi - lo) * b as f64 / nb as f64).collect();
    let bin_of = |s: f64| (((s - lo) / (hi - lo) * nb as f64).floor().max(0.0) as usize).min(nb - 1);
    let mut from: Vec<Vec<usize>> = vec![Vec::new(); law.atoms];
    for (r, &(a, _)) in law.transitions.iter().enumerate() {
        from[a].push(r);
    }
    let th = &opts.thresholds;
    let mut report = TestReport::new(opts.label.clone());

    // counts[b][r], comp[b][r]
    let mut counts = vec![vec![0.0f64; nt]; nb];
    let mut comp = vec![vec![0.0f64; nt]; nb];
    let mut stray = 0usize;
    // per slice and bin: compensated count and own compensator
    let mut resid_all = vec![0.0; slices.len() * nb];
    let mut own_all = vec![0.0; slices.len() * nb];
    for (i, s) in slices.iter().enumerate() {
        let resid = &mut resid_all[i * nb..(i + 1) * nb];
        let own = &mut own_all[i * nb..(i + 1) * nb];
        for (pos, a, b) in s.jumps() {
            let k = bin_of(pos);
            match law.transitions.iter().position(|&t| t == (a, b)) {
                Some(r) => {
                    counts[k][r] += 1.0;
                    resid[k] += 1.0;
                }
                None => stray += 1,
            }
        }
        let mut left = lo;
        for k in 0..=s.breaks.len() {
            let right = if k < s.breaks.len() { s.breaks[k].clamp(lo, hi) } else { hi };
            if right > left {
                let label = s.labels[k];
                let (b0, b1) = (bin_of(left), bin_of(right));
                for b in b0..=b1 {
                    let (u, v) = (left.max(edges[b]), right.min(edges[b + 1]));
                    if v <= u {
                        continue;
                    }
                    for &r in &from[label] {
                        let c = law.integral(r, v) - law.integral(r, u);
                        comp[b][r] += c;
                        resid[b] -= c;
                        own[b] += c;
                    }
                }
                left = right;
            }
        }
    }

    if !opts.skip_marginal {
        if let Some(_) = &law.marginal {
            for b in 0..nb {
                let mid = 0.5 * (edges[b] + edges[b + 1]);
                let p = law.marginal_at(mid).expect("law has a marginal");
                let mut observed = vec![0.0; law.atoms];
                for s in slices {
                    observed[s.label_at(mid)] += 1.0;
                }
                let (stat, dof) = chi_square(&observed, &p, slices.len() as f64);
                let pval = if dof == 0 {
                    1.0
                } else {
                    ChiSquared::new(dof as f64).map_err(|e| Error::Invalid(e.to_string()))?.sf(stat)
                };
                report.push(
                    TestStat::at_least(format!("{}/marginal/bin{b}", opts.label), "p", pval, th.p_floor, slices.len())
                        .with_counts(stat, dof as f64),
                );
            }
        }
    }

    for (r, &(a, bto)) in law.transitions.iter().enumerate() {
        let mut cells: Vec<(usize, usize, f64, f64)> = Vec::new();
        let mut start = 0;
        let (mut n, mut c) = (0.0, 0.0);
        for b in 0..nb {
            n += counts[b][r];
            c += comp[b][r];
            if c >= th.min_expected {
                cells.push((start, b, n, c));
                start = b + 1;
                n = 0.0;
                c = 0.0;
            }
        }
        if start < nb {
            match cells.last_mut() {
                Some(last) => {
                    last.1 = nb - 1;
                    last.2 += n;
                    last.3 += c;
                }
                None => cells.push((0, nb - 1, n, c)),
            }
        }
        for (b0, b1, n, c) in cells {
            let name = format!("{}/intensity/{a}->{bto}/bins{b0}-{b1}", opts.label);
            if c <= 0.0 {
                if n > 0.0 {
                    report.push(TestStat::z(name, f64::INFINITY, th.z_limit, slices.len()).with_counts(n, c));
                }
                continue;
            }
            let z = (n - c) / c.sqrt();
            let row = TestStat::z(name, z, th.z_limit, slices.len()).with_counts(n, c);
            report.push(if c < th.min_expected { row.informational() } else { row });
        }
    }
    let n_all: f64 = counts.iter().flatten().sum();
    let c_all: f64 = comp.iter().flatten().sum();
    if c_all > 0.0 {
        let z = (n_all - c_all) / c_all.sqrt();
        let row = TestStat::z(format!("{}/intensity/all", opts.label), z, th.z_limit, slices.len()).with_counts(n_all, c_all);
        report.push(if c_all < th.min_expected { row.informational() } else { row });
    } else if n_all > 0.0 {
        report.push(TestStat::z(format!("{}/intensity/all", opts.label), f64::INFINITY, th.z_limit, slices.len()));
    }
    if stray > 0 {
        report.push(TestStat::at_most(format!("{}/unexpected-jumps", opts.label), "count", stray as f64, 0.0, slices.len()));
    }

    for row in lag_rows(&resid_all, &own_all, nb, th.min_expected) {
        let (b0, b1, b2, z, den) = row;
        let name = format!("{}/lag/bins{b0}-{b1}-{b2}", opts.label);
        let stat = TestStat::z(name, z, th.z_limit, slices.len()).with_counts(z * den.sqrt(), den);
        report.push(if den < th.min_expected { stat.informational() } else { stat });
    }
    Ok(report)
}

/// Lag statistics between adjacent blocks of bins. Blocks are the coarsest
/// equal split whose variances `Σ r_B² C_B'` all reach `min_expected`; with
/// sparse jumps the normal limit needs that many coincidences. Returns
/// `(first bin, first bin of next block, last bin, z, variance)`.
fn lag_rows(resid: &[f64], own: &[f64], nb: usize, min_expected: f64) -> Vec<(usize, usize, usize, f64, f64)> {
    if nb < 2 {
        return Vec::new();
    }
    let n = resid.len() / nb;
    let eval = |m: usize| {
        let bounds: Vec<usize> = (0..=m).map(|k| k * nb / m).collect();
        let mut num = vec![0.0; m - 1];
        let mut den = vec![0.0; m - 1];
        let mut r = vec![0.0; m];
        let mut c = vec![0.0; m];
        for i in 0..n {
            for k in 0..m {
                let span = i * nb + bounds[k]..i * nb + bounds[k + 1];
                r[k] = resid[span.clone()].iter().sum();
                c[k] = own[span].iter().sum();
            }
            for k in 0..m - 1 {
                num[k] += r[k] * r[k + 1];
                // E[(r_B r_B')²] = E[r_B² C_B'] for compensated counts
                den[k] += r[k] * r[k] * c[k + 1];
            }
        }
        (0..m - 1)
            .map(|k| {
                let z = if den[k] > 0.0 { num[k] / den[k].sqrt() } else { 0.0 };
                (bounds[k], bounds[k + 1], bounds[k + 2] - 1, z, den[k])
            })
            .collect::<Vec<_>>()
    };
    let mut m = nb;
    loop {
        let rows = eval(m);
        if m == 2 || rows.iter().all(|r| r.4 >= min_expected) {
            return rows;
        }
        m = (m / 2).max(2);
    }
}

/// Pearson statistic with categories of small expectation pooled; returns `(statistic, dof)`.
fn chi_square(observed: &[f64], p: &[f64], n: f64) -> (f64, usize) {
    let mut groups: Vec<(f64, f64)> = Vec::new();
    let mut pool = (0.0, 0.0);
    for (o, p) in observed.iter().zip(p) {
        let e = p.max(0.0) * n;
        if e < CHI_POOL {
            pool.0 += o;
            pool.1 += e;
        } else {
            groups.push((*o, e));
        }
    }
    if pool.1 > 0.0 || pool.0 > 0.0 {
        if pool.1 >= CHI_POOL || groups.is_empty() {
            groups.push(pool);
        } else {
            let last = groups.last_mut().unwrap();
            last.0 += pool.0;
            last.1 += pool.1;
        }
    }
    if groups.len() < 2 {
        return (0.0, 0);
    }
    let stat = groups
        .iter()
        .map(|(o, e)| if *e > 0.0 { (o - e) * (o - e) / e } else if *o > 0.0 { f64::INFINITY } else { 0.0 })
        .sum();
    (stat, groups.len() - 1)
}

/// Horizontal slices at time `t` against `(f_pred, ℓ_pred)` at that time.
pub fn fit_jump_rates(
    slices: &[StepFunction],
    f_pred: &Kernel,
    ell_pred: &MarginalField,
    opts: &FitOptions,
) -> Result<TestReport> {
    let first = slices.first().ok_or(Error::Power { got: 0, need: MIN_SLICES })?;
    let law = horizontal_law(f_pred, Some(ell_pred), first.coordinate, first.range)?;
    fit_slice_law(slices, &law, opts)
}
