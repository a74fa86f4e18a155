//! Experiment drivers. Each returns a [`TestReport`] whose rows carry the
//! pre-registered thresholds of its configuration.

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fixtures;
use crate::forward::{build_ell_box, EllBoxOptions, MarginalField};
use crate::forward::{solve_ell_t, solve_ell_x, xi_residual};
use crate::kinetic::{
    kinetic_residual, q_apply, reverse_kernel, row_sums, shear_pushforward, solve_kinetic, solve_kinetic_1d, swap_kernel, swap_marginal,
    tstar, HamiltonianSpec, Scheme, Variant,
};
use crate::marks::{Kernel, Mark, MarkSet, Polynomial, UniformGrid};
use crate::sampler::{replica_rng, sample_boundary, simulate, EventKind, ParticleConfig, SimOptions, Trajectory};
use crate::tessellation::{
    build_tessellation, geom, hopf_evolve, hopf_lax_value, laguerre_cells, reconstruct_g, slice, slice_along,
    validate_generic, Axis, HopfLaxGrid, PLCFunction, StepFunction, VertexKind, Window, VERTEX_TOL,
};

use super::stats::{fit_slice_law, horizontal_law, velocity_law, vertical_law, FitOptions, LineLaw};
use super::{Experiment, ExperimentConfig, TestReport, TestStat};

/// Solved kernel and marginal over the configured box.
#[derive(Clone, Debug)]
pub struct Setup {
    pub f: Kernel,
    pub ell: MarginalField,
    /// Marginal at the lower-left corner, as a density against the weights.
    pub ell0: Vec<f64>,
    pub window: [f64; 2],
    pub height: f64,
    pub notes: Vec<String>,
}

impl Setup {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        let marks = cfg.fixture.marks()?;
        Self::build(cfg, marks, cfg.box_.x, None)
    }

    fn build(cfg: &ExperimentConfig, marks: MarkSet, window: [f64; 2], height: Option<f64>) -> Result<Self> {
        let k = &cfg.kernel;
        let limit = tstar(k.v_inf, k.c, k.delta0)?;
        let height = height.or(cfg.box_.height).unwrap_or(limit / 2.0);
        if !k.frozen && height > limit * (1.0 + 1e-12) {
            return Err(Error::Horizon { t: height, tstar: limit });
        }
        let ell0 = match &k.ell0 {
            Some(v) => v.clone(),
            None => fixtures::uniform_ell0(&marks),
        };
        let h = fixtures::initial_kernel(marks.clone(), k.v_inf, k.delta0, k.c, window, k.dx, height)?;
        let f = if k.frozen { fixtures::frozen(&h, 0.0, height)? } else { solve_kinetic(&h, height, k.steps, Scheme::Polygonal)? };
        let opts = EllBoxOptions { max_step: k.ell_step, ..EllBoxOptions::default() };
        let mut notes = Vec::new();
        let ell = match build_ell_box(&f, &ell0, [window[0], window[1], 0.0, height], opts) {
            Ok(ell) => ell,
            Err(e) if k.frozen => {
                notes.push(format!("marginal held at ell0 on the frozen box ({e})"));
                MarginalField::uniform(marks, *f.grid(), f.times().to_vec(), &ell0)?
            }
            Err(e) => return Err(e),
        };
        Ok(Self { f, ell, ell0, window, height, notes })
    }

    pub fn horizon(&self) -> [f64; 2] {
        [0.0, self.height]
    }
}

/// Runs `n` independent replicas with streams `(seed, i)` and maps each trajectory.
///
/// Replicas start from `initial` when given, otherwise from the boundary sampler.
/// Output order is the replica order regardless of scheduling.
pub fn simulate_replicas<T: Send>(
    setup: &Setup,
    seed: u64,
    n: usize,
    initial: Option<&ParticleConfig>,
    map: impl Fn(usize, Trajectory) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = replica_rng(seed, i as u64);
            let q0 = match initial {
                Some(q) => q.clone(),
                None => sample_boundary(&setup.f, &setup.ell0, 0.0, setup.window, &mut rng)?,
            };
            let traj = simulate(&q0, &setup.f, &setup.ell, setup.window, setup.horizon(), &mut rng, SimOptions::default())?;
            map(i, traj)
        })
        .collect()
}

fn fit_options(cfg: &ExperimentConfig, label: String) -> FitOptions {
    FitOptions { bins: cfg.bins, thresholds: cfg.thresholds.clone(), label, skip_marginal: false }
}

/// Largest intensity `|z|` a perturbed law reaches on `slices`.
fn control_row(slices: &[StepFunction], law: &LineLaw, cfg: &ExperimentConfig, name: &str) -> Result<TestStat> {
    let doubled = law.scaled(2.0)?;
    let report = fit_slice_law(slices, &doubled, &fit_options(cfg, name.into()))?;
    let z = report
        .tests
        .iter()
        .filter(|t| t.kind == "z" && t.name.contains("/intensity/"))
        .map(|t| t.statistic.abs())
        .fold(0.0, f64::max);
    Ok(TestStat::at_least(name, "max|z|", z, cfg.thresholds.control_z, slices.len()))
}

fn finish(mut report: TestReport, start: Instant) -> TestReport {
    report.runtime_s = start.elapsed().as_secs_f64();
    report.refresh();
    report
}

/// Horizontal slices at interior times against the solved kernel and marginal.
pub fn run_consistency_horizontal(cfg: &ExperimentConfig) -> Result<TestReport> {
    let start = Instant::now();
    let setup = Setup::from_config(cfg)?;
    let times: Vec<f64> = cfg.slices.iter().map(|s| s * setup.height).collect();
    let per_run = simulate_replicas(&setup, cfg.seed, cfg.replicas, None, |_, traj| {
        times.iter().map(|&t| slice(&traj, Axis::Horizontal, t)).collect::<Result<Vec<_>>>()
    })?;
    let mut report = TestReport::new(Experiment::Horizontal.name());
    report.notes.extend(setup.notes.iter().cloned());
    let mid = times.len() / 2;
    for (k, &t) in times.iter().enumerate() {
        let slices: Vec<StepFunction> = per_run.iter().map(|r| r[k].clone()).collect();
        let law = horizontal_law(&setup.f, Some(&setup.ell), t, setup.window)?;
        let sub = fit_slice_law(&slices, &law, &fit_options(cfg, format!("t={:.6}", t)))?;
        report.extend(sub.tests);
        if k == mid {
            report.push(control_row(&slices, &law, cfg, "control/doubled-rate")?);
        }
    }
    Ok(finish(report, start))
}

/// Vertical slices against `α f` and the marginal; with a shear `c` the
/// slices run along `x = x₀ + c t` against the pushed-forward kernel.
pub fn run_consistency_vertical(cfg: &ExperimentConfig) -> Result<TestReport> {
    let start = Instant::now();
    let setup = Setup::from_config(cfg)?;
    let c = cfg.kernel.shear.unwrap_or(0.0);
    let f_law = if c > 0.0 { shear_pushforward(&setup.f, c)? } else { setup.f.clone() };
    let [a, b] = setup.window;
    let span = b - a - c * setup.height;
    if span <= 0.0 {
        return Err(Error::Config("sheared lines leave the box".into()));
    }
    let xs: Vec<f64> = cfg.slices.iter().map(|s| a + s * span).collect();
    let laws: Vec<LineLaw> =
        xs.iter().map(|&x| vertical_law(&f_law, Some(&setup.ell), x, c, setup.horizon())).collect::<Result<_>>()?;
    let per_run = simulate_replicas(&setup, cfg.seed, cfg.replicas, None, |_, traj| {
        xs.iter().map(|&x| slice_along(&traj, x, c)).collect::<Result<Vec<_>>>()
    })?;
    let mut report = TestReport::new(Experiment::Vertical.name());
    report.notes.extend(setup.notes.iter().cloned());
    if c > 0.0 {
        report.note(format!("slices along x = x0 + {c} t against the sheared kernel"));
    }
    // the control runs where jumps are most frequent
    let mut busiest = (0, -1.0);
    for (k, (&x, law)) in xs.iter().zip(&laws).enumerate() {
        let slices: Vec<StepFunction> = per_run.iter().map(|r| r[k].clone()).collect();
        let jumps = slices.iter().map(|s| s.breaks.len()).sum::<usize>() as f64;
        if jumps > busiest.1 {
            busiest = (k, jumps);
        }
        let sub = fit_slice_law(&slices, law, &fit_options(cfg, format!("x={:.4}", x)))?;
        report.extend(sub.tests);
    }
    let slices: Vec<StepFunction> = per_run.iter().map(|r| r[busiest.0].clone()).collect();
    report.push(control_row(&slices, &laws[busiest.0], cfg, "control/doubled-rate")?);
    Ok(finish(report, start))
}

/// Upper envelope of the lines `s ↦ slopes[i] s + intercepts[i]` on `range`.
fn envelope(
    slopes: &[f64],
    intercepts: &[f64],
    labels: &[usize],
    axis: Axis,
    coordinate: f64,
    range: [f64; 2],
) -> StepFunction {
    let [lo, hi] = range;
    let value = |i: usize, s: f64| slopes[i] * s + intercepts[i];
    let better = |i: usize, j: usize, s: f64| {
        let (vi, vj) = (value(i, s), value(j, s));
        vi > vj || (vi == vj && slopes[i] > slopes[j])
    };
    let mut cur = (1..slopes.len()).fold(0, |b, i| if better(i, b, lo) { i } else { b });
    let mut s = lo;
    let mut breaks = Vec::new();
    let mut out = vec![labels[cur]];
    loop {
        // the next steeper line to overtake; ties go to the steepest
        let mut next: Option<(f64, usize)> = None;
        for j in 0..slopes.len() {
            if slopes[j] <= slopes[cur] {
                continue;
            }
            let x = (intercepts[cur] - intercepts[j]) / (slopes[j] - slopes[cur]);
            if x <= s {
                continue;
            }
            if next.is_none_or(|(y, k)| x < y || (x == y && slopes[j] > slopes[k])) {
                next = Some((x, j));
            }
        }
        match next {
            Some((x, j)) if x < hi => {
                breaks.push(x);
                out.push(labels[j]);
                s = x;
                cur = j;
            }
            _ => break,
        }
    }
    StepFunction { axis, coordinate, range, breaks, labels: out }
}

/// The Hamiltonian of the invariance experiment, `H(ρ) = ρ₁² + ρ₂`.
pub fn hj_hamiltonian() -> HamiltonianSpec {
    HamiltonianSpec::new(Polynomial(vec![0.0, 0.0, 1.0]), Polynomial(vec![0.0, 1.0]), Variant::Planar)
}

/// Samples the planar field, evolves its height function by the Hopf formula
/// and tests slices along `x₁` and along `t` against the one-dimensional flow.
pub fn run_hj_invariance(cfg: &ExperimentConfig) -> Result<TestReport> {
    let start = Instant::now();
    let marks = cfg.fixture.marks()?;
    let atoms = marks.atoms();
    if atoms.windows(2).any(|w| !(w[1].rho2 > w[0].rho2)) {
        return Err(Error::Fixture("marks must lie on the graph of a strictly increasing K".into()));
    }
    let hs = hj_hamiltonian();
    let k = &cfg.kernel;
    let mut one_d = hs.clone();
    one_d.variant = Variant::OneDimensional;
    let probe = fixtures::initial_kernel(marks.clone(), k.v_inf, k.delta0, k.c, [0.0, 1.0], 0.05, 0.0)?;
    let vel = one_d.velocities(&marks, probe.pairs())?;
    let v_max = vel.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let limit = tstar(v_max, k.c, k.delta0)?;
    let t_max = cfg.hj_time.unwrap_or(limit);
    let grad1 = hs.h1.derivative();
    let grad2 = hs.h2.derivative();
    let reach1 = atoms.iter().map(|m| grad1.eval(m.rho1)).fold(0.0f64, f64::max);
    let reach2 = atoms.iter().map(|m| grad2.eval(m.rho2)).fold(0.0f64, f64::max);

    // the window [0,1]² at time t depends on the field up to t ∇H to its upper right
    let [a, b] = cfg.box_.x;
    let dx = k.dx;
    let x_hi = a + (((b - a) + reach1 * t_max) / dx).ceil() * dx;
    let x2_window = [0.0, cfg.box_.height.unwrap_or(1.0)];
    let height = x2_window[1] + reach2 * t_max;
    let setup = Setup::build(cfg, marks.clone(), [a, x_hi], Some(height))?;
    if !setup.f.is_x_independent(1e-12) {
        return Err(Error::Config("the invariance experiment needs an x-independent planar kernel".into()));
    }

    let steps = k.steps.max(1);
    let ftilde = fixtures::initial_kernel(marks.clone(), v_max.max(k.v_inf), k.delta0, k.c, [a, b], dx.max(0.01), t_max)?;
    let f_hat = if t_max > 0.0 { Some(solve_kinetic_1d(&ftilde, &hs, t_max, steps)?) } else { None };
    let x2 = 0.5 * (x2_window[0] + x2_window[1]);
    let t_slices: Vec<f64> = if t_max > 0.0 { vec![0.5 * t_max, t_max] } else { vec![0.0] };
    let x_slices: Vec<f64> = cfg.slices.iter().map(|s| a + s * (b - a)).collect();
    let index_of = |m: &Mark| marks.index_of(m).ok_or_else(|| Error::Corruption("evolved mark outside the set".into()));

    let per_run = simulate_replicas(&setup, cfg.seed, cfg.replicas, None, |_, traj| {
        let rec = reconstruct_g(&traj, 0.0)?;
        let mut along_x = Vec::with_capacity(t_slices.len());
        for &t in &t_slices {
            let g = hopf_evolve(&rec.g, &hs, t)?;
            let slopes: Vec<f64> = g.marks.iter().map(|m| m.rho1).collect();
            let icpt: Vec<f64> = g.marks.iter().zip(&g.intercepts).map(|(m, c)| m.rho2 * x2 - c).collect();
            let labels: Vec<usize> = g.marks.iter().map(index_of).collect::<Result<_>>()?;
            along_x.push(envelope(&slopes, &icpt, &labels, Axis::Horizontal, x2, [a, b]));
        }
        let mut along_t = Vec::new();
        if t_max > 0.0 {
            let g = rec.g.pruned();
            let slopes: Vec<f64> = g.marks.iter().map(|m| hs.eval(m)).collect();
            let labels: Vec<usize> = g.marks.iter().map(index_of).collect::<Result<_>>()?;
            for &x1 in &x_slices {
                let icpt: Vec<f64> = g.marks.iter().zip(&g.intercepts).map(|(m, c)| m.dot([x1, x2]) - c).collect();
                along_t.push(envelope(&slopes, &icpt, &labels, Axis::Vertical, x1, [0.0, t_max]));
            }
        }
        Ok((along_x, along_t, rec.curl))
    })?;

    let mut report = TestReport::new(Experiment::Hj.name());
    report.notes.extend(setup.notes.iter().cloned());
    report.note(format!(
        "planar field sampled on [{a}, {x_hi}] x [0, {height}]; right-face law induced by the planar sampler; t_max = {t_max}"
    ));
    let curl = per_run.iter().map(|r| r.2).fold(0.0, f64::max);
    report.push(TestStat::at_most("reconstruction/curl", "curl", curl, 1e-9, per_run.len()));
    for (k, &t) in t_slices.iter().enumerate() {
        let slices: Vec<StepFunction> = per_run.iter().map(|r| r.0[k].clone()).collect();
        let law = match &f_hat {
            Some(fh) => horizontal_law(fh, None, t, [a, b])?,
            None => horizontal_law(&setup.f, None, 0.0, [a, b])?,
        };
        let sub = fit_slice_law(&slices, &law, &fit_options(cfg, format!("x1-slice/t={t:.6}")))?;
        report.extend(sub.tests);
    }
    if let Some(fh) = &f_hat {
        for (k, &x1) in x_slices.iter().enumerate() {
            let slices: Vec<StepFunction> = per_run.iter().map(|r| r.1[k].clone()).collect();
            let law = velocity_law(fh, &vel, None, x1, 0.0, [0.0, t_max])?;
            let sub = fit_slice_law(&slices, &law, &fit_options(cfg, format!("t-slice/x1={x1:.4}")))?;
            report.extend(sub.tests);
        }
    }
    Ok(finish(report, start))
}

/// Refinement study of the polygonal scheme against the homogeneous oracle.
pub fn run_appendix_convergence(cfg: &ExperimentConfig) -> Result<TestReport> {
    let start = Instant::now();
    let marks = cfg.fixture.marks()?;
    let k = &cfg.kernel;
    let horizon = tstar(k.v_inf, k.c, k.delta0)?;
    let t_final = cfg.box_.height.unwrap_or(horizon).min(horizon);
    let h = fixtures::initial_kernel(marks, k.v_inf, k.delta0, k.c, cfg.box_.x, k.dx, t_final)?;
    let ns = [100usize, 200, 400, 800];
    let sols: Vec<Kernel> = ns.par_iter().map(|&n| solve_kinetic(&h, t_final, n, Scheme::Polygonal)).collect::<Result<_>>()?;
    let mut report = TestReport::new(Experiment::Convergence.name());
    let last = |f: &Kernel| f.slice(f.times().len() - 1).to_vec();
    let diff = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let finals: Vec<Vec<f64>> = sols.iter().map(last).collect();
    if h.is_x_independent(1e-12) {
        let oracle = solve_kinetic(&h, t_final, 800, Scheme::HomogeneousRk4)?;
        let e = diff(&finals[3], &last(&oracle));
        report.push(TestStat::at_most("oracle/n=800", "max-error", e, 5e-3, 800));
    } else {
        report.note("initial data depend on x: the homogeneous oracle does not apply");
    }
    let d: Vec<f64> = finals.windows(2).map(|w| diff(&w[0], &w[1])).collect();
    for k in 0..d.len() - 1 {
        let r = if d[k + 1] > 0.0 { d[k] / d[k + 1] } else { f64::INFINITY };
        let pass = (1.6..=2.4).contains(&r);
        let mut row = TestStat::at_least(format!("cauchy/ratio/n={}", ns[k + 1]), "ratio", r, 1.6, ns[k + 2]);
        row.pass = pass;
        report.push(row.with_counts(d[k], d[k + 1]));
    }
    let f800 = &sols[3];
    let (floor, ceiling) = (k.delta0 / 2.0, 2.0 * f800.m0());
    let (mut lo, mut hi, mut outside) = (f64::INFINITY, 0.0f64, 0.0f64);
    for s in 0..f800.times().len() {
        for (idx, v) in f800.slice(s).iter().enumerate() {
            let p = idx % f800.npairs();
            if f800.pairs().in_cone(p) {
                lo = lo.min(*v);
                hi = hi.max(*v);
            } else {
                outside = outside.max(v.abs());
            }
        }
    }
    report.push(TestStat::at_least("bounds/floor", "min", lo, floor, 800));
    report.push(TestStat::at_most("bounds/ceiling", "max", hi, ceiling, 800));
    report.push(TestStat::at_most("support/outside-cone", "max", outside, 0.0, 800));
    let res: Vec<f64> = sols.iter().map(kinetic_residual).collect::<Result<_>>()?;
    for (n, r) in ns.iter().zip(&res) {
        report.push(TestStat::at_most(format!("residual/n={n}"), "residual", *r, f64::INFINITY, *n).informational());
    }
    report.push(TestStat::at_most("residual/decay", "ratio", res[3] / res[0], 1.0, 800).with_counts(res[3], res[0]));
    let ell0 = match &k.ell0 {
        Some(v) => v.clone(),
        None => fixtures::uniform_ell0(f800.marks()),
    };
    let [a, b] = cfg.box_.x;
    let ell = build_ell_box(f800, &ell0, [a, b, 0.0, t_final], EllBoxOptions { max_step: k.ell_step, ..Default::default() })?;
    report.push(TestStat::at_most("ell/mass", "max-error", ell.mass_error(), 1e-8, 800));
    report.push(TestStat::at_least("ell/floor", "min", ell.floor(), f64::MIN_POSITIVE, 800));
    let runtime = start.elapsed().as_secs_f64();
    report.push(TestStat::at_most("runtime", "s", runtime, 10.0, 1));
    Ok(finish(report, start))
}

/// Counts non-generic vertices and triple collisions over many runs.
pub fn run_genericity(cfg: &ExperimentConfig) -> Result<TestReport> {
    let start = Instant::now();
    let setup = Setup::from_config(cfg)?;
    let per_run = simulate_replicas(&setup, cfg.seed, cfg.replicas, None, |_, traj| {
        let w = Window::of(&traj)?;
        let t = build_tessellation(&traj, &w)?;
        let irregular = t.interior_vertices().filter(|v| v.marks.len() != 3).count();
        Ok((irregular, traj.triple_collisions, t.interior_vertices().count(), t.count(VertexKind::Fragmentation)))
    })?;
    let n = per_run.len();
    let sum = |f: fn(&(usize, usize, usize, usize)) -> usize| per_run.iter().map(f).sum::<usize>() as f64;
    let mut report = TestReport::new(Experiment::Genericity.name());
    report.notes.extend(setup.notes.iter().cloned());
    report.note(format!("merge tolerance {VERTEX_TOL}"));
    report.push(TestStat::at_most("vertices/degree-not-3", "count", sum(|r| r.0), 0.0, n));
    report.push(TestStat::at_most("events/triple-collisions", "count", sum(|r| r.1), 0.0, n));
    report.push(TestStat::at_least("vertices/interior", "count", sum(|r| r.2), 1.0, n).informational());
    report.push(TestStat::at_least("vertices/fragmentation", "count", sum(|r| r.3), 0.0, n).informational());
    Ok(finish(report, start))
}

/// Orthogonality, orientation, tiling, gradient reconstruction and the
/// Laguerre round trip on simulated tessellations.
pub fn run_geometry(cfg: &ExperimentConfig) -> Result<TestReport> {
    let start = Instant::now();
    let setup = Setup::from_config(cfg)?;
    let tol = 1e-9;
    let per_run = simulate_replicas(&setup, cfg.seed, cfg.replicas, None, |_, traj| {
        let w = Window::of(&traj)?;
        let t = build_tessellation(&traj, &w)?;
        let r = validate_generic(&t, tol);
        let rec = reconstruct_g(&traj, 0.0)?;
        let lag = laguerre_cells(&rec.g, &w)?;
        let mut haus: f64 = if lag.cells.len() == t.cells.len() { 0.0 } else { f64::INFINITY };
        for c in &t.cells {
            haus = haus.max(match lag.cell(&c.mark) {
                Some(o) => geom::hausdorff_convex(&c.polygon, &o.polygon),
                None => f64::INFINITY,
            });
        }
        Ok([
            r.orthogonality.worst,
            if r.orientation.pass { 0.0 } else { 1.0 },
            if r.tiling.pass { 0.0 } else { 1.0 },
            rec.curl,
            haus,
            t.edges.len() as f64,
        ])
    })?;
    let n = per_run.len();
    let max = |k: usize| per_run.iter().map(|r| r[k]).fold(0.0, f64::max);
    let sum = |k: usize| per_run.iter().map(|r| r[k]).sum::<f64>();
    let mut report = TestReport::new(Experiment::Geometry.name());
    report.notes.extend(setup.notes.iter().cloned());
    report.push(TestStat::at_most("edges/orthogonality", "cosine", max(0), tol, n));
    report.push(TestStat::at_most("edges/orientation-failures", "count", sum(1), 0.0, n));
    report.push(TestStat::at_most("cells/tiling-failures", "count", sum(2), 0.0, n));
    report.push(TestStat::at_most("height/curl", "curl", max(3), 1e-9, n));
    report.push(TestStat::at_most("laguerre/hausdorff", "distance", max(4), 1e-6, n));
    report.push(TestStat::at_least("edges/checked", "count", sum(5), 1.0, n).informational());
    Ok(finish(report, start))
}

/// The Hopf formula against the Hopf–Lax oracle and the semigroup identity.
pub fn run_hopf_oracle(cfg: &ExperimentConfig) -> Result<TestReport> {
    let start = Instant::now();
    let hs = hj_hamiltonian();
    let grid = HopfLaxGrid::default();
    let mut report = TestReport::new(Experiment::Hopf.name());
    for (fi, name) in ["fix-a", "r0", "fix-b", "convex-graph", "diagonal", "mixed"].into_iter().enumerate() {
        let set = fixtures::by_name(name)?;
        let marks: Vec<Mark> = set.atoms().to_vec();
        let intercepts = marks.iter().map(|m| 0.5 * (m.rho1 * m.rho1 + m.rho2 * m.rho2)).collect();
        let g = PLCFunction::new(marks, intercepts)?;
        let mut rng = replica_rng(cfg.seed, fi as u64);
        let points: Vec<([f64; 2], f64)> = (0..cfg.replicas)
            .map(|_| ([rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)], rng.random_range(0.05..0.5)))
            .collect();
        let res: Vec<(f64, bool)> = points
            .par_iter()
            .map(|&(x, t)| {
                let u = hopf_evolve(&g, &hs, t)?.eval(x);
                let v = hopf_lax_value(&g, &hs, x, t, &grid)?;
                Ok(((u - v.value).abs() / (2.0 * v.spacing), v.on_boundary))
            })
            .collect::<Result<_>>()?;
        let worst = res.iter().map(|r| r.0).fold(0.0, f64::max);
        let edge = res.iter().filter(|r| r.1).count();
        report.push(TestStat::at_most(format!("{name}/hopf-lax"), "error/2h", worst, 1.0, res.len()));
        report.push(TestStat::at_most(format!("{name}/search-edge"), "count", edge as f64, 0.0, res.len()));
        let mut ulps: f64 = 0.0;
        for _ in 0..cfg.replicas {
            let (s, t) = (rng.random_range(0.0..0.5), rng.random_range(0.0..0.5));
            let two = hopf_evolve(&hopf_evolve(&g, &hs, s)?, &hs, t)?;
            let one = hopf_evolve(&g, &hs, s + t)?;
            if two.marks != one.marks {
                ulps = f64::INFINITY;
                continue;
            }
            for ((p, q), m) in two.intercepts.iter().zip(&one.intercepts).zip(&one.marks) {
                // rounding is relative to the operands c and (s + t) H, not the result
                let c0 = g.intercepts[g.marks.iter().position(|x| x == m).unwrap_or(0)];
                let scale = (c0.abs() + (s + t) * hs.eval(m).abs()).max(f64::MIN_POSITIVE);
                ulps = ulps.max((p - q).abs() / (f64::EPSILON * scale));
            }
        }
        report.push(TestStat::at_most(format!("{name}/semigroup"), "ulp", ulps, 4.0, cfg.replicas));
    }
    report.note("semigroup compared on intercepts up to rounding of the time sums");
    Ok(finish(report, start))
}

/// FIX-B: constant `f ≡ 2` on `[0, 10] × [0, 4]` started from one `(0,0)|(2,1)` particle.
fn fix_b_setup() -> Result<Setup> {
    let marks = fixtures::fix_b_marks();
    let grid = UniformGrid::new(-5.0, 0.5, 41)?;
    let times = vec![0.0, 4.0];
    let f = Kernel::constant(marks.clone(), 1.0, 2.0, grid, times.clone(), 2.0)?;
    let ell0 = fixtures::uniform_ell0(&marks);
    let ell = MarginalField::uniform(marks, grid, times, &ell0)?;
    Ok(Setup { f, ell, ell0, window: [0.0, 10.0], height: 4.0, notes: Vec::new() })
}

/// No fragmentation on convex graphs; the fragmentation intensity of a
/// concave triple matches its rate.
pub fn run_coagulation_regime(cfg: &ExperimentConfig) -> Result<TestReport> {
    let start = Instant::now();
    let setup = Setup::from_config(cfg)?;
    let frags = simulate_replicas(&setup, cfg.seed, cfg.replicas, None, |_, traj| {
        Ok((traj.count(EventKind::Fragmentation), traj.count(EventKind::Coagulation)))
    })?;
    let mut report = TestReport::new(Experiment::Coagulation.name());
    report.notes.extend(setup.notes.iter().cloned());
    let total: usize = frags.iter().map(|r| r.0).sum();
    let coag: usize = frags.iter().map(|r| r.1).sum();
    report.push(TestStat::at_most("convex/fragmentations", "count", total as f64, 0.0, frags.len()));
    report.push(TestStat::at_least("convex/coagulations", "count", coag as f64, 0.0, frags.len()).informational());

    let fb = fix_b_setup()?;
    let q0 = ParticleConfig::new(0.0, vec![5.0], vec![0, 2])?;
    let runs = 2 * cfg.replicas;
    let rows = simulate_replicas(&fb, cfg.seed.wrapping_add(1), runs, Some(&q0), |_, traj| {
        let exposure: f64 =
            traj.segments()?.iter().filter(|s| (s.minus, s.plus) == (0, 2)).map(|s| s.end[1] - s.start[1]).sum();
        let count = traj.events.iter().filter(|e| e.kind == EventKind::Fragmentation && e.marks == [0, 1, 2]).count();
        Ok((exposure, count))
    })?;
    let exposure: f64 = rows.iter().map(|r| r.0).sum();
    let count = rows.iter().map(|r| r.1).sum::<usize>() as f64;
    let rate = 2.0;
    let expected = rate * exposure;
    let z = (count - expected) / expected.sqrt();
    report.push(TestStat::z("concave/fragmentation-intensity", z, 3.0, runs).with_counts(count, expected));
    report.push(TestStat::at_least("concave/exposure", "time", exposure, 1e4, runs));
    Ok(finish(report, start))
}

/// Initial configurations with `n` particles: marks of the fixture spread evenly.
fn spread(set: &MarkSet, n: usize, window: [f64; 2]) -> Result<ParticleConfig> {
    let na = set.len();
    if n + 1 > na {
        return Err(Error::Config(format!("{n} particles need {} atoms", n + 1)));
    }
    let labels: Vec<usize> = (0..=n).map(|k| k * (na - 1) / n.max(1)).collect();
    let z = (0..n).map(|k| window[0] + (window[1] - window[0]) * (k + 1) as f64 / (n + 1) as f64).collect();
    ParticleConfig::new(0.0, z, labels)
}

/// Tail of the event count: `C = max_k k² P(N > k)` per initial particle count.
pub fn run_jump_count(cfg: &ExperimentConfig) -> Result<TestReport> {
    let start = Instant::now();
    let setup = Setup::from_config(cfg)?;
    let set = setup.f.marks().clone();
    let ks = [10usize, 20, 40];
    let mut report = TestReport::new(Experiment::JumpCount.name());
    report.notes.extend(setup.notes.iter().cloned());
    // C fitted at one particle must cover the others: max(mean, k² P(N>k)) ≤ 2 C₁ (n+2)²
    let mut scale = Vec::new();
    let mut first: Option<Vec<usize>> = None;
    for n in [1usize, 2, 4] {
        let q0 = spread(&set, n, setup.window)?;
        let counts = simulate_replicas(&setup, cfg.seed, cfg.replicas, Some(&q0), |_, traj| Ok(traj.events.len()))?;
        let runs = counts.len() as f64;
        let mean = counts.iter().sum::<usize>() as f64 / runs;
        let tail = ks
            .iter()
            .map(|&k| (k * k) as f64 * counts.iter().filter(|&&m| m > k).count() as f64 / runs)
            .fold(0.0, f64::max);
        let norm = ((n + 2) * (n + 2)) as f64;
        report.push(TestStat::at_most(format!("n={n}/tail-C"), "k^2 P(N>k)/(n+2)^2", tail / norm, f64::INFINITY, counts.len()).informational());
        report.push(TestStat::at_most(format!("n={n}/mean"), "events", mean, f64::INFINITY, counts.len()).informational());
        scale.push((n, mean.max(tail) / norm));
        if n == 1 {
            first = Some(counts);
        }
    }
    let c1 = scale[0].1;
    for &(n, c) in &scale[1..] {
        let ratio = if c1 > 0.0 { c / c1 } else if c > 0.0 { f64::INFINITY } else { 0.0 };
        report.push(TestStat::at_most(format!("n={n}/C-over-C1"), "ratio", ratio, 2.0, cfg.replicas).with_counts(c, c1));
    }
    let q0 = spread(&set, 1, setup.window)?;
    let again = simulate_replicas(&setup, cfg.seed, cfg.replicas, Some(&q0), |_, traj| Ok(traj.events.len()))?;
    let mismatches = first.unwrap_or_default().iter().zip(&again).filter(|(a, b)| a != b).count();
    report.push(TestStat::at_most("reproducible/mismatches", "count", mismatches as f64, 0.0, cfg.replicas));
    Ok(finish(report, start))
}

/// Row sums `Σ Q(f)β` on random kernels over every fixture and on the solved
/// kernel of the configuration, at every node and slice.
pub fn run_conservation(cfg: &ExperimentConfig) -> Result<TestReport> {
    let start = Instant::now();
    let mut report = TestReport::new(Experiment::Conservation.name());
    let mut rng = replica_rng(cfg.seed, 0);
    let grid = UniformGrid::new(0.0, 0.1, 11)?;
    let worst_row = |f: &Kernel| -> Result<f64> {
        let mut worst: f64 = 0.0;
        for &t in f.times() {
            for x in f.grid().nodes() {
                let q = q_apply(f, x, t)?;
                worst = row_sums(f.marks(), f.pairs(), &q).iter().fold(worst, |m, r| m.max(r.abs()));
            }
        }
        Ok(worst)
    };
    for name in ["fix-a", "r0", "fix-b", "convex-graph", "diagonal", "mixed"] {
        let marks = fixtures::by_name(name)?;
        let all = crate::marks::PairTable::new(&marks, f64::MAX)?;
        let reach = all.alphas().iter().fold(0.0, |m: f64, a| m.max(a.abs()));
        let np = all.len();
        let values: Vec<f64> = (0..grid.n * np).map(|_| rng.random_range(0.5..4.0)).collect();
        let f = Kernel::constant(marks, reach + 1.0, 0.5, grid, vec![0.0], 1.0)?;
        let f = f.with_values(grid, vec![0.0], values)?;
        let w = worst_row(&f)?;
        report.push(TestStat::at_most(format!("{name}/random"), "max|row sum|", w, 1e-12, grid.n));
    }
    let k = &cfg.kernel;
    let t = tstar(k.v_inf, k.c, k.delta0)?;
    let h = fixtures::initial_kernel(cfg.fixture.marks()?, k.v_inf, k.delta0, k.c, cfg.box_.x, 0.05, t)?;
    let f = solve_kinetic(&h, t, 20, Scheme::Polygonal)?;
    report.push(TestStat::at_most("solved", "max|row sum|", worst_row(&f)?, 1e-12, f.values().len()));
    Ok(finish(report, start))
}

/// Marginal mass, the two-state closed forms, and `ξ` under refinement for the
/// solved kernel against a frozen one.
pub fn run_forward(cfg: &ExperimentConfig) -> Result<TestReport> {
    let start = Instant::now();
    let mut report = TestReport::new(Experiment::Forward.name());
    let k = &cfg.kernel;
    let marks = cfg.fixture.marks()?;
    let t_max = tstar(k.v_inf, k.c, k.delta0)?;
    let height = cfg.box_.height.unwrap_or(t_max).min(t_max);
    let [a, b] = cfg.box_.x;
    let ell0 = match &k.ell0 {
        Some(v) => v.clone(),
        None => fixtures::uniform_ell0(&marks),
    };
    let mut xi = Vec::new();
    for level in 0..4 {
        let n = 25usize << level;
        let dx = (b - a) / (5usize << level) as f64;
        let h = fixtures::initial_kernel(marks.clone(), k.v_inf, k.delta0, k.c, [a, b], dx, height)?;
        let f = solve_kinetic(&h, height, n, Scheme::Polygonal)?;
        let opts = EllBoxOptions { max_step: Some(height / n as f64 / 4.0), ..EllBoxOptions::default() };
        let ell = build_ell_box(&f, &ell0, [a, b, 0.0, height], opts)?;
        let frozen = f.with_values(*f.grid(), f.times().to_vec(), f.times().iter().flat_map(|_| h.slice(0).to_vec()).collect())?;
        let ell_frozen = build_ell_box(&frozen, &ell0, [a, b, 0.0, height], opts)?;
        let (r, r_frozen) = (xi_residual(&f, &ell)?, xi_residual(&frozen, &ell_frozen)?);
        report.push(TestStat::at_most(format!("mass/n={n}"), "max|Σℓβ−1|", ell.mass_error(), 1e-8, ell.values().len()));
        report.push(
            TestStat::at_least(format!("xi/frozen-over-solved/n={n}"), "ratio", r_frozen / r, 10.0, n).with_counts(r_frozen, r),
        );
        xi.push((n, r));
    }
    for w in xi.windows(2) {
        let ratio = w[1].1 / w[0].1;
        let mut row = TestStat::at_most(format!("xi/halving/n={}", w[1].0), "ratio", ratio, 0.625, w[1].0).with_counts(w[1].1, w[0].1);
        row.pass = (0.375..=0.625).contains(&ratio);
        report.push(row);
    }

    let (c, two) = (1.5, fixtures::two_marks(1.0));
    let g = UniformGrid::new(-1.0, 0.1, 31)?;
    let f = Kernel::constant(two, 2.0, 0.1, g, vec![0.0, 1.0], c)?;
    for n in [50usize, 100, 200] {
        let along_x = solve_ell_x(&f, &[1.0, 0.0], 0.5, [0.0, 1.0], n)?;
        let along_t = solve_ell_t(&f, &[1.0, 0.0], 0.2, [0.0, 1.0], n, 0.0)?;
        for (dir, states) in [("x", along_x), ("t", along_t)] {
            let err = states
                .iter()
                .enumerate()
                .map(|(i, l)| {
                    let e = (-c * i as f64 / n as f64).exp();
                    (l[0] - e).abs().max((l[1] - (1.0 - e)).abs())
                })
                .fold(0.0, f64::max);
            report.push(
                TestStat::at_most(format!("two-state/{dir}/n={n}"), "max-error", err, 2.0 / n as f64, n).with_counts(err * n as f64, 2.0),
            );
        }
    }
    Ok(finish(report, start))
}

/// Residuals of the reversed and swapped kernels against the forward one, and
/// the swap involution.
pub fn run_transform_algebra(cfg: &ExperimentConfig) -> Result<TestReport> {
    let start = Instant::now();
    let mut report = TestReport::new(Experiment::Transform.name());
    for name in ["fix-a", "r0"] {
        let sub = ExperimentConfig { fixture: super::FixtureSpec::Named(name.into()), ..cfg.clone() };
        let k = &sub.kernel;
        let [a, b] = sub.box_.x;
        let height = sub.box_.height.unwrap_or(tstar(k.v_inf, k.c, k.delta0)?);
        let setup = Setup::build(&sub, sub.fixture.marks()?, [a, b], Some(height))?;
        let fwd = kinetic_residual(&setup.f.restrict_x(a, b)?)?;
        let rev = kinetic_residual(&reverse_kernel(&setup.f, &setup.ell, true)?)?;
        report.push(TestStat::at_most(format!("{name}/reverse"), "ratio", rev / fwd, 2.0, 1).with_counts(rev, fwd));
        if setup.f.pairs().alphas().iter().all(|a| *a > crate::kinetic::DEFAULT_ALPHA_MIN) {
            let sw = kinetic_residual(&swap_kernel(&setup.f, &setup.ell, crate::kinetic::DEFAULT_ALPHA_MIN)?)?;
            report.push(TestStat::at_most(format!("{name}/swap"), "ratio", sw / fwd, 2.0, 1).with_counts(sw, fwd));
        }
    }
    let marks = fixtures::two_marks(2.0);
    let grid = UniformGrid::new(0.0, 0.1, 11)?;
    let times: Vec<f64> = (0..=10).map(|s| s as f64 * 0.1).collect();
    let f = Kernel::constant(marks.clone(), 2.0, 1.5, grid, times, 1.5)?;
    let ell = build_ell_box(&f, &[0.3, 0.7], [0.0, 1.0, 0.0, 1.0], EllBoxOptions::default())?;
    let once = swap_kernel(&f, &ell, crate::kinetic::DEFAULT_ALPHA_MIN)?;
    let twice = swap_kernel(&once, &swap_marginal(&ell)?, crate::kinetic::DEFAULT_ALPHA_MIN)?;
    let err = if twice.marks() == f.marks() && twice.values().len() == f.values().len() {
        twice.values().iter().zip(f.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    report.push(TestStat::at_most("two-mark/double-swap", "max-error", err, 1e-12, 1));
    Ok(finish(report, start))
}

/// Runs the configured experiment.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<TestReport> {
    cfg.validate()?;
    match cfg.experiment {
        Experiment::Horizontal => run_consistency_horizontal(cfg),
        Experiment::Conservation => run_conservation(cfg),
        Experiment::Forward => run_forward(cfg),
        Experiment::Vertical => run_consistency_vertical(cfg),
        Experiment::Hj => run_hj_invariance(cfg),
        Experiment::Convergence => run_appendix_convergence(cfg),
        Experiment::Genericity => run_genericity(cfg),
        Experiment::Geometry => run_geometry(cfg),
        Experiment::Hopf => run_hopf_oracle(cfg),
        Experiment::Coagulation => run_coagulation_regime(cfg),
        Experiment::JumpCount => run_jump_count(cfg),
        Experiment::Transform => run_transform_algebra(cfg),
    }
}
