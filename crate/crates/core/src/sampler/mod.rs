//! The particle system on a box: boundary sampling, sticky free motion and
//! creation/fragmentation jumps, with full event logs.

mod config;
mod quad;
mod rates;
mod trajectory;

pub use config::{flow_deterministic, ParticleConfig, CONTACT_TOL};
pub use rates::{total_rate, Rates};
pub use trajectory::{Event, EventKind, Segment, Trajectory};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::forward::MarginalField;
use crate::marks::Kernel;

use config::{next_contact, resolve_contacts, snap};
use rates::RateEval;

/// Default cap on stochastic jumps per run.
pub const DEFAULT_JUMP_CAP: usize = 1_000_000;

/// Tolerance of the rate quadrature.
pub const RATE_TOL: f64 = 1e-10;

/// Generator for replica `replica` of a run seeded with `seed`.
pub fn replica_rng(seed: u64, replica: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica);
    rng
}

pub(crate) fn exp1(rng: &mut impl Rng) -> f64 {
    -(1.0 - rng.random::<f64>()).ln()
}

/// Index drawn with probability proportional to `w`.
pub(crate) fn pick(w: &[f64], total: f64, rng: &mut impl Rng) -> usize {
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &v) in w.iter().enumerate() {
        if v > 0.0 {
            acc += v;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}

fn check_probability(ell0: &[f64], f: &Kernel) -> Result<Vec<f64>> {
    let set = f.marks();
    if ell0.len() != set.len() {
        return Err(Error::Shape(format!("ell0 has {} entries for {} atoms", ell0.len(), set.len())));
    }
    let p: Vec<f64> = ell0.iter().zip(set.weights()).map(|(l, w)| l * w).collect();
    let mass: f64 = p.iter().sum();
    if p.iter().any(|v| !v.is_finite() || *v < 0.0) || (mass - 1.0).abs() > 1e-8 {
        return Err(Error::Precondition(format!("ell0 is not a probability vector (mass {mass})")));
    }
    Ok(p)
}

/// Jump rate `λ(x, t, ρ) = Σ_{ρ*≻ρ} f β` along `x`.
fn lambda_at(f: &Kernel, x: f64, t: f64, i: usize, buf: &mut [f64]) -> Result<f64> {
    f.eval_all(x, t, buf)?;
    let set = f.marks();
    let pairs = f.pairs();
    Ok((i + 1..set.len()).map(|j| buf[pairs.index(i, j)] * set.weight(j)).sum())
}

/// Samples the horizontal boundary at `t0`: `ρ⁰ ~ ℓ⁰β`, then the jump process in `x`
/// with intensity `λ(x, t0, ρ)` and jump law `f β / λ`.
pub fn sample_boundary(
    f: &Kernel,
    ell0: &[f64],
    t0: f64,
    span: [f64; 2],
    rng: &mut impl Rng,
) -> Result<ParticleConfig> {
    let p = check_probability(ell0, f)?;
    if !(span[1] > span[0]) {
        return Err(Error::Domain("empty span".into()));
    }
    let set = f.marks();
    let pairs = f.pairs();
    let grid = *f.grid();
    let mut buf = vec![0.0; f.npairs()];
    let mut label = pick(&p, 1.0, rng);
    let mut z = Vec::new();
    let mut labels = vec![label];
    let mut x = span[0];
    let mut budget = exp1(rng);
    while x < span[1] {
        // λ is linear between grid nodes: integrate cell by cell.
        let next = match grid.locate(x) {
            Some((k, _)) if k + 1 < grid.n => grid.node(k + 1).min(span[1]),
            _ => span[1],
        };
        let next = if next <= x { span[1] } else { next };
        let la = lambda_at(f, x, t0, label, &mut buf)?;
        let lb = lambda_at(f, next, t0, label, &mut buf)?;
        let len = next - x;
        let area = 0.5 * (la + lb) * len;
        if area < budget {
            budget -= area;
            x = next;
            continue;
        }
        let slope = (lb - la) / len;
        let target = budget;
        let s = quad::bisect(&mut |s| Ok(la * s + 0.5 * slope * s * s - target), 0.0, len, 1e-14 * (1.0 + len))?;
        x = (x + s).min(next);
        f.eval_all(x, t0, &mut buf)?;
        let w: Vec<f64> = (0..set.len())
            .map(|j| if j > label { buf[pairs.index(label, j)] * set.weight(j) } else { 0.0 })
            .collect();
        let total: f64 = w.iter().sum();
        if total <= 0.0 {
            budget = exp1(rng);
            continue;
        }
        label = pick(&w, total, rng);
        z.push(x);
        labels.push(label);
        budget = exp1(rng);
    }
    ParticleConfig::new(t0, z, labels)
}

/// Options for [`simulate`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimOptions {
    pub jump_cap: usize,
    pub rate_tol: f64,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self { jump_cap: DEFAULT_JUMP_CAP, rate_tol: RATE_TOL }
    }
}

/// Runs the particle system from `q0` over `horizon = [t₀, t₁]` on `window = [a⁻, a⁺]`.
pub fn simulate(
    q0: &ParticleConfig,
    f: &Kernel,
    ell: &MarginalField,
    window: [f64; 2],
    horizon: [f64; 2],
    rng: &mut impl Rng,
    opts: SimOptions,
) -> Result<Trajectory> {
    let [t0, t1] = horizon;
    if !(t1 >= t0) {
        return Err(Error::Domain("empty horizon".into()));
    }
    if q0.t != t0 {
        return Err(Error::Precondition(format!("initial state at t = {} but horizon starts at {t0}", q0.t)));
    }
    let set = f.marks();
    let pairs = f.pairs();
    q0.validate(set, window, 1e-9)?;
    let mut q = q0.clone();
    let mut eval = RateEval::new(f, ell, window);
    let (mut events, mut triples) = resolve_contacts(&mut q, pairs, window);
    let mut budget = exp1(rng);
    let mut jumps = 0usize;
    loop {
        let contact = next_contact(&q, pairs, window).map(|h| q.t + h).filter(|t| *t < t1);
        let t_end = contact.unwrap_or(t1);
        match find_jump(&q, f, &mut eval, t_end, budget, opts.rate_tol)? {
            Jump::At(tau) => {
                q.advance(pairs, tau);
                let rates = eval.decompose(&q, tau)?;
                let ev = choose(&q, &rates, window, rng);
                config::apply_event(&mut q, &ev, window);
                events.push(ev);
                jumps += 1;
                if jumps > opts.jump_cap {
                    return Err(Error::Runaway { cap: opts.jump_cap });
                }
                let (ev, tr) = resolve_contacts(&mut q, pairs, window);
                events.extend(ev);
                triples += tr;
                budget = exp1(rng);
            }
            Jump::None(used) => {
                budget -= used;
                q.advance(pairs, t_end);
                if contact.is_none() {
                    break;
                }
                snap(&mut q, pairs, window);
                let (ev, tr) = resolve_contacts(&mut q, pairs, window);
                events.extend(ev);
                triples += tr;
            }
        }
    }
    Ok(Trajectory {
        marks: set.clone(),
        v_inf: f.v_inf(),
        window,
        horizon,
        initial: q0.clone(),
        events,
        final_config: q,
        triple_collisions: triples,
    })
}

enum Jump {
    At(f64),
    None(f64),
}

/// Locates the next jump in `[q.t, t_end]` given the remaining exponential budget.
fn find_jump(q: &ParticleConfig, f: &Kernel, eval: &mut RateEval, t_end: f64, budget: f64, tol: f64) -> Result<Jump> {
    let t_start = q.t;
    if t_end <= t_start {
        return Ok(Jump::None(0.0));
    }
    let pairs = f.pairs();
    let v = q.velocities(pairs);
    let mut z = q.z.clone();
    let mut rate = |theta: f64| -> Result<f64> {
        for k in 0..z.len() {
            z[k] = q.z[k] + v[k] * (theta - t_start);
        }
        eval.total(q, &z, theta)
    };
    let mut cuts = vec![t_start];
    cuts.extend(f.times().iter().copied().filter(|t| *t > t_start && *t < t_end));
    cuts.push(t_end);
    let mut used = 0.0;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let piece = quad::simpson(&mut rate, a, b, tol)?;
        if used + piece >= budget {
            let need = budget - used;
            let width = 1e-10_f64.min(0.5 * (b - a));
            let tau = quad::bisect(
                &mut |s| Ok(quad::simpson(&mut rate, a, s, 0.01 * tol)? - need),
                a,
                b,
                width,
            )?;
            return Ok(Jump::At(tau));
        }
        used += piece;
    }
    Ok(Jump::None(used))
}

fn choose(q: &ParticleConfig, rates: &Rates, window: [f64; 2], rng: &mut impl Rng) -> Event {
    let n = q.n();
    let mut channels = Vec::with_capacity(n + 2);
    channels.push(rates.total_left);
    channels.extend(rates.total_fragment.iter().copied());
    channels.push(rates.total_right);
    let c = pick(&channels, rates.total, rng);
    if c == 0 {
        let star = pick(&rates.create_left, rates.total_left, rng);
        Event::new(q.t, EventKind::CreateLeft, window[0], 0, vec![star, q.labels[0]])
    } else if c == n + 1 {
        let star = pick(&rates.create_right, rates.total_right, rng);
        Event::new(q.t, EventKind::CreateRight, window[1], n, vec![q.labels[n], star])
    } else {
        let k = c - 1;
        let star = pick(&rates.fragment[k], rates.total_fragment[k], rng);
        Event::new(q.t, EventKind::Fragmentation, q.z[k], k, vec![q.labels[k], star, q.labels[k + 1]])
    }
}

#[cfg(test)]
mod tests;
