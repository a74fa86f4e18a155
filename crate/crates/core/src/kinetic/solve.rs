use super::{collision, tstar, HamiltonianSpec};
use crate::error::{Error, Result};
use crate::marks::{Kernel, UniformGrid};

/// Time stepping used by [`solve_kinetic`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    /// Euler steps of the shifted-argument functional on `g(x,t) = f(x − αt, t)`.
    Polygonal,
    /// Classical four-stage integration of `f_t = Q(f)` for `x`-independent data.
    HomogeneousRk4,
}

/// Solves the kinetic equation from the first slice of `h` over `[t0, t0 + t_final]`.
///
/// The output has `steps + 1` slices on the grid of `h`.
pub fn solve_kinetic(h: &Kernel, t_final: f64, steps: usize, scheme: Scheme) -> Result<Kernel> {
    let vel = h.pairs().alphas().to_vec();
    let horizon = h.tstar()?;
    check_run(h, t_final, steps, horizon)?;
    match scheme {
        Scheme::Polygonal => polygonal(h, &vel, t_final, steps),
        Scheme::HomogeneousRk4 => rk4(h, &vel, t_final, steps),
    }
}

/// The one-dimensional flow with `v^H` replacing the bracket.
pub fn solve_kinetic_1d(h: &Kernel, hs: &HamiltonianSpec, t_final: f64, steps: usize) -> Result<Kernel> {
    let mut spec = hs.clone();
    spec.variant = super::Variant::OneDimensional;
    let vel = spec.velocities(h.marks(), h.pairs())?;
    let v_max = (0..h.npairs())
        .filter(|&p| h.pairs().in_cone(p))
        .map(|p| vel[p].abs())
        .fold(0.0, f64::max);
    let horizon = if v_max == 0.0 || h.m0() == 0.0 {
        f64::INFINITY
    } else {
        tstar(v_max, h.m0(), h.delta0())?
    };
    check_run(h, t_final, steps, horizon)?;
    polygonal(h, &vel, t_final, steps)
}

fn check_run(h: &Kernel, t_final: f64, steps: usize, horizon: f64) -> Result<()> {
    if steps == 0 || !(t_final > 0.0) || !t_final.is_finite() {
        return Err(Error::Domain(format!("need T > 0 and steps > 0, got T={t_final} steps={steps}")));
    }
    if t_final > horizon * (1.0 + 1e-12) {
        return Err(Error::Horizon { t: t_final, tstar: horizon });
    }
    let nx = h.grid().n;
    for k in 0..nx {
        for (p, v) in h.node(0, k).iter().enumerate() {
            if h.pairs().in_cone(p) && *v < h.delta0() * (1.0 - 1e-12) {
                return Err(Error::Precondition(format!(
                    "initial value {v} below delta0 = {} on a cone pair",
                    h.delta0()
                )));
            }
        }
    }
    Ok(())
}

fn floor_check(h: &Kernel, vals: &[f64], t: f64) -> Result<()> {
    let np = h.npairs();
    let floor = 0.5 * h.delta0();
    for (i, v) in vals.iter().enumerate() {
        if h.pairs().in_cone(i % np) && (*v < floor * (1.0 - 1e-12) || !v.is_finite()) {
            return Err(Error::PositivityLoss { t, value: *v });
        }
    }
    Ok(())
}

fn polygonal(h: &Kernel, vel: &[f64], t_final: f64, steps: usize) -> Result<Kernel> {
    let set = h.marks();
    let pairs = h.pairs();
    let np = pairs.len();
    let grid = *h.grid();
    let t0 = h.times()[0];
    let dt = t_final / steps as f64;
    let v_max = vel.iter().map(|v| v.abs()).fold(0.0, f64::max);
    // Shifts reach at most 2 v_max t on either side; a constant extension covers them.
    let pad = if grid.n > 1 {
        ((3.0 * v_max * t_final) / grid.dx).ceil() as usize + 1
    } else {
        0
    };
    let nw = grid.n + 2 * pad;
    let work = UniformGrid::new(grid.x0 - pad as f64 * grid.dx, grid.dx, nw)?;
    let mut g = vec![0.0; nw * np];
    for k in 0..nw {
        let src = k.saturating_sub(pad).min(grid.n - 1);
        g[k * np..(k + 1) * np].copy_from_slice(h.node(0, src));
    }
    let sample = |g: &[f64], x: f64, p: usize| -> f64 {
        if nw == 1 {
            return g[p];
        }
        let s = ((x - work.x0) / work.dx).clamp(0.0, (nw - 1) as f64);
        let k = (s.floor() as usize).min(nw - 2);
        let a = s - k as f64;
        (1.0 - a) * g[k * np + p] + a * g[(k + 1) * np + p]
    };

    let mut times = Vec::with_capacity(steps + 1);
    let mut out = Vec::with_capacity((steps + 1) * grid.n * np);
    let emit = |g: &[f64], tau: f64, out: &mut Vec<f64>| {
        for k in 0..grid.n {
            let x = grid.node(k);
            for p in 0..np {
                out.push(sample(g, x + vel[p] * tau, p).max(0.0));
            }
        }
    };
    times.push(t0);
    emit(&g, 0.0, &mut out);

    let mut next = vec![0.0; nw * np];
    for step in 0..steps {
        let tau = step as f64 * dt;
        for k in 0..nw {
            let x = work.node(k);
            for (p, &(i, j)) in pairs.pairs().iter().enumerate() {
                let a = vel[p];
                let mut gain = 0.0;
                for m in i + 1..j {
                    let pm = pairs.index(i, m);
                    let mp = pairs.index(m, j);
                    let s = vel[mp] - vel[pm];
                    if s == 0.0 {
                        continue;
                    }
                    let left = sample(&g, x - (a - vel[pm]) * tau, pm);
                    let right = sample(&g, x - (a - vel[mp]) * tau, mp);
                    gain += s * left * right * set.weight(m);
                }
                let mut rate = 0.0;
                for m in j + 1..set.len() {
                    let q = pairs.index(j, m);
                    rate += (vel[q] - a) * sample(&g, x - (a - vel[q]) * tau, q) * set.weight(m);
                }
                for m in i + 1..set.len() {
                    let q = pairs.index(i, m);
                    rate -= (vel[q] - a) * sample(&g, x - (a - vel[q]) * tau, q) * set.weight(m);
                }
                let cur = g[k * np + p];
                next[k * np + p] = cur + dt * (gain - rate * cur);
            }
        }
        std::mem::swap(&mut g, &mut next);
        let t = t0 + (step + 1) as f64 * dt;
        let start = out.len();
        emit(&g, (step + 1) as f64 * dt, &mut out);
        floor_check(h, &out[start..], t)?;
        times.push(t);
    }
    if steps > 0 {
        // The final time is set exactly so callers can look up t0 + T.
        *times.last_mut().expect("nonempty") = t0 + t_final;
    }
    h.with_values(grid, times, out)
}

fn rk4(h: &Kernel, vel: &[f64], t_final: f64, steps: usize) -> Result<Kernel> {
    let scale = h.max_value().max(1.0);
    if !h.is_x_independent(1e-14 * scale) {
        return Err(Error::Precondition("the four-stage oracle needs x-independent data".into()));
    }
    let set = h.marks();
    let pairs = h.pairs();
    let np = pairs.len();
    let grid = *h.grid();
    let t0 = h.times()[0];
    let dt = t_final / steps as f64;
    let rhs = |f: &[f64], out: &mut [f64]| collision(set, pairs, vel, f, out);
    let mut f = h.node(0, 0).to_vec();
    let mut times = vec![t0];
    let mut out = Vec::with_capacity((steps + 1) * grid.n * np);
    let push = |f: &[f64], out: &mut Vec<f64>| {
        for _ in 0..grid.n {
            out.extend(f.iter().map(|v| v.max(0.0)));
        }
    };
    push(&f, &mut out);
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; np], vec![0.0; np], vec![0.0; np], vec![0.0; np]);
    let mut tmp = vec![0.0; np];
    for step in 0..steps {
        rhs(&f, &mut k1);
        for p in 0..np {
            tmp[p] = f[p] + 0.5 * dt * k1[p];
        }
        rhs(&tmp, &mut k2);
        for p in 0..np {
            tmp[p] = f[p] + 0.5 * dt * k2[p];
        }
        rhs(&tmp, &mut k3);
        for p in 0..np {
            tmp[p] = f[p] + dt * k3[p];
        }
        rhs(&tmp, &mut k4);
        for p in 0..np {
            f[p] += dt / 6.0 * (k1[p] + 2.0 * k2[p] + 2.0 * k3[p] + k4[p]);
        }
        let t = t0 + (step + 1) as f64 * dt;
        floor_check(h, &f, t)?;
        times.push(t);
        push(&f, &mut out);
    }
    *times.last_mut().expect("nonempty") = t0 + t_final;
    h.with_values(grid, times, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::kinetic::Variant;
    use crate::marks::Polynomial;

    #[test]
    fn single_pair_is_stationary() {
        let k = fixtures::two_mark_initial(1.0, 3.0).unwrap();
        let t = k.tstar().unwrap();
        let s = solve_kinetic(&k, t, 20, Scheme::Polygonal).unwrap();
        assert!(s.values().iter().all(|v| *v == 3.0));
    }

    #[test]
    fn one_euler_step_on_fix_a() {
        let k = fixtures::fix_a_initial(0.0, 1.0, 0.25, 1.0 / 96.0).unwrap();
        let dt = 1e-3;
        let s = solve_kinetic(&k, dt, 1, Scheme::Polygonal).unwrap();
        let p = s.pairs();
        let last = s.node(1, 2);
        assert!((last[p.index(0, 2)] - (2.0 + 2.0 * dt)).abs() < 1e-14);
        assert!((last[p.index(0, 1)] - (2.0 - 2.0 * dt)).abs() < 1e-14);
        assert!((last[p.index(1, 2)] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn horizon_is_enforced() {
        let k = fixtures::fix_a_initial(0.0, 1.0, 0.25, 0.02).unwrap();
        assert!(matches!(
            solve_kinetic(&k, 0.02, 10, Scheme::Polygonal),
            Err(Error::Horizon { .. })
        ));
    }

    #[test]
    fn polygonal_tracks_rk4() {
        let t = 1.0 / 96.0;
        let k = fixtures::fix_a_initial(0.0, 1.0, 0.25, t).unwrap();
        let a = solve_kinetic(&k, t / 2.0, 200, Scheme::Polygonal).unwrap();
        let b = solve_kinetic(&k, t / 2.0, 200, Scheme::HomogeneousRk4).unwrap();
        let d = a
            .values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(d < 1e-3, "{d}");
        assert!(d > 0.0);
    }

    #[test]
    fn null_hamiltonian_is_identity() {
        let k = fixtures::fix_a_initial(0.0, 1.0, 0.25, 0.1).unwrap();
        let h = HamiltonianSpec::new(Polynomial::default(), Polynomial::default(), Variant::OneDimensional);
        let s = solve_kinetic_1d(&k, &h, 0.1, 10).unwrap();
        assert!(s.values().iter().all(|v| *v == 2.0));
    }

    #[test]
    fn linear_hamiltonian_has_no_gain() {
        let k = fixtures::fix_a_initial(0.0, 1.0, 0.25, 0.01).unwrap();
        let h = HamiltonianSpec::new(Polynomial(vec![0.0, 1.0]), Polynomial::default(), Variant::OneDimensional);
        let s = solve_kinetic_1d(&k, &h, 0.01, 10).unwrap();
        // v ≡ 1: Q⁺ vanishes and Q⁻ = (A(ρ⁺) − A(ρ⁻) − (λ(ρ⁺) − λ(ρ⁻))) f = 0.
        assert!(s.values().iter().all(|v| (*v - 2.0).abs() < 1e-14));
    }

    #[test]
    fn x_dependent_data_rejected_by_oracle() {
        let k = fixtures::fix_a_initial(0.0, 1.0, 0.25, 0.01).unwrap();
        let v: Vec<f64> = k.values().iter().enumerate().map(|(i, v)| v + (i / 3) as f64 * 1e-3).collect();
        let k = k.with_values(*k.grid(), k.times().to_vec(), v).unwrap();
        assert!(solve_kinetic(&k, 0.005, 5, Scheme::HomogeneousRk4).is_err());
    }
}
