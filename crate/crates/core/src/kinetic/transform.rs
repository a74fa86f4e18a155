use crate::error::{Error, Result};
use crate::forward::MarginalField;
use crate::marks::{Kernel, Mark, MarkSet, UniformGrid};

/// Default lower bound on brackets accepted by [`swap_kernel`].
pub const DEFAULT_ALPHA_MIN: f64 = 1e-3;

const DIVISION_GUARD: f64 = 1e-12;

fn co_grid(f: &Kernel, ell: &MarginalField) -> Result<()> {
    if f.marks() != ell.marks() {
        return Err(Error::Shape("kernel and marginal use different marks".into()));
    }
    Ok(())
}

fn delta_of(values: &[f64], fallback: f64) -> f64 {
    let m = values.iter().copied().filter(|v| *v > 0.0).fold(f64::INFINITY, f64::min);
    if m.is_finite() {
        m
    } else {
        fallback
    }
}

/// Kernel of the direction-reversed process, on the grid of `ell`.
///
/// Marks are negated so that the reversed jumps `ρ⁺ → ρ⁻` are again
/// `≺`-increasing; brackets are unchanged. With `reflect` the spatial argument
/// is mirrored through the origin, which gives a solution of the same kinetic
/// equation; without it the kernel is indexed by the original position.
pub fn reverse_kernel(f: &Kernel, ell: &MarginalField, reflect: bool) -> Result<Kernel> {
    co_grid(f, ell)?;
    let set = f.marks();
    let na = set.len();
    let [lo, hi] = set.bounds();
    let atoms: Vec<Mark> = set.atoms().iter().rev().map(Mark::neg).collect();
    let weights: Vec<f64> = set.weights().iter().rev().copied().collect();
    let new_set = MarkSet::new([-hi, -lo], atoms, weights)?;
    let grid = *ell.grid();
    let times = ell.times();
    let (nx, ns) = (grid.n, times.len());
    let np = f.npairs();
    let new_pairs = crate::marks::PairTable::new(&new_set, f.v_inf())?;
    let mut values = vec![0.0; ns * nx * np];
    let mut fv = vec![0.0; np];
    for s in 0..ns {
        for k in 0..nx {
            f.eval_all(grid.node(k), times[s], &mut fv)?;
            let l = ell.node(s, k);
            if let Some(v) = l.iter().find(|v| **v < DIVISION_GUARD) {
                return Err(Error::DivisionGuard { value: *v, guard: DIVISION_GUARD });
            }
            let (s2, k2) = if reflect { (ns - 1 - s, nx - 1 - k) } else { (s, k) };
            let base = (s2 * nx + k2) * np;
            for (p, &(i, j)) in f.pairs().pairs().iter().enumerate() {
                let q = new_pairs.index(na - 1 - j, na - 1 - i);
                values[base + q] = l[i] / l[j] * fv[p];
            }
        }
    }
    let (grid, times) = if reflect {
        (
            UniformGrid::new(-grid.end(), grid.dx, nx)?,
            times.iter().rev().map(|t| -t).collect(),
        )
    } else {
        (grid, times.to_vec())
    };
    let delta = delta_of(&values, f.delta0());
    Kernel::new(new_set, f.v_inf(), delta, grid, times, values)
}

fn uniform_times(times: &[f64]) -> Result<UniformGrid> {
    let n = times.len();
    if n < 2 {
        return Err(Error::Shape("swap needs at least two slices".into()));
    }
    let dt = (times[n - 1] - times[0]) / (n - 1) as f64;
    for (s, t) in times.iter().enumerate() {
        if (times[0] + s as f64 * dt - t).abs() > 1e-9 * dt {
            return Err(Error::Shape("swap needs uniformly spaced slices".into()));
        }
    }
    UniformGrid::new(-times[n - 1], dt, n)
}

fn swapped_marks(set: &MarkSet) -> Result<MarkSet> {
    let [lo, hi] = set.bounds();
    let atoms: Vec<Mark> = set.atoms().iter().rev().map(|m| Mark::new(-m.rho2, -m.rho1)).collect();
    let weights: Vec<f64> = set.weights().iter().rev().copied().collect();
    MarkSet::new([-hi, -lo], atoms, weights)
}

/// Coordinate-swapped kernel: marks `ρ ↦ (−ρ₂, −ρ₁)`, positions
/// `(x₁, x₂) ↦ (−x₂, −x₁)`, value `(ℓ(ρ⁻)/ℓ(ρ⁺)) [ρ⁻,ρ⁺] f` on the image pair.
///
/// Every bracket must exceed `alpha_min`; the swapped brackets are the reciprocals.
pub fn swap_kernel(f: &Kernel, ell: &MarginalField, alpha_min: f64) -> Result<Kernel> {
    co_grid(f, ell)?;
    for &a in f.pairs().alphas() {
        if a <= alpha_min {
            return Err(Error::SupportCondition { alpha: a, floor: alpha_min });
        }
    }
    let set = f.marks();
    let na = set.len();
    let new_set = swapped_marks(set)?;
    let grid = *ell.grid();
    let times = ell.times();
    let (nx, ns) = (grid.n, times.len());
    let new_grid = uniform_times(times)?;
    let new_times: Vec<f64> = (0..nx).rev().map(|k| -grid.node(k)).collect();
    let v_new = f
        .pairs()
        .alphas()
        .iter()
        .map(|a| 1.0 / a)
        .fold(0.0, f64::max);
    let new_pairs = crate::marks::PairTable::new(&new_set, v_new)?;
    let np = f.npairs();
    let mut values = vec![0.0; nx * ns * np];
    let mut fv = vec![0.0; np];
    for s in 0..ns {
        for k in 0..nx {
            f.eval_all(grid.node(k), times[s], &mut fv)?;
            let l = ell.node(s, k);
            if let Some(v) = l.iter().find(|v| **v < DIVISION_GUARD) {
                return Err(Error::DivisionGuard { value: *v, guard: DIVISION_GUARD });
            }
            let (s2, k2) = (nx - 1 - k, ns - 1 - s);
            let base = (s2 * ns + k2) * np;
            for (p, &(i, j)) in f.pairs().pairs().iter().enumerate() {
                let q = new_pairs.index(na - 1 - j, na - 1 - i);
                values[base + q] = l[i] / l[j] * f.pairs().alpha(p) * fv[p];
            }
        }
    }
    let delta = delta_of(&values, f.delta0());
    Kernel::new(new_set, v_new, delta, new_grid, new_times, values)
}

/// The marginal of the swapped field: `ℓ̄(y, φρ) = ℓ(φ y, ρ)`.
pub fn swap_marginal(ell: &MarginalField) -> Result<MarginalField> {
    let set = ell.marks();
    let na = set.len();
    let new_set = swapped_marks(set)?;
    let grid = *ell.grid();
    let times = ell.times();
    let (nx, ns) = (grid.n, times.len());
    let new_grid = uniform_times(times)?;
    let new_times: Vec<f64> = (0..nx).rev().map(|k| -grid.node(k)).collect();
    let mut values = vec![0.0; nx * ns * na];
    for s in 0..ns {
        for k in 0..nx {
            let l = ell.node(s, k);
            let base = ((nx - 1 - k) * ns + (ns - 1 - s)) * na;
            for a in 0..na {
                values[base + na - 1 - a] = l[a];
            }
        }
    }
    MarginalField::new(new_set, new_grid, new_times, values)
}

/// Push-forward under `T_c ρ = (ρ₁, ρ₂ + cρ₁)` with the spatial shear
/// `S_c x = (x₁ + c x₂, x₂)`: `f'(x, T_cρ⁻, T_cρ⁺) = f(S_c x, ρ⁻, ρ⁺)`.
///
/// Brackets shift by `c` and `V∞` grows by `c`. The output keeps the nodes of
/// `f` at which the sheared argument stays inside the grid for every slice.
pub fn shear_pushforward(f: &Kernel, c: f64) -> Result<Kernel> {
    if !(c >= 0.0 && c.is_finite()) {
        return Err(Error::Domain(format!("shear c = {c} must be nonnegative")));
    }
    let set = f.marks();
    let atoms: Vec<Mark> = set.atoms().iter().map(|m| Mark::new(m.rho1, m.rho2 + c * m.rho1)).collect();
    let [lo, hi] = set.bounds();
    let reach = c * lo.abs().max(hi.abs());
    let mut new_set = MarkSet::new([lo - reach, hi + reach], atoms, set.weights().to_vec())?;
    if let Some(k) = set.graph() {
        let mut shifted = k.clone();
        if shifted.0.len() < 2 {
            shifted.0.resize(2, 0.0);
        }
        shifted.0[1] += c;
        new_set.set_graph(shifted).ok();
    }
    let grid = *f.grid();
    let times = f.times();
    let (tmin, tmax) = (times[0], times[times.len() - 1]);
    let tol = 1e-9 * grid.dx.max(1e-12);
    let nodes: Vec<usize> = (0..grid.n)
        .filter(|&k| {
            let x = grid.node(k);
            x + c * tmin >= grid.x0 - tol && x + c * tmax <= grid.end() + tol
        })
        .collect();
    if nodes.is_empty() {
        return Err(Error::Range("sheared kernel has no admissible nodes".into()));
    }
    let new_grid = UniformGrid::new(grid.node(nodes[0]), grid.dx, nodes.len())?;
    let np = f.npairs();
    let mut values = Vec::with_capacity(times.len() * nodes.len() * np);
    let mut fv = vec![0.0; np];
    for &t in times {
        for &k in &nodes {
            f.eval_all(grid.node(k) + c * t, t, &mut fv)?;
            values.extend_from_slice(&fv);
        }
    }
    let k = Kernel::new(new_set, f.v_inf() + c, f.delta0(), new_grid, times.to_vec(), values)?;
    k.with_m0(f.m0())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::kinetic::kinetic_residual;

    fn two(alpha: f64, c: f64, ell: [f64; 2]) -> (Kernel, MarginalField) {
        let g = UniformGrid::new(0.0, 0.5, 3).unwrap();
        let k = Kernel::constant(fixtures::two_marks(alpha), 4.0, c, g, vec![0.0, 0.5, 1.0], c).unwrap();
        let ell = MarginalField::uniform(fixtures::two_marks(alpha), g, vec![0.0, 0.5, 1.0], &ell).unwrap();
        (k, ell)
    }

    #[test]
    fn reversal_ratio() {
        let (k, ell) = two(1.0, 3.0, [2.0 / 3.0 * 2.0 / 2.0, 1.0 / 3.0 * 2.0 / 2.0]);
        let ell = MarginalField::uniform(k.marks().clone(), *ell.grid(), ell.times().to_vec(), &[2.0 / 3.0, 1.0 / 3.0])
            .unwrap();
        let r = reverse_kernel(&k, &ell, false).unwrap();
        assert!((r.node(0, 0)[0] - 6.0).abs() < 1e-12);
        assert_eq!(r.marks().atom(0), Mark::new(-1.0, -1.0));
    }

    #[test]
    fn uniform_reversal_transposes() {
        let (k, ell) = two(0.5, 2.0, [0.5, 0.5]);
        let r = reverse_kernel(&k, &ell, true).unwrap();
        assert!(r.values().iter().all(|v| *v == 2.0));
        assert_eq!(r.grid().x0, -1.0);
        assert_eq!(r.times(), &[-1.0, -0.5, 0.0]);
    }

    #[test]
    fn swap_reciprocal_and_involution() {
        let (k, ell) = two(2.0, 1.5, [0.3, 0.7]);
        let s = swap_kernel(&k, &ell, DEFAULT_ALPHA_MIN).unwrap();
        assert!((s.pairs().alpha(0) - 0.5).abs() < 1e-15);
        let back = swap_kernel(&s, &swap_marginal(&ell).unwrap(), DEFAULT_ALPHA_MIN).unwrap();
        assert_eq!(back.marks(), k.marks());
        for (a, b) in back.values().iter().zip(k.values()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn swap_rejects_flat_pairs() {
        let (k, ell) = two(0.0005, 1.0, [0.5, 0.5]);
        assert!(matches!(swap_kernel(&k, &ell, DEFAULT_ALPHA_MIN), Err(Error::SupportCondition { .. })));
    }

    #[test]
    fn shear_shifts_brackets() {
        let k = fixtures::two_mark_initial(-0.5, 1.0).unwrap();
        let s = shear_pushforward(&k, 1.0).unwrap();
        assert!((s.pairs().alpha(0) - 0.5).abs() < 1e-15);
        assert!(s.pairs().in_r0(0));
        let id = shear_pushforward(&k, 0.0).unwrap();
        assert_eq!(id.values(), k.values());
        assert_eq!(id.marks(), k.marks());
    }

    #[test]
    fn shear_keeps_residual() {
        let t = 1.0 / 96.0;
        let k = fixtures::fix_a_initial(0.0, 1.0, 0.05, 4.0 * t).unwrap();
        let sol = crate::kinetic::solve_kinetic(&k, t, 100, crate::kinetic::Scheme::Polygonal).unwrap();
        let sh = shear_pushforward(&sol, 2.0).unwrap();
        let (a, b) = (kinetic_residual(&sol).unwrap(), kinetic_residual(&sh).unwrap());
        assert!((a - b).abs() <= 1e-9 + 1e-6 * a, "{a} {b}");
    }
}
