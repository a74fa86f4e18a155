//! Collision operators, the kinetic-equation solvers, residual checks and the
//! kernel transforms (reversal, coordinate swap, shear).

mod hamiltonian;
mod residual;
mod solve;
mod transform;

pub use hamiltonian::{HamiltonianSpec, Variant};
pub use residual::{kinetic_residual, kinetic_residual_with, system_residual, KernelSystem, ResidualMode};
pub use solve::{solve_kinetic, solve_kinetic_1d, Scheme};
pub use transform::{reverse_kernel, shear_pushforward, swap_kernel, swap_marginal, DEFAULT_ALPHA_MIN};

use crate::error::{Error, Result};
use crate::marks::{Kernel, MarkSet, PairTable};

/// Appendix horizon `min(1/(12 V∞ M₀), δ₀/(48 V∞ M₀²))`.
pub fn tstar(v_inf: f64, m0: f64, delta0: f64) -> Result<f64> {
    if !(v_inf > 0.0 && m0 > 0.0 && delta0 > 0.0) || !(v_inf.is_finite() && m0.is_finite() && delta0.is_finite()) {
        return Err(Error::Domain(format!(
            "tstar needs positive inputs, got V_inf={v_inf} M0={m0} delta0={delta0}"
        )));
    }
    Ok((1.0 / (12.0 * v_inf * m0)).min(delta0 / (48.0 * v_inf * m0 * m0)))
}

/// Total and bracket-weighted intensities per mark.
#[derive(Clone, Debug, PartialEq)]
pub struct Moments {
    pub lambda: Vec<f64>,
    pub a: Vec<f64>,
}

/// Moments of a kernel at `(x, t)`.
pub fn moments(f: &Kernel, x: f64, t: f64) -> Result<Moments> {
    let mut vals = vec![0.0; f.npairs()];
    f.eval_all(x, t, &mut vals)?;
    Ok(moments_of(f.marks(), f.pairs(), f.pairs().alphas(), &vals))
}

/// Moments of raw pair values with per-pair velocities `vel`.
pub fn moments_of(set: &MarkSet, pairs: &PairTable, vel: &[f64], f: &[f64]) -> Moments {
    let n = set.len();
    let mut lambda = vec![0.0; n];
    let mut a = vec![0.0; n];
    for (p, &(i, j)) in pairs.pairs().iter().enumerate() {
        let w = set.weight(j) * f[p];
        lambda[i] += w;
        a[i] += vel[p] * w;
    }
    Moments { lambda, a }
}

/// `Q(f)` at `(x, t)` per ordered pair.
pub fn q_apply(f: &Kernel, x: f64, t: f64) -> Result<Vec<f64>> {
    let mut vals = vec![0.0; f.npairs()];
    f.eval_all(x, t, &mut vals)?;
    let mut out = vec![0.0; f.npairs()];
    collision(f.marks(), f.pairs(), f.pairs().alphas(), &vals, &mut out);
    Ok(out)
}

/// `Q = Q⁺ − Q⁻` on raw pair values, with `vel` in place of the bracket.
pub fn collision(set: &MarkSet, pairs: &PairTable, vel: &[f64], f: &[f64], out: &mut [f64]) {
    let mo = moments_of(set, pairs, vel, f);
    for (p, &(i, j)) in pairs.pairs().iter().enumerate() {
        let v = vel[p];
        let mut gain = 0.0;
        for m in i + 1..j {
            let pm = pairs.index(i, m);
            let mp = pairs.index(m, j);
            let s = vel[mp] - vel[pm];
            gain += s * f[pm] * f[mp] * set.weight(m);
        }
        let loss = ((mo.a[j] - mo.a[i]) - v * (mo.lambda[j] - mo.lambda[i])) * f[p];
        out[p] = gain - loss;
    }
}

/// The bilinear form `𝒬(f¹,f²) = f¹*f² − A(f¹)⊗f² − f¹⊗A(f²)`.
pub fn bilinear(set: &MarkSet, pairs: &PairTable, f1: &[f64], f2: &[f64], out: &mut [f64]) {
    let n = set.len();
    let mut a1 = vec![0.0; n];
    let mut a2 = vec![0.0; n];
    for (p, &(i, j)) in pairs.pairs().iter().enumerate() {
        a1[i] += f1[p] * set.weight(j);
        a2[i] += f2[p] * set.weight(j);
    }
    for (p, &(i, j)) in pairs.pairs().iter().enumerate() {
        let mut conv = 0.0;
        for m in i + 1..j {
            conv += f1[pairs.index(i, m)] * f2[pairs.index(m, j)] * set.weight(m);
        }
        out[p] = conv - a1[i] * f2[p] - a2[j] * f1[p];
    }
}

/// `Q(f¹,f²) = 𝒬(f¹,f²) − 𝒬(f²,f¹)`.
pub fn system_operator(set: &MarkSet, pairs: &PairTable, f1: &[f64], f2: &[f64], out: &mut [f64]) {
    let mut back = vec![0.0; out.len()];
    bilinear(set, pairs, f1, f2, out);
    bilinear(set, pairs, f2, f1, &mut back);
    for (o, b) in out.iter_mut().zip(back) {
        *o -= b;
    }
}

/// `Σ_{ρ⁺} Q(ρ⁻,ρ⁺) β(ρ⁺)` per mark.
pub fn row_sums(set: &MarkSet, pairs: &PairTable, q: &[f64]) -> Vec<f64> {
    let mut rows = vec![0.0; set.len()];
    for (p, &(i, j)) in pairs.pairs().iter().enumerate() {
        rows[i] += q[p] * set.weight(j);
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use proptest::prelude::*;

    #[test]
    fn tstar_values() {
        assert!((tstar(1.0, 2.0, 2.0).unwrap() - 1.0 / 96.0).abs() < 1e-16);
        assert!((tstar(1.0, 0.5, 0.5).unwrap() - 1.0 / 24.0).abs() < 1e-16);
        let a = tstar(1.0, 1.0, 0.01).unwrap();
        let b = tstar(1.0, 2.0, 0.01).unwrap();
        assert!((a / b - 4.0).abs() < 1e-12);
        assert!(matches!(tstar(0.0, 1.0, 1.0), Err(Error::Domain(_))));
        assert!(tstar(1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn fix_a_moments_and_q() {
        let k = fixtures::fix_a_initial(0.0, 1.0, 0.1, 1.0 / 96.0).unwrap();
        let mo = moments(&k, 0.5, 0.0).unwrap();
        assert_eq!(mo.lambda, vec![4.0, 2.0, 0.0]);
        assert_eq!(mo.a[0], 1.0);
        assert_eq!((mo.lambda[2], mo.a[2]), (0.0, 0.0));
        let q = q_apply(&k, 0.5, 0.0).unwrap();
        let p = k.pairs();
        assert_eq!(q[p.index(0, 2)], 2.0);
        assert_eq!(q[p.index(0, 1)], -2.0);
        assert_eq!(q[p.index(1, 2)], 0.0);
        for r in row_sums(k.marks(), p, &q) {
            assert_eq!(r, 0.0);
        }
    }

    fn random_set(n: usize, seed: &[f64]) -> MarkSet {
        let atoms = (0..n)
            .map(|i| crate::marks::Mark::new(i as f64 + 0.3 * seed[i], 2.0 * seed[n + i] - 1.0))
            .collect();
        let weights = (0..n).map(|i| 0.5 + seed[2 * n + i]).collect();
        MarkSet::new([-10.0, 10.0], atoms, weights).unwrap()
    }

    proptest! {
        #[test]
        fn conservation_and_remark_form(
            n in 2usize..6,
            seed in proptest::collection::vec(0.0f64..1.0, 18),
            vals in proptest::collection::vec(0.0f64..3.0, 15),
        ) {
            let set = random_set(n, &seed);
            let pairs = PairTable::new(&set, 100.0).unwrap();
            let f: Vec<f64> = vals[..pairs.len()].to_vec();
            let mut q = vec![0.0; pairs.len()];
            collision(&set, &pairs, pairs.alphas(), &f, &mut q);
            for r in row_sums(&set, &pairs, &q) {
                prop_assert!(r.abs() <= 1e-12 * (1.0 + f.iter().sum::<f64>().powi(2)));
            }
            let f2: Vec<f64> = f.iter().zip(pairs.alphas()).map(|(v, a)| v * a).collect();
            let mut sys = vec![0.0; pairs.len()];
            system_operator(&set, &pairs, &f, &f2, &mut sys);
            for (a, b) in q.iter().zip(&sys) {
                prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()));
            }
        }

        #[test]
        fn system_operator_antisymmetric(
            n in 2usize..6,
            seed in proptest::collection::vec(0.0f64..1.0, 18),
            a in proptest::collection::vec(0.0f64..3.0, 15),
            b in proptest::collection::vec(-3.0f64..3.0, 15),
        ) {
            let set = random_set(n, &seed);
            let pairs = PairTable::new(&set, 100.0).unwrap();
            let np = pairs.len();
            let mut ij = vec![0.0; np];
            let mut ji = vec![0.0; np];
            system_operator(&set, &pairs, &a[..np], &b[..np], &mut ij);
            system_operator(&set, &pairs, &b[..np], &a[..np], &mut ji);
            for (x, y) in ij.iter().zip(&ji) {
                prop_assert!((x + y).abs() <= 1e-12 * (1.0 + x.abs()));
            }
        }
    }
}
