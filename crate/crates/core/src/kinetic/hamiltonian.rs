use crate::error::{Error, Result};
use crate::marks::{Mark, MarkSet, PairTable, Polynomial};
use serde::{Deserialize, Serialize};

/// Which velocity enters the transport term.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// The bracket `[ρ⁻,ρ⁺]`.
    Planar,
    /// The difference quotient `v^H` of the Hamiltonian.
    OneDimensional,
}

/// Separable convex Hamiltonian `H(ρ) = h1(ρ₁) + h2(ρ₂)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianSpec {
    pub h1: Polynomial,
    #[serde(default)]
    pub h2: Polynomial,
    pub variant: Variant,
}

impl HamiltonianSpec {
    pub fn new(h1: Polynomial, h2: Polynomial, variant: Variant) -> Self {
        Self { h1, h2, variant }
    }

    pub fn eval(&self, m: &Mark) -> f64 {
        self.h1.eval(m.rho1) + self.h2.eval(m.rho2)
    }

    pub fn gradient(&self, m: &Mark) -> [f64; 2] {
        [self.h1.derivative().eval(m.rho1), self.h2.derivative().eval(m.rho2)]
    }

    /// Convexity of both one-variable parts on `[lo, hi]`, checked on a fine sample.
    pub fn check_convex(&self, lo: f64, hi: f64) -> Result<()> {
        for (name, p) in [("h1", &self.h1), ("h2", &self.h2)] {
            let d2 = p.derivative().derivative();
            for k in 0..=1000 {
                let x = lo + (hi - lo) * k as f64 / 1000.0;
                if d2.eval(x) < -1e-12 {
                    return Err(Error::Invalid(format!("{name} is not convex near {x}")));
                }
            }
        }
        Ok(())
    }

    /// `v^H(ρ⁻,ρ⁺) = (H(ρ⁻) − H(ρ⁺))/(ρ⁻₁ − ρ⁺₁)`.
    pub fn velocity(&self, a: &Mark, b: &Mark) -> Result<f64> {
        let d = a.rho1 - b.rho1;
        if d == 0.0 {
            return Err(Error::DegeneratePair { rho1: a.rho1 });
        }
        let v = (self.eval(a) - self.eval(b)) / d;
        if !v.is_finite() {
            return Err(Error::Domain("v^H is not finite".into()));
        }
        Ok(v)
    }

    /// Per-pair velocities for the configured variant.
    pub fn velocities(&self, set: &MarkSet, pairs: &PairTable) -> Result<Vec<f64>> {
        match self.variant {
            Variant::Planar => Ok(pairs.alphas().to_vec()),
            Variant::OneDimensional => pairs
                .pairs()
                .iter()
                .map(|&(i, j)| self.velocity(&set.atom(i), &set.atom(j)))
                .collect(),
        }
    }

    /// Legendre conjugate of `h1` or `h2` at `v`, by maximizing over a slope grid.
    pub fn conjugate_1d(p: &Polynomial, v: f64, slopes: &[f64]) -> f64 {
        slopes
            .iter()
            .map(|&r| v * r - p.eval(r))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn velocity_of_square() {
        let h = HamiltonianSpec::new(Polynomial(vec![0.0, 0.0, 1.0]), Polynomial::default(), Variant::OneDimensional);
        let v = h.velocity(&Mark::new(0.5, 0.25), &Mark::new(2.0, 4.0)).unwrap();
        assert!((v - 2.5).abs() < 1e-15);
        assert!(h.check_convex(-3.0, 3.0).is_ok());
        let concave = HamiltonianSpec::new(Polynomial(vec![0.0, 0.0, -1.0]), Polynomial::default(), Variant::Planar);
        assert!(concave.check_convex(-1.0, 1.0).is_err());
    }

    #[test]
    fn linear_velocity_is_constant() {
        let h = HamiltonianSpec::new(Polynomial(vec![0.0, 1.0]), Polynomial::default(), Variant::OneDimensional);
        let set = MarkSet::new(
            [-5., 5.],
            vec![Mark::new(0., 0.), Mark::new(1., 3.), Mark::new(2., -1.)],
            vec![1.0; 3],
        )
        .unwrap();
        let pairs = PairTable::new(&set, 10.0).unwrap();
        assert_eq!(h.velocities(&set, &pairs).unwrap(), vec![1.0; 3]);
    }

    #[test]
    fn conjugate_of_square() {
        let p = Polynomial(vec![0.0, 0.0, 1.0]);
        let slopes: Vec<f64> = (0..=4000).map(|k| -2.0 + k as f64 * 1e-3).collect();
        assert!((HamiltonianSpec::conjugate_1d(&p, 1.0, &slopes) - 0.25).abs() < 1e-9);
    }
}
