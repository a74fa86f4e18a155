//! Marks, the slope bracket and its relatives, atomic reference measures and
//! gridded jump kernels.

mod kernel;
mod set;

pub use kernel::{Kernel, UniformGrid};
pub(crate) use kernel::locate_time;
pub use set::{beta_integrate, MarkSet, PairTable, Polynomial, Region};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// A slope vector labeling a cell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mark {
    pub rho1: f64,
    pub rho2: f64,
}

impl Mark {
    pub const fn new(rho1: f64, rho2: f64) -> Self {
        Self { rho1, rho2 }
    }

    pub fn dot(&self, x: [f64; 2]) -> f64 {
        self.rho1 * x[0] + self.rho2 * x[1]
    }

    pub fn neg(&self) -> Self {
        Self::new(-self.rho1, -self.rho2)
    }
}

/// `a ≺ b`: the first coordinate strictly increases.
pub fn precedes(a: &Mark, b: &Mark) -> bool {
    b.rho1 > a.rho1
}

/// The bracket `[a, b]`, symmetric in its arguments.
pub fn alpha(a: &Mark, b: &Mark) -> Result<f64> {
    let d1 = b.rho1 - a.rho1;
    if d1 == 0.0 {
        return Err(Error::DegeneratePair { rho1: a.rho1 });
    }
    Ok((b.rho2 - a.rho2) / d1)
}

/// Edge direction `(-[a,b], 1)` for `a ≺ b`.
pub fn tau(a: &Mark, b: &Mark) -> Result<[f64; 2]> {
    let al = alpha(a, b)?;
    if !precedes(a, b) {
        return Err(Error::Precondition("tau needs a ≺ b".into()));
    }
    Ok([-al, 1.0])
}

/// Triple bracket `[m,b] - [a,m]` for `a ≺ m ≺ b`.
pub fn sigma_triple(a: &Mark, m: &Mark, b: &Mark) -> Result<f64> {
    if !(precedes(a, m) && precedes(m, b)) {
        return Err(Error::Precondition("sigma needs a ≺ m ≺ b".into()));
    }
    Ok(alpha(m, b)? - alpha(a, m)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(a: f64, b: f64) -> Mark {
        Mark::new(a, b)
    }

    #[test]
    fn order() {
        assert!(precedes(&m(0., 0.), &m(1., 0.)));
        assert!(!precedes(&m(1., 0.), &m(0., 0.)));
        assert!(!precedes(&m(0., 0.), &m(0., 5.)));
    }

    #[test]
    fn bracket_values() {
        assert_eq!(alpha(&m(0., 0.), &m(2., 1.)).unwrap(), 0.5);
        assert_eq!(alpha(&m(0., 0.), &m(1., 0.)).unwrap(), 0.0);
        assert_eq!(alpha(&m(0., 1.), &m(1., 0.)).unwrap(), -1.0);
        assert!(matches!(
            alpha(&m(1., 0.), &m(1., 2.)),
            Err(Error::DegeneratePair { .. })
        ));
    }

    #[test]
    fn tau_values() {
        assert_eq!(tau(&m(0., 0.), &m(2., 1.)).unwrap(), [-0.5, 1.0]);
        assert_eq!(tau(&m(0., 0.), &m(1., 0.)).unwrap(), [0.0, 1.0]);
        assert!(tau(&m(1., 0.), &m(0., 0.)).is_err());
    }

    #[test]
    fn sigma_values() {
        assert_eq!(sigma_triple(&m(0., 0.), &m(1., 0.), &m(2., 1.)).unwrap(), 1.0);
        assert_eq!(sigma_triple(&m(0., 0.), &m(1., 1.), &m(2., 1.)).unwrap(), -1.0);
        assert_eq!(sigma_triple(&m(0., 0.), &m(1., 0.5), &m(2., 1.)).unwrap(), 0.0);
        assert!(matches!(
            sigma_triple(&m(1., 0.), &m(0., 0.), &m(2., 1.)),
            Err(Error::Precondition(_))
        ));
    }

    fn mark_strategy() -> impl Strategy<Value = Mark> {
        (-5.0f64..5.0, -5.0f64..5.0).prop_map(|(a, b)| Mark::new(a, b))
    }

    proptest! {
        #[test]
        fn bracket_is_swap_symmetric(a in mark_strategy(), b in mark_strategy()) {
            prop_assume!((a.rho1 - b.rho1).abs() > 1e-6);
            prop_assert_eq!(alpha(&a, &b).unwrap(), alpha(&b, &a).unwrap());
        }

        #[test]
        fn tau_is_orthogonal(a in mark_strategy(), b in mark_strategy()) {
            prop_assume!(b.rho1 - a.rho1 > 1e-6);
            let t = tau(&a, &b).unwrap();
            let d = [b.rho1 - a.rho1, b.rho2 - a.rho2];
            let dot = t[0] * d[0] + t[1] * d[1];
            prop_assert!(dot.abs() <= 1e-12 * (1.0 + d[1].abs()));
        }

        #[test]
        fn chord_decomposition(a in mark_strategy(), m in mark_strategy(), b in mark_strategy()) {
            let mut v = [a, m, b];
            v.sort_by(|p, q| p.rho1.total_cmp(&q.rho1));
            let [a, m, b] = v;
            prop_assume!(m.rho1 - a.rho1 > 1e-3 && b.rho1 - m.rho1 > 1e-3);
            let s = sigma_triple(&a, &m, &b).unwrap();
            prop_assert!((s - (alpha(&m, &b).unwrap() - alpha(&a, &m).unwrap())).abs() < 1e-12);
            let lhs = alpha(&a, &b).unwrap() * (b.rho1 - a.rho1);
            let rhs = (m.rho1 - a.rho1) * alpha(&a, &m).unwrap()
                + (b.rho1 - m.rho1) * alpha(&m, &b).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-9);
        }
    }
}
