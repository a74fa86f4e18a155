use super::{collision, system_operator};
use crate::error::{Error, Result};
use crate::marks::{Kernel, MarkSet, PairTable, UniformGrid};

/// Which equation a residual check targets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResidualMode {
    Planar,
    System,
}

/// Max-norm residual of `−α f_x + f_t − Q(f)` on interior nodes.
pub fn kinetic_residual(f: &Kernel) -> Result<f64> {
    kinetic_residual_with(f, f.pairs().alphas())
}

/// Residual of `f_t − v f_x − Q_v(f)` for arbitrary per-pair velocities.
///
/// Central differences in `x` and `t`; with only two slices the time difference
/// is taken between them and the remaining terms are averaged.
pub fn kinetic_residual_with(f: &Kernel, vel: &[f64]) -> Result<f64> {
    let nx = f.grid().n;
    let ns = f.times().len();
    let np = f.npairs();
    if ns < 2 || nx < 3 {
        return Err(Error::Shape(format!("need ≥ 2 slices and ≥ 3 nodes, got {ns} and {nx}")));
    }
    if vel.len() != np {
        return Err(Error::Shape("velocity table does not match pairs".into()));
    }
    let dx = f.grid().dx;
    let times = f.times();
    let mut q = vec![0.0; np];
    let mut worst: f64 = 0.0;
    let mut check = |ft: &dyn Fn(usize, usize) -> f64, fx: &dyn Fn(usize, usize) -> f64, mid: &[f64], k: usize| {
        collision(f.marks(), f.pairs(), vel, mid, &mut q);
        for p in 0..np {
            let r = ft(k, p) - vel[p] * fx(k, p) - q[p];
            worst = worst.max(r.abs());
        }
    };
    if ns == 2 {
        let h = times[1] - times[0];
        let mut mid = vec![0.0; np];
        for k in 1..nx - 1 {
            for (p, m) in mid.iter_mut().enumerate() {
                *m = 0.5 * (f.node(0, k)[p] + f.node(1, k)[p]);
            }
            let ft = |k: usize, p: usize| (f.node(1, k)[p] - f.node(0, k)[p]) / h;
            let fx = |k: usize, p: usize| {
                0.25 * (f.node(0, k + 1)[p] - f.node(0, k - 1)[p] + f.node(1, k + 1)[p] - f.node(1, k - 1)[p]) / dx
            };
            check(&ft, &fx, &mid, k);
        }
    } else {
        for s in 1..ns - 1 {
            let h = times[s + 1] - times[s - 1];
            for k in 1..nx - 1 {
                let ft = |k: usize, p: usize| (f.node(s + 1, k)[p] - f.node(s - 1, k)[p]) / h;
                let fx = |k: usize, p: usize| (f.node(s, k + 1)[p] - f.node(s, k - 1)[p]) / (2.0 * dx);
                check(&ft, &fx, f.node(s, k), k);
            }
        }
    }
    Ok(worst)
}

/// Three kernels on a common three-dimensional grid, for the system
/// `fⁱ_{x_j} − fʲ_{x_i} = Q(fⁱ,fʲ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelSystem {
    pub marks: MarkSet,
    pub pairs: PairTable,
    pub grids: [UniformGrid; 3],
    /// Per component, values laid out as `((i1 n2 + i2) n3 + i3) npairs + p`.
    pub components: [Vec<f64>; 3],
}

impl KernelSystem {
    pub fn new(marks: MarkSet, grids: [UniformGrid; 3], components: [Vec<f64>; 3]) -> Result<Self> {
        let pairs = PairTable::new(&marks, f64::MAX)?;
        let len = grids
            .iter()
            .try_fold(pairs.len(), |acc, g| acc.checked_mul(g.n));
        for c in &components {
            if Some(c.len()) != len {
                return Err(Error::Shape("component length does not match the grids".into()));
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::Invalid("non-finite component value".into()));
            }
        }
        Ok(Self { marks, pairs, grids, components })
    }

    fn offset(&self, idx: [usize; 3]) -> usize {
        let [_, n2, n3] = [self.grids[0].n, self.grids[1].n, self.grids[2].n];
        ((idx[0] * n2 + idx[1]) * n3 + idx[2]) * self.pairs.len()
    }

    fn at(&self, c: usize, idx: [usize; 3]) -> &[f64] {
        let o = self.offset(idx);
        &self.components[c][o..o + self.pairs.len()]
    }
}

/// Max-norm residual of the three-component system over interior nodes.
pub fn system_residual(sys: &KernelSystem) -> Result<f64> {
    let n = [sys.grids[0].n, sys.grids[1].n, sys.grids[2].n];
    if n.iter().any(|&v| v < 3) {
        return Err(Error::Shape("each axis needs ≥ 3 nodes".into()));
    }
    let np = sys.pairs.len();
    let mut q = vec![0.0; np];
    let mut worst: f64 = 0.0;
    for i1 in 1..n[0] - 1 {
        for i2 in 1..n[1] - 1 {
            for i3 in 1..n[2] - 1 {
                let idx = [i1, i2, i3];
                let deriv = |c: usize, axis: usize, p: usize| {
                    let mut lo = idx;
                    let mut hi = idx;
                    lo[axis] -= 1;
                    hi[axis] += 1;
                    (sys.at(c, hi)[p] - sys.at(c, lo)[p]) / (2.0 * sys.grids[axis].dx)
                };
                for a in 0..3 {
                    for b in a + 1..3 {
                        system_operator(&sys.marks, &sys.pairs, sys.at(a, idx), sys.at(b, idx), &mut q);
                        for (p, qp) in q.iter().enumerate() {
                            let r = deriv(a, b, p) - deriv(b, a, p) - qp;
                            worst = worst.max(r.abs());
                        }
                    }
                }
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::kinetic::{solve_kinetic, Scheme};
    use crate::marks::Mark;

    #[test]
    fn single_pair_system_is_exact() {
        let set = MarkSet::new([-2., 2.], vec![Mark::new(0., 0.), Mark::new(1., 1.)], vec![1.0, 1.0]).unwrap();
        let g = UniformGrid::new(0.0, 0.1, 4).unwrap();
        let comps = [vec![2.0; 64], vec![2.0; 64], vec![5.0; 64]];
        let sys = KernelSystem::new(set, [g, g, g], comps).unwrap();
        assert_eq!(system_residual(&sys).unwrap(), 0.0);
    }

    #[test]
    fn solver_output_has_small_residual() {
        let t = 1.0 / 96.0;
        let k = fixtures::fix_a_initial(0.0, 1.0, 0.1, t).unwrap();
        let coarse = solve_kinetic(&k, t, 100, Scheme::Polygonal).unwrap();
        let fine = solve_kinetic(&k, t, 200, Scheme::Polygonal).unwrap();
        let rc = kinetic_residual(&coarse).unwrap();
        let rf = kinetic_residual(&fine).unwrap();
        assert!(rf < 0.1 && rc / rf > 1.5, "{rc} {rf}");
        let mut v = fine.values().to_vec();
        let w = fine.grid().n * fine.npairs();
        for x in &mut v[50 * w..51 * w] {
            *x += 0.1;
        }
        let bad = fine.with_values(*fine.grid(), fine.times().to_vec(), v).unwrap();
        assert!(kinetic_residual(&bad).unwrap() > 0.05);
    }

    #[test]
    fn too_small_grids() {
        let k = fixtures::fix_a_initial(0.0, 1.0, 0.1, 0.01).unwrap();
        assert!(matches!(kinetic_residual(&k), Err(Error::Shape(_))));
    }
}
