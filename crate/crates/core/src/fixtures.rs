//! Small reference systems used by tests, the harness and the examples.

use crate::error::Result;
use crate::marks::{Kernel, Mark, MarkSet, Polynomial, UniformGrid};

/// Mark bounds used by every fixture.
pub const BOUNDS: [f64; 2] = [-10.0, 10.0];

fn unit(atoms: Vec<Mark>) -> MarkSet {
    let n = atoms.len();
    MarkSet::new(BOUNDS, atoms, vec![1.0; n]).expect("fixture marks are valid")
}

/// `(0,0), (1,0), (2,1)`: brackets 0, ½, 1; coagulation only.
pub fn fix_a_marks() -> MarkSet {
    unit(vec![Mark::new(0., 0.), Mark::new(1., 0.), Mark::new(2., 1.)])
}

/// `(0,0), (1,¼), (2,1)`: all brackets strictly positive.
pub fn r0_marks() -> MarkSet {
    unit(vec![Mark::new(0., 0.), Mark::new(1., 0.25), Mark::new(2., 1.)])
}

/// `(0,0), (1,1), (2,1)`: triple bracket −1, fragmentation rate 2 under `f ≡ 2`.
pub fn fix_b_marks() -> MarkSet {
    unit(vec![Mark::new(0., 0.), Mark::new(1., 1.), Mark::new(2., 1.)])
}

/// Two marks with the given bracket.
pub fn two_marks(alpha: f64) -> MarkSet {
    unit(vec![Mark::new(0., 0.), Mark::new(1., alpha)])
}

/// Four atoms on the convex increasing graph `K(m) = m²`.
pub fn convex_graph_marks() -> MarkSet {
    MarkSet::on_graph(BOUNDS, Polynomial(vec![0.0, 0.0, 1.0]), &[0.0, 0.5, 1.0, 1.5], vec![1.0; 4])
        .expect("fixture marks are valid")
}

/// Three atoms on the graph of `K(m) = m`.
pub fn diagonal_marks() -> MarkSet {
    MarkSet::on_graph(BOUNDS, Polynomial(vec![0.0, 1.0]), &[0.0, 1.0, 2.0], vec![1.0; 3])
        .expect("fixture marks are valid")
}

/// Five marks with both signs of the triple bracket: every event kind occurs under `f ≡ 2`, `V∞ = 3/2`.
pub fn mixed_marks() -> MarkSet {
    unit(vec![Mark::new(0., 0.), Mark::new(1., 1.), Mark::new(2., 1.), Mark::new(3., 0.5), Mark::new(4., 2.)])
}

/// Looks a fixture up by its configuration name.
pub fn by_name(name: &str) -> Result<MarkSet> {
    Ok(match name {
        "fix-a" => fix_a_marks(),
        "r0" => r0_marks(),
        "fix-b" => fix_b_marks(),
        "convex-graph" => convex_graph_marks(),
        "diagonal" => diagonal_marks(),
        "mixed" => mixed_marks(),
        other => return Err(crate::Error::Fixture(format!("unknown fixture {other:?}"))),
    })
}

/// Uniform probability vector (density with respect to the weights).
pub fn uniform_ell0(marks: &MarkSet) -> Vec<f64> {
    vec![1.0 / marks.mass(); marks.len()]
}

/// Constant initial kernel on `[lo, hi]` padded by `V∞ t_total`, single slice at 0.
pub fn initial_kernel(
    marks: MarkSet,
    v_inf: f64,
    delta0: f64,
    c: f64,
    span: [f64; 2],
    dx: f64,
    t_total: f64,
) -> Result<Kernel> {
    let grid = UniformGrid::padded(span[0], span[1], dx, v_inf * t_total)?;
    Kernel::constant(marks, v_inf, delta0, grid, vec![0.0], c)
}

/// FIX-A: `f ≡ 2`, `V∞ = 1`, `δ₀ = 2`.
pub fn fix_a_initial(lo: f64, hi: f64, dx: f64, t_total: f64) -> Result<Kernel> {
    initial_kernel(fix_a_marks(), 1.0, 2.0, 2.0, [lo, hi], dx, t_total)
}

/// Single pair with bracket `alpha`, `f ≡ c` on `[0, 1]`.
pub fn two_mark_initial(alpha: f64, c: f64) -> Result<Kernel> {
    initial_kernel(two_marks(alpha), alpha.abs().max(1.0), c, c, [0.0, 1.0], 0.1, 1.0)
}

/// The first slice of `k` held constant on `[t0, t1]` (two slices).
pub fn frozen(k: &Kernel, t0: f64, t1: f64) -> Result<Kernel> {
    let first = k.slice(0).to_vec();
    let mut values = first.clone();
    values.extend_from_slice(&first);
    k.with_values(*k.grid(), vec![t0, t1], values)
}
