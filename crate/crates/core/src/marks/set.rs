use super::{alpha, Mark};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// A real polynomial `c[0] + c[1] x + c[2] x² + …`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polynomial(pub Vec<f64>);

impl Polynomial {
    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn derivative(&self) -> Polynomial {
        Polynomial(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| k as f64 * c)
                .collect(),
        )
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|c| *c == 0.0)
    }
}

/// Atomic reference measure: marks sorted by first coordinate with positive weights.
///
/// Because the first coordinates are distinct and increasing, `i ≺ j` is `i < j`.
#[derive(Clone, Debug, PartialEq)]
pub struct MarkSet {
    bounds: [f64; 2],
    atoms: Vec<Mark>,
    weights: Vec<f64>,
    mass: f64,
    graph: Option<Polynomial>,
}

/// Integration regions for [`beta_integrate`], given by atom indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    /// `R(ρ)`: atoms strictly after `ρ`.
    Right(usize),
    /// `L(ρ)`: atoms strictly before `ρ`.
    Left(usize),
    /// `D(ρ⁻, ρ⁺)`: atoms strictly between.
    Between(usize, usize),
}

impl MarkSet {
    pub fn new(bounds: [f64; 2], atoms: Vec<Mark>, weights: Vec<f64>) -> Result<Self> {
        let [lo, hi] = bounds;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Invalid(format!("bad mark bounds [{lo}, {hi}]")));
        }
        if atoms.is_empty() || atoms.len() != weights.len() {
            return Err(Error::Shape(format!(
                "{} atoms with {} weights",
                atoms.len(),
                weights.len()
            )));
        }
        for (m, w) in atoms.iter().zip(&weights) {
            if !(m.rho1.is_finite() && m.rho2.is_finite()) {
                return Err(Error::Invalid("non-finite mark".into()));
            }
            if m.rho1 < lo || m.rho1 > hi || m.rho2 < lo || m.rho2 > hi {
                return Err(Error::Invalid(format!(
                    "mark ({}, {}) outside [{lo}, {hi}]²",
                    m.rho1, m.rho2
                )));
            }
            if !(w.is_finite() && *w > 0.0) {
                return Err(Error::Invalid(format!("weight {w} must be positive")));
            }
        }
        for w in atoms.windows(2) {
            if w[1].rho1 == w[0].rho1 {
                return Err(Error::DegeneratePair { rho1: w[0].rho1 });
            }
            if w[1].rho1 < w[0].rho1 {
                return Err(Error::Invalid("atoms must be sorted by rho1".into()));
            }
        }
        let mass = weights.iter().sum();
        Ok(Self { bounds, atoms, weights, mass, graph: None })
    }

    /// Sorts atoms (with their weights) by first coordinate before validating.
    pub fn from_unsorted(bounds: [f64; 2], atoms: Vec<Mark>, weights: Vec<f64>) -> Result<Self> {
        if atoms.len() != weights.len() {
            return Err(Error::Shape("atoms and weights differ in length".into()));
        }
        let mut both: Vec<_> = atoms.into_iter().zip(weights).collect();
        both.sort_by(|a, b| a.0.rho1.total_cmp(&b.0.rho1));
        let (a, w) = both.into_iter().unzip();
        Self::new(bounds, a, w)
    }

    /// Atoms on the graph of a strictly increasing `K` at the given first coordinates.
    pub fn on_graph(bounds: [f64; 2], k: Polynomial, rho1: &[f64], weights: Vec<f64>) -> Result<Self> {
        let atoms = rho1.iter().map(|&r| Mark::new(r, k.eval(r))).collect();
        let mut set = Self::new(bounds, atoms, weights)?;
        set.set_graph(k)?;
        Ok(set)
    }

    pub fn set_graph(&mut self, k: Polynomial) -> Result<()> {
        for m in &self.atoms {
            if (k.eval(m.rho1) - m.rho2).abs() > 1e-12 * (1.0 + m.rho2.abs()) {
                return Err(Error::Fixture(format!("atom ({}, {}) is off the graph", m.rho1, m.rho2)));
            }
        }
        if self.atoms.windows(2).any(|w| w[1].rho2 <= w[0].rho2) {
            return Err(Error::Fixture("K is not strictly increasing on the atoms".into()));
        }
        self.graph = Some(k);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn bounds(&self) -> [f64; 2] {
        self.bounds
    }

    pub fn atoms(&self) -> &[Mark] {
        &self.atoms
    }

    pub fn atom(&self, i: usize) -> Mark {
        self.atoms[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn graph(&self) -> Option<&Polynomial> {
        self.graph.as_ref()
    }

    pub fn index_of(&self, m: &Mark) -> Option<usize> {
        self.atoms.iter().position(|a| a == m)
    }

    /// Index range of a region.
    pub fn range(&self, region: Region) -> std::ops::Range<usize> {
        match region {
            Region::Right(i) => (i + 1).min(self.len())..self.len(),
            Region::Left(i) => 0..i.min(self.len()),
            Region::Between(a, b) => (a + 1).min(b.max(a + 1))..b.max(a + 1),
        }
    }

    /// Weighted sum of `f` over a region, by atom index.
    pub fn integrate(&self, region: Region, mut f: impl FnMut(usize) -> f64) -> f64 {
        self.range(region).map(|i| f(i) * self.weights[i]).sum()
    }
}

/// Weighted sum of a mark function over a region.
pub fn beta_integrate(set: &MarkSet, f: impl Fn(&Mark) -> f64, region: Region) -> f64 {
    set.integrate(region, |i| f(&set.atoms[i]))
}

/// Per ordered pair data, indexed row-major: `(0,1), (0,2), …, (1,2), …`.
#[derive(Clone, Debug, PartialEq)]
pub struct PairTable {
    n: usize,
    v_inf: f64,
    offsets: Vec<usize>,
    pairs: Vec<(usize, usize)>,
    alpha: Vec<f64>,
    in_cone: Vec<bool>,
    in_plus_cone: Vec<bool>,
}

impl PairTable {
    pub fn new(set: &MarkSet, v_inf: f64) -> Result<Self> {
        if !(v_inf.is_finite() && v_inf > 0.0) {
            return Err(Error::Domain(format!("V_inf = {v_inf} must be positive")));
        }
        let n = set.len();
        let mut offsets = Vec::with_capacity(n);
        let mut pairs = Vec::new();
        let mut al = Vec::new();
        for i in 0..n {
            offsets.push(pairs.len());
            for j in i + 1..n {
                pairs.push((i, j));
                al.push(alpha(&set.atom(i), &set.atom(j))?);
            }
        }
        let slack = v_inf * (1.0 + 1e-12);
        let in_cone = al.iter().map(|a| a.abs() <= slack).collect();
        let in_plus_cone = al.iter().map(|a| *a >= 0.0 && *a <= slack).collect();
        Ok(Self { n, v_inf, offsets, pairs, alpha: al, in_cone, in_plus_cone })
    }

    pub fn atoms(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn v_inf(&self) -> f64 {
        self.v_inf
    }

    /// Index of the ordered pair `(i, j)`, `i < j`.
    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j && j < self.n);
        self.offsets[i] + (j - i - 1)
    }

    pub fn pair(&self, p: usize) -> (usize, usize) {
        self.pairs[p]
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn alpha(&self, p: usize) -> f64 {
        self.alpha[p]
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alpha
    }

    pub fn alpha_ij(&self, i: usize, j: usize) -> f64 {
        self.alpha[self.index(i, j)]
    }

    pub fn in_cone(&self, p: usize) -> bool {
        self.in_cone[p]
    }

    pub fn in_plus_cone(&self, p: usize) -> bool {
        self.in_plus_cone[p]
    }

    /// Strictly positive bracket, the support condition for vertical slices.
    pub fn in_r0(&self, p: usize) -> bool {
        self.alpha[p] > 0.0 && self.in_cone[p]
    }
}
