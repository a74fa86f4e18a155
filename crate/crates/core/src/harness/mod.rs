//! Experiment drivers, slice statistics, configuration and reports.

mod config;
mod experiments;
mod stats;


pub use config::{suite_configs, Experiment, ExperimentConfig, FixtureSpec, KernelSpec, Thresholds, SUITE};
pub use experiments::{
    run_appendix_convergence, run_coagulation_regime, run_conservation, run_forward, run_consistency_horizontal, run_consistency_vertical,
    run_experiment, run_genericity, run_geometry, run_hj_invariance, run_hopf_oracle, run_jump_count,
    run_transform_algebra, simulate_replicas, hj_hamiltonian, Setup,
};
pub use stats::{
    fit_jump_rates, fit_slice_law, horizontal_law, velocity_law, vertical_law, FitOptions, LineLaw, MIN_SLICES,
};

use serde::{Deserialize, Serialize};

/// One statistic with its pre-registered threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestStat {
    pub name: String,
    /// What `statistic` measures, e.g. `z`, `p`, `ratio`, `count`.
    pub kind: String,
    pub statistic: f64,
    pub threshold: f64,
    pub pass: bool,
    pub samples: usize,
    /// Counts and expectations behind the statistic, when meaningful.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observed: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<f64>,
    /// Informational rows do not enter the overall verdict.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub informational: bool,
}

impl TestStat {
    /// `statistic ≤ threshold` passes.
    pub fn at_most(name: impl Into<String>, kind: &str, statistic: f64, threshold: f64, samples: usize) -> Self {
        Self::build(name, kind, statistic, threshold, statistic <= threshold, samples)
    }

    /// `statistic ≥ threshold` passes.
    pub fn at_least(name: impl Into<String>, kind: &str, statistic: f64, threshold: f64, samples: usize) -> Self {
        Self::build(name, kind, statistic, threshold, statistic >= threshold, samples)
    }

    /// `|statistic| ≤ threshold` passes.
    pub fn z(name: impl Into<String>, statistic: f64, threshold: f64, samples: usize) -> Self {
        Self::build(name, "z", statistic, threshold, statistic.abs() <= threshold, samples)
    }

    fn build(name: impl Into<String>, kind: &str, statistic: f64, threshold: f64, pass: bool, samples: usize) -> Self {
        Self {
            name: name.into(),
            kind: kind.into(),
            statistic,
            threshold,
            pass,
            samples,
            observed: None,
            expected: None,
            informational: false,
        }
    }

    pub fn with_counts(mut self, observed: f64, expected: f64) -> Self {
        self.observed = Some(observed);
        self.expected = Some(expected);
        self
    }

    pub fn informational(mut self) -> Self {
        self.informational = true;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub experiment: String,
    pub pass: bool,
    pub runtime_s: f64,
    pub tests: Vec<TestStat>,
    #[serde(default)]
    pub notes: Vec<String>,
}

impl TestReport {
    pub fn new(experiment: impl Into<String>) -> Self {
        Self { experiment: experiment.into(), pass: true, runtime_s: 0.0, tests: Vec::new(), notes: Vec::new() }
    }

    pub fn push(&mut self, t: TestStat) {
        self.tests.push(t);
        self.refresh();
    }

    pub fn extend(&mut self, ts: impl IntoIterator<Item = TestStat>) {
        self.tests.extend(ts);
        self.refresh();
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    /// Conjunction over gating rows.
    pub fn refresh(&mut self) {
        self.pass = self.tests.iter().filter(|t| !t.informational).all(|t| t.pass);
    }

    /// Largest `|z|` among rows whose name starts with `prefix`.
    pub fn max_abs_z(&self, prefix: &str) -> f64 {
        self.tests
            .iter()
            .filter(|t| t.kind == "z" && t.name.starts_with(prefix) && !t.informational)
            .map(|t| t.statistic.abs())
            .fold(0.0, f64::max)
    }

    /// Smallest `p` among rows whose name starts with `prefix`.
    pub fn min_p(&self, prefix: &str) -> f64 {
        self.tests
            .iter()
            .filter(|t| t.kind == "p" && t.name.starts_with(prefix) && !t.informational)
            .map(|t| t.statistic)
            .fold(1.0, f64::min)
    }

    pub fn failures(&self) -> impl Iterator<Item = &TestStat> {
        self.tests.iter().filter(|t| !t.pass && !t.informational)
    }
}
