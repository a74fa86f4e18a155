use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixtures;
use crate::marks::{Mark, MarkSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Horizontal,
    Vertical,
    Hj,
    Convergence,
    Conservation,
    Forward,
    Genericity,
    Geometry,
    Hopf,
    Coagulation,
    JumpCount,
    Transform,
}

impl Experiment {
    pub const ALL: [Experiment; 12] = [
        Experiment::Convergence,
        Experiment::Conservation,
        Experiment::Forward,
        Experiment::Transform,
        Experiment::Horizontal,
        Experiment::Vertical,
        Experiment::Genericity,
        Experiment::Geometry,
        Experiment::Hopf,
        Experiment::Coagulation,
        Experiment::JumpCount,
        Experiment::Hj,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Horizontal => "horizontal",
            Experiment::Vertical => "vertical",
            Experiment::Hj => "hj",
            Experiment::Convergence => "convergence",
            Experiment::Conservation => "conservation",
            Experiment::Forward => "forward",
            Experiment::Genericity => "genericity",
            Experiment::Geometry => "geometry",
            Experiment::Hopf => "hopf",
            Experiment::Coagulation => "coagulation",
            Experiment::JumpCount => "jump-count",
            Experiment::Transform => "transform",
        }
    }
}

/// A named fixture or an inline list of `[ρ₁, ρ₂, weight]` atoms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FixtureSpec {
    Named(String),
    Inline { bounds: [f64; 2], atoms: Vec<[f64; 3]> },
}

impl FixtureSpec {
    pub fn marks(&self) -> Result<MarkSet> {
        match self {
            FixtureSpec::Named(name) => fixtures::by_name(name),
            FixtureSpec::Inline { bounds, atoms } => MarkSet::from_unsorted(
                *bounds,
                atoms.iter().map(|a| Mark::new(a[0], a[1])).collect(),
                atoms.iter().map(|a| a[2]).collect(),
            ),
        }
    }
}

impl Default for FixtureSpec {
    fn default() -> Self {
        FixtureSpec::Named("fix-a".into())
    }
}

/// Constant initial kernel and how it is carried through the box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelSpec {
    pub c: f64,
    pub v_inf: f64,
    pub delta0: f64,
    pub dx: f64,
    pub steps: usize,
    /// Hold the initial kernel fixed in time instead of solving the kinetic equation.
    pub frozen: bool,
    /// Shear applied before vertical tests.
    pub shear: Option<f64>,
    /// Largest Euler step for the marginal; `None` uses the solver default.
    pub ell_step: Option<f64>,
    /// Marginal at the lower-left corner, as a density against the weights; uniform when absent.
    pub ell0: Option<Vec<f64>>,
}

impl Default for KernelSpec {
    fn default() -> Self {
        Self { c: 2.0, v_inf: 1.0, delta0: 2.0, dx: 0.01, steps: 100, frozen: false, shear: None, ell_step: None, ell0: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoxSpec {
    pub x: [f64; 2],
    /// Box height; half the validity time when absent.
    pub height: Option<f64>,
}

impl Default for BoxSpec {
    fn default() -> Self {
        Self { x: [0.0, 1.0], height: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub z_limit: f64,
    pub p_floor: f64,
    /// A perturbed prediction must reach this `|z|` somewhere.
    pub control_z: f64,
    /// Intensity cells are pooled until their compensator reaches this.
    pub min_expected: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { z_limit: 4.0, p_floor: 1e-3, control_z: 6.0, min_expected: 25.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub fixture: FixtureSpec,
    pub kernel: KernelSpec,
    #[serde(rename = "box")]
    pub box_: BoxSpec,
    pub replicas: usize,
    pub seed: u64,
    pub thresholds: Thresholds,
    pub bins: usize,
    /// Slice positions as fractions of the box side.
    pub slices: Vec<f64>,
    /// Hamilton–Jacobi time; the one-dimensional horizon when absent.
    pub hj_time: Option<f64>,
    pub out: Option<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: Experiment::Horizontal,
            fixture: FixtureSpec::default(),
            kernel: KernelSpec::default(),
            box_: BoxSpec::default(),
            replicas: 20_000,
            seed: 1,
            thresholds: Thresholds::default(),
            bins: 8,
            slices: vec![0.25, 0.5, 0.75],
            hj_time: None,
            out: None,
        }
    }
}

impl ExperimentConfig {
    /// Defaults sized for `experiment`: fixture, kernel, box and replica count.
    pub fn for_experiment(experiment: Experiment) -> Self {
        let base = Self { experiment, ..Self::default() };
        let frozen = |fixture: &str, v_inf: f64, replicas: usize| Self {
            fixture: FixtureSpec::Named(fixture.into()),
            kernel: KernelSpec { v_inf, frozen: true, ..KernelSpec::default() },
            box_: BoxSpec { x: [0.0, 1.0], height: Some(1.0) },
            replicas,
            ..base.clone()
        };
        match experiment {
            Experiment::Horizontal | Experiment::Convergence | Experiment::Conservation => base,
            Experiment::Forward => Self { box_: BoxSpec { x: [0.0, 0.1], height: None }, ..base },
            Experiment::Vertical => Self {
                fixture: FixtureSpec::Named("r0".into()),
                box_: BoxSpec { x: [0.0, 1.0], height: Some(1.0 / 96.0) },
                ..base
            },
            Experiment::Hj => Self { replicas: 10_000, ..frozen("diagonal", 1.0, 10_000) },
            Experiment::Genericity => frozen("mixed", 1.5, 10_000),
            Experiment::Geometry => frozen("mixed", 1.5, 1_000),
            Experiment::Hopf => Self { replicas: 100, ..base },
            Experiment::Coagulation => frozen("convex-graph", 3.0, 10_000),
            Experiment::JumpCount => frozen("mixed", 1.5, 4_000),
            Experiment::Transform => Self {
                kernel: KernelSpec { dx: 2.5e-4, steps: 50, ell_step: Some(5e-6), ..KernelSpec::default() },
                box_: BoxSpec { x: [0.0, 0.1], height: Some(1.0 / 96.0) },
                ..base
            },
        }
    }

    /// Reads a configuration; fields left out take the defaults of its experiment.
    pub fn from_json(text: &str) -> Result<Self> {
        let given: serde_json::Value = serde_json::from_str(text)?;
        let experiment = match given.get("experiment") {
            Some(e) => serde_json::from_value(e.clone())?,
            None => Experiment::Horizontal,
        };
        let mut merged = serde_json::to_value(Self::for_experiment(experiment))?;
        overlay(&mut merged, given);
        let cfg: Self = serde_json::from_value(merged)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.replicas == 0 {
            return bad("replicas must be positive".into());
        }
        if self.bins == 0 || self.bins > 50 {
            return bad(format!("bins = {} must lie in 1..=50", self.bins));
        }
        if let Some(s) = self.slices.iter().find(|s| !(**s >= 0.1 && **s <= 0.9)) {
            return bad(format!("slice fraction {s} is within 10% of the box edge"));
        }
        let k = &self.kernel;
        let positive = [k.c, k.v_inf, k.delta0, k.dx];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) || k.steps == 0 {
            return bad("kernel c, v_inf, delta0, dx and steps must be positive".into());
        }
        if k.shear.is_some_and(|c| !(c.is_finite() && c >= 0.0)) {
            return bad("shear must be nonnegative".into());
        }
        let [a, b] = self.box_.x;
        if !(a.is_finite() && b.is_finite() && a < b) {
            return bad("box x-range is empty".into());
        }
        if self.box_.height.is_some_and(|h| !(h.is_finite() && h > 0.0)) {
            return bad("box height must be positive".into());
        }
        let t = &self.thresholds;
        if !(t.z_limit > 0.0 && t.p_floor > 0.0 && t.p_floor < 1.0 && t.control_z > 0.0 && t.min_expected > 0.0) {
            return bad("thresholds out of range".into());
        }
        if self.hj_time.is_some_and(|t| !(t.is_finite() && t >= 0.0)) {
            return bad("hj_time must be nonnegative".into());
        }
        self.fixture.marks().map(|_| ())
    }
}

/// Named runs of the full suite: every experiment at its defaults, plus the
/// vertical test on the sheared FIX-A kernel.
pub const SUITE: [(&str, &str); 13] = [
    ("convergence", r#"{"experiment":"convergence"}"#),
    ("conservation", r#"{"experiment":"conservation"}"#),
    ("forward", r#"{"experiment":"forward"}"#),
    ("transform", r#"{"experiment":"transform"}"#),
    ("horizontal", r#"{"experiment":"horizontal"}"#),
    ("vertical", r#"{"experiment":"vertical"}"#),
    ("vertical-sheared", r#"{"experiment":"vertical","fixture":"fix-a","kernel":{"shear":2.0}}"#),
    ("genericity", r#"{"experiment":"genericity"}"#),
    ("geometry", r#"{"experiment":"geometry"}"#),
    ("hopf", r#"{"experiment":"hopf"}"#),
    ("coagulation", r#"{"experiment":"coagulation"}"#),
    ("jump-count", r#"{"experiment":"jump-count"}"#),
    ("hj", r#"{"experiment":"hj"}"#),
];

/// Configurations of [`SUITE`] with `overrides` applied: an optional shared
/// `"seed"` and per-run objects keyed by run name.
pub fn suite_configs(overrides: &serde_json::Value) -> Result<Vec<(&'static str, ExperimentConfig)>> {
    let empty = serde_json::Map::new();
    let doc = match overrides {
        serde_json::Value::Object(m) => m,
        serde_json::Value::Null => &empty,
        _ => return Err(Error::Config("suite overrides must be a JSON object".into())),
    };
    if let Some(k) = doc.keys().find(|k| *k != "seed" && !SUITE.iter().any(|(n, _)| n == k)) {
        return Err(Error::Config(format!("unknown suite entry {k:?}")));
    }
    SUITE
        .iter()
        .map(|&(name, base)| {
            let mut cfg: serde_json::Value = serde_json::from_str(base)?;
            if let Some(seed) = doc.get("seed") {
                cfg["seed"] = seed.clone();
            }
            if let Some(extra) = doc.get(name) {
                if extra.get("experiment").is_some_and(|e| *e != cfg["experiment"]) {
                    return Err(Error::Config(format!("{name}: the experiment of a suite entry is fixed")));
                }
                overlay(&mut cfg, extra.clone());
            }
            Ok((name, ExperimentConfig::from_json(&cfg.to_string())?))
        })
        .collect()
}

fn overlay(base: &mut serde_json::Value, given: serde_json::Value) {
    match (base, given) {
        (serde_json::Value::Object(b), serde_json::Value::Object(g)) => {
            for (k, v) in g {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => overlay(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, g) => *b = g,
    }
}
