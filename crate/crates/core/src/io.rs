//! JSON documents for kernels, marginals, kernel systems, height functions,
//! Hamiltonians and tessellations, and the JSON-Lines event log.
//!
//! Every reader validates through the owning type's constructor, so a parsed
//! document satisfies the same invariants as one built in code.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::MarginalField;
use crate::kinetic::{HamiltonianSpec, KernelSystem};
use crate::marks::{Kernel, Mark, MarkSet, Polynomial, UniformGrid};
use crate::sampler::{Event, ParticleConfig, Trajectory};
use crate::tessellation::{PLCFunction, Tessellation, Window};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridDoc {
    pub x0: f64,
    pub dx: f64,
    pub n: usize,
}

impl GridDoc {
    fn of(g: &UniformGrid) -> Self {
        Self { x0: g.x0, dx: g.dx, n: g.n }
    }

    fn grid(&self) -> Result<UniformGrid> {
        UniformGrid::new(self.x0, self.dx, self.n)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SliceDoc {
    pub t: f64,
    pub values: Vec<f64>,
}

/// `{"P", "V_inf", "delta0", "M0"?, "atoms": [[ρ₁, ρ₂, w]], "graph"?, "grid", "slices"}`;
/// each slice holds `values[node * npairs + pair]` over the ordered pairs `i < j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelDoc {
    #[serde(rename = "P")]
    pub p: [f64; 2],
    #[serde(rename = "V_inf")]
    pub v_inf: f64,
    pub delta0: f64,
    #[serde(rename = "M0", default, skip_serializing_if = "Option::is_none")]
    pub m0: Option<f64>,
    pub atoms: Vec<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<Vec<f64>>,
    pub grid: GridDoc,
    pub slices: Vec<SliceDoc>,
}

/// Like [`KernelDoc`] without the kernel constants, plus the recorded `floor`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarginalDoc {
    #[serde(rename = "P")]
    pub p: [f64; 2],
    pub atoms: Vec<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<Vec<f64>>,
    pub grid: GridDoc,
    pub slices: Vec<SliceDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub floor: Option<f64>,
}

/// Three-component kernel on a product grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDoc {
    #[serde(rename = "P")]
    pub p: [f64; 2],
    pub atoms: Vec<[f64; 3]>,
    pub grids: [GridDoc; 3],
    pub components: [Vec<f64>; 3],
}

/// `{"marks": [[ρ₁, ρ₂]], "intercepts": [c]}` for `g(x) = max_i (x·ρᵢ − cᵢ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlcDoc {
    pub marks: Vec<[f64; 2]>,
    pub intercepts: Vec<f64>,
}

fn atoms_doc(set: &MarkSet) -> Vec<[f64; 3]> {
    set.atoms().iter().zip(set.weights()).map(|(m, w)| [m.rho1, m.rho2, *w]).collect()
}

fn mark_set(p: [f64; 2], atoms: &[[f64; 3]], graph: Option<&Vec<f64>>) -> Result<MarkSet> {
    let marks = atoms.iter().map(|a| Mark::new(a[0], a[1])).collect();
    let weights = atoms.iter().map(|a| a[2]).collect();
    let mut set = MarkSet::new(p, marks, weights)?;
    if let Some(k) = graph {
        if k.iter().any(|c| !c.is_finite()) {
            return Err(Error::Invalid("non-finite graph coefficient".into()));
        }
        set.set_graph(Polynomial(k.clone()))?;
    }
    Ok(set)
}

fn slices_doc(times: &[f64], values: &[f64], per_slice: usize) -> Vec<SliceDoc> {
    times
        .iter()
        .enumerate()
        .map(|(s, &t)| SliceDoc { t, values: values[s * per_slice..(s + 1) * per_slice].to_vec() })
        .collect()
}

fn flatten(slices: Vec<SliceDoc>) -> (Vec<f64>, Vec<f64>) {
    let times = slices.iter().map(|s| s.t).collect();
    let values = slices.into_iter().flat_map(|s| s.values).collect();
    (times, values)
}

impl KernelDoc {
    pub fn of(k: &Kernel) -> Self {
        let per = k.grid().n * k.npairs();
        Self {
            p: k.marks().bounds(),
            v_inf: k.v_inf(),
            delta0: k.delta0(),
            m0: Some(k.m0()),
            atoms: atoms_doc(k.marks()),
            graph: k.marks().graph().map(|g| g.0.clone()),
            grid: GridDoc::of(k.grid()),
            slices: slices_doc(k.times(), k.values(), per),
        }
    }

    pub fn build(self) -> Result<Kernel> {
        let marks = mark_set(self.p, &self.atoms, self.graph.as_ref())?;
        let grid = self.grid.grid()?;
        let (times, values) = flatten(self.slices);
        let k = Kernel::new(marks, self.v_inf, self.delta0, grid, times, values)?;
        match self.m0 {
            Some(m0) => k.with_m0(m0),
            None => Ok(k),
        }
    }
}

impl MarginalDoc {
    pub fn of(ell: &MarginalField) -> Self {
        let per = ell.grid().n * ell.marks().len();
        Self {
            p: ell.marks().bounds(),
            atoms: atoms_doc(ell.marks()),
            graph: ell.marks().graph().map(|g| g.0.clone()),
            grid: GridDoc::of(ell.grid()),
            slices: slices_doc(ell.times(), ell.values(), per),
            floor: Some(ell.floor()),
        }
    }

    pub fn build(self) -> Result<MarginalField> {
        let marks = mark_set(self.p, &self.atoms, self.graph.as_ref())?;
        let grid = self.grid.grid()?;
        let (times, values) = flatten(self.slices);
        let ell = MarginalField::new(marks, grid, times, values)?;
        if let Some(floor) = self.floor {
            if floor != ell.floor() {
                return Err(Error::Invalid(format!("recorded floor {floor} differs from the data floor {}", ell.floor())));
            }
        }
        Ok(ell)
    }
}

impl SystemDoc {
    pub fn of(sys: &KernelSystem) -> Self {
        Self {
            p: sys.marks.bounds(),
            atoms: atoms_doc(&sys.marks),
            grids: sys.grids.each_ref().map(GridDoc::of),
            components: sys.components.clone(),
        }
    }

    pub fn build(self) -> Result<KernelSystem> {
        let marks = mark_set(self.p, &self.atoms, None)?;
        let [g1, g2, g3] = &self.grids;
        KernelSystem::new(marks, [g1.grid()?, g2.grid()?, g3.grid()?], self.components)
    }
}

impl PlcDoc {
    pub fn of(g: &PLCFunction) -> Self {
        Self { marks: g.marks.iter().map(|m| [m.rho1, m.rho2]).collect(), intercepts: g.intercepts.clone() }
    }

    pub fn build(self) -> Result<PLCFunction> {
        PLCFunction::new(self.marks.iter().map(|m| Mark::new(m[0], m[1])).collect(), self.intercepts)
    }
}

pub fn kernel_to_json(k: &Kernel) -> Result<String> {
    Ok(serde_json::to_string(&KernelDoc::of(k))?)
}

pub fn kernel_from_json(text: &str) -> Result<Kernel> {
    serde_json::from_str::<KernelDoc>(text)?.build()
}

pub fn marginal_to_json(ell: &MarginalField) -> Result<String> {
    Ok(serde_json::to_string(&MarginalDoc::of(ell))?)
}

pub fn marginal_from_json(text: &str) -> Result<MarginalField> {
    serde_json::from_str::<MarginalDoc>(text)?.build()
}

pub fn system_to_json(sys: &KernelSystem) -> Result<String> {
    Ok(serde_json::to_string(&SystemDoc::of(sys))?)
}

pub fn system_from_json(text: &str) -> Result<KernelSystem> {
    serde_json::from_str::<SystemDoc>(text)?.build()
}

pub fn plc_to_json(g: &PLCFunction) -> Result<String> {
    Ok(serde_json::to_string(&PlcDoc::of(g))?)
}

pub fn plc_from_json(text: &str) -> Result<PLCFunction> {
    serde_json::from_str::<PlcDoc>(text)?.build()
}

pub fn hamiltonian_to_json(h: &HamiltonianSpec) -> Result<String> {
    Ok(serde_json::to_string(h)?)
}

/// `{"h1": [coefficients], "h2": [coefficients]?, "variant": "planar" | "one-dimensional"}`.
pub fn hamiltonian_from_json(text: &str) -> Result<HamiltonianSpec> {
    let h: HamiltonianSpec = serde_json::from_str(text)?;
    if h.h1.0.iter().chain(&h.h2.0).any(|c| !c.is_finite()) {
        return Err(Error::Invalid("non-finite Hamiltonian coefficient".into()));
    }
    Ok(h)
}

pub fn tessellation_to_json(t: &Tessellation) -> Result<String> {
    Ok(serde_json::to_string(t)?)
}

/// Cells as vertex loops with their marks inline; coordinates must be finite
/// and the window nonempty.
pub fn tessellation_from_json(text: &str) -> Result<Tessellation> {
    let t: Tessellation = serde_json::from_str(text)?;
    Window::new(t.window.lo, t.window.hi)?;
    let finite = |p: &[f64; 2]| p[0].is_finite() && p[1].is_finite();
    let mark_ok = |m: &Mark| m.rho1.is_finite() && m.rho2.is_finite();
    let ok = t.cells.iter().all(|c| mark_ok(&c.mark) && c.polygon.iter().all(finite))
        && t.edges.iter().all(|e| mark_ok(&e.minus) && mark_ok(&e.plus) && e.segment.iter().all(finite))
        && t.vertices.iter().all(|v| finite(&v.point) && v.marks.iter().all(mark_ok));
    if !ok {
        return Err(Error::Invalid("non-finite tessellation coordinate".into()));
    }
    Ok(t)
}

/// First record of an event log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogHeader {
    pub kind: String,
    #[serde(rename = "P")]
    pub p: [f64; 2],
    #[serde(rename = "V_inf")]
    pub v_inf: f64,
    pub atoms: Vec<[f64; 3]>,
    pub window: [f64; 2],
    pub horizon: [f64; 2],
    pub initial: ParticleConfig,
}

pub const HEADER_KIND: &str = "header";

/// One header line, then one `{"t", "kind", "z", "index", "marks"}` line per event.
pub fn trajectory_to_jsonl(traj: &Trajectory) -> Result<String> {
    let header = LogHeader {
        kind: HEADER_KIND.into(),
        p: traj.marks.bounds(),
        v_inf: traj.v_inf,
        atoms: atoms_doc(&traj.marks),
        window: traj.window,
        horizon: traj.horizon,
        initial: traj.initial.clone(),
    };
    let mut out = serde_json::to_string(&header)?;
    out.push('\n');
    for e in &traj.events {
        out.push_str(&serde_json::to_string(e)?);
        out.push('\n');
    }
    Ok(out)
}

/// Reads an event log and replays it; blank lines are skipped.
pub fn trajectory_from_jsonl(text: &str) -> Result<Trajectory> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let first = lines.next().ok_or_else(|| Error::Corruption("empty event log".into()))?;
    let header: LogHeader = serde_json::from_str(first)?;
    if header.kind != HEADER_KIND {
        return Err(Error::Corruption(format!("first record has kind {:?}, expected a header", header.kind)));
    }
    let marks = mark_set(header.p, &header.atoms, None)?;
    let init = header.initial;
    if !(init.t.is_finite() && init.z.iter().all(|z| z.is_finite())) {
        return Err(Error::Corruption("non-finite initial state".into()));
    }
    let initial = ParticleConfig::new(init.t, init.z, init.labels)?;
    let events = lines.map(serde_json::from_str::<Event>).collect::<std::result::Result<Vec<_>, _>>()?;
    Trajectory::from_events(marks, header.v_inf, header.window, header.horizon, initial, events)
}

/// Parse, print and re-parse checks over raw bytes, shared by the fuzz targets
/// and the corpus tests. Inputs that fail to parse are ignored; anything that
/// parses must print and read back to an equal value.
pub mod roundtrip {
    use super::*;
    use crate::harness::ExperimentConfig;

    fn text(data: &[u8]) -> Option<&str> {
        std::str::from_utf8(data).ok()
    }

    pub fn kernel(data: &[u8]) {
        let Some(Ok(k)) = text(data).map(kernel_from_json) else { return };
        let again = kernel_from_json(&kernel_to_json(&k).expect("print kernel")).expect("reparse kernel");
        assert_eq!(again, k);
    }

    pub fn marginal(data: &[u8]) {
        let Some(Ok(ell)) = text(data).map(marginal_from_json) else { return };
        let again = marginal_from_json(&marginal_to_json(&ell).expect("print marginal")).expect("reparse marginal");
        assert_eq!(again, ell);
    }

    pub fn system(data: &[u8]) {
        let Some(Ok(sys)) = text(data).map(system_from_json) else { return };
        let again = system_from_json(&system_to_json(&sys).expect("print system")).expect("reparse system");
        assert_eq!(again.components, sys.components);
        assert_eq!(again.grids, sys.grids);
    }

    pub fn plc(data: &[u8]) {
        let Some(Ok(g)) = text(data).map(plc_from_json) else { return };
        let again = plc_from_json(&plc_to_json(&g).expect("print plc")).expect("reparse plc");
        assert_eq!(again, g);
        let _ = g.pruned();
    }

    pub fn hamiltonian(data: &[u8]) {
        let Some(Ok(h)) = text(data).map(hamiltonian_from_json) else { return };
        let again = hamiltonian_from_json(&hamiltonian_to_json(&h).expect("print hamiltonian")).expect("reparse hamiltonian");
        assert_eq!(again, h);
    }

    pub fn tessellation(data: &[u8]) {
        let Some(Ok(t)) = text(data).map(tessellation_from_json) else { return };
        let again = tessellation_from_json(&tessellation_to_json(&t).expect("print tessellation")).expect("reparse tessellation");
        assert_eq!(again, t);
        let _ = crate::tessellation::validate_generic(&t, 1e-9);
        let _ = crate::tessellation::render_svg(&t, &crate::tessellation::SvgStyle::default());
    }

    pub fn config(data: &[u8]) {
        let Some(Ok(cfg)) = text(data).map(ExperimentConfig::from_json) else { return };
        let printed = serde_json::to_string(&cfg).expect("print config");
        assert_eq!(ExperimentConfig::from_json(&printed).expect("reparse config"), cfg);
    }

    pub fn trajectory(data: &[u8]) {
        let Some(Ok(traj)) = text(data).map(trajectory_from_jsonl) else { return };
        let again = trajectory_from_jsonl(&trajectory_to_jsonl(&traj).expect("print log")).expect("reparse log");
        assert_eq!(again.events, traj.events);
        assert_eq!(again.initial, traj.initial);
        assert_eq!(again.final_config, traj.final_config);
        let _ = traj.segments();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::kinetic::Variant;
    use crate::sampler::EventKind;

    #[test]
    fn kernel_round_trip() {
        let k = fixtures::fix_a_initial(0.0, 1.0, 0.25, 0.01).unwrap();
        let text = kernel_to_json(&k).unwrap();
        assert_eq!(kernel_from_json(&text).unwrap(), k);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["atoms"][1], serde_json::json!([1.0, 0.0, 1.0]));
        assert_eq!(v["slices"][0]["values"].as_array().unwrap().len(), k.grid().n * 3);
    }

    #[test]
    fn kernel_rejects_bad_documents() {
        let k = fixtures::fix_a_initial(0.0, 1.0, 0.25, 0.01).unwrap();
        let mut doc = KernelDoc::of(&k);
        doc.slices[0].values.pop();
        assert!(matches!(doc.build(), Err(Error::Shape(_))));
        let mut doc = KernelDoc::of(&k);
        doc.atoms.swap(0, 1);
        assert!(doc.build().is_err());
        let mut doc = KernelDoc::of(&k);
        doc.slices[0].values[0] = -1.0;
        assert!(doc.build().is_err());
        assert!(kernel_from_json(r#"{"P":[0,1]}"#).is_err());
        assert!(kernel_from_json("[]").is_err());
    }

    #[test]
    fn graph_survives() {
        let set = fixtures::convex_graph_marks();
        let k = fixtures::initial_kernel(set, 3.0, 1.0, 1.0, [0.0, 1.0], 0.5, 0.0).unwrap();
        let back = kernel_from_json(&kernel_to_json(&k).unwrap()).unwrap();
        assert!(back.marks().graph().is_some());
    }

    #[test]
    fn marginal_round_trip_and_floor() {
        let set = fixtures::r0_marks();
        let grid = UniformGrid::new(0.0, 0.5, 3).unwrap();
        let ell = MarginalField::uniform(set, grid, vec![0.0, 1.0], &[0.2, 0.3, 0.5]).unwrap();
        let text = marginal_to_json(&ell).unwrap();
        assert_eq!(marginal_from_json(&text).unwrap(), ell);
        let mut doc = MarginalDoc::of(&ell);
        doc.floor = Some(0.1);
        assert!(doc.clone().build().is_err());
        doc.floor = None;
        assert_eq!(doc.build().unwrap().floor(), 0.2);
    }

    #[test]
    fn plc_and_hamiltonian() {
        let g = PLCFunction::new(vec![Mark::new(0.0, 0.0), Mark::new(1.0, 2.0)], vec![0.0, 0.5]).unwrap();
        assert_eq!(plc_from_json(&plc_to_json(&g).unwrap()).unwrap(), g);
        assert!(plc_from_json(r#"{"marks":[[0,0]],"intercepts":[]}"#).is_err());
        let h = hamiltonian_from_json(r#"{"h1":[0,0,0.5],"variant":"planar"}"#).unwrap();
        assert_eq!(h.variant, Variant::Planar);
        assert_eq!(h.eval(&Mark::new(2.0, 7.0)), 2.0);
        assert_eq!(hamiltonian_from_json(&hamiltonian_to_json(&h).unwrap()).unwrap(), h);
        assert!(hamiltonian_from_json(r#"{"h1":[0],"variant":"curved"}"#).is_err());
    }

    #[test]
    fn system_round_trip() {
        let set = fixtures::fix_a_marks();
        let g = UniformGrid::new(0.0, 1.0, 2).unwrap();
        let comp = vec![1.0; 8 * 3];
        let sys = KernelSystem::new(set, [g, g, g], [comp.clone(), comp.clone(), comp]).unwrap();
        let back = system_from_json(&system_to_json(&sys).unwrap()).unwrap();
        assert_eq!(back.components, sys.components);
        let mut doc = SystemDoc::of(&sys);
        doc.components[2].pop();
        assert!(doc.build().is_err());
    }

    #[test]
    fn tessellation_round_trip() {
        let g = PLCFunction::new(vec![Mark::new(0.0, 0.0), Mark::new(1.0, 0.0)], vec![0.0, 0.5]).unwrap();
        let w = Window::new([0.0, 0.0], [1.0, 1.0]).unwrap();
        let t = crate::tessellation::laguerre_cells(&g, &w).unwrap();
        let back = tessellation_from_json(&tessellation_to_json(&t).unwrap()).unwrap();
        assert_eq!(back, t);
        let bad = tessellation_to_json(&t).unwrap().replacen("\"hi\":[1.0,1.0]", "\"hi\":[0.0,1.0]", 1);
        assert!(tessellation_from_json(&bad).is_err());
    }

    #[test]
    fn log_round_trip() {
        let set = fixtures::fix_a_marks();
        let initial = ParticleConfig::new(0.0, vec![0.5], vec![0, 2]).unwrap();
        let events = vec![Event::new(0.25, EventKind::Exit, 0.0, 0, vec![0, 2])];
        let traj = Trajectory::from_events(set, 2.0, [0.0, 1.0], [0.0, 1.0], initial, events).unwrap();
        let text = trajectory_to_jsonl(&traj).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.lines().nth(1).unwrap().contains("\"kind\":\"exit\""));
        let back = trajectory_from_jsonl(&text).unwrap();
        assert_eq!(back.events, traj.events);
        assert_eq!(back.final_config, traj.final_config);
        assert!(trajectory_from_jsonl("").is_err());
        assert!(trajectory_from_jsonl(text.lines().nth(1).unwrap()).is_err());
    }
}
