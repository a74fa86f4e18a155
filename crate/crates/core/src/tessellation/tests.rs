use super::*;
use crate::fixtures;
use crate::forward::MarginalField;
use crate::kinetic::{HamiltonianSpec, Variant};
use crate::marks::{Kernel, MarkSet, Polynomial, UniformGrid};
use crate::sampler::{self, Event, EventKind, ParticleConfig, SimOptions};

fn one_particle() -> Trajectory {
    let marks = fixtures::fix_a_marks();
    // (0,0) | (1,0) has zero bracket, so the particle stands still
    let q = ParticleConfig::new(0.0, vec![0.4], vec![0, 1]).unwrap();
    Trajectory::from_events(marks, 1.0, [0.0, 1.0], [0.0, 1.0], q, Vec::new()).unwrap()
}

/// One coagulation at (0.5, 0.2) followed by a fragmentation at (0.5, 0.6).
pub(crate) fn motif() -> Trajectory {
    let atoms = vec![Mark::new(0., 0.), Mark::new(1., -1.), Mark::new(1.2, 1.), Mark::new(2., 0.)];
    let marks = MarkSet::new(fixtures::BOUNDS, atoms, vec![1.; 4]).unwrap();
    let q = ParticleConfig::new(0.0, vec![0.3, 0.7], vec![0, 1, 3]).unwrap();
    let events = vec![
        Event::new(0.2, EventKind::Coagulation, 0.5, 0, vec![0, 1, 3]),
        Event::new(0.6, EventKind::Fragmentation, 0.5, 0, vec![0, 2, 3]),
    ];
    Trajectory::from_events(marks, 20.0, [0.0, 1.0], [0.0, 1.0], q, events).unwrap()
}

fn mixed_marks() -> MarkSet {
    let atoms = vec![Mark::new(0., 0.), Mark::new(1., 1.), Mark::new(2., 1.), Mark::new(3., 0.5), Mark::new(4., 2.)];
    MarkSet::new(fixtures::BOUNDS, atoms, vec![1.; 5]).unwrap()
}

pub(crate) fn random_run(seed: u64) -> Trajectory {
    let marks = mixed_marks();
    let grid = UniformGrid::new(-4.0, 0.1, 91).unwrap();
    let ell0 = fixtures::uniform_ell0(&marks);
    let f = Kernel::constant(marks.clone(), 1.5, 2.0, grid, vec![0.0, 2.0], 2.0).unwrap();
    let ell = MarginalField::uniform(marks, grid, vec![0.0, 2.0], &ell0).unwrap();
    let mut rng = sampler::replica_rng(seed, 0);
    let q0 = sampler::sample_boundary(&f, &ell0, 0.0, [0.0, 1.0], &mut rng).unwrap();
    sampler::simulate(&q0, &f, &ell, [0.0, 1.0], [0.0, 1.0], &mut rng, SimOptions::default()).unwrap()
}

#[test]
fn one_particle_gives_two_cells() {
    let traj = one_particle();
    let t = build_tessellation(&traj, &Window::of(&traj).unwrap()).unwrap();
    assert_eq!(t.cells.len(), 2);
    assert_eq!(t.edges.len(), 1);
    assert_eq!(t.interior_vertices().count(), 0);
    assert!((t.area() - 1.0).abs() < 1e-12);
    assert!(validate_generic(&t, 1e-9).all_pass());
    assert_eq!(t.euler_characteristic(), 1);
}

#[test]
fn motif_has_one_vertex_of_each_class() {
    let traj = motif();
    let t = build_tessellation(&traj, &Window::of(&traj).unwrap()).unwrap();
    let inner: Vec<_> = t.interior_vertices().collect();
    assert_eq!(inner.len(), 2);
    assert!(inner.iter().all(|v| v.marks.len() == 3));
    assert_eq!(t.count(VertexKind::Coagulation), 1);
    assert_eq!(t.count(VertexKind::Fragmentation), 1);
    for (p, kind) in build::event_vertices(&traj) {
        let v = inner.iter().find(|v| geom::dist(v.point, p) < 1e-9).expect("event vertex");
        let want = if kind == EventKind::Coagulation { VertexKind::Coagulation } else { VertexKind::Fragmentation };
        assert_eq!(v.kind, want);
    }
    let report = validate_generic(&t, 1e-9);
    assert!(report.all_pass(), "{report:?}");
    assert_eq!(t.euler_characteristic(), 1);
}

#[test]
fn mismatched_window_is_rejected() {
    let traj = one_particle();
    let w = Window::new([0.0, 0.0], [2.0, 1.0]).unwrap();
    assert!(build_tessellation(&traj, &w).is_err());
}

#[test]
fn non_orthogonal_edge_fails() {
    let w = Window::new([0.0, 0.0], [1.0, 1.0]).unwrap();
    let (a, b) = (Mark::new(0., 0.), Mark::new(1., 0.));
    let cells = vec![
        Cell { mark: a, label: None, polygon: vec![[0., 0.], [0.4, 0.], [0.6, 1.], [0., 1.]] },
        Cell { mark: b, label: None, polygon: vec![[0.4, 0.], [1., 0.], [1., 1.], [0.6, 1.]] },
    ];
    let edges = vec![Edge { minus: a, plus: b, segment: [[0.4, 0.], [0.6, 1.]] }];
    let t = Tessellation { window: w, vertices: assemble_vertices(&w, &cells), cells, edges };
    let r = validate_generic(&t, 1e-9);
    assert!(r.tiling.pass && r.orientation.pass && r.degree.pass);
    assert!(!r.orthogonality.pass);
}

#[test]
fn degree_four_vertex_fails() {
    let w = Window::new([0.0, 0.0], [1.0, 1.0]).unwrap();
    let g = PLCFunction::new(
        vec![Mark::new(0., 0.), Mark::new(1., 0.), Mark::new(0., 1.), Mark::new(1., 1.)],
        vec![0.5 * 0.0, 0.5, 0.5, 1.0],
    )
    .unwrap();
    let t = laguerre_cells(&g, &w).unwrap();
    assert_eq!(t.cells.len(), 4);
    let r = validate_generic(&t, 1e-9);
    assert!(r.tiling.pass && r.orthogonality.pass && r.orientation.pass);
    assert!(!r.degree.pass);
    assert_eq!(t.count(VertexKind::Irregular), 1);
}

#[test]
fn flipped_edge_fails_orientation() {
    let traj = one_particle();
    let mut t = build_tessellation(&traj, &Window::of(&traj).unwrap()).unwrap();
    let e = &mut t.edges[0];
    std::mem::swap(&mut e.minus, &mut e.plus);
    assert!(!validate_generic(&t, 1e-9).orientation.pass);
    let mut t = build_tessellation(&traj, &Window::of(&traj).unwrap()).unwrap();
    let (m0, m1) = (t.cells[0].mark, t.cells[1].mark);
    t.cells[0].mark = m1;
    t.cells[1].mark = m0;
    let r = validate_generic(&t, 1e-9);
    assert!(r.orthogonality.pass && !r.orientation.pass);
}

#[test]
fn slices_of_one_particle() {
    let traj = one_particle();
    let h = slice(&traj, Axis::Horizontal, 0.0).unwrap();
    assert_eq!(h.breaks, vec![0.4]);
    assert_eq!(h.labels, vec![0, 1]);
    let v = slice(&traj, Axis::Vertical, 0.2).unwrap();
    assert!(v.breaks.is_empty());
    assert_eq!(v.labels, vec![0]);
    assert!(slice(&traj, Axis::Vertical, 1.5).is_err());
}

#[test]
fn right_wall_slice_jumps_at_creations() {
    for seed in 0..20 {
        let traj = random_run(seed);
        let v = slice(&traj, Axis::Vertical, 1.0).unwrap();
        let mut creations: Vec<f64> = traj.events.iter().filter(|e| e.kind == EventKind::CreateRight).map(|e| e.t).collect();
        let exits: Vec<f64> = traj.events.iter().filter(|e| e.kind == EventKind::Exit && e.z >= 1.0).map(|e| e.t).collect();
        creations.extend(&exits);
        creations.sort_by(f64::total_cmp);
        assert_eq!(v.breaks.len(), creations.len(), "seed {seed}");
        for (b, c) in v.breaks.iter().zip(&creations) {
            assert!((b - c).abs() < 1e-8, "seed {seed}: {b} vs {c}");
        }
        assert_eq!(*v.labels.last().unwrap(), *traj.final_config.labels.last().unwrap());
    }
}

#[test]
fn reconstruct_hinge() {
    // marks (0,0),(1,0) split along x = 0 inside [-1,1]×[0,1]
    let marks = MarkSet::new(fixtures::BOUNDS, vec![Mark::new(0., 0.), Mark::new(1., 0.)], vec![1.; 2]).unwrap();
    let q = ParticleConfig::new(0.0, vec![0.0], vec![0, 1]).unwrap();
    let traj = Trajectory::from_events(marks, 1.0, [-1.0, 1.0], [0.0, 1.0], q, Vec::new()).unwrap();
    // g(-1, 0) = 0 at the base corner
    let r = reconstruct_g(&traj, 0.0).unwrap();
    assert!(r.curl < 1e-12);
    for x in [[-0.7, 0.2], [0.3, 0.9], [1.0, 0.5]] {
        assert!((r.g.eval(x) - x[0].max(0.0)).abs() < 1e-12);
    }
    assert!(r.g.intercepts.iter().all(|c| c.abs() < 1e-12));
}

#[test]
fn laguerre_single_mark_is_window() {
    let w = Window::new([0.0, 0.0], [2.0, 1.0]).unwrap();
    let g = PLCFunction::new(vec![Mark::new(0.3, -1.0)], vec![4.0]).unwrap();
    let t = laguerre_cells(&g, &w).unwrap();
    assert_eq!(t.cells.len(), 1);
    assert!((geom::area(&t.cells[0].polygon) - 2.0).abs() < 1e-15);
    assert!(t.edges.is_empty());
    assert!(laguerre_cells(&g, &Window { lo: [0.0, 0.0], hi: [0.0, 1.0] }).is_err());
}

#[test]
fn laguerre_three_strips() {
    let w = Window::new([-2.0, -2.0], [3.0, 2.0]).unwrap();
    let (a, b, c) = (Mark::new(0., 0.), Mark::new(1., 0.), Mark::new(2., 1.));
    let g = PLCFunction::new(vec![a, b, c], vec![0., 0., 1.]).unwrap();
    let t = laguerre_cells(&g, &w).unwrap();
    assert_eq!(t.cells.len(), 3);
    let r = validate_generic(&t, 1e-9);
    assert!(r.all_pass(), "{r:?}");
    // x₁ = 0 separates (0,0) from (1,0); x₁ + x₂ = 1 separates (1,0) from (2,1)
    let ab = t.edges.iter().find(|e| e.minus == a && e.plus == b).unwrap();
    assert!(ab.segment.iter().all(|p| p[0].abs() < 1e-12));
    let bc = t.edges.iter().find(|e| e.minus == b && e.plus == c).unwrap();
    assert!(bc.segment.iter().all(|p| (p[0] + p[1] - 1.0).abs() < 1e-12));
    // (0,0) meets (2,1) along 2x₁ + x₂ = 1, below the triple point (0, 1)
    let ac = t.edges.iter().find(|e| e.minus == a && e.plus == c).unwrap();
    let d = geom::sub(ac.segment[1], ac.segment[0]);
    assert!(geom::dot(d, [2.0, 1.0]).abs() < 1e-12);
    assert_eq!(t.interior_vertices().count(), 1);
    assert!(geom::dist(t.interior_vertices().next().unwrap().point, [0.0, 1.0]) < 1e-12);
}

fn square_h() -> HamiltonianSpec {
    HamiltonianSpec::new(Polynomial(vec![0.0, 0.0, 1.0]), Polynomial::default(), Variant::Planar)
}

fn hinge() -> PLCFunction {
    PLCFunction::new(vec![Mark::new(0., 0.), Mark::new(1., 0.)], vec![0., 0.]).unwrap()
}

#[test]
fn hopf_moves_hinge_left() {
    let u = hopf_evolve(&hinge(), &square_h(), 0.3).unwrap();
    assert_eq!(u.intercepts, vec![0.0, -0.3]);
    for x in [-1.0, -0.3, 0.0, 0.5] {
        assert!((u.eval([x, 0.0]) - (x + 0.3f64).max(0.0)).abs() < 1e-15);
    }
    assert_eq!(hopf_evolve(&hinge(), &square_h(), 0.0).unwrap(), hinge());
}

#[test]
fn hopf_lax_agrees_with_hopf() {
    let g = PLCFunction::new(
        vec![Mark::new(0., 0.), Mark::new(1., 0.), Mark::new(2., 1.), Mark::new(-1., 0.5)],
        vec![0., 0., 1., 0.3],
    )
    .unwrap();
    let h = HamiltonianSpec::new(Polynomial(vec![0.0, 0.0, 1.0]), Polynomial(vec![0.0, 1.0]), Variant::Planar);
    let grid = HopfLaxGrid { n: 201, ..Default::default() };
    for (x, t) in [([0.1, 0.2], 0.3), ([-0.5, 0.7], 0.1), ([0.9, -0.4], 0.6)] {
        let u = hopf_evolve(&g, &h, t).unwrap().eval(x);
        let v = hopf_lax_value(&g, &h, x, t, &grid).unwrap();
        assert!(!v.on_boundary);
        assert!((u - v.value).abs() <= 2.0 * v.spacing, "{x:?} {t}: {u} vs {}", v.value);
    }
}

#[test]
fn hopf_lax_linear_h_is_translation() {
    let h = HamiltonianSpec::new(Polynomial(vec![0.0, 0.5]), Polynomial(vec![0.0, -1.0]), Variant::Planar);
    let grid = HopfLaxGrid { n: 101, ..Default::default() };
    let g = PLCFunction::new(vec![Mark::new(0., 0.), Mark::new(1., 2.), Mark::new(-1., 1.)], vec![0., 0.5, 0.2]).unwrap();
    let (x, t) = ([0.3, -0.2], 0.4);
    let v = hopf_lax_value(&g, &h, x, t, &grid).unwrap();
    let want = g.eval([x[0] + 0.5 * t, x[1] - t]);
    assert!((v.value - want).abs() < 1e-9, "{} vs {want}", v.value);
    let small = hopf_lax_value(&g, &square_h(), x, 1e-6, &grid).unwrap();
    assert!((small.value - g.eval(x)).abs() <= 2.0 * small.spacing + 1e-9);
}

#[test]
fn semigroup_on_intercepts() {
    let g = PLCFunction::new(vec![Mark::new(0., 0.), Mark::new(1., 0.), Mark::new(2., 1.)], vec![0., 0., 1.]).unwrap();
    let h = square_h();
    let two = hopf_evolve(&hopf_evolve(&g, &h, 0.25).unwrap(), &h, 0.5).unwrap();
    let one = hopf_evolve(&g, &h, 0.75).unwrap();
    assert_eq!(one.marks, two.marks);
    for (a, b) in one.intercepts.iter().zip(&two.intercepts) {
        assert!((a - b).abs() <= 4.0 * f64::EPSILON * (1.0 + a.abs()));
    }
}

#[test]
fn simulated_runs_are_generic_laguerre() {
    let mut seen = 0;
    for seed in 0..60 {
        let traj = random_run(seed);
        let w = Window::of(&traj).unwrap();
        let t = build_tessellation(&traj, &w).unwrap();
        let r = validate_generic(&t, 1e-9);
        assert!(r.all_pass(), "seed {seed}: {r:?}");
        assert_eq!(t.euler_characteristic(), 1, "seed {seed}");
        seen += t.interior_vertices().count();
        let rec = reconstruct_g(&traj, 0.0).unwrap();
        assert!(rec.curl <= 1e-9, "seed {seed}: curl {}", rec.curl);
        let lag = laguerre_cells(&rec.g, &w).unwrap();
        assert_eq!(lag.cells.len(), t.cells.len(), "seed {seed}");
        for c in &t.cells {
            let other = lag.cell(&c.mark).expect("same marks");
            let d = geom::hausdorff_convex(&c.polygon, &other.polygon);
            assert!(d <= 1e-6, "seed {seed}: Hausdorff {d}");
        }
        for s in [0.25, 0.5, 0.75] {
            let h = slice(&traj, Axis::Horizontal, s).unwrap();
            assert!(h.jumps().iter().all(|(_, a, b)| a < b));
        }
    }
    assert!(seen > 0);
}

#[test]
fn svg_is_deterministic_and_classes_vertices() {
    let traj = motif();
    let t = build_tessellation(&traj, &Window::of(&traj).unwrap()).unwrap();
    let style = SvgStyle { legend: true, ..Default::default() };
    let a = render_svg(&t, &style);
    assert_eq!(a, render_svg(&t, &style));
    assert_eq!(a.matches("vertex coagulation").count(), 1);
    assert_eq!(a.matches("vertex fragmentation").count(), 1);
    assert_eq!(a.matches("<polygon").count(), t.cells.len());
    let empty = render_svg(&Tessellation::empty(t.window), &SvgStyle::default());
    assert!(empty.starts_with("<svg") && empty.trim_end().ends_with("</svg>"));
    assert!(!empty.contains("<polygon"));
}
