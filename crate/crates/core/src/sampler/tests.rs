use super::*;
use crate::fixtures;
use crate::marks::{Mark, MarkSet, UniformGrid};

fn constant(marks: MarkSet, c: f64, v_inf: f64) -> (Kernel, MarginalField) {
    let grid = UniformGrid::new(-1.0, 0.1, 31).unwrap();
    let ell0 = fixtures::uniform_ell0(&marks);
    let f = Kernel::constant(marks.clone(), v_inf, c.max(1e-9), grid, vec![0.0, 1.0], c).unwrap();
    let ell = MarginalField::uniform(marks, grid, vec![0.0, 1.0], &ell0).unwrap();
    (f, ell)
}

const W: [f64; 2] = [0.0, 1.0];

fn mixed_marks() -> MarkSet {
    let atoms = vec![Mark::new(0., 0.), Mark::new(1., 1.), Mark::new(2., 1.), Mark::new(3., 0.5), Mark::new(4., 2.)];
    MarkSet::new(fixtures::BOUNDS, atoms, vec![1.; 5]).unwrap()
}

#[test]
fn flow_collision_merges_to_outer_pair() {
    let (f, _) = constant(fixtures::fix_a_marks(), 2.0, 1.0);
    let q = ParticleConfig::new(0.0, vec![0.4, 0.5], vec![0, 1, 2]).unwrap();
    let (out, ev) = flow_deterministic(&q, f.pairs(), W, 0.2).unwrap();
    assert_eq!(ev.len(), 1);
    assert_eq!(ev[0].kind, EventKind::Coagulation);
    assert!((ev[0].t - 0.1).abs() < 1e-12);
    assert!((ev[0].z - 0.4).abs() < 1e-12);
    assert_eq!(out.labels, vec![0, 2]);
    assert!((out.velocity(f.pairs(), 0) + 0.5).abs() < 1e-12);
    assert!((out.z[0] - (0.4 - 0.5 * 0.1)).abs() < 1e-12);
}

#[test]
fn flow_static_particle_stays() {
    let (f, _) = constant(fixtures::fix_a_marks(), 2.0, 1.0);
    let q = ParticleConfig::new(0.0, vec![0.3], vec![0, 1]).unwrap();
    let (out, ev) = flow_deterministic(&q, f.pairs(), W, 0.7).unwrap();
    assert!(ev.is_empty());
    assert_eq!(out.z, vec![0.3]);
}

#[test]
fn sticky_pair_separates_at_minus_sigma() {
    let (f, _) = constant(fixtures::fix_b_marks(), 2.0, 1.0);
    let q = ParticleConfig::new(0.0, vec![0.5, 0.5], vec![0, 1, 2]).unwrap();
    let (out, ev) = flow_deterministic(&q, f.pairs(), W, 0.1).unwrap();
    assert!(ev.is_empty());
    // σ = −1
    assert!(((out.z[1] - out.z[0]) / 0.1 - 1.0).abs() < 1e-12);
}

#[test]
fn exits_at_both_walls() {
    let marks = MarkSet::new(fixtures::BOUNDS, vec![Mark::new(0., 1.), Mark::new(1., 0.), Mark::new(2., 1.)], vec![1.; 3]).unwrap();
    let (f, _) = constant(marks, 1.0, 1.0);
    // particle 0 has velocity +1, particle 1 velocity −1
    let q = ParticleConfig::new(0.0, vec![0.9, 0.95], vec![0, 1, 2]).unwrap();
    let (_, ev) = flow_deterministic(&q, f.pairs(), W, 0.2).unwrap();
    assert!(ev.iter().all(|e| e.kind != EventKind::Exit));
    let q = ParticleConfig::new(0.0, vec![0.1], vec![1, 2]).unwrap();
    let (out, ev) = flow_deterministic(&q, f.pairs(), W, 0.2).unwrap();
    assert_eq!(ev.len(), 1, "{ev:?} {out:?}");
    assert_eq!(ev[0].kind, EventKind::Exit);
    assert!((ev[0].t - 0.1).abs() < 1e-12);
    assert_eq!(out.labels, vec![2]);
    let q = ParticleConfig::new(0.0, vec![0.9], vec![0, 1]).unwrap();
    let (out, ev) = flow_deterministic(&q, f.pairs(), W, 0.2).unwrap();
    assert_eq!(ev[0].kind, EventKind::Exit);
    assert_eq!(ev[0].z, 1.0);
    assert_eq!(out.labels, vec![0]);
}

#[test]
fn fragmentation_rate_through_concave_middle() {
    let (f, ell) = constant(fixtures::fix_b_marks(), 2.0, 1.0);
    let q = ParticleConfig::new(0.0, vec![0.5], vec![0, 2]).unwrap();
    let r = total_rate(&q, &f, &ell, W, 0.0).unwrap();
    assert!((r.total_fragment[0] - 2.0).abs() < 1e-12);
    assert!((r.fragment[0][1] - 2.0).abs() < 1e-12);
}

#[test]
fn no_fragmentation_through_convex_middle() {
    let (f, ell) = constant(fixtures::fix_a_marks(), 2.0, 1.0);
    let q = ParticleConfig::new(0.0, vec![0.5], vec![0, 2]).unwrap();
    let r = total_rate(&q, &f, &ell, W, 0.0).unwrap();
    assert_eq!(r.total_fragment[0], 0.0);
}

#[test]
fn creation_rates() {
    let (f, ell) = constant(fixtures::fix_a_marks(), 2.0, 1.0);
    let q = ParticleConfig::new(0.0, vec![0.5], vec![0, 1]).unwrap();
    let r = total_rate(&q, &f, &ell, W, 0.0).unwrap();
    assert!((r.create_right[2] - 2.0).abs() < 1e-12);
    assert_eq!(r.total_left, 0.0);
    let marks = MarkSet::new(fixtures::BOUNDS, vec![Mark::new(0., 1.), Mark::new(1., 0.)], vec![1.; 2]).unwrap();
    let (f, ell) = constant(marks, 2.0, 1.0);
    let q = ParticleConfig::empty(0.0, 1);
    let r = total_rate(&q, &f, &ell, W, 0.0).unwrap();
    assert!((r.total_left - 2.0).abs() < 1e-12);
}

#[test]
fn zero_kernel_boundary_is_empty() {
    let (f, _) = constant(fixtures::fix_a_marks(), 0.0, 1.0);
    let mut rng = replica_rng(1, 0);
    for _ in 0..100 {
        let q = sample_boundary(&f, &fixtures::uniform_ell0(f.marks()), 0.0, W, &mut rng).unwrap();
        assert_eq!(q.n(), 0);
    }
}

#[test]
fn two_state_boundary_jump_probability() {
    let (f, _) = constant(fixtures::two_marks(0.5), 1.5, 1.0);
    let mut rng = replica_rng(7, 3);
    let n = 10_000;
    let mut hits = 0;
    for _ in 0..n {
        let q = sample_boundary(&f, &[1.0, 0.0], 0.0, W, &mut rng).unwrap();
        hits += q.n();
    }
    let p = 1.0 - (-1.5f64).exp();
    let se = (p * (1.0 - p) / n as f64).sqrt();
    let phat = hits as f64 / n as f64;
    assert!((phat - p).abs() < 3.0 * se, "{phat} vs {p}");
}

#[test]
fn zero_kernel_run_has_no_events() {
    let (f, ell) = constant(fixtures::fix_a_marks(), 0.0, 1.0);
    let q = ParticleConfig::new(0.0, vec![0.5], vec![0, 1]).unwrap();
    let tr = simulate(&q, &f, &ell, W, [0.0, 1.0], &mut replica_rng(0, 0), SimOptions::default()).unwrap();
    assert!(tr.events.is_empty());
    assert_eq!(tr.final_config.z, vec![0.5]);
}

#[test]
fn identical_seeds_give_identical_logs() {
    let (f, ell) = constant(mixed_marks(), 2.0, 1.5);
    let run = |seed| {
        let mut rng = replica_rng(seed, 5);
        let q = sample_boundary(&f, &fixtures::uniform_ell0(f.marks()), 0.0, W, &mut rng).unwrap();
        simulate(&q, &f, &ell, W, [0.0, 1.0], &mut rng, SimOptions::default()).unwrap()
    };
    let seed = (0..100).find(|s| !run(*s).events.is_empty()).unwrap();
    assert_eq!(run(seed), run(seed));
    assert_ne!(run(seed), run(seed + 1));
}

#[test]
fn replay_reproduces_final_state_and_velocities() {
    let (f, ell) = constant(mixed_marks(), 2.0, 1.5);
    for r in 0..50 {
        let mut rng = replica_rng(3, r);
        let q = sample_boundary(&f, &fixtures::uniform_ell0(f.marks()), 0.0, W, &mut rng).unwrap();
        let tr = simulate(&q, &f, &ell, W, [0.0, 1.0], &mut rng, SimOptions::default()).unwrap();
        let last = tr.replay(|_, _, _| {}).unwrap();
        assert_eq!(last, tr.final_config);
        for s in tr.segments().unwrap() {
            let dt = s.end[1] - s.start[1];
            if dt > 1e-6 {
                let v = (s.end[0] - s.start[0]) / dt;
                assert!((v + f.pairs().alpha_ij(s.minus, s.plus)).abs() < 1e-9);
            }
        }
        for ev in &tr.events {
            let m = &ev.marks;
            let s = |a: usize, b: usize, c: usize| f.pairs().alpha_ij(b, c) - f.pairs().alpha_ij(a, b);
            match ev.kind {
                EventKind::Fragmentation => assert!(s(m[0], m[1], m[2]) < 0.0),
                EventKind::Coagulation => assert!(s(m[0], m[1], m[2]) >= 0.0),
                _ => {}
            }
        }
        assert!(tr.events.windows(2).all(|w| w[0].t <= w[1].t));
    }
}

#[test]
fn jump_cap_reports_runaway() {
    let (f, ell) = constant(fixtures::fix_b_marks(), 2.0, 1.0);
    let q = ParticleConfig::new(0.0, vec![0.5], vec![0, 2]).unwrap();
    let mut seen = false;
    for r in 0..20 {
        let opts = SimOptions { jump_cap: 0, ..SimOptions::default() };
        match simulate(&q, &f, &ell, W, [0.0, 1.0], &mut replica_rng(9, r), opts) {
            Err(Error::Runaway { cap: 0 }) => seen = true,
            Ok(_) => {}
            Err(e) => panic!("{e}"),
        }
    }
    assert!(seen);
}

#[test]
fn mixed_fixture_exercises_every_channel() {
    let (f, ell) = constant(mixed_marks(), 2.0, 1.5);
    let mut seen = std::collections::HashSet::new();
    for r in 0..200 {
        let mut rng = replica_rng(21, r);
        let q = sample_boundary(&f, &fixtures::uniform_ell0(f.marks()), 0.0, W, &mut rng).unwrap();
        let tr = simulate(&q, &f, &ell, W, [0.0, 1.0], &mut rng, SimOptions::default()).unwrap();
        seen.extend(tr.events.iter().map(|e| e.kind));
        tr.final_config.validate(f.marks(), W, 1e-9).unwrap();
    }
    assert_eq!(seen.len(), 5, "{seen:?}");
}
