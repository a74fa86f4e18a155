//! Runs the fuzz target bodies over the checked-in corpus and over seeded
//! mutations of it, so parser regressions show up without a fuzzing toolchain.

use std::fs;
use std::panic;
use std::path::PathBuf;

use gibbs_core::io::roundtrip;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TARGETS: [(&str, fn(&[u8])); 8] = [
    ("kernel", roundtrip::kernel),
    ("marginal", roundtrip::marginal),
    ("system", roundtrip::system),
    ("plc", roundtrip::plc),
    ("hamiltonian", roundtrip::hamiltonian),
    ("tessellation", roundtrip::tessellation),
    ("config", roundtrip::config),
    ("trajectory", roundtrip::trajectory),
];

const MUTATIONS: usize = 3000;

fn corpus(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}

fn mutate(seed: &[u8], rng: &mut ChaCha8Rng) -> Vec<u8> {
    const TOKENS: [&[u8]; 12] =
        [b"0", b"-1", b"1e308", b"-0.0", b"1e-320", b"null", b"[]", b"{}", b"\"", b",", b"18446744073709551615", b"0.5"];
    let mut v = seed.to_vec();
    for _ in 0..rng.random_range(1..4) {
        if v.is_empty() {
            break;
        }
        let i = rng.random_range(0..v.len());
        match rng.random_range(0..5) {
            0 => v[i] ^= 1 << rng.random_range(0..8),
            1 => {
                v.remove(i);
            }
            2 => v.truncate(i),
            3 => {
                let t = TOKENS[rng.random_range(0..TOKENS.len())];
                let end = (i + rng.random_range(0..4)).min(v.len());
                v.splice(i..end, t.iter().copied());
            }
            _ => {
                let j = rng.random_range(0..v.len());
                v.swap(i, j);
            }
        }
    }
    v
}

#[test]
fn seeds_parse_and_round_trip() {
    for (target, check) in TARGETS {
        let seeds = corpus(target);
        assert!(!seeds.is_empty(), "{target} has no seeds");
        for (name, data) in &seeds {
            check(data);
            let text = std::str::from_utf8(data).unwrap();
            let parsed = match target {
                "kernel" => gibbs_core::io::kernel_from_json(text).map(|_| ()),
                "marginal" => gibbs_core::io::marginal_from_json(text).map(|_| ()),
                "system" => gibbs_core::io::system_from_json(text).map(|_| ()),
                "plc" => gibbs_core::io::plc_from_json(text).map(|_| ()),
                "hamiltonian" => gibbs_core::io::hamiltonian_from_json(text).map(|_| ()),
                "tessellation" => gibbs_core::io::tessellation_from_json(text).map(|_| ()),
                "config" => gibbs_core::harness::ExperimentConfig::from_json(text).map(|_| ()),
                _ => gibbs_core::io::trajectory_from_jsonl(text).map(|_| ()),
            };
            assert!(parsed.is_ok(), "{target}/{name}: {parsed:?}");
        }
    }
}

#[test]
fn mutated_inputs_never_panic() {
    let mut crashes = Vec::new();
    for (ti, (target, check)) in TARGETS.into_iter().enumerate() {
        for (si, (name, data)) in corpus(target).into_iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(((ti as u64) << 32) | si as u64);
            for _ in 0..MUTATIONS {
                let input = mutate(&data, &mut rng);
                if panic::catch_unwind(|| check(&input)).is_err() {
                    crashes.push(format!("{target}/{name}: {}", String::from_utf8_lossy(&input)));
                }
            }
        }
    }
    assert!(crashes.is_empty(), "{} crashing inputs, first: {}", crashes.len(), crashes[0]);
}
