#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| gibbs_core::io::roundtrip::hamiltonian(data));
