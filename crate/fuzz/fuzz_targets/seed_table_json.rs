//! Fuzzes the seed-table loader and the table expansion rules. Expansion
//! must either produce a fully valid MUB set or a located construction
//! error, never panic.

#![no_main]

use libfuzzer_sys::fuzz_target;
use mubtomo::mub::{verify_mub, SeedTable};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(seed) = SeedTable::from_json(text) else {
        return;
    };
    if seed.n_qubits > 5 || seed.modulus > 31 {
        return;
    }
    if let Ok(set) = seed.expand() {
        assert!(verify_mub(&set).structure_ok());
    }
});
