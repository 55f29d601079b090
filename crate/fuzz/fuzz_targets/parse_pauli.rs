//! Fuzzes the Pauli text parser and, on success, its algebra and formatting.

#![no_main]

use libfuzzer_sys::fuzz_target;
use mubtomo::pauli::{PauliString, ProjectivePauli};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(p) = text.parse::<PauliString>() {
        // canonical form must reparse to the same operator
        let reparsed: PauliString = p.to_string().parse().expect("canonical form parses");
        assert_eq!(reparsed, p);
        // squaring stays inside the group
        let sq = p.try_mul(&p).expect("same register");
        assert!(sq.is_identity());
        if p.n_qubits() <= 6 {
            let _ = p.to_matrix();
        }
    }
    let _ = text.parse::<ProjectivePauli>();
});
