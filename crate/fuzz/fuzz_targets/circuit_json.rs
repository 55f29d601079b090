//! Fuzzes the circuit JSON loader; every valid gate word over the pi/2
//! alphabet is Clifford, so row derivation must succeed and the derived row
//! must be diagonalized by its own circuit.

#![no_main]

use libfuzzer_sys::fuzz_target;
use mubtomo::circuit::{derive_row, verify_basis_circuit, Circuit, CircuitSet};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(circuit) = Circuit::from_json(text) {
        if circuit.n_qubits <= 4 && circuit.gates.len() <= 48 {
            let row = derive_row(&circuit).expect("pi/2 gate words are Clifford");
            let check = verify_basis_circuit(&circuit, &row).expect("matching registers");
            assert!(check.diagonalizes);
            // serialization round trip
            let json = circuit.to_json().expect("serializes");
            assert_eq!(Circuit::from_json(&json).expect("reloads"), circuit);
        }
    }
    let _ = CircuitSet::from_json(text);
});
