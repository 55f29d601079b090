//! Fuzzes the MUB table JSON loader and the structural validator.

#![no_main]

use libfuzzer_sys::fuzz_target;
use mubtomo::mub::{verify_mub_rows, MubTable};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(table) = MubTable::from_json(text) else {
        return;
    };
    // validation is quadratic in the row length; keep registers small
    if table.n_qubits > 5 || table.rows.iter().map(Vec::len).sum::<usize>() > 256 {
        return;
    }
    if let Ok(rows) = table.parse_rows() {
        // the diagnostic report never panics, valid or not
        let report = verify_mub_rows(table.n_qubits, &rows);
        if let Ok(set) = table.validate() {
            assert!(report.structure_ok());
            // a validated set serializes and reloads to itself
            let json = set.to_json().expect("serializes");
            let back = mubtomo::mub::MubSet::from_json(&json).expect("reloads");
            assert_eq!(back, set);
        }
    }
});
