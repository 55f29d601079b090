//! Fuzzes the experiment-spec loader and its derived validations (table
//! selector, noise ranges, explicit density matrices).

#![no_main]

use libfuzzer_sys::fuzz_target;
use mubtomo::tomography::ExperimentSpec;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(spec) = ExperimentSpec::from_json(text) else {
        return;
    };
    let _ = spec.table_selector();
    let _ = spec.noise.build();
    if spec.n_qubits <= 3 {
        // state realization validates explicit matrices and is seeded
        let _ = spec.state.realize(spec.n_qubits, spec.seed);
    }
});
