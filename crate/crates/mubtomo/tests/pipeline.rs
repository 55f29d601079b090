//! End-to-end pipeline checks across every shipped table: circuit synthesis
//! round trips, orbit fingerprints, factorization cross-checks, and scheme
//! agreement.

use std::collections::BTreeMap;

use mubtomo::circuit::{derive_row, synthesize_circuit, verify_basis_circuit};
use mubtomo::mub::{eigenbasis, CommutingSet, MubSet, Provenance};
use mubtomo::pauli::ProjectivePauli;
use mubtomo::structure::{
    complexity, complexity_nats, factorization_structure, graph_form, lc_orbit_fingerprint,
    row_cnot_count,
};
use mubtomo::tables::{bipartite_3q_circuits, optimal_table, standard_table};
use mubtomo::tomography::{
    exact_expectations, max_abs, mub_probabilities, reconstruct_mub, reconstruct_standard,
    DensityMatrix, ProbabilityTable,
};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

fn all_shipped() -> Vec<MubSet> {
    vec![
        standard_table(2).unwrap(),
        standard_table(3).unwrap(),
        standard_table(4).unwrap(),
        standard_table(5).unwrap(),
        optimal_table(3).unwrap(),
        optimal_table(4).unwrap(),
        optimal_table(5).unwrap(),
    ]
}

/// Synthesis contract on every shipped row, N <= 5: the synthesized circuit
/// diagonalizes the row, measures exactly the row (derive o synthesize is
/// the identity mod phase), and spends exactly the row's minimal CNOT count.
#[test]
fn synthesis_round_trips_every_shipped_row() {
    for set in all_shipped() {
        for (r, row) in set.rows().iter().enumerate() {
            let circuit = synthesize_circuit(row).unwrap();
            let check = verify_basis_circuit(&circuit, row).unwrap();
            assert!(
                check.diagonalizes,
                "{}q row {}: off-diagonal {:.3e}",
                set.n_qubits(),
                r + 1,
                check.max_off_diagonal
            );
            let derived = derive_row(&circuit).unwrap();
            assert_eq!(
                derived.as_key_set(),
                row.as_key_set(),
                "{}q row {}: derived row mismatch",
                set.n_qubits(),
                r + 1
            );
            let expected = row_cnot_count(row).unwrap();
            assert_eq!(
                circuit.cnot_count(),
                expected,
                "{}q row {}: CNOT count",
                set.n_qubits(),
                r + 1
            );
        }
    }
}

/// The 5-qubit tables' non-factorized rows fall into the expected
/// local-equivalence classes, counted by orbit fingerprint: 6 + 18 + 6 for
/// the standard table and 1 + 16 for the optimal one.
#[test]
fn five_qubit_orbit_fingerprint_census() {
    let census = |set: &MubSet| -> BTreeMap<Vec<Vec<usize>>, usize> {
        let mut counts = BTreeMap::new();
        for row in set.rows() {
            let structure = factorization_structure(row).unwrap();
            if structure.label() != vec![5] {
                continue;
            }
            let form = graph_form(row).unwrap();
            let fp = lc_orbit_fingerprint(&form.graph).unwrap();
            *counts.entry(fp).or_insert(0) += 1;
        }
        counts
    };

    let standard = census(&standard_table(5).unwrap());
    let mut standard_counts: Vec<usize> = standard.values().copied().collect();
    standard_counts.sort_unstable();
    assert_eq!(standard_counts, vec![6, 6, 18]);

    let optimal = census(&optimal_table(5).unwrap());
    let mut optimal_counts: Vec<usize> = optimal.values().copied().collect();
    optimal_counts.sort_unstable();
    assert_eq!(optimal_counts, vec![1, 16]);

    // the optimal table's two classes both appear in the standard table
    for fp in optimal.keys() {
        assert!(standard.contains_key(fp));
    }
}

/// Schmidt-rank cross-check on 3 qubits: a row costs zero CNOTs iff every
/// eigenvector is a product state across every bipartition.
#[test]
fn zero_cost_rows_have_product_eigenvectors() {
    let bipartitions: [(Vec<usize>, Vec<usize>); 3] = [
        (vec![0], vec![1, 2]),
        (vec![1], vec![0, 2]),
        (vec![2], vec![0, 1]),
    ];
    let schmidt_rank_one = |v: &nalgebra::DVector<Complex64>| -> bool {
        bipartitions.iter().all(|(left, right)| {
            // reshape the amplitude tensor into a |left| x |right| matrix
            let rows = 1usize << left.len();
            let cols = 1usize << right.len();
            let mut m = DMatrix::<Complex64>::zeros(rows, cols);
            for idx in 0..v.len() {
                let bit = |q: usize| (idx >> (2 - q)) & 1;
                let r = left.iter().fold(0, |acc, &q| (acc << 1) | bit(q));
                let c = right.iter().fold(0, |acc, &q| (acc << 1) | bit(q));
                m[(r, c)] = v[idx];
            }
            let singular = m.svd(false, false).singular_values;
            singular.iter().filter(|s| **s > 1e-9).count() == 1
        })
    };

    for set in [standard_table(3).unwrap(), optimal_table(3).unwrap()] {
        for row in set.rows() {
            let cost = row_cnot_count(row).unwrap();
            let fully_factorized = factorization_structure(row).unwrap().is_fully_factorized();
            assert_eq!(cost == 0, fully_factorized);
            let basis = eigenbasis(row).unwrap();
            let all_product = basis.vectors().iter().all(&schmidt_rank_one);
            assert_eq!(
                cost == 0,
                all_product,
                "row with cost {cost} vs product structure {all_product}"
            );
        }
    }
}

/// The row measured by the third shipped 3-qubit circuit has an eigenbasis
/// matching the circuit's columns one-to-one up to per-column phase.
#[test]
fn circuit_columns_match_row_eigenbasis() {
    let circuits = bipartite_3q_circuits().unwrap();
    let circuit = &circuits[2];
    let row = derive_row(circuit).unwrap();
    let basis = eigenbasis(&row).unwrap();
    let u = circuit.unitary().unwrap();
    let mut matched = [false; 8];
    for col in 0..8 {
        let column = u.column(col);
        let hit = basis.vectors().iter().position(|v| {
            let overlap: Complex64 = v
                .iter()
                .zip(column.iter())
                .map(|(a, b)| a.conj() * b)
                .sum();
            (overlap.norm() - 1.0).abs() < 1e-10
        });
        let hit = hit.expect("column matches no eigenvector");
        assert!(!matched[hit], "eigenvector matched twice");
        matched[hit] = true;
    }
}

/// MUB-scheme and standard-scheme linear inversions agree on exact inputs.
#[test]
fn schemes_agree_on_exact_inputs() {
    let set = optimal_table(3).unwrap();
    let mut rng = ChaCha12Rng::seed_from_u64(77);
    for _ in 0..5 {
        let rho = DensityMatrix::random_mixed(3, &mut rng);
        let p = mub_probabilities(&rho, &set).unwrap();
        let via_mub = reconstruct_mub(&p, &set).unwrap();
        let via_standard = reconstruct_standard(3, &exact_expectations(&rho).unwrap()).unwrap();
        let diff = max_abs(&(via_mub.matrix() - via_standard.matrix()));
        assert!(diff < 1e-10, "schemes disagree by {diff:.3e}");
    }
}

/// Hand-evaluated single-qubit reconstruction: three bases X/Y/Z, state |0>.
#[test]
fn single_qubit_reconstruction_by_hand() {
    let rows: Vec<CommutingSet> = ["Z", "X", "Y"]
        .iter()
        .map(|s| {
            CommutingSet::new(1, vec![s.parse::<ProjectivePauli>().unwrap()]).unwrap()
        })
        .collect();
    let set = MubSet::new(1, rows, Provenance::Custom).unwrap();
    let p = ProbabilityTable {
        values: vec![vec![1.0, 0.0], vec![0.5, 0.5], vec![0.5, 0.5]],
    };
    let rho = reconstruct_mub(&p, &set).unwrap();
    let zero = DensityMatrix::computational_zero(1);
    assert!(max_abs(&(rho.matrix() - zero.matrix())) < 1e-12);
}

/// The quoted-fidelity complexity figure for the 4-qubit optimal table.
#[test]
fn complexity_nats_at_quoted_fidelity() {
    let report = complexity(&optimal_table(4).unwrap()).unwrap();
    let nats = complexity_nats(&report, 0.92).unwrap();
    assert!((nats - 37.0 * (1.0f64 / 0.92).ln()).abs() < 1e-12);
    assert!((nats - 3.0852).abs() < 5e-4);
}
