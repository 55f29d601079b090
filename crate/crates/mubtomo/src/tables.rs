//! Built-in measurement tables and their golden data files.
//!
//! Seed rows and expansion rules live in `data/seeds/`; the fully expanded
//! tables are also shipped under `data/tables/` and checked against the
//! builders in tests. The two shipped circuit sets (`data/circuits/`) hold
//! the nine bipartite-basis circuits for the 3-qubit `(0,9,0)` set, which
//! define that table, and the seventeen circuits measuring the rows of the
//! 4-qubit optimal table.

use std::collections::HashSet;

use crate::circuit::{derive_row, Circuit, CircuitSet};
use crate::error::{Error, Result};
use crate::mub::{MubSet, Provenance, SeedTable};

const SEED_STANDARD_2Q: &str = include_str!("../data/seeds/standard_2q.json");
const SEED_STANDARD_3Q: &str = include_str!("../data/seeds/standard_3q.json");
const SEED_STANDARD_4Q: &str = include_str!("../data/seeds/standard_4q.json");
const SEED_STANDARD_5Q: &str = include_str!("../data/seeds/standard_5q.json");
const SEED_OPTIMAL_4Q: &str = include_str!("../data/seeds/optimal_4q.json");
const SEED_OPTIMAL_5Q: &str = include_str!("../data/seeds/optimal_5q.json");

const CIRCUITS_3Q_BIPARTITE: &str = include_str!("../data/circuits/circuits_3q_bipartite.json");
const CIRCUITS_4Q_OPTIMAL: &str = include_str!("../data/circuits/circuits_4q_optimal.json");

/// Seed data for the standard table on `n` qubits (first two rows all-Z and
/// all-X type).
pub fn standard_seed(n_qubits: usize) -> Result<SeedTable> {
    let text = match n_qubits {
        2 => SEED_STANDARD_2Q,
        3 => SEED_STANDARD_3Q,
        4 => SEED_STANDARD_4Q,
        5 => SEED_STANDARD_5Q,
        _ => {
            return Err(Error::Unsupported {
                what: "standard table",
                n: n_qubits,
            });
        }
    };
    SeedTable::from_json(text)
}

/// Seed data for the CNOT-optimal table on `n` qubits (4 and 5 only; the
/// 3-qubit optimal set is defined by its circuits, see [`optimal_table`]).
pub fn optimal_seed(n_qubits: usize) -> Result<SeedTable> {
    let text = match n_qubits {
        4 => SEED_OPTIMAL_4Q,
        5 => SEED_OPTIMAL_5Q,
        _ => {
            return Err(Error::Unsupported {
                what: "optimal table seed",
                n: n_qubits,
            });
        }
    };
    SeedTable::from_json(text)
}

/// Builds the standard MUB table for `n` in 2..=5: rows 1 and 2 are the
/// all-Z-type and all-X-type classes, the rest follow from the seed rules.
pub fn standard_table(n_qubits: usize) -> Result<MubSet> {
    standard_seed(n_qubits)?.expand()
}

/// Builds the CNOT-optimal MUB table for `n` in 3..=5. The 3-qubit `(0,9,0)`
/// set is obtained by conjugating the computational-basis stabilizer through
/// the nine shipped bipartite circuits; the 4- and 5-qubit sets expand from
/// their seed rows.
pub fn optimal_table(n_qubits: usize) -> Result<MubSet> {
    match n_qubits {
        3 => {
            let rows = bipartite_3q_circuits()?
                .iter()
                .map(derive_row)
                .collect::<Result<Vec<_>>>()?;
            // the 9 derived rows cover 63 operators exactly
            MubSet::new(3, rows, Provenance::Custom)
        }
        4 | 5 => optimal_seed(n_qubits)?.expand(),
        _ => Err(Error::Unsupported {
            what: "optimal table",
            n: n_qubits,
        }),
    }
}

/// The nine 3-qubit measurement circuits of the `(0,9,0)` set, one CNOT
/// each, in application order.
pub fn bipartite_3q_circuits() -> Result<Vec<Circuit>> {
    CircuitSet::from_json(CIRCUITS_3Q_BIPARTITE)?.circuits()
}

/// The seventeen measurement circuits of the 4-qubit optimal table, in
/// application order.
pub fn optimal_4q_circuits() -> Result<Vec<Circuit>> {
    CircuitSet::from_json(CIRCUITS_4Q_OPTIMAL)?.circuits()
}

/// Matches each circuit to the table row it measures, by deriving the
/// circuit's commuting class and locating it among the rows. Returns
/// `assignment[i] = row index` and requires the assignment to be a
/// bijection.
pub fn match_circuits_to_rows(circuits: &[Circuit], set: &MubSet) -> Result<Vec<usize>> {
    let row_keys: Vec<HashSet<_>> = set.rows().iter().map(|r| r.as_key_set()).collect();
    let mut assignment = Vec::with_capacity(circuits.len());
    let mut used = vec![false; row_keys.len()];
    for (ci, circuit) in circuits.iter().enumerate() {
        let derived = derive_row(circuit)?.as_key_set();
        let row = row_keys
            .iter()
            .position(|k| *k == derived)
            .ok_or_else(|| {
                Error::InvalidCircuit(format!("circuit {} measures no table row", ci + 1))
            })?;
        if used[row] {
            return Err(Error::InvalidCircuit(format!(
                "circuit {} measures row {} twice",
                ci + 1,
                row + 1
            )));
        }
        used[row] = true;
        assignment.push(row);
    }
    Ok(assignment)
}

/// Identifier for one of the shipped tables.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum TableSelector {
    Standard,
    Optimal,
}

impl TableSelector {
    pub fn build(self, n_qubits: usize) -> Result<MubSet> {
        match self {
            TableSelector::Standard => standard_table(n_qubits),
            TableSelector::Optimal => optimal_table(n_qubits),
        }
    }
}

/// Golden expanded tables, for transcription checks and as stable reference
/// files.
pub fn golden_table_json(selector: TableSelector, n_qubits: usize) -> Result<&'static str> {
    match (selector, n_qubits) {
        (TableSelector::Standard, 2) => Ok(include_str!("../data/tables/standard_2q.json")),
        (TableSelector::Standard, 3) => Ok(include_str!("../data/tables/standard_3q.json")),
        (TableSelector::Standard, 4) => Ok(include_str!("../data/tables/standard_4q.json")),
        (TableSelector::Standard, 5) => Ok(include_str!("../data/tables/standard_5q.json")),
        (TableSelector::Optimal, 3) => Ok(include_str!("../data/tables/optimal_3q.json")),
        (TableSelector::Optimal, 4) => Ok(include_str!("../data/tables/optimal_4q.json")),
        (TableSelector::Optimal, 5) => Ok(include_str!("../data/tables/optimal_5q.json")),
        _ => Err(Error::Unsupported {
            what: "golden table",
            n: n_qubits,
        }),
    }
}
