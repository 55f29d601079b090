//! Measurement circuits over the {Rx, Ry, Rz at pi/2, CNOT} gate alphabet.
//!
//! A circuit stores its gates in application order (the first listed gate
//! acts first). Rotations follow `R_k(theta) = exp(-i theta sigma_k / 2)`
//! with theta fixed at pi/2; `CNOT(i, j)` flips target `j` conditioned on
//! control `i` in the computational basis. Qubit 1 is the leftmost tensor
//! factor, i.e. the most significant bit of a basis index.
//!
//! A circuit measures a commuting class correctly iff its unitary conjugates
//! every class member to a diagonal operator; this criterion is insensitive
//! to rotation-sign conventions and basis ordering, so it is what
//! [`verify_basis_circuit`] checks and what [`synthesize_circuit`]
//! guarantees.

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::mub::CommutingSet;
use crate::pauli::{PauliString, Phase, ProjectivePauli};
use crate::structure::{factorization_structure, graph_form, lc_orbit_min_representative};

/// Dense circuit simulation guard.
pub const MAX_CIRCUIT_QUBITS: usize = 10;

/// Diagonalization tolerance for basis-circuit verification.
pub const DIAG_TOL: f64 = 1e-10;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum RotationAxis {
    X,
    Y,
    Z,
}

impl RotationAxis {
    fn kind_name(self) -> &'static str {
        match self {
            RotationAxis::X => "Rx",
            RotationAxis::Y => "Ry",
            RotationAxis::Z => "Rz",
        }
    }

    /// The pi/2 rotation matrix `exp(-i (pi/4) sigma_k)`.
    pub fn half_turn_matrix(self) -> Matrix2<Complex64> {
        let c = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let mi = Complex64::new(0.0, -FRAC_1_SQRT_2);
        match self {
            RotationAxis::X => Matrix2::new(c, mi, mi, c),
            RotationAxis::Y => Matrix2::new(
                c,
                Complex64::new(-FRAC_1_SQRT_2, 0.0),
                Complex64::new(FRAC_1_SQRT_2, 0.0),
                c,
            ),
            RotationAxis::Z => Matrix2::new(
                Complex64::new(FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
                Complex64::default(),
                Complex64::default(),
                Complex64::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2),
            ),
        }
    }
}

/// One gate. Rotation angles are fixed at pi/2; qubit indices are 1-based.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Gate {
    Rotation { axis: RotationAxis, target: usize },
    Cnot { control: usize, target: usize },
}

impl Gate {
    pub fn rx(target: usize) -> Self {
        Gate::Rotation {
            axis: RotationAxis::X,
            target,
        }
    }

    pub fn ry(target: usize) -> Self {
        Gate::Rotation {
            axis: RotationAxis::Y,
            target,
        }
    }

    pub fn rz(target: usize) -> Self {
        Gate::Rotation {
            axis: RotationAxis::Z,
            target,
        }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Gate::Cnot { control, target }
    }

    pub fn is_cnot(&self) -> bool {
        matches!(self, Gate::Cnot { .. })
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GateRepr {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    control: Option<usize>,
    target: usize,
}

impl Serialize for Gate {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let repr = match *self {
            Gate::Rotation { axis, target } => GateRepr {
                kind: axis.kind_name().to_string(),
                control: None,
                target,
            },
            Gate::Cnot { control, target } => GateRepr {
                kind: "CNOT".to_string(),
                control: Some(control),
                target,
            },
        };
        repr.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Gate {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = GateRepr::deserialize(deserializer)?;
        match (repr.kind.as_str(), repr.control) {
            ("Rx", None) => Ok(Gate::rx(repr.target)),
            ("Ry", None) => Ok(Gate::ry(repr.target)),
            ("Rz", None) => Ok(Gate::rz(repr.target)),
            ("CNOT", Some(c)) => Ok(Gate::cnot(c, repr.target)),
            ("CNOT", None) => Err(serde::de::Error::custom("CNOT requires a control")),
            (k, Some(_)) => Err(serde::de::Error::custom(format!(
                "rotation {k:?} must not carry a control"
            ))),
            (k, None) => Err(serde::de::Error::custom(format!("unknown gate kind {k:?}"))),
        }
    }
}

/// An ordered gate list on a fixed register, gates in application order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Circuit {
    pub n_qubits: usize,
    pub gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n_qubits: usize, gates: Vec<Gate>) -> Result<Self> {
        let circuit = Self { n_qubits, gates };
        circuit.validate()?;
        Ok(circuit)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 {
            return Err(Error::InvalidCircuit("empty register".into()));
        }
        for g in &self.gates {
            match *g {
                Gate::Rotation { target, .. } => {
                    if target == 0 || target > self.n_qubits {
                        return Err(Error::InvalidCircuit(format!(
                            "rotation target {target} outside 1..={}",
                            self.n_qubits
                        )));
                    }
                }
                Gate::Cnot { control, target } => {
                    if control == 0
                        || target == 0
                        || control > self.n_qubits
                        || target > self.n_qubits
                    {
                        return Err(Error::InvalidCircuit(format!(
                            "CNOT({control},{target}) outside 1..={}",
                            self.n_qubits
                        )));
                    }
                    if control == target {
                        return Err(Error::InvalidCircuit(format!(
                            "CNOT control equals target ({control})"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn cnot_count(&self) -> usize {
        self.gates.iter().filter(|g| g.is_cnot()).count()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let circuit: Circuit = serde_json::from_str(text)?;
        circuit.validate()?;
        Ok(circuit)
    }

    /// Dense unitary: the product of gate matrices in application order.
    pub fn unitary(&self) -> Result<DMatrix<Complex64>> {
        if self.n_qubits > MAX_CIRCUIT_QUBITS {
            return Err(Error::SizeGuard {
                what: "dense circuit unitary",
                n: self.n_qubits,
                max: MAX_CIRCUIT_QUBITS,
            });
        }
        let dim = 1usize << self.n_qubits;
        let mut u = DMatrix::<Complex64>::identity(dim, dim);
        for gate in &self.gates {
            apply_gate_left(&mut u, self.n_qubits, gate);
        }
        Ok(u)
    }
}

/// In-place `U <- G * U` without materializing `G`.
fn apply_gate_left(u: &mut DMatrix<Complex64>, n_qubits: usize, gate: &Gate) {
    let dim = u.nrows();
    match *gate {
        Gate::Rotation { axis, target } => {
            let m = axis.half_turn_matrix();
            let tbit = 1usize << (n_qubits - target);
            for col in 0..dim {
                for base in 0..dim {
                    if base & tbit != 0 {
                        continue;
                    }
                    let hi = base | tbit;
                    let a = u[(base, col)];
                    let b = u[(hi, col)];
                    u[(base, col)] = m[(0, 0)] * a + m[(0, 1)] * b;
                    u[(hi, col)] = m[(1, 0)] * a + m[(1, 1)] * b;
                }
            }
        }
        Gate::Cnot { control, target } => {
            let cbit = 1usize << (n_qubits - control);
            let tbit = 1usize << (n_qubits - target);
            for col in 0..dim {
                for base in 0..dim {
                    if base & cbit != 0 && base & tbit == 0 {
                        let hi = base | tbit;
                        let a = u[(base, col)];
                        u[(base, col)] = u[(hi, col)];
                        u[(hi, col)] = a;
                    }
                }
            }
        }
    }
}

/// Result of checking a circuit against a commuting class.
#[derive(Copy, Clone, Debug)]
pub struct BasisCheck {
    pub diagonalizes: bool,
    pub max_off_diagonal: f64,
}

/// True iff `U^dag A U` is diagonal (within [`DIAG_TOL`]) for every class
/// member `A`, i.e. the circuit maps the computational basis onto the class
/// eigenbasis up to order and phases.
pub fn verify_basis_circuit(circuit: &Circuit, row: &CommutingSet) -> Result<BasisCheck> {
    if circuit.n_qubits != row.n_qubits() {
        return Err(Error::DimensionMismatch {
            left: circuit.n_qubits,
            right: row.n_qubits(),
        });
    }
    let u = circuit.unitary()?;
    let udag = u.adjoint();
    let mut worst = 0.0f64;
    for op in row.operators() {
        let a = op.lift().to_matrix()?;
        let b = &udag * a * &u;
        for r in 0..b.nrows() {
            for c in 0..b.ncols() {
                if r != c {
                    worst = worst.max(b[(r, c)].norm());
                }
            }
        }
    }
    Ok(BasisCheck {
        diagonalizes: worst < DIAG_TOL,
        max_off_diagonal: worst,
    })
}

/// Identifies `M = lambda * P` for a Pauli string `P` and unit scalar
/// `lambda`, or reports that `M` is not proportional to any Pauli.
fn pauli_from_matrix(m: &DMatrix<Complex64>, n_qubits: usize) -> Result<(ProjectivePauli, Complex64)> {
    let dim = 1usize << n_qubits;
    let mut hits = (0..dim).filter(|&r| m[(r, 0)].norm() > 1e-6);
    let row = hits
        .next()
        .ok_or_else(|| Error::NotClifford("zero column in conjugated operator".into()))?;
    if hits.next().is_some() {
        return Err(Error::NotClifford(
            "conjugated operator has more than one entry per column".into(),
        ));
    }
    let x_bits = row as u64;
    let mut z_bits = 0u64;
    for q in 1..=n_qubits {
        let u = 1usize << (n_qubits - q);
        let ratio = m[(row ^ u, u)] / m[(row, 0)];
        if (ratio - Complex64::new(1.0, 0.0)).norm() < 1e-6 {
            // identity-like site on the Z side
        } else if (ratio + Complex64::new(1.0, 0.0)).norm() < 1e-6 {
            z_bits |= u as u64;
        } else {
            return Err(Error::NotClifford(format!(
                "non-sign column ratio {ratio} on qubit {q}"
            )));
        }
    }
    let candidate = PauliString::from_parts(n_qubits, x_bits, z_bits, Phase::PlusOne)?;
    let t = candidate.to_matrix()?;
    let lambda = m[(row, 0)] / t[(row, 0)];
    if (lambda.norm() - 1.0).abs() > 1e-8 {
        return Err(Error::NotClifford(format!("non-unit scale {lambda}")));
    }
    let mut worst = 0.0f64;
    for r in 0..dim {
        for c in 0..dim {
            worst = worst.max((m[(r, c)] - lambda * t[(r, c)]).norm());
        }
    }
    if worst > DIAG_TOL {
        return Err(Error::NotClifford(format!(
            "residual {worst:.3e} against the nearest Pauli"
        )));
    }
    Ok((candidate.projective(), lambda))
}

/// The commuting class measured by a circuit: conjugates every nonidentity
/// Z-string through the circuit unitary. Fails if any conjugate is not a
/// Pauli string, i.e. if the circuit is not Clifford.
pub fn derive_row(circuit: &Circuit) -> Result<CommutingSet> {
    let n = circuit.n_qubits;
    let u = circuit.unitary()?;
    let udag = u.adjoint();
    let dim = 1usize << n;
    let mut ops = Vec::with_capacity(dim - 1);
    for z_bits in 1..dim as u64 {
        let d = PauliString::from_parts(n, 0, z_bits, Phase::PlusOne)?.to_matrix()?;
        let m = &u * d * &udag;
        let (op, lambda) = pauli_from_matrix(&m, n)?;
        if (lambda.im).abs() > 1e-8 {
            return Err(Error::NotClifford(format!(
                "conjugate of a Hermitian operator scaled by {lambda}"
            )));
        }
        ops.push(op);
    }
    CommutingSet::new(n, ops)
}

/// Canonical phase-free key of a 2x2 unitary, on a 1e-6 grid.
fn clifford_key(m: &Matrix2<Complex64>) -> [(i64, i64); 4] {
    let entries = [m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]];
    let pivot = entries
        .iter()
        .find(|e| e.norm() > 1e-6)
        .copied()
        .unwrap_or(Complex64::new(1.0, 0.0));
    let rot = pivot.conj() / pivot.norm();
    let mut key = [(0i64, 0i64); 4];
    for (k, e) in entries.iter().enumerate() {
        let v = e * rot;
        key[k] = (
            (v.re * 1e6).round() as i64,
            (v.im * 1e6).round() as i64,
        );
    }
    key
}

type RotationWordTable = HashMap<[(i64, i64); 4], Vec<RotationAxis>>;

fn rotation_word_table() -> &'static RotationWordTable {
    static TABLE: OnceLock<RotationWordTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table: HashMap<[(i64, i64); 4], Vec<RotationAxis>> = HashMap::new();
        let mut frontier: Vec<(Matrix2<Complex64>, Vec<RotationAxis>)> =
            vec![(Matrix2::identity(), Vec::new())];
        table.insert(clifford_key(&Matrix2::identity()), Vec::new());
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for (m, word) in &frontier {
                for axis in [RotationAxis::X, RotationAxis::Y, RotationAxis::Z] {
                    let v = axis.half_turn_matrix() * m;
                    let key = clifford_key(&v);
                    if let std::collections::hash_map::Entry::Vacant(e) = table.entry(key) {
                        let mut w = word.clone();
                        w.push(axis);
                        e.insert(w.clone());
                        next.push((v, w));
                    }
                }
            }
            frontier = next;
        }
        table
    })
}

/// Compiles a single-qubit Clifford (given as a 2x2 unitary, up to global
/// phase) into a shortest word of pi/2 rotations, found by breadth-first
/// search over the 24 Clifford classes. Words never exceed 5 rotations.
pub fn compile_local(unitary: &Matrix2<Complex64>) -> Result<Vec<RotationAxis>> {
    rotation_word_table()
        .get(&clifford_key(unitary))
        .cloned()
        .ok_or_else(|| {
            Error::InvalidArgument("matrix is not in the single-qubit Clifford group".into())
        })
}

/// Number of distinct single-qubit Clifford classes reachable by pi/2
/// rotation words (always 24).
pub fn clifford_class_count() -> usize {
    rotation_word_table().len()
}

pub fn longest_rotation_word() -> usize {
    rotation_word_table()
        .values()
        .map(Vec::len)
        .max()
        .unwrap_or(0)
}

fn hadamard() -> Matrix2<Complex64> {
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    Matrix2::new(h, h, h, -h)
}

fn phase_gate() -> Matrix2<Complex64> {
    Matrix2::new(
        Complex64::new(1.0, 0.0),
        Complex64::default(),
        Complex64::default(),
        Complex64::new(0.0, 1.0),
    )
}

/// Synthesizes a measurement circuit for a commuting class with the minimal
/// CNOT count.
///
/// Per factorization block, the class is reduced to graph form, the
/// local-complementation orbit is searched for a minimum-edge representative,
/// and the block circuit prepares that representative's graph basis (one CNOT
/// per edge, as a CZ conjugated by Hadamards on the target) followed by the
/// local corrections undoing the complementation sequence and the reduction's
/// local substitutions. Single-qubit layers are compiled into pi/2 rotation
/// words; no attempt is made to minimize their length.
pub fn synthesize_circuit(row: &CommutingSet) -> Result<Circuit> {
    let n = row.n_qubits();
    let structure = factorization_structure(row)?;
    let mut gates: Vec<Gate> = Vec::new();
    let h_word = compile_local(&hadamard())?;

    for block in structure.blocks() {
        let k = block.len();
        let sub = row.restrict(block)?;
        let form = graph_form(&sub)?;

        if k == 1 {
            // Singleton block: the whole measurement is one local Clifford,
            // H from the graph preparation folded with the reduction's
            // substitutions. A Z-type operator compiles to nothing.
            let op = form.local_ops[0];
            let mut reduction = Matrix2::identity();
            if op.hadamard {
                reduction = hadamard() * reduction;
            }
            if op.phase {
                reduction = phase_gate() * reduction;
            }
            let local = reduction.adjoint() * hadamard();
            for axis in compile_local(&local)? {
                gates.push(Gate::Rotation {
                    axis,
                    target: block[0],
                });
            }
            continue;
        }

        let (target_graph, lc_path) = lc_orbit_min_representative(&form.graph)?;

        // Local corrections that turn the minimum-edge graph basis back into
        // the block basis: undo the complementation sequence, then undo the
        // reduction's per-qubit substitutions.
        let quarter = std::f64::consts::FRAC_PI_4;
        let cos = Complex64::new(quarter.cos(), 0.0);
        let isin = Complex64::new(0.0, quarter.sin());
        // exp(+i pi/4 X) and exp(-i pi/4 Z)
        let ex = Matrix2::new(cos, isin, isin, cos);
        let ez = Matrix2::new(cos - isin, Complex64::default(), Complex64::default(), cos + isin);
        let mut lc_correction: Vec<Matrix2<Complex64>> = vec![Matrix2::identity(); k];
        let mut cursor = form.graph.clone();
        for &v in &lc_path {
            let nb = cursor.neighbors(v);
            lc_correction[v] *= ex;
            for (u, corr) in lc_correction.iter_mut().enumerate() {
                if u != v && nb >> u & 1 == 1 {
                    *corr *= ez;
                }
            }
            cursor.local_complement(v);
        }

        // Graph-basis preparation on the block qubits.
        for &q in block {
            for &axis in &h_word {
                gates.push(Gate::Rotation { axis, target: q });
            }
        }
        for (i, j) in target_graph.edges() {
            let (qi, qj) = (block[i], block[j]);
            for &axis in &h_word {
                gates.push(Gate::Rotation { axis, target: qj });
            }
            gates.push(Gate::cnot(qi, qj));
            for &axis in &h_word {
                gates.push(Gate::Rotation { axis, target: qj });
            }
        }
        for (i, &q) in block.iter().enumerate() {
            let op = form.local_ops[i];
            let mut reduction = Matrix2::identity();
            if op.hadamard {
                reduction = hadamard() * reduction;
            }
            if op.phase {
                reduction = phase_gate() * reduction;
            }
            let local = reduction.adjoint() * lc_correction[i];
            for axis in compile_local(&local)? {
                gates.push(Gate::Rotation { axis, target: q });
            }
        }
    }
    Circuit::new(n, gates)
}

/// A list of circuits on a common register, as stored in the golden files.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitSet {
    pub n_qubits: usize,
    pub circuits: Vec<Vec<Gate>>,
}

impl CircuitSet {
    pub fn from_json(text: &str) -> Result<Self> {
        let set: CircuitSet = serde_json::from_str(text)?;
        for gates in &set.circuits {
            Circuit {
                n_qubits: set.n_qubits,
                gates: gates.clone(),
            }
            .validate()?;
        }
        Ok(set)
    }

    pub fn circuits(&self) -> Result<Vec<Circuit>> {
        self.circuits
            .iter()
            .map(|gates| Circuit::new(self.n_qubits, gates.clone()))
            .collect()
    }
}
