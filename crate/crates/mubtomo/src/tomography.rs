//! Tomography simulation: probability models, shot sampling under noise,
//! linear inversion, physical projection, and error metrics.
//!
//! Two measurement schemes are simulated. The MUB scheme measures the
//! 2^N + 1 joint eigenbases of a [`MubSet`]; the standard scheme measures
//! all 3^N factorized settings (one local letter from {X, Y, Z} per qubit).
//! Measurement of a basis is modeled by running the inverse of its
//! preparation circuit on the state, with a depolarizing channel after every
//! gate, classical readout flips on the outcome distribution, and an optional
//! multinomial shot sample. Linear inversion reconstructs the density matrix
//! from the (empirical) probabilities; the eigenvalue simplex projection maps
//! the raw estimate to the nearest physical state with the same eigenvectors.
//!
//! Gate fidelities map to depolarizing probabilities by matching the
//! channel's process (entanglement) fidelity to the quoted figure:
//! `p = (1 - phi) * 4^k / (4^k - 1)` on `k` qubits.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use crate::circuit::{synthesize_circuit, Circuit, Gate};
use crate::error::{Error, Result};
use crate::mub::{BasisVectors, MubSet};
use crate::pauli::{PauliString, Phase, ProjectivePauli};
use crate::tables::TableSelector;

pub const HERMITICITY_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-9;
pub const PHYSICAL_EIG_TOL: f64 = 1e-10;

/// Largest register simulated with dense density matrices.
pub const MAX_SIM_QUBITS: usize = 5;

/// Largest register for setting enumeration.
pub const MAX_COUNT_QUBITS: usize = 8;

/// A Hermitian unit-trace matrix. May fail the positivity check; see
/// [`DensityMatrix::is_physical`].
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    matrix: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn new(n_qubits: usize, matrix: DMatrix<Complex64>) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch {
                left: dim,
                right: matrix.nrows(),
            });
        }
        let hermiticity = max_abs(&(&matrix - matrix.adjoint()));
        if hermiticity > HERMITICITY_TOL {
            return Err(Error::InvalidArgument(format!(
                "matrix is not Hermitian (deviation {hermiticity:.3e})"
            )));
        }
        let trace: Complex64 = matrix.trace();
        if (trace - Complex64::new(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(Error::InvalidArgument(format!(
                "trace is {trace}, expected 1"
            )));
        }
        Ok(Self { n_qubits, matrix })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1usize << self.n_qubits
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        let scale = Complex64::new(1.0 / dim as f64, 0.0);
        Self {
            n_qubits,
            matrix: DMatrix::identity(dim, dim) * scale,
        }
    }

    pub fn from_pure(n_qubits: usize, state: &DVector<Complex64>) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if state.len() != dim {
            return Err(Error::DimensionMismatch {
                left: dim,
                right: state.len(),
            });
        }
        let norm = state.norm();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "state vector norm {norm} is not 1"
            )));
        }
        Ok(Self {
            n_qubits,
            matrix: state * state.adjoint(),
        })
    }

    /// `|0...0>` projector.
    pub fn computational_zero(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        let mut m = DMatrix::zeros(dim, dim);
        m[(0, 0)] = Complex64::new(1.0, 0.0);
        Self {
            n_qubits,
            matrix: m,
        }
    }

    /// `(|0...0> + |1...1>)/sqrt(2)` projector; all its anti-diagonal weight
    /// sits in the two corners.
    pub fn ghz(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        let mut v = DVector::zeros(dim);
        v[0] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        v[dim - 1] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self {
            n_qubits,
            matrix: &v * v.adjoint(),
        }
    }

    /// Haar-ish random pure state from a normalized complex-normal vector.
    pub fn random_pure(n_qubits: usize, rng: &mut impl Rng) -> Self {
        let dim = 1usize << n_qubits;
        let mut v = DVector::from_fn(dim, |_, _| complex_normal(rng));
        v /= Complex64::new(v.norm(), 0.0);
        Self {
            n_qubits,
            matrix: &v * v.adjoint(),
        }
    }

    /// Random full-rank mixed state `A A^dag / Tr(A A^dag)` with
    /// complex-normal `A`.
    pub fn random_mixed(n_qubits: usize, rng: &mut impl Rng) -> Self {
        let dim = 1usize << n_qubits;
        let a = DMatrix::from_fn(dim, dim, |_, _| complex_normal(rng));
        let mut m = &a * a.adjoint();
        let trace = m.trace().re;
        m /= Complex64::new(trace, 0.0);
        Self {
            n_qubits,
            matrix: m,
        }
    }

    /// Smallest eigenvalue (all eigenvalues are real for Hermitian input).
    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigen(&self.matrix)
            .0
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_physical(&self) -> bool {
        self.min_eigenvalue() >= -PHYSICAL_EIG_TOL
    }
}

fn complex_normal(rng: &mut impl Rng) -> Complex64 {
    // Box-Muller from the unit interval
    let draw = |rng: &mut dyn FnMut() -> f64| -> f64 {
        let u1: f64 = 1.0 - rng();
        let u2: f64 = rng();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    };
    let mut sample = || rng.random::<f64>();
    let re = draw(&mut sample);
    let im = draw(&mut sample);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Hermitian eigendecomposition: real eigenvalues and a unitary of column
/// eigenvectors.
fn hermitian_eigen(m: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let sym = nalgebra::linalg::SymmetricEigen::new(m.clone());
    (sym.eigenvalues.iter().copied().collect(), sym.eigenvectors)
}

/// Max entry-wise modulus of a complex matrix.
pub fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().fold(0.0f64, |acc, v| acc.max(v.norm()))
}

/// Row-major serialization of a complex matrix as `[re, im]` pairs.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DensityMatrixRepr {
    n_qubits: usize,
    entries: Vec<[f64; 2]>,
}

impl Serialize for DensityMatrix {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let dim = self.dim();
        let mut entries = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                let v = self.matrix[(r, c)];
                entries.push([v.re, v.im]);
            }
        }
        DensityMatrixRepr {
            n_qubits: self.n_qubits,
            entries,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = DensityMatrixRepr::deserialize(deserializer)?;
        if repr.n_qubits > MAX_SIM_QUBITS {
            return Err(serde::de::Error::custom(format!(
                "density matrix on {} qubits exceeds the {MAX_SIM_QUBITS}-qubit simulation guard",
                repr.n_qubits
            )));
        }
        let dim = 1usize << repr.n_qubits;
        if repr.entries.len() != dim * dim {
            return Err(serde::de::Error::custom(format!(
                "expected {} entries, got {}",
                dim * dim,
                repr.entries.len()
            )));
        }
        let m = DMatrix::from_fn(dim, dim, |r, c| {
            let [re, im] = repr.entries[r * dim + c];
            Complex64::new(re, im)
        });
        DensityMatrix::new(repr.n_qubits, m).map_err(serde::de::Error::custom)
    }
}

/// Outcome probabilities `p[basis][outcome]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityTable {
    pub values: Vec<Vec<f64>>,
}

impl ProbabilityTable {
    /// Max deviation of any row sum from 1.
    pub fn row_sum_deviation(&self) -> f64 {
        self.values
            .iter()
            .map(|row| (row.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Scalar gate fidelities and readout flip probability.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub phi_sg: f64,
    pub phi_cnot: f64,
    pub readout_eps: f64,
}

impl NoiseModel {
    pub const NOISELESS: NoiseModel = NoiseModel {
        phi_sg: 1.0,
        phi_cnot: 1.0,
        readout_eps: 0.0,
    };

    pub fn new(phi_sg: f64, phi_cnot: f64, readout_eps: f64) -> Result<Self> {
        if !(phi_sg > 0.0 && phi_sg <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "single-gate fidelity must lie in (0, 1], got {phi_sg}"
            )));
        }
        if !(phi_cnot > 0.0 && phi_cnot <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "CNOT fidelity must lie in (0, 1], got {phi_cnot}"
            )));
        }
        if !(0.0..=0.5).contains(&readout_eps) {
            return Err(Error::InvalidArgument(format!(
                "readout flip probability must lie in [0, 0.5], got {readout_eps}"
            )));
        }
        Ok(Self {
            phi_sg,
            phi_cnot,
            readout_eps,
        })
    }

    /// Depolarizing probability after each single-qubit rotation, chosen so
    /// the channel's process fidelity equals `phi_sg`.
    pub fn depolarizing_1q(&self) -> f64 {
        (1.0 - self.phi_sg) * 4.0 / 3.0
    }

    /// Depolarizing probability after each CNOT, matching `phi_cnot`.
    pub fn depolarizing_2q(&self) -> f64 {
        (1.0 - self.phi_cnot) * 16.0 / 15.0
    }

    pub fn is_noiseless_gates(&self) -> bool {
        self.phi_sg >= 1.0 && self.phi_cnot >= 1.0
    }
}

/// `p[alpha][n] = Tr(P_n^alpha rho)` over the joint eigenbases of the set.
pub fn mub_probabilities(rho: &DensityMatrix, set: &MubSet) -> Result<ProbabilityTable> {
    let bases = set.eigenbases()?;
    mub_probabilities_with(rho, &bases)
}

/// Same as [`mub_probabilities`] with precomputed eigenbases.
pub fn mub_probabilities_with(
    rho: &DensityMatrix,
    bases: &[BasisVectors],
) -> Result<ProbabilityTable> {
    let mut values = Vec::with_capacity(bases.len());
    for basis in bases {
        if basis.len() != rho.dim() {
            return Err(Error::DimensionMismatch {
                left: rho.dim(),
                right: basis.len(),
            });
        }
        let row: Vec<f64> = basis
            .vectors()
            .iter()
            .map(|v| (v.adjoint() * rho.matrix() * v)[(0, 0)].re)
            .collect();
        values.push(row);
    }
    Ok(ProbabilityTable { values })
}

/// Linear inversion: `rho = sum_alpha sum_n p[alpha][n] P_n^alpha - I`.
/// Hermitian and unit-trace whenever every row of `p` sums to 1; positivity
/// is not guaranteed.
pub fn reconstruct_mub(p: &ProbabilityTable, set: &MubSet) -> Result<DensityMatrix> {
    let bases = set.eigenbases()?;
    reconstruct_mub_with(p, &bases)
}

/// Same as [`reconstruct_mub`] with precomputed eigenbases.
pub fn reconstruct_mub_with(
    p: &ProbabilityTable,
    bases: &[BasisVectors],
) -> Result<DensityMatrix> {
    let n_qubits = bases
        .first()
        .map(BasisVectors::n_qubits)
        .ok_or_else(|| Error::InvalidArgument("no bases".into()))?;
    let dim = 1usize << n_qubits;
    if p.values.len() != bases.len() {
        return Err(Error::DimensionMismatch {
            left: bases.len(),
            right: p.values.len(),
        });
    }
    let mut m = DMatrix::<Complex64>::identity(dim, dim) * Complex64::new(-1.0, 0.0);
    for (row, basis) in p.values.iter().zip(bases) {
        if row.len() != dim {
            return Err(Error::DimensionMismatch {
                left: dim,
                right: row.len(),
            });
        }
        for (weight, v) in row.iter().zip(basis.vectors()) {
            let w = Complex64::new(*weight, 0.0);
            // m += w * v v^dag without allocating the outer product
            for r in 0..dim {
                let vr = v[r] * w;
                for c in 0..dim {
                    m[(r, c)] += vr * v[c].conj();
                }
            }
        }
    }
    // Exact-probability inputs give an exactly Hermitian, trace-1 result;
    // empirical frequencies keep both properties by construction.
    let sym = (&m + m.adjoint()).scale(0.5);
    DensityMatrix::new(n_qubits, sym)
}

/// Applies a 2x2 unitary on one qubit to a density matrix in place:
/// `rho <- (U_q) rho (U_q)^dag`.
fn apply_1q_to_density(
    rho: &mut DMatrix<Complex64>,
    n_qubits: usize,
    qubit: usize,
    m: &nalgebra::Matrix2<Complex64>,
) {
    let dim = rho.nrows();
    let bit = 1usize << (n_qubits - qubit);
    // rows
    for col in 0..dim {
        for base in 0..dim {
            if base & bit != 0 {
                continue;
            }
            let hi = base | bit;
            let a = rho[(base, col)];
            let b = rho[(hi, col)];
            rho[(base, col)] = m[(0, 0)] * a + m[(0, 1)] * b;
            rho[(hi, col)] = m[(1, 0)] * a + m[(1, 1)] * b;
        }
    }
    // columns (conjugate coefficients)
    for row in 0..dim {
        for base in 0..dim {
            if base & bit != 0 {
                continue;
            }
            let hi = base | bit;
            let a = rho[(row, base)];
            let b = rho[(row, hi)];
            rho[(row, base)] = a * m[(0, 0)].conj() + b * m[(0, 1)].conj();
            rho[(row, hi)] = a * m[(1, 0)].conj() + b * m[(1, 1)].conj();
        }
    }
}

fn apply_cnot_to_density(rho: &mut DMatrix<Complex64>, n_qubits: usize, control: usize, target: usize) {
    let dim = rho.nrows();
    let cbit = 1usize << (n_qubits - control);
    let tbit = 1usize << (n_qubits - target);
    for col in 0..dim {
        for base in 0..dim {
            if base & cbit != 0 && base & tbit == 0 {
                let hi = base | tbit;
                let tmp = rho[(base, col)];
                rho[(base, col)] = rho[(hi, col)];
                rho[(hi, col)] = tmp;
            }
        }
    }
    for row in 0..dim {
        for base in 0..dim {
            if base & cbit != 0 && base & tbit == 0 {
                let hi = base | tbit;
                let tmp = rho[(row, base)];
                rho[(row, base)] = rho[(row, hi)];
                rho[(row, hi)] = tmp;
            }
        }
    }
}

/// Depolarizing channel on a qubit subset: with probability `p`, the
/// marginal on those qubits is replaced by the maximally mixed state.
fn depolarize(rho: &mut DMatrix<Complex64>, n_qubits: usize, qubits: &[usize], p: f64) {
    if p <= 0.0 {
        return;
    }
    let dim = rho.nrows();
    let mask: usize = qubits
        .iter()
        .map(|&q| 1usize << (n_qubits - q))
        .fold(0, |m, b| m | b);
    let k = mask.count_ones() as usize;
    let scale = 1.0 / (1usize << k) as f64;
    // enumerate the sub-patterns of `mask`
    let mut patterns = Vec::with_capacity(1 << k);
    let mut s = 0usize;
    loop {
        patterns.push(s);
        if s == mask {
            break;
        }
        s = (s.wrapping_sub(mask)) & mask;
    }
    let mut mixed = DMatrix::<Complex64>::zeros(dim, dim);
    for r in 0..dim {
        for c in 0..dim {
            if r & mask != c & mask {
                continue;
            }
            let (rb, cb) = (r & !mask, c & !mask);
            let mut acc = Complex64::default();
            for &s in &patterns {
                acc += rho[(rb | s, cb | s)];
            }
            mixed[(r, c)] = acc * Complex64::new(scale, 0.0);
        }
    }
    let keep = Complex64::new(1.0 - p, 0.0);
    let mix = Complex64::new(p, 0.0);
    for r in 0..dim {
        for c in 0..dim {
            rho[(r, c)] = keep * rho[(r, c)] + mix * mixed[(r, c)];
        }
    }
}

/// Evolves `rho` through the inverse of `circuit` with a depolarizing channel
/// after every inverted gate, then returns the computational-basis outcome
/// distribution after per-qubit readout flips.
pub fn measurement_distribution(
    rho: &DensityMatrix,
    circuit: &Circuit,
    noise: &NoiseModel,
) -> Result<Vec<f64>> {
    let n = rho.n_qubits();
    if circuit.n_qubits != n {
        return Err(Error::DimensionMismatch {
            left: n,
            right: circuit.n_qubits,
        });
    }
    if n > MAX_SIM_QUBITS {
        return Err(Error::SizeGuard {
            what: "density-matrix simulation",
            n,
            max: MAX_SIM_QUBITS,
        });
    }
    let mut state = rho.matrix().clone();
    for gate in circuit.gates.iter().rev() {
        match *gate {
            Gate::Rotation { axis, target } => {
                let inv = axis.half_turn_matrix().adjoint();
                apply_1q_to_density(&mut state, n, target, &inv);
                depolarize(&mut state, n, &[target], noise.depolarizing_1q());
            }
            Gate::Cnot { control, target } => {
                apply_cnot_to_density(&mut state, n, control, target);
                depolarize(&mut state, n, &[control, target], noise.depolarizing_2q());
            }
        }
    }
    let dim = state.nrows();
    let mut probs: Vec<f64> = (0..dim).map(|i| state[(i, i)].re.max(0.0)).collect();
    apply_readout_flips(&mut probs, n, noise.readout_eps);
    let total: f64 = probs.iter().sum();
    if total > 0.0 {
        for p in &mut probs {
            *p /= total;
        }
    }
    Ok(probs)
}

/// Independent per-qubit classical bit flips on an outcome distribution.
fn apply_readout_flips(probs: &mut [f64], n_qubits: usize, eps: f64) {
    if eps <= 0.0 {
        return;
    }
    let dim = probs.len();
    for q in 1..=n_qubits {
        let bit = 1usize << (n_qubits - q);
        for base in 0..dim {
            if base & bit != 0 {
                continue;
            }
            let hi = base | bit;
            let a = probs[base];
            let b = probs[hi];
            probs[base] = (1.0 - eps) * a + eps * b;
            probs[hi] = eps * a + (1.0 - eps) * b;
        }
    }
}

/// Splits a per-basis random stream off a master seed; results are identical
/// regardless of basis evaluation order.
pub fn basis_rng(master_seed: u64, basis_index: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(splitmix64(
        master_seed ^ (basis_index.wrapping_add(1)).wrapping_mul(0x9E37_79B9_7F4A_7C15),
    ))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Multinomial frequencies from `shots` inverse-CDF draws.
fn multinomial_frequencies(probs: &[f64], shots: u64, rng: &mut ChaCha12Rng) -> Vec<f64> {
    let mut counts = vec![0u64; probs.len()];
    let cumulative: Vec<f64> = probs
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect();
    for _ in 0..shots {
        let u: f64 = rng.random();
        let idx = cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or(probs.len() - 1);
        counts[idx] += 1;
    }
    counts
        .iter()
        .map(|&c| c as f64 / shots as f64)
        .collect()
}

/// Maps circuit outcomes onto eigenbasis slots: outcome `x` of the circuit
/// corresponds to the eigenvector matching column `x` of its unitary.
fn outcome_permutation(circuit: &Circuit, basis: &BasisVectors) -> Result<Vec<usize>> {
    let u = circuit.unitary()?;
    let dim = u.nrows();
    if basis.len() != dim {
        return Err(Error::DimensionMismatch {
            left: dim,
            right: basis.len(),
        });
    }
    let mut perm = vec![usize::MAX; dim];
    let mut used = vec![false; dim];
    for x in 0..dim {
        let col = u.column(x);
        let mut hit = None;
        for (nv, v) in basis.vectors().iter().enumerate() {
            if used[nv] {
                continue;
            }
            let overlap: Complex64 = v.iter().zip(col.iter()).map(|(a, b)| a.conj() * b).sum();
            if (overlap.norm() - 1.0).abs() < 1e-8 {
                hit = Some(nv);
                break;
            }
        }
        let nv = hit.ok_or_else(|| {
            Error::InvalidCircuit(format!(
                "circuit column {x} matches no eigenvector; circuit does not measure this row"
            ))
        })?;
        used[nv] = true;
        perm[x] = nv;
    }
    Ok(perm)
}

/// Simulates MUB measurements with finite shots: for each row, the state is
/// run through the row circuit's inverse with gate noise, readout flips are
/// applied, and a multinomial sample of size `shots` is drawn from a
/// deterministic per-basis stream. Outcomes are indexed like
/// [`mub_probabilities`], so with noiseless gates the empirical table
/// converges to the exact one entry by entry.
pub fn sample_counts(
    rho: &DensityMatrix,
    set: &MubSet,
    circuits: &[Circuit],
    shots: u64,
    noise: &NoiseModel,
    seed: u64,
) -> Result<ProbabilityTable> {
    if shots == 0 {
        return Err(Error::InvalidArgument("shots must be at least 1".into()));
    }
    mub_measurement_table(rho, set, circuits, Some(shots), noise, seed)
}

/// Exact-probability mode: no sampling, but gate-noise channels and readout
/// flips still apply.
pub fn exact_counts(
    rho: &DensityMatrix,
    set: &MubSet,
    circuits: &[Circuit],
    noise: &NoiseModel,
) -> Result<ProbabilityTable> {
    mub_measurement_table(rho, set, circuits, None, noise, 0)
}

fn mub_measurement_table(
    rho: &DensityMatrix,
    set: &MubSet,
    circuits: &[Circuit],
    shots: Option<u64>,
    noise: &NoiseModel,
    seed: u64,
) -> Result<ProbabilityTable> {
    if circuits.len() != set.rows().len() {
        return Err(Error::DimensionMismatch {
            left: set.rows().len(),
            right: circuits.len(),
        });
    }
    let bases = set.eigenbases()?;
    let mut values = Vec::with_capacity(circuits.len());
    for (alpha, (circuit, basis)) in circuits.iter().zip(&bases).enumerate() {
        let perm = outcome_permutation(circuit, basis)?;
        let dist = measurement_distribution(rho, circuit, noise)?;
        let observed = match shots {
            Some(s) => {
                let mut rng = basis_rng(seed, alpha as u64);
                multinomial_frequencies(&dist, s, &mut rng)
            }
            None => dist,
        };
        let mut row = vec![0.0; observed.len()];
        for (x, &p) in observed.iter().enumerate() {
            row[perm[x]] = p;
        }
        values.push(row);
    }
    Ok(ProbabilityTable { values })
}

/// One local measurement setting of the standard scheme: a letter from
/// {X, Y, Z} per qubit and the 0-CNOT rotation circuit realizing it.
#[derive(Clone, Debug)]
pub struct MeasurementSetting {
    pub letters: Vec<char>,
    pub circuit: Circuit,
}

impl MeasurementSetting {
    /// True iff this setting measures `op`: on every qubit in the support,
    /// the setting letter equals the operator's letter.
    pub fn covers(&self, op: &ProjectivePauli) -> bool {
        let lifted = op.lift();
        (1..=op.n_qubits()).all(|q| match lifted.site(q) {
            (false, false) => true,
            (true, false) => self.letters[q - 1] == 'X',
            (true, true) => self.letters[q - 1] == 'Y',
            (false, true) => self.letters[q - 1] == 'Z',
        })
    }
}

fn letter_rotation(letter: char, target: usize) -> Option<Gate> {
    match letter {
        // Ry(pi/2) diagonalizes X, Rx(pi/2) diagonalizes Y, Z needs nothing.
        'X' => Some(Gate::ry(target)),
        'Y' => Some(Gate::rx(target)),
        _ => None,
    }
}

/// The +/-1 value of the measured letter operator associated with outcome
/// bit 0 under the letter's rotation circuit, read off the conjugated
/// diagonal so it stays correct under convention changes.
fn letter_orientation(letter: char) -> f64 {
    let sigma = match letter {
        'X' => PauliString::from_parts(1, 1, 0, Phase::PlusOne).unwrap(),
        'Y' => PauliString::from_parts(1, 1, 1, Phase::PlusOne).unwrap(),
        _ => PauliString::from_parts(1, 0, 1, Phase::PlusOne).unwrap(),
    };
    let gates = letter_rotation(letter, 1).into_iter().collect();
    let u = Circuit::new(1, gates).unwrap().unitary().unwrap();
    let d = u.adjoint() * sigma.to_matrix().unwrap() * u;
    d[(0, 0)].re.signum()
}

/// All 3^N factorized measurement settings, in lexicographic letter order
/// (X < Y < Z), each realized as a local-rotation circuit with zero CNOTs.
pub fn standard_bases(n_qubits: usize) -> Result<Vec<MeasurementSetting>> {
    if n_qubits == 0 || n_qubits > MAX_COUNT_QUBITS {
        return Err(Error::SizeGuard {
            what: "standard setting enumeration",
            n: n_qubits,
            max: MAX_COUNT_QUBITS,
        });
    }
    let letters = ['X', 'Y', 'Z'];
    let total = 3usize.pow(n_qubits as u32);
    let mut out = Vec::with_capacity(total);
    for idx in 0..total {
        let mut word = vec!['Z'; n_qubits];
        let mut rem = idx;
        for q in (0..n_qubits).rev() {
            word[q] = letters[rem % 3];
            rem /= 3;
        }
        let gates: Vec<Gate> = word
            .iter()
            .enumerate()
            .filter_map(|(q, &l)| letter_rotation(l, q + 1))
            .collect();
        out.push(MeasurementSetting {
            letters: word,
            circuit: Circuit::new(n_qubits, gates)?,
        });
    }
    Ok(out)
}

/// Measured outcome distributions for every standard setting, exact or
/// sampled.
pub fn standard_distributions(
    rho: &DensityMatrix,
    settings: &[MeasurementSetting],
    shots: Option<u64>,
    noise: &NoiseModel,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::with_capacity(settings.len());
    for (idx, setting) in settings.iter().enumerate() {
        let dist = measurement_distribution(rho, &setting.circuit, noise)?;
        let observed = match shots {
            Some(s) => {
                let mut rng = basis_rng(seed, idx as u64);
                multinomial_frequencies(&dist, s, &mut rng)
            }
            None => dist,
        };
        out.push(observed);
    }
    Ok(out)
}

/// Pauli expectation estimates from standard-setting distributions, each
/// operator averaged over every setting that covers it (the standard
/// scheme's redundant measurements).
pub fn standard_expectations(
    n_qubits: usize,
    settings: &[MeasurementSetting],
    distributions: &[Vec<f64>],
) -> Result<HashMap<ProjectivePauli, f64>> {
    if settings.len() != distributions.len() {
        return Err(Error::DimensionMismatch {
            left: settings.len(),
            right: distributions.len(),
        });
    }
    let dim = 1usize << n_qubits;
    let orientations: HashMap<char, f64> = ['X', 'Y', 'Z']
        .into_iter()
        .map(|l| (l, letter_orientation(l)))
        .collect();
    let mut out = HashMap::new();
    for x_bits in 0..dim as u64 {
        for z_bits in 0..dim as u64 {
            if (x_bits, z_bits) == (0, 0) {
                continue;
            }
            let op = ProjectivePauli::from_parts(n_qubits, x_bits, z_bits)?;
            let lifted = op.lift();
            let support_mask = (x_bits | z_bits) as usize;
            let mut orientation = 1.0;
            for q in 1..=n_qubits {
                let letter = match lifted.site(q) {
                    (false, false) => continue,
                    (true, false) => 'X',
                    (true, true) => 'Y',
                    (false, true) => 'Z',
                };
                orientation *= orientations[&letter];
            }
            let mut estimates = Vec::new();
            for (setting, dist) in settings.iter().zip(distributions) {
                if !setting.covers(&op) {
                    continue;
                }
                let raw: f64 = dist
                    .iter()
                    .enumerate()
                    .map(|(x, &p)| {
                        let parity = (x & support_mask).count_ones() % 2;
                        if parity == 0 {
                            p
                        } else {
                            -p
                        }
                    })
                    .sum();
                estimates.push(orientation * raw);
            }
            if estimates.is_empty() {
                return Err(Error::Internal(format!("no setting covers {op}")));
            }
            out.insert(op, estimates.iter().sum::<f64>() / estimates.len() as f64);
        }
    }
    Ok(out)
}

/// Pauli-basis inversion: `rho = 2^-N (I + sum_P <P> P)` over every
/// nonidentity projective Pauli.
pub fn reconstruct_standard(
    n_qubits: usize,
    expectations: &HashMap<ProjectivePauli, f64>,
) -> Result<DensityMatrix> {
    let dim = 1usize << n_qubits;
    let mut m = DMatrix::<Complex64>::identity(dim, dim);
    for x_bits in 0..dim as u64 {
        for z_bits in 0..dim as u64 {
            if (x_bits, z_bits) == (0, 0) {
                continue;
            }
            let op = ProjectivePauli::from_parts(n_qubits, x_bits, z_bits)?;
            let value = *expectations.get(&op).ok_or_else(|| {
                Error::InvalidArgument(format!("missing expectation for {op}"))
            })?;
            let pauli = op.lift().to_matrix()?;
            m += pauli * Complex64::new(value, 0.0);
        }
    }
    m /= Complex64::new(dim as f64, 0.0);
    let sym = (&m + m.adjoint()).scale(0.5);
    DensityMatrix::new(n_qubits, sym)
}

/// Exact Pauli expectations `Tr(P rho)` of a known state.
pub fn exact_expectations(rho: &DensityMatrix) -> Result<HashMap<ProjectivePauli, f64>> {
    let n = rho.n_qubits();
    let dim = rho.dim();
    let mut out = HashMap::new();
    for x_bits in 0..dim as u64 {
        for z_bits in 0..dim as u64 {
            if (x_bits, z_bits) == (0, 0) {
                continue;
            }
            let op = ProjectivePauli::from_parts(n, x_bits, z_bits)?;
            let value = (op.lift().to_matrix()? * rho.matrix()).trace().re;
            out.insert(op, value);
        }
    }
    Ok(out)
}

/// Euclidean projection of a probability-like vector onto the simplex:
/// sort, waterfill, zero out what falls below the waterline.
fn simplex_project(values: &[f64]) -> Vec<f64> {
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut tau = 0.0;
    for (k, &v) in sorted.iter().enumerate() {
        cumulative += v;
        let candidate = (cumulative - 1.0) / (k + 1) as f64;
        if v - candidate > 0.0 {
            tau = candidate;
        }
    }
    values.iter().map(|&v| (v - tau).max(0.0)).collect()
}

/// Projects a Hermitian trace-1 estimate to the closest (Frobenius)
/// positive-semidefinite trace-1 matrix, which shares its eigenvectors: the
/// eigenvalues are simplex-projected (negatives zeroed, the deficit
/// redistributed over the remaining support).
pub fn project_physical(rho: &DensityMatrix) -> Result<DensityMatrix> {
    let (eigenvalues, vectors) = hermitian_eigen(rho.matrix());
    let projected = simplex_project(&eigenvalues);
    let dim = rho.dim();
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    for (k, &w) in projected.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let v = vectors.column(k);
        let scale = Complex64::new(w, 0.0);
        for r in 0..dim {
            let vr = v[r] * scale;
            for c in 0..dim {
                m[(r, c)] += vr * v[c].conj();
            }
        }
    }
    let sym = (&m + m.adjoint()).scale(0.5);
    DensityMatrix::new(rho.n_qubits(), sym)
}

/// Comparison metrics between a reference state and an estimate.
#[derive(Copy, Clone, Debug, Serialize)]
pub struct ErrorMetrics {
    /// Uhlmann fidelity in the square-root convention,
    /// `Tr sqrt(sqrt(rho) sigma sqrt(rho))`: 1 for identical states, 0 for
    /// orthogonal pure states.
    pub fidelity: f64,
    /// Half the trace norm of the difference.
    pub trace_distance: f64,
    /// Max entry-wise deviation.
    pub max_element_error: f64,
    /// RMS of the deviation over the anti-diagonal (entries `(i, dim-1-i)`).
    pub antidiagonal_rms: f64,
}

pub fn error_metrics(rho_true: &DensityMatrix, rho_est: &DensityMatrix) -> Result<ErrorMetrics> {
    if rho_true.n_qubits() != rho_est.n_qubits() {
        return Err(Error::DimensionMismatch {
            left: rho_true.n_qubits(),
            right: rho_est.n_qubits(),
        });
    }
    let dim = rho_true.dim();
    let (w, v) = hermitian_eigen(rho_true.matrix());
    let mut sqrt_rho = DMatrix::<Complex64>::zeros(dim, dim);
    for (k, &lam) in w.iter().enumerate() {
        let s = Complex64::new(lam.max(0.0).sqrt(), 0.0);
        if s.re == 0.0 {
            continue;
        }
        let col = v.column(k);
        for r in 0..dim {
            let vr = col[r] * s;
            for c in 0..dim {
                sqrt_rho[(r, c)] += vr * col[c].conj();
            }
        }
    }
    let inner = &sqrt_rho * rho_est.matrix() * &sqrt_rho;
    let inner = (&inner + inner.adjoint()).scale(0.5);
    let (wi, _) = hermitian_eigen(&inner);
    let fidelity: f64 = wi.iter().map(|&l| l.max(0.0).sqrt()).sum();

    let diff = rho_true.matrix() - rho_est.matrix();
    let (wd, _) = hermitian_eigen(&diff);
    let trace_distance = 0.5 * wd.iter().map(|l| l.abs()).sum::<f64>();

    let max_element_error = max_abs(&diff);
    let anti: f64 = (0..dim)
        .map(|i| diff[(i, dim - 1 - i)].norm_sqr())
        .sum::<f64>()
        / dim as f64;
    Ok(ErrorMetrics {
        fidelity,
        trace_distance,
        max_element_error,
        antidiagonal_rms: anti.sqrt(),
    })
}

/// The reference accumulated-error estimate for anti-diagonal elements under
/// the standard scheme with per-population error `eps`:
/// `eps * sqrt(2^(N-1) + 2^(N-2) (2^N - 1))`.
pub fn predicted_antidiagonal_error(n_qubits: usize, eps: f64) -> Result<f64> {
    if n_qubits < 2 {
        return Err(Error::Unsupported {
            what: "anti-diagonal error estimate",
            n: n_qubits,
        });
    }
    if eps < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "readout error must be nonnegative, got {eps}"
        )));
    }
    let n = n_qubits as i32;
    Ok(eps * (2f64.powi(n - 1) + 2f64.powi(n - 2) * (2f64.powi(n) - 1.0)).sqrt())
}

/// Number of measurement bases per scheme: `(3^N, 2^N + 1)`.
pub fn measurement_budget(n_qubits: usize) -> Result<(u64, u64)> {
    if n_qubits == 0 || n_qubits > 32 {
        return Err(Error::Unsupported {
            what: "measurement budget",
            n: n_qubits,
        });
    }
    Ok((
        3u64.pow(n_qubits as u32),
        (1u64 << n_qubits) + 1,
    ))
}

/// Which tomography scheme to simulate.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Mub,
    Standard,
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Scheme::Mub => write!(f, "mub"),
            Scheme::Standard => write!(f, "standard"),
        }
    }
}

/// Input state selector for experiment specs.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StateSpec {
    /// Haar-ish random pure state drawn from the experiment seed.
    RandomPure,
    /// Random full-rank mixed state drawn from the experiment seed.
    RandomMixed,
    /// `(|0..0> + |1..1>)/sqrt(2)`.
    Ghz,
    /// `|0...0>`.
    Zero,
    /// Explicit density matrix, row-major `[re, im]` pairs.
    Matrix { rho: DensityMatrix },
}

impl StateSpec {
    pub fn realize(&self, n_qubits: usize, seed: u64) -> Result<DensityMatrix> {
        match self {
            StateSpec::RandomPure => {
                let mut rng = ChaCha12Rng::seed_from_u64(splitmix64(seed));
                Ok(DensityMatrix::random_pure(n_qubits, &mut rng))
            }
            StateSpec::RandomMixed => {
                let mut rng = ChaCha12Rng::seed_from_u64(splitmix64(seed));
                Ok(DensityMatrix::random_mixed(n_qubits, &mut rng))
            }
            StateSpec::Ghz => Ok(DensityMatrix::ghz(n_qubits)),
            StateSpec::Zero => Ok(DensityMatrix::computational_zero(n_qubits)),
            StateSpec::Matrix { rho } => {
                if rho.n_qubits() != n_qubits {
                    return Err(Error::DimensionMismatch {
                        left: n_qubits,
                        right: rho.n_qubits(),
                    });
                }
                if !rho.is_physical() {
                    return Err(Error::InvalidArgument(
                        "input state must be positive semidefinite".into(),
                    ));
                }
                Ok(rho.clone())
            }
        }
    }
}

/// Shot budget: a number per basis, or exact probabilities.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum ShotsSpec {
    Exact,
    PerBasis(u64),
}

impl Serialize for ShotsSpec {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ShotsSpec::Exact => serializer.serialize_str("exact"),
            ShotsSpec::PerBasis(n) => serializer.serialize_u64(*n),
        }
    }
}

impl<'de> Deserialize<'de> for ShotsSpec {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Count(u64),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Count(0) => Err(serde::de::Error::custom("shots must be at least 1")),
            Raw::Count(n) => Ok(ShotsSpec::PerBasis(n)),
            Raw::Text(s) if s == "exact" => Ok(ShotsSpec::Exact),
            Raw::Text(s) => Err(serde::de::Error::custom(format!(
                "shots must be a count or \"exact\", got {s:?}"
            ))),
        }
    }

}

fn default_noise() -> NoiseParams {
    NoiseParams {
        phi_sg: 1.0,
        phi_cnot: 1.0,
        readout_eps: 0.0,
    }
}

/// Noise parameters as they appear in spec files.
#[derive(Copy, Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseParams {
    pub phi_sg: f64,
    pub phi_cnot: f64,
    pub readout_eps: f64,
}

impl NoiseParams {
    pub fn build(&self) -> Result<NoiseModel> {
        NoiseModel::new(self.phi_sg, self.phi_cnot, self.readout_eps)
    }
}

/// Full description of one tomography run.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub n_qubits: usize,
    pub scheme: Scheme,
    /// Table selector for the MUB scheme: "standard" or "optimal". Ignored
    /// by the standard scheme.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<String>,
    pub state: StateSpec,
    pub shots: ShotsSpec,
    #[serde(default = "default_noise")]
    pub noise: NoiseParams,
    pub seed: u64,
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn table_selector(&self) -> Result<TableSelector> {
        match self.table.as_deref() {
            None | Some("optimal") => Ok(TableSelector::Optimal),
            Some("standard") => Ok(TableSelector::Standard),
            Some(other) => Err(Error::InvalidArgument(format!(
                "unknown table selector {other:?}"
            ))),
        }
    }
}

/// Noise mapping written into results, for audit.
#[derive(Copy, Clone, Debug, Serialize)]
pub struct NoiseReport {
    pub phi_sg: f64,
    pub phi_cnot: f64,
    pub readout_eps: f64,
    /// Depolarizing probability applied after each single-qubit rotation.
    pub depolarizing_1q: f64,
    /// Depolarizing probability applied after each CNOT.
    pub depolarizing_2q: f64,
}

impl From<&NoiseModel> for NoiseReport {
    fn from(noise: &NoiseModel) -> Self {
        NoiseReport {
            phi_sg: noise.phi_sg,
            phi_cnot: noise.phi_cnot,
            readout_eps: noise.readout_eps,
            depolarizing_1q: noise.depolarizing_1q(),
            depolarizing_2q: noise.depolarizing_2q(),
        }
    }
}

/// Everything produced by one tomography run.
#[derive(Clone, Debug, Serialize)]
pub struct TomographyResult {
    pub scheme: Scheme,
    pub n_qubits: usize,
    pub n_bases: usize,
    /// None in exact-probability mode.
    pub shots_per_basis: Option<u64>,
    pub seed: u64,
    pub noise: NoiseReport,
    /// Empirical (or exact) probabilities per measured basis, for audit.
    pub probabilities: ProbabilityTable,
    /// Raw linear-inversion estimate; possibly unphysical.
    pub rho_linear: DensityMatrix,
    /// Simplex-projected physical estimate.
    pub rho_physical: DensityMatrix,
    pub metrics: ErrorMetrics,
    /// Metrics of the raw estimate, before projection.
    pub metrics_linear: ErrorMetrics,
    /// Reference prediction for the standard scheme's anti-diagonal error at
    /// the configured readout eps.
    pub predicted_antidiagonal_error: Option<f64>,
    /// Measurement budgets (standard, mub) for this register size.
    pub budget: (u64, u64),
}

/// Runs one experiment end to end: simulate measurements, invert, project,
/// and score against the true state. Deterministic given the spec.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<TomographyResult> {
    if spec.n_qubits < 2 || spec.n_qubits > MAX_SIM_QUBITS {
        return Err(Error::SizeGuard {
            what: "tomography simulation",
            n: spec.n_qubits,
            max: MAX_SIM_QUBITS,
        });
    }
    let noise = spec.noise.build()?;
    let rho = spec.state.realize(spec.n_qubits, spec.seed)?;
    let shots = match spec.shots {
        ShotsSpec::Exact => None,
        ShotsSpec::PerBasis(s) => Some(s),
    };

    let (probabilities, rho_linear, n_bases) = match spec.scheme {
        Scheme::Mub => {
            let set = spec.table_selector()?.build(spec.n_qubits)?;
            let circuits: Vec<Circuit> = set
                .rows()
                .iter()
                .map(synthesize_circuit)
                .collect::<Result<_>>()?;
            let table = mub_measurement_table(&rho, &set, &circuits, shots, &noise, spec.seed)?;
            let estimate = reconstruct_mub(&table, &set)?;
            let n_bases = set.rows().len();
            (table, estimate, n_bases)
        }
        Scheme::Standard => {
            let settings = standard_bases(spec.n_qubits)?;
            let distributions =
                standard_distributions(&rho, &settings, shots, &noise, spec.seed)?;
            let expectations =
                standard_expectations(spec.n_qubits, &settings, &distributions)?;
            let estimate = reconstruct_standard(spec.n_qubits, &expectations)?;
            let n_bases = settings.len();
            (
                ProbabilityTable {
                    values: distributions,
                },
                estimate,
                n_bases,
            )
        }
    };

    let rho_physical = project_physical(&rho_linear)?;
    let metrics = error_metrics(&rho, &rho_physical)?;
    let metrics_linear = error_metrics(&rho, &rho_linear)?;
    let predicted = if noise.readout_eps > 0.0 {
        Some(predicted_antidiagonal_error(spec.n_qubits, noise.readout_eps)?)
    } else {
        None
    };
    Ok(TomographyResult {
        scheme: spec.scheme,
        n_qubits: spec.n_qubits,
        n_bases,
        shots_per_basis: shots,
        seed: spec.seed,
        noise: NoiseReport::from(&noise),
        probabilities,
        rho_linear,
        rho_physical,
        metrics,
        metrics_linear,
        predicted_antidiagonal_error: predicted,
        budget: {
            let (standard, mub) = measurement_budget(spec.n_qubits)?;
            (standard, mub)
        },
    })
}

impl TomographyResult {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tables::{optimal_table, standard_table};

    fn seeded_rng(seed: u64) -> ChaCha12Rng {
        ChaCha12Rng::seed_from_u64(seed)
    }

    #[test]
    fn maximally_mixed_probabilities_are_uniform() {
        let set = standard_table(2).unwrap();
        let rho = DensityMatrix::maximally_mixed(2);
        let p = mub_probabilities(&rho, &set).unwrap();
        for row in &p.values {
            for &v in row {
                assert!((v - 0.25).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn eigenstate_is_certain_in_its_row_and_uniform_elsewhere() {
        let set = standard_table(2).unwrap();
        let bases = set.eigenbases().unwrap();
        let rho = DensityMatrix::from_pure(2, &bases[3].vectors()[1].clone()).unwrap();
        let p = mub_probabilities(&rho, &set).unwrap();
        for (alpha, row) in p.values.iter().enumerate() {
            if alpha == 3 {
                assert!((row[1] - 1.0).abs() < 1e-10);
            } else {
                for &v in row {
                    assert!((v - 0.25).abs() < 1e-10, "row {alpha}: {row:?}");
                }
            }
        }
    }

    #[test]
    fn exact_roundtrip_reconstruction() {
        let set = standard_table(3).unwrap();
        let mut rng = seeded_rng(11);
        for _ in 0..5 {
            let rho = DensityMatrix::random_mixed(3, &mut rng);
            let p = mub_probabilities(&rho, &set).unwrap();
            assert!(p.row_sum_deviation() < 1e-12);
            let back = reconstruct_mub(&p, &set).unwrap();
            let diff = max_abs(&(back.matrix() - rho.matrix()));
            assert!(diff < 1e-12, "roundtrip error {diff:.3e}");
        }
    }

    #[test]
    fn uniform_probabilities_reconstruct_maximally_mixed() {
        let set = standard_table(2).unwrap();
        let p = ProbabilityTable {
            values: vec![vec![0.25; 4]; 5],
        };
        let rho = reconstruct_mub(&p, &set).unwrap();
        let expected = DensityMatrix::maximally_mixed(2);
        assert!(max_abs(&(rho.matrix() - expected.matrix())) < 1e-12);
    }

    #[test]
    fn standard_roundtrip_from_exact_expectations() {
        let mut rng = seeded_rng(5);
        let rho = DensityMatrix::random_mixed(2, &mut rng);
        let exp = exact_expectations(&rho).unwrap();
        let back = reconstruct_standard(2, &exp).unwrap();
        assert!(max_abs(&(back.matrix() - rho.matrix())) < 1e-12);
    }

    #[test]
    fn standard_bases_counts_and_locality() {
        assert_eq!(standard_bases(1).unwrap().len(), 3);
        assert_eq!(standard_bases(8).unwrap().len(), 6561);
        for setting in standard_bases(3).unwrap() {
            assert_eq!(setting.circuit.cnot_count(), 0);
        }
        assert!(standard_bases(9).is_err());
    }

    #[test]
    fn standard_estimation_matches_exact_expectations() {
        // noiseless exact-mode standard measurement reproduces Tr(P rho)
        let mut rng = seeded_rng(17);
        let rho = DensityMatrix::random_pure(2, &mut rng);
        let settings = standard_bases(2).unwrap();
        let dists =
            standard_distributions(&rho, &settings, None, &NoiseModel::NOISELESS, 0).unwrap();
        let est = standard_expectations(2, &settings, &dists).unwrap();
        let exact = exact_expectations(&rho).unwrap();
        for (op, v) in &exact {
            assert!((est[op] - v).abs() < 1e-10, "{op}: {} vs {v}", est[op]);
        }
    }

    #[test]
    fn sampling_is_deterministic_and_convergent() {
        let set = optimal_table(3).unwrap();
        let circuits: Vec<Circuit> = set
            .rows()
            .iter()
            .map(|r| synthesize_circuit(r).unwrap())
            .collect();
        let mut rng = seeded_rng(23);
        let rho = DensityMatrix::random_pure(3, &mut rng);

        let a = sample_counts(&rho, &set, &circuits, 2000, &NoiseModel::NOISELESS, 7).unwrap();
        let b = sample_counts(&rho, &set, &circuits, 2000, &NoiseModel::NOISELESS, 7).unwrap();
        assert_eq!(a, b);

        let exact = mub_probabilities(&rho, &set).unwrap();
        let big = sample_counts(&rho, &set, &circuits, 100_000, &NoiseModel::NOISELESS, 7).unwrap();
        let mut worst = 0.0f64;
        for (ra, rb) in big.values.iter().zip(&exact.values) {
            for (&x, &y) in ra.iter().zip(rb) {
                worst = worst.max((x - y).abs());
            }
        }
        assert!(worst < 0.01, "max |empirical - exact| = {worst}");
    }

    #[test]
    fn full_depolarizing_gives_uniform_outcomes() {
        // phi at the CP boundary wipes out the state on every gate
        let set = standard_table(2).unwrap();
        let circuits: Vec<Circuit> = set
            .rows()
            .iter()
            .map(|r| synthesize_circuit(r).unwrap())
            .collect();
        let rho = DensityMatrix::computational_zero(2);
        let noise = NoiseModel::new(1.0 / 4.0, 1.0 / 16.0, 0.0).unwrap();
        let table = exact_counts(&rho, &set, &circuits, &noise).unwrap();
        for (row, circuit) in table.values.iter().zip(&circuits) {
            if circuit.gates.is_empty() {
                continue; // no gate, no noise event
            }
            for &v in row {
                assert!((v - 0.25).abs() < 1e-10, "{row:?}");
            }
        }
    }

    #[test]
    fn readout_flips_mix_the_distribution() {
        let mut probs = vec![1.0, 0.0, 0.0, 0.0];
        apply_readout_flips(&mut probs, 2, 0.1);
        assert!((probs[0] - 0.81).abs() < 1e-12);
        assert!((probs[1] - 0.09).abs() < 1e-12);
        assert!((probs[2] - 0.09).abs() < 1e-12);
        assert!((probs[3] - 0.01).abs() < 1e-12);
    }

    #[test]
    fn projection_matches_hand_simplex_cases() {
        // diag(1.2, -0.2) -> diag(1.0, 0.0)
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![
            Complex64::new(1.2, 0.0),
            Complex64::new(-0.2, 0.0),
        ]));
        let rho = DensityMatrix::new(1, m).unwrap();
        let proj = project_physical(&rho).unwrap();
        assert!((proj.matrix()[(0, 0)].re - 1.0).abs() < 1e-12);
        assert!(proj.matrix()[(1, 1)].norm() < 1e-12);

        // already physical stays put; projection is idempotent
        let mut rng = seeded_rng(3);
        let rho = DensityMatrix::random_mixed(2, &mut rng);
        let proj = project_physical(&rho).unwrap();
        assert!(max_abs(&(proj.matrix() - rho.matrix())) < 1e-10);
        let twice = project_physical(&proj).unwrap();
        assert!(max_abs(&(twice.matrix() - proj.matrix())) < 1e-10);
    }

    #[test]
    fn projection_never_moves_away_from_physical_states() {
        let mut rng = seeded_rng(41);
        let set = standard_table(2).unwrap();
        let circuits: Vec<Circuit> = set
            .rows()
            .iter()
            .map(|r| synthesize_circuit(r).unwrap())
            .collect();
        for _ in 0..10 {
            // noisy unphysical estimate
            let rho = DensityMatrix::random_pure(2, &mut rng);
            let p = sample_counts(&rho, &set, &circuits, 50, &NoiseModel::NOISELESS, rng.random())
                .unwrap();
            let est = reconstruct_mub(&p, &set).unwrap();
            let proj = project_physical(&est).unwrap();
            for _ in 0..100 {
                let reference = DensityMatrix::random_mixed(2, &mut rng);
                let before = (est.matrix() - reference.matrix()).norm();
                let after = (proj.matrix() - reference.matrix()).norm();
                assert!(after <= before + 1e-12);
            }
        }
    }

    #[test]
    fn metrics_on_known_pairs() {
        let zero = DensityMatrix::computational_zero(1);
        let m = error_metrics(&zero, &zero).unwrap();
        assert!((m.fidelity - 1.0).abs() < 1e-12);
        assert!(m.trace_distance < 1e-12);

        let mut one = DMatrix::<Complex64>::zeros(2, 2);
        one[(1, 1)] = Complex64::new(1.0, 0.0);
        let one = DensityMatrix::new(1, one).unwrap();
        let m = error_metrics(&zero, &one).unwrap();
        assert!(m.fidelity.abs() < 1e-10);
        assert!((m.trace_distance - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fidelity_is_symmetric_for_physical_pairs() {
        let mut rng = seeded_rng(29);
        for _ in 0..10 {
            let a = DensityMatrix::random_mixed(2, &mut rng);
            let b = DensityMatrix::random_mixed(2, &mut rng);
            let ab = error_metrics(&a, &b).unwrap().fidelity;
            let ba = error_metrics(&b, &a).unwrap().fidelity;
            assert!((ab - ba).abs() < 1e-9, "{ab} vs {ba}");
        }
    }

    #[test]
    fn predicted_antidiagonal_error_values() {
        assert_eq!(predicted_antidiagonal_error(3, 0.0).unwrap(), 0.0);
        let v = predicted_antidiagonal_error(3, 0.01).unwrap();
        assert!((v - 0.01 * 18f64.sqrt()).abs() < 1e-15);
        let v8 = predicted_antidiagonal_error(8, 1.0).unwrap();
        assert!((v8 - (128f64 + 64.0 * 255.0).sqrt()).abs() < 1e-12);
        assert!(predicted_antidiagonal_error(1, 0.1).is_err());
    }

    #[test]
    fn budgets() {
        assert_eq!(measurement_budget(8).unwrap(), (6561, 257));
        assert_eq!(measurement_budget(2).unwrap(), (9, 5));
        assert_eq!(measurement_budget(3).unwrap(), (27, 9));
    }

    #[test]
    fn experiment_is_deterministic() {
        let spec = ExperimentSpec {
            n_qubits: 2,
            scheme: Scheme::Mub,
            table: Some("standard".into()),
            state: StateSpec::RandomPure,
            shots: ShotsSpec::PerBasis(500),
            noise: default_noise(),
            seed: 99,
        };
        let a = run_experiment(&spec).unwrap();
        let b = run_experiment(&spec).unwrap();
        assert_eq!(a.probabilities, b.probabilities);
        assert_eq!(a.rho_physical.matrix(), b.rho_physical.matrix());
        assert!(a.rho_physical.is_physical());
    }

    #[test]
    fn exact_mode_reaches_unit_fidelity() {
        for scheme in [Scheme::Mub, Scheme::Standard] {
            let spec = ExperimentSpec {
                n_qubits: 2,
                scheme,
                table: Some("optimal".into()),
                state: StateSpec::RandomMixed,
                shots: ShotsSpec::Exact,
                noise: default_noise(),
                seed: 7,
            };
            let spec = if scheme == Scheme::Mub {
                ExperimentSpec {
                    table: Some("standard".into()),
                    ..spec
                }
            } else {
                spec
            };
            let out = run_experiment(&spec).unwrap();
            assert!(
                (out.metrics.fidelity - 1.0).abs() < 1e-10,
                "{scheme}: {}",
                out.metrics.fidelity
            );
        }
    }

    #[test]
    fn spec_json_shapes() {
        let text = r#"{
            "n_qubits": 3,
            "scheme": "mub",
            "table": "optimal",
            "state": { "kind": "random-pure" },
            "shots": "exact",
            "seed": 1
        }"#;
        let spec = ExperimentSpec::from_json(text).unwrap();
        assert_eq!(spec.shots, ShotsSpec::Exact);
        assert_eq!(spec.noise.phi_sg, 1.0);

        let text = r#"{
            "n_qubits": 2,
            "scheme": "standard",
            "state": { "kind": "ghz" },
            "shots": 250,
            "noise": { "phi_sg": 0.99, "phi_cnot": 0.92, "readout_eps": 0.01 },
            "seed": 4
        }"#;
        let spec = ExperimentSpec::from_json(text).unwrap();
        assert_eq!(spec.shots, ShotsSpec::PerBasis(250));
        assert!(ExperimentSpec::from_json(r#"{"n_qubits":2}"#).is_err());
    }
}
