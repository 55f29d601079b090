//! N-qubit Pauli strings in binary symplectic form.
//!
//! A Pauli operator is stored as two bit vectors plus a fourth-root-of-unity
//! phase: `P = phase * s_1 (x) s_2 (x) ... (x) s_N` where site `q` carries
//! `s_q ∈ {1, X, Z, Y}` according to the bit pair `(x_q, z_q)` and
//! `Y = i * X * Z`. Qubit 1 is the leftmost tensor factor and the leftmost
//! character of the text form, so `"XZ1Y"` puts `X` on qubit 1.
//!
//! With the `Y = i*X*Z` convention, commutation is the binary symplectic form
//! `sum_q (x_q * z'_q + z_q * x'_q) mod 2`, and operator products track their
//! phase exactly.

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Largest register the bit-packed representation supports.
pub const MAX_QUBITS: usize = 64;

/// Largest register for which dense matrices are built.
pub const MAX_DENSE_QUBITS: usize = 12;

/// A fourth root of unity, stored as the exponent of `i`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Default)]
pub enum Phase {
    #[default]
    PlusOne,
    PlusI,
    MinusOne,
    MinusI,
}

impl Phase {
    pub fn from_exponent(exp: u8) -> Self {
        match exp % 4 {
            0 => Phase::PlusOne,
            1 => Phase::PlusI,
            2 => Phase::MinusOne,
            _ => Phase::MinusI,
        }
    }

    /// Exponent `k` such that the phase equals `i^k`.
    pub fn exponent(self) -> u8 {
        match self {
            Phase::PlusOne => 0,
            Phase::PlusI => 1,
            Phase::MinusOne => 2,
            Phase::MinusI => 3,
        }
    }

    pub fn value(self) -> Complex64 {
        match self {
            Phase::PlusOne => Complex64::new(1.0, 0.0),
            Phase::PlusI => Complex64::new(0.0, 1.0),
            Phase::MinusOne => Complex64::new(-1.0, 0.0),
            Phase::MinusI => Complex64::new(0.0, -1.0),
        }
    }

    pub fn times(self, other: Phase) -> Phase {
        Phase::from_exponent(self.exponent() + other.exponent())
    }

    pub fn negated(self) -> Phase {
        Phase::from_exponent(self.exponent() + 2)
    }

    pub fn is_real(self) -> bool {
        matches!(self, Phase::PlusOne | Phase::MinusOne)
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Phase::PlusOne => write!(f, "+"),
            Phase::PlusI => write!(f, "+i"),
            Phase::MinusOne => write!(f, "-"),
            Phase::MinusI => write!(f, "-i"),
        }
    }
}

/// An N-qubit Pauli string with phase.
///
/// Bit `n_qubits - q` of `x_bits`/`z_bits` holds the X/Z component on qubit
/// `q` (1-based), so `x_bits` read as a binary number has qubit 1 as its most
/// significant bit.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    n_qubits: usize,
    x_bits: u64,
    z_bits: u64,
    phase: Phase,
}

impl PauliString {
    /// The identity operator on `n_qubits` qubits.
    pub fn identity(n_qubits: usize) -> Result<Self> {
        Self::from_parts(n_qubits, 0, 0, Phase::PlusOne)
    }

    pub fn from_parts(n_qubits: usize, x_bits: u64, z_bits: u64, phase: Phase) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::SizeGuard {
                what: "PauliString",
                n: n_qubits,
                max: MAX_QUBITS,
            });
        }
        let mask = Self::mask(n_qubits);
        if x_bits & !mask != 0 || z_bits & !mask != 0 {
            return Err(Error::InvalidArgument(format!(
                "bit vectors exceed {n_qubits} qubits"
            )));
        }
        Ok(Self {
            n_qubits,
            x_bits,
            z_bits,
            phase,
        })
    }

    fn mask(n_qubits: usize) -> u64 {
        if n_qubits == 64 {
            u64::MAX
        } else {
            (1u64 << n_qubits) - 1
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn x_bits(&self) -> u64 {
        self.x_bits
    }

    pub fn z_bits(&self) -> u64 {
        self.z_bits
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn with_phase(&self, phase: Phase) -> Self {
        Self { phase, ..*self }
    }

    pub fn is_identity(&self) -> bool {
        self.x_bits == 0 && self.z_bits == 0
    }

    /// X/Z bit pair on qubit `q` (1-based).
    pub fn site(&self, q: usize) -> (bool, bool) {
        let b = self.n_qubits - q;
        ((self.x_bits >> b) & 1 == 1, (self.z_bits >> b) & 1 == 1)
    }

    fn check_dims(&self, other: &Self) -> Result<()> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::DimensionMismatch {
                left: self.n_qubits,
                right: other.n_qubits,
            });
        }
        Ok(())
    }

    /// Operator product `self * other` with exact phase tracking.
    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check_dims(other)?;
        // Per-site phase of s_(x1,z1) * s_(x2,z2) = i^e * s_(x1^x2, z1^z2)
        // with e = x1 z1 + x2 z2 + 2 z1 x2 - (x1^x2)(z1^z2)  (mod 4).
        let mut exp: u32 = u32::from(self.phase.exponent()) + u32::from(other.phase.exponent());
        for q in 0..self.n_qubits {
            let x1 = ((self.x_bits >> q) & 1) as u32;
            let z1 = ((self.z_bits >> q) & 1) as u32;
            let x2 = ((other.x_bits >> q) & 1) as u32;
            let z2 = ((other.z_bits >> q) & 1) as u32;
            exp += x1 * z1 + x2 * z2 + 2 * z1 * x2;
            exp += 4 - (x1 ^ x2) * (z1 ^ z2);
        }
        Ok(Self {
            n_qubits: self.n_qubits,
            x_bits: self.x_bits ^ other.x_bits,
            z_bits: self.z_bits ^ other.z_bits,
            phase: Phase::from_exponent((exp % 4) as u8),
        })
    }

    /// True iff the symplectic inner product vanishes, i.e. the dense
    /// matrices commute.
    pub fn commutes_with(&self, other: &Self) -> Result<bool> {
        self.check_dims(other)?;
        let form = (self.x_bits & other.z_bits).count_ones()
            + (self.z_bits & other.x_bits).count_ones();
        Ok(form.is_multiple_of(2))
    }

    /// Dense `2^N x 2^N` realization, including the phase.
    pub fn to_matrix(&self) -> Result<DMatrix<Complex64>> {
        if self.n_qubits > MAX_DENSE_QUBITS {
            return Err(Error::SizeGuard {
                what: "dense Pauli matrix",
                n: self.n_qubits,
                max: MAX_DENSE_QUBITS,
            });
        }
        let one = Complex64::new(1.0, 0.0);
        let mut m = DMatrix::from_element(1, 1, self.phase.value());
        for q in 1..=self.n_qubits {
            let (x, z) = self.site(q);
            let site: [[Complex64; 2]; 2] = match (x, z) {
                (false, false) => [[one, 0.0.into()], [0.0.into(), one]],
                (true, false) => [[0.0.into(), one], [one, 0.0.into()]],
                (false, true) => [[one, 0.0.into()], [0.0.into(), -one]],
                (true, true) => [
                    [0.0.into(), Complex64::new(0.0, -1.0)],
                    [Complex64::new(0.0, 1.0), 0.0.into()],
                ],
            };
            let d = m.nrows();
            let mut next = DMatrix::from_element(2 * d, 2 * d, Complex64::default());
            for r in 0..d {
                for c in 0..d {
                    let v = m[(r, c)];
                    if v != Complex64::default() {
                        for (sr, row) in site.iter().enumerate() {
                            for (sc, &s) in row.iter().enumerate() {
                                next[(2 * r + sr, 2 * c + sc)] = v * s;
                            }
                        }
                    }
                }
            }
            m = next;
        }
        Ok(m)
    }

    /// Phase-stripped key for table membership.
    pub fn projective(&self) -> ProjectivePauli {
        ProjectivePauli {
            n_qubits: self.n_qubits,
            x_bits: self.x_bits,
            z_bits: self.z_bits,
        }
    }
}

impl FromStr for PauliString {
    type Err = Error;

    /// Parses an optional sign prefix (`+`, `-`, `+i`, `-i`) followed by one
    /// character per qubit from `{1, I, X, Y, Z}`.
    fn from_str(text: &str) -> Result<Self> {
        let bytes = text.as_bytes();
        let mut pos = 0;
        let mut phase = Phase::PlusOne;
        if pos < bytes.len() && (bytes[pos] == b'+' || bytes[pos] == b'-') {
            let negative = bytes[pos] == b'-';
            pos += 1;
            let imaginary = pos < bytes.len() && bytes[pos] == b'i';
            if imaginary {
                pos += 1;
            }
            phase = match (negative, imaginary) {
                (false, false) => Phase::PlusOne,
                (false, true) => Phase::PlusI,
                (true, false) => Phase::MinusOne,
                (true, true) => Phase::MinusI,
            };
        }
        let body = &bytes[pos..];
        if body.is_empty() {
            return Err(Error::Parse {
                position: pos,
                message: "expected at least one Pauli character".into(),
            });
        }
        if body.len() > MAX_QUBITS {
            return Err(Error::SizeGuard {
                what: "PauliString",
                n: body.len(),
                max: MAX_QUBITS,
            });
        }
        let mut x_bits = 0u64;
        let mut z_bits = 0u64;
        for (k, &b) in body.iter().enumerate() {
            x_bits <<= 1;
            z_bits <<= 1;
            match b {
                b'1' | b'I' => {}
                b'X' => x_bits |= 1,
                b'Z' => z_bits |= 1,
                b'Y' => {
                    x_bits |= 1;
                    z_bits |= 1;
                }
                other => {
                    return Err(Error::Parse {
                        position: pos + k,
                        message: format!("invalid character {:?}", other as char),
                    });
                }
            }
        }
        PauliString::from_parts(body.len(), x_bits, z_bits, phase)
    }
}

impl fmt::Display for PauliString {
    /// Canonical text form: explicit sign, `1` for identity sites.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.phase)?;
        for q in 1..=self.n_qubits {
            let c = match self.site(q) {
                (false, false) => '1',
                (true, false) => 'X',
                (false, true) => 'Z',
                (true, true) => 'Y',
            };
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl std::ops::Mul for &PauliString {
    type Output = PauliString;

    fn mul(self, rhs: &PauliString) -> PauliString {
        self.try_mul(rhs).expect("qubit count mismatch")
    }
}

/// A Pauli string with its phase forgotten. Equal iff the bit vectors are
/// equal; this is the key used for table membership and disjointness.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProjectivePauli {
    n_qubits: usize,
    x_bits: u64,
    z_bits: u64,
}

impl ProjectivePauli {
    pub fn from_parts(n_qubits: usize, x_bits: u64, z_bits: u64) -> Result<Self> {
        Ok(PauliString::from_parts(n_qubits, x_bits, z_bits, Phase::PlusOne)?.projective())
    }

    pub fn identity(n_qubits: usize) -> Result<Self> {
        Self::from_parts(n_qubits, 0, 0)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn x_bits(&self) -> u64 {
        self.x_bits
    }

    pub fn z_bits(&self) -> u64 {
        self.z_bits
    }

    pub fn is_identity(&self) -> bool {
        self.x_bits == 0 && self.z_bits == 0
    }

    /// The representative with phase `+1`.
    pub fn lift(&self) -> PauliString {
        PauliString {
            n_qubits: self.n_qubits,
            x_bits: self.x_bits,
            z_bits: self.z_bits,
            phase: Phase::PlusOne,
        }
    }

    /// Phase-free product; the projective image of the operator product.
    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::DimensionMismatch {
                left: self.n_qubits,
                right: other.n_qubits,
            });
        }
        Ok(Self {
            n_qubits: self.n_qubits,
            x_bits: self.x_bits ^ other.x_bits,
            z_bits: self.z_bits ^ other.z_bits,
        })
    }

    pub fn commutes_with(&self, other: &Self) -> Result<bool> {
        self.lift().commutes_with(&other.lift())
    }

    /// Symplectic vector `(x | z)` as a single `u128`, X block high.
    pub fn symplectic_bits(&self) -> u128 {
        (u128::from(self.x_bits) << self.n_qubits) | u128::from(self.z_bits)
    }

    /// Qubits (1-based) on which the operator acts nontrivially.
    pub fn support(&self) -> Vec<usize> {
        let bits = self.x_bits | self.z_bits;
        (1..=self.n_qubits)
            .filter(|q| (bits >> (self.n_qubits - q)) & 1 == 1)
            .collect()
    }

    /// True iff the support lies inside `block` (1-based qubit indices).
    pub fn supported_within(&self, block_mask: u64) -> bool {
        (self.x_bits | self.z_bits) & !block_mask == 0
    }

    /// Restriction to the qubits in `block` (1-based, ascending), reindexed
    /// to a `block.len()`-qubit operator. The caller must ensure the support
    /// lies inside the block.
    pub fn restrict(&self, block: &[usize]) -> Result<Self> {
        let mut x = 0u64;
        let mut z = 0u64;
        for &q in block {
            if q == 0 || q > self.n_qubits {
                return Err(Error::InvalidArgument(format!("qubit {q} out of range")));
            }
            let b = self.n_qubits - q;
            x = (x << 1) | ((self.x_bits >> b) & 1);
            z = (z << 1) | ((self.z_bits >> b) & 1);
        }
        Self::from_parts(block.len(), x, z)
    }
}

impl FromStr for ProjectivePauli {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let p = PauliString::from_str(text)?;
        if p.phase() != Phase::PlusOne {
            return Err(Error::Parse {
                position: 0,
                message: "projective Pauli must not carry a sign prefix".into(),
            });
        }
        Ok(p.projective())
    }
}

impl fmt::Display for ProjectivePauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lifted = self.lift();
        for q in 1..=self.n_qubits {
            let c = match lifted.site(q) {
                (false, false) => '1',
                (true, false) => 'X',
                (false, true) => 'Z',
                (true, true) => 'Y',
            };
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Mask with qubit bits `1..=n` set, matching the bit layout of
/// [`PauliString`].
pub fn qubit_mask(n_qubits: usize, qubits: &[usize]) -> u64 {
    qubits
        .iter()
        .fold(0u64, |m, &q| m | (1u64 << (n_qubits - q)))
}
