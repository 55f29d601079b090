//! Commuting classes of Pauli strings and mutually unbiased bases.
//!
//! A [`CommutingSet`] is one measurement basis in operator form: the 2^N - 1
//! nonidentity elements of a maximal abelian subgroup of the projective Pauli
//! group. A [`MubSet`] is a partition of all 4^N - 1 nonidentity projective
//! Paulis into 2^N + 1 such classes; the joint eigenbases of the classes are
//! pairwise mutually unbiased.
//!
//! Tables are built from two seed rows by a within-row product rule and a
//! cross-row product rule with indices reduced modulo 2^N - 1 into 1..=2^N-1
//! (see [`expand_table`]), or found exhaustively for N <= 3 by
//! [`search_mub_partitions`].

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::pauli::ProjectivePauli;

/// Orthonormality tolerance for eigenbases.
pub const EIGENBASIS_TOL: f64 = 1e-12;

/// Unbiasedness tolerance for cross-basis overlaps.
pub const OVERLAP_TOL: f64 = 1e-10;

/// One row of a MUB table: 2^N - 1 pairwise-commuting nonidentity projective
/// Paulis, closed under multiplication, with a recorded independent
/// generating subset.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommutingSet {
    n_qubits: usize,
    operators: Vec<ProjectivePauli>,
    generator_subset: Vec<usize>,
}

impl CommutingSet {
    /// Validates all invariants: size, no identity, pairwise commutation,
    /// closure under products, and existence of N independent generators.
    pub fn new(n_qubits: usize, operators: Vec<ProjectivePauli>) -> Result<Self> {
        let expected = (1usize << n_qubits) - 1;
        if operators.len() != expected {
            return Err(Error::InvalidSet(format!(
                "expected {expected} operators for {n_qubits} qubits, got {}",
                operators.len()
            )));
        }
        let mut seen = HashSet::with_capacity(operators.len());
        for op in &operators {
            if op.n_qubits() != n_qubits {
                return Err(Error::DimensionMismatch {
                    left: n_qubits,
                    right: op.n_qubits(),
                });
            }
            if op.is_identity() {
                return Err(Error::InvalidSet("identity is not a member".into()));
            }
            if !seen.insert(*op) {
                return Err(Error::InvalidSet(format!("duplicate operator {op}")));
            }
        }
        for (i, a) in operators.iter().enumerate() {
            for b in operators.iter().skip(i + 1) {
                if !a.commutes_with(b)? {
                    return Err(Error::InvalidSet(format!("{a} and {b} anticommute")));
                }
            }
        }
        for (i, a) in operators.iter().enumerate() {
            for b in operators.iter().skip(i + 1) {
                let prod = a.try_mul(b)?;
                if !prod.is_identity() && !seen.contains(&prod) {
                    return Err(Error::InvalidSet(format!(
                        "not closed: {a} * {b} = {prod} is missing"
                    )));
                }
            }
        }
        let generator_subset = independent_subset(&operators, n_qubits).ok_or_else(|| {
            Error::InvalidSet("operators do not span an N-dimensional group".into())
        })?;
        Ok(Self {
            n_qubits,
            operators,
            generator_subset,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn operators(&self) -> &[ProjectivePauli] {
        &self.operators
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    /// Indices (into `operators`) of the recorded independent generators.
    pub fn generator_subset(&self) -> &[usize] {
        &self.generator_subset
    }

    pub fn generators(&self) -> impl Iterator<Item = &ProjectivePauli> + '_ {
        self.generator_subset.iter().map(|&i| &self.operators[i])
    }

    pub fn contains(&self, op: &ProjectivePauli) -> bool {
        self.operators.contains(op)
    }

    pub fn as_key_set(&self) -> HashSet<ProjectivePauli> {
        self.operators.iter().copied().collect()
    }

    /// The members supported inside `block` (1-based qubits), reindexed onto
    /// `block.len()` qubits. For a factorization block this is again a full
    /// commuting set on the block.
    pub fn restrict(&self, block: &[usize]) -> Result<CommutingSet> {
        let mask = crate::pauli::qubit_mask(self.n_qubits, block);
        let sub: Vec<ProjectivePauli> = self
            .operators
            .iter()
            .filter(|op| !op.is_identity() && op.supported_within(mask))
            .map(|op| op.restrict(block))
            .collect::<Result<_>>()?;
        CommutingSet::new(block.len(), sub)
    }
}

/// Greedy independent subset over GF(2), in column order.
fn independent_subset(ops: &[ProjectivePauli], n_qubits: usize) -> Option<Vec<usize>> {
    let mut basis: Vec<u128> = Vec::new();
    let mut chosen = Vec::new();
    for (i, op) in ops.iter().enumerate() {
        let mut v = op.symplectic_bits();
        for &b in &basis {
            let lead = 127 - b.leading_zeros();
            if v >> lead & 1 == 1 {
                v ^= b;
            }
        }
        if v != 0 {
            basis.push(v);
            basis.sort_unstable_by(|a, b| b.cmp(a));
            chosen.push(i);
            if chosen.len() == n_qubits {
                return Some(chosen);
            }
        }
    }
    None
}

/// Where a table came from.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Standard,
    #[serde(rename = "optimal-4q")]
    Optimal4q,
    #[serde(rename = "standard-5q")]
    Standard5q,
    #[serde(rename = "optimal-5q")]
    Optimal5q,
    Searched,
    Custom,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Provenance::Standard => "standard",
            Provenance::Optimal4q => "optimal-4q",
            Provenance::Standard5q => "standard-5q",
            Provenance::Optimal5q => "optimal-5q",
            Provenance::Searched => "searched",
            Provenance::Custom => "custom",
        };
        write!(f, "{s}")
    }
}

/// A complete MUB table: 2^N + 1 disjoint commuting classes covering every
/// nonidentity projective Pauli.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MubSet {
    n_qubits: usize,
    rows: Vec<CommutingSet>,
    provenance: Provenance,
}

impl MubSet {
    pub fn new(n_qubits: usize, rows: Vec<CommutingSet>, provenance: Provenance) -> Result<Self> {
        let expected_rows = (1usize << n_qubits) + 1;
        if rows.len() != expected_rows {
            return Err(Error::InvalidTable(format!(
                "expected {expected_rows} rows, got {}",
                rows.len()
            )));
        }
        let mut seen: HashSet<ProjectivePauli> = HashSet::new();
        for (r, row) in rows.iter().enumerate() {
            if row.n_qubits() != n_qubits {
                return Err(Error::DimensionMismatch {
                    left: n_qubits,
                    right: row.n_qubits(),
                });
            }
            for op in row.operators() {
                if !seen.insert(*op) {
                    return Err(Error::InvalidTable(format!(
                        "operator {op} appears in more than one row (row {})",
                        r + 1
                    )));
                }
            }
        }
        let total = (1usize << (2 * n_qubits)) - 1;
        if seen.len() != total {
            return Err(Error::InvalidTable(format!(
                "rows cover {} of {total} operators",
                seen.len()
            )));
        }
        Ok(Self {
            n_qubits,
            rows,
            provenance,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn rows(&self) -> &[CommutingSet] {
        &self.rows
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn to_table(&self) -> MubTable {
        MubTable {
            n_qubits: self.n_qubits,
            provenance: self.provenance.to_string(),
            rows: self
                .rows
                .iter()
                .map(|r| r.operators().iter().map(|op| op.to_string()).collect())
                .collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_table())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        MubTable::from_json(text)?.validate()
    }

    /// Joint eigenbases of every row, in row order.
    pub fn eigenbases(&self) -> Result<Vec<BasisVectors>> {
        self.rows.iter().map(eigenbasis).collect()
    }
}

/// Raw, unvalidated table matching the table JSON schema. Use
/// [`MubTable::validate`] to obtain a [`MubSet`], or [`verify_mub_rows`] for
/// a diagnostic report that never fails.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MubTable {
    pub n_qubits: usize,
    pub provenance: String,
    pub rows: Vec<Vec<String>>,
}

impl MubTable {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn parse_rows(&self) -> Result<Vec<Vec<ProjectivePauli>>> {
        if self.n_qubits == 0 || self.n_qubits > 8 {
            return Err(Error::SizeGuard {
                what: "MUB table",
                n: self.n_qubits,
                max: 8,
            });
        }
        self.rows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|s| {
                        let op = ProjectivePauli::from_str(s)?;
                        if op.n_qubits() != self.n_qubits {
                            return Err(Error::DimensionMismatch {
                                left: self.n_qubits,
                                right: op.n_qubits(),
                            });
                        }
                        Ok(op)
                    })
                    .collect()
            })
            .collect()
    }

    pub fn validate(&self) -> Result<MubSet> {
        let provenance = match self.provenance.as_str() {
            "standard" => Provenance::Standard,
            "optimal-4q" => Provenance::Optimal4q,
            "standard-5q" => Provenance::Standard5q,
            "optimal-5q" => Provenance::Optimal5q,
            "searched" => Provenance::Searched,
            "custom" => Provenance::Custom,
            other => {
                return Err(Error::InvalidTable(format!("unknown provenance {other:?}")));
            }
        };
        let rows = self
            .parse_rows()?
            .into_iter()
            .map(|ops| CommutingSet::new(self.n_qubits, ops))
            .collect::<Result<Vec<_>>>()?;
        MubSet::new(self.n_qubits, rows, provenance)
    }
}

/// The 2^N joint eigenvectors of one commuting class, ordered by the sign
/// pattern of the class generators: vector `s` satisfies
/// `G_i v = (-1)^{bit i of s} v` for generator `i` (all generator signs taken
/// `+1`).
#[derive(Clone, Debug)]
pub struct BasisVectors {
    n_qubits: usize,
    vectors: Vec<DVector<Complex64>>,
}

impl BasisVectors {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn vectors(&self) -> &[DVector<Complex64>] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Max deviation from exact orthonormality.
    pub fn orthonormality_deviation(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, a) in self.vectors.iter().enumerate() {
            for (j, b) in self.vectors.iter().enumerate() {
                let g = a.dotc(b);
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - Complex64::new(target, 0.0)).norm());
            }
        }
        worst
    }
}

/// Joint eigenbasis of a commuting class by stabilizer projection: for each
/// sign pattern `s`, the rank-1 projector `prod_i (I + s_i G_i) / 2` is
/// accumulated and its normalized column extracted.
pub fn eigenbasis(row: &CommutingSet) -> Result<BasisVectors> {
    let n = row.n_qubits();
    let dim = 1usize << n;
    let gens: Vec<DMatrix<Complex64>> = row
        .generators()
        .map(|g| g.lift().to_matrix())
        .collect::<Result<_>>()?;
    let mut vectors: Vec<Option<DVector<Complex64>>> = vec![None; dim];
    let eye = DMatrix::<Complex64>::identity(dim, dim);

    // Binary recursion over sign patterns shares the projector prefixes.
    fn descend(
        acc: DMatrix<Complex64>,
        gens: &[DMatrix<Complex64>],
        level: usize,
        pattern: usize,
        out: &mut Vec<Option<DVector<Complex64>>>,
    ) -> Result<()> {
        if level == gens.len() {
            out[pattern] = Some(extract_unit_vector(&acc)?);
            return Ok(());
        }
        let ga = &gens[level] * &acc;
        let plus = (&acc + &ga).scale(0.5);
        let minus = (&acc - &ga).scale(0.5);
        descend(plus, gens, level + 1, pattern, out)?;
        descend(minus, gens, level + 1, pattern | (1 << level), out)
    }

    descend(eye, &gens, 0, 0, &mut vectors)?;
    let vectors: Vec<DVector<Complex64>> = vectors.into_iter().map(Option::unwrap).collect();
    let basis = BasisVectors {
        n_qubits: n,
        vectors,
    };
    let dev = basis.orthonormality_deviation();
    if dev > EIGENBASIS_TOL {
        return Err(Error::Internal(format!(
            "eigenbasis orthonormality deviation {dev:.3e} exceeds {EIGENBASIS_TOL:.0e}"
        )));
    }
    Ok(basis)
}

/// Extracts the unit vector of a rank-1 projector, with a canonical global
/// phase (first nonnegligible component real positive).
fn extract_unit_vector(p: &DMatrix<Complex64>) -> Result<DVector<Complex64>> {
    let dim = p.nrows();
    let mut best = 0usize;
    let mut best_val = 0.0f64;
    for c in 0..dim {
        let v = p[(c, c)].re;
        if v > best_val {
            best_val = v;
            best = c;
        }
    }
    if best_val < 1e-6 {
        return Err(Error::Internal(
            "projector has no usable column; generators are not a valid stabilizer".into(),
        ));
    }
    let mut v = DVector::from_iterator(dim, (0..dim).map(|r| p[(r, best)]));
    v /= Complex64::new(best_val.sqrt(), 0.0);
    let pivot = (0..dim)
        .find(|&r| v[r].norm() > 1e-8)
        .ok_or_else(|| Error::Internal("zero eigenvector".into()))?;
    let rot = v[pivot].conj() / v[pivot].norm();
    v *= rot;
    Ok(v)
}

/// Verification report for a (possibly invalid) table.
#[derive(Clone, Debug, Serialize)]
pub struct MubReport {
    pub n_qubits: usize,
    pub row_count_ok: bool,
    pub row_sizes_ok: bool,
    pub rows_commuting: bool,
    pub rows_closed: bool,
    pub rows_disjoint: bool,
    pub covers_all: bool,
    /// Max within-row deviation from exact orthonormality, when computable.
    pub max_orthonormality_deviation: Option<f64>,
    /// Max over cross-row vector pairs of | |<a|b>|^2 - 2^-N |, when
    /// computable.
    pub max_cross_overlap_deviation: Option<f64>,
}

impl MubReport {
    pub fn structure_ok(&self) -> bool {
        self.row_count_ok
            && self.row_sizes_ok
            && self.rows_commuting
            && self.rows_closed
            && self.rows_disjoint
            && self.covers_all
    }

    pub fn passed(&self) -> bool {
        self.structure_ok()
            && self.max_orthonormality_deviation.is_some_and(|d| d <= EIGENBASIS_TOL)
            && self.max_cross_overlap_deviation.is_some_and(|d| d <= OVERLAP_TOL)
    }
}

/// Full check of the MUB property on raw rows: set arithmetic plus the
/// numerical unbiasedness of every cross-row eigenvector pair. Structural
/// failures are reported, never returned as errors.
pub fn verify_mub_rows(n_qubits: usize, rows: &[Vec<ProjectivePauli>]) -> MubReport {
    let expected_rows = (1usize << n_qubits) + 1;
    let expected_len = (1usize << n_qubits) - 1;
    let row_count_ok = rows.len() == expected_rows;
    let mut row_sizes_ok = true;
    let mut rows_commuting = true;
    let mut rows_closed = true;
    let mut valid_rows: Vec<Option<CommutingSet>> = Vec::with_capacity(rows.len());
    for row in rows {
        if row.len() != expected_len
            || row.iter().any(ProjectivePauli::is_identity)
            || row.iter().any(|op| op.n_qubits() != n_qubits)
        {
            row_sizes_ok = false;
        }
        let commuting = row.iter().enumerate().all(|(i, a)| {
            row.iter()
                .skip(i + 1)
                .all(|b| a.commutes_with(b).unwrap_or(false))
        });
        if !commuting {
            rows_commuting = false;
        }
        let keys: HashSet<ProjectivePauli> = row.iter().copied().collect();
        let closed = keys.len() == row.len()
            && row.iter().enumerate().all(|(i, a)| {
                row.iter().skip(i + 1).all(|b| {
                    a.try_mul(b)
                        .map(|prod| prod.is_identity() || keys.contains(&prod))
                        .unwrap_or(false)
                })
            });
        if !closed {
            rows_closed = false;
        }
        valid_rows.push(CommutingSet::new(n_qubits, row.clone()).ok());
    }
    let mut seen: HashSet<ProjectivePauli> = HashSet::new();
    let mut rows_disjoint = true;
    for row in rows {
        for op in row {
            if op.is_identity() || !seen.insert(*op) {
                rows_disjoint = false;
            }
        }
    }
    let covers_all = seen.len() == (1usize << (2 * n_qubits)) - 1;

    let bases: Vec<Option<BasisVectors>> = valid_rows
        .iter()
        .map(|r| r.as_ref().and_then(|set| eigenbasis(set).ok()))
        .collect();
    let mut max_ortho: Option<f64> = None;
    for basis in bases.iter().flatten() {
        let d = basis.orthonormality_deviation();
        max_ortho = Some(max_ortho.map_or(d, |m: f64| m.max(d)));
    }
    let target = 2.0f64.powi(-(n_qubits as i32));
    let mut max_cross: Option<f64> = None;
    for (i, a) in bases.iter().enumerate() {
        let Some(a) = a else { continue };
        for b in bases.iter().skip(i + 1) {
            let Some(b) = b else { continue };
            for va in a.vectors() {
                for vb in b.vectors() {
                    let overlap = va.dotc(vb).norm_sqr();
                    let dev = (overlap - target).abs();
                    max_cross = Some(max_cross.map_or(dev, |m: f64| m.max(dev)));
                }
            }
        }
    }
    MubReport {
        n_qubits,
        row_count_ok,
        row_sizes_ok,
        rows_commuting,
        rows_closed,
        rows_disjoint,
        covers_all,
        max_orthonormality_deviation: max_ortho,
        max_cross_overlap_deviation: max_cross,
    }
}

/// Convenience wrapper over [`verify_mub_rows`] for an already-validated set.
pub fn verify_mub(set: &MubSet) -> MubReport {
    let rows: Vec<Vec<ProjectivePauli>> = set
        .rows()
        .iter()
        .map(|r| r.operators().to_vec())
        .collect();
    verify_mub_rows(set.n_qubits(), &rows)
}

/// Within-row product rule `A[r][c] = A[r][c + offset_a] * A[r][c + offset_b]`
/// with 1-based columns reduced modulo the table width into `1..=width`.
#[derive(Copy, Clone, Debug, Serialize, Deserialize)]
pub struct RowRule {
    pub offset_a: i64,
    pub offset_b: i64,
}

/// Cross-row rule `A[r][c] = A[row_a][c] * A[row_b][r + c + offset]` for
/// rows `r >= 3`, with the second index reduced modulo the table width.
#[derive(Copy, Clone, Debug, Serialize, Deserialize)]
pub struct CrossRule {
    pub row_a: usize,
    pub row_b: usize,
    pub offset: i64,
}

fn reduce_index(k: i64, modulus: usize) -> usize {
    let m = modulus as i64;
    (((k - 1) % m + m) % m + 1) as usize
}

/// Expands two seed rows into a full table and validates the result.
///
/// The seed rows occupy the leading columns of rows 1 and 2. The row rule is
/// iterated to a fixed point to complete rows 1 and 2; the cross rule then
/// fills rows 3..=n_rows. Errors name the offending (row, column).
pub fn expand_table(
    seed_rows: [&[ProjectivePauli]; 2],
    row_rule: RowRule,
    cross_rule: CrossRule,
    modulus: usize,
    n_rows: usize,
    n_cols: usize,
    provenance: Provenance,
) -> Result<MubSet> {
    if n_cols != modulus {
        return Err(Error::InvalidArgument(format!(
            "table width {n_cols} must equal the index modulus {modulus}"
        )));
    }
    let n_qubits = seed_rows[0]
        .first()
        .map(ProjectivePauli::n_qubits)
        .ok_or_else(|| Error::InvalidArgument("empty seed row".into()))?;
    if !(2..=5).contains(&n_qubits) {
        return Err(Error::Unsupported {
            what: "table expansion",
            n: n_qubits,
        });
    }
    if (1usize << n_qubits) - 1 != n_cols || (1usize << n_qubits) + 1 != n_rows {
        return Err(Error::InvalidArgument(format!(
            "{n_rows} x {n_cols} table does not match {n_qubits} qubits"
        )));
    }
    if cross_rule.row_a > 2 || cross_rule.row_b > 2 || cross_rule.row_a == 0 || cross_rule.row_b == 0
    {
        return Err(Error::InvalidArgument(
            "cross rule must reference seed rows 1 or 2".into(),
        ));
    }

    let mut table: Vec<Vec<Option<ProjectivePauli>>> = vec![vec![None; n_cols + 1]; n_rows + 1];
    for (r, seed) in seed_rows.iter().enumerate() {
        if seed.len() > n_cols {
            return Err(Error::InvalidArgument(format!(
                "seed row {} has {} operators but the table is {n_cols} wide",
                r + 1,
                seed.len()
            )));
        }
        for (c, op) in seed.iter().enumerate() {
            if op.n_qubits() != n_qubits {
                return Err(Error::DimensionMismatch {
                    left: n_qubits,
                    right: op.n_qubits(),
                });
            }
            table[r + 1][c + 1] = Some(*op);
        }
    }

    // Complete rows 1 and 2 by iterating the row rule to a fixed point; the
    // rule may wrap around, so a single left-to-right sweep is not enough.
    loop {
        let mut progressed = false;
        for r in 1..=2usize {
            for c in 1..=n_cols {
                if table[r][c].is_some() {
                    continue;
                }
                let ca = reduce_index(c as i64 + row_rule.offset_a, modulus);
                let cb = reduce_index(c as i64 + row_rule.offset_b, modulus);
                if let (Some(a), Some(b)) = (table[r][ca], table[r][cb]) {
                    table[r][c] = Some(a.try_mul(&b)?);
                    progressed = true;
                }
            }
        }
        if !progressed {
            break;
        }
    }
    for r in 1..=2usize {
        if let Some(c) = (1..=n_cols).find(|&c| table[r][c].is_none()) {
            return Err(Error::Construction {
                row: r,
                column: c,
                message: "row rule never reaches this column".into(),
            });
        }
    }

    for r in 3..=n_rows {
        for c in 1..=n_cols {
            let a = table[cross_rule.row_a][c].unwrap();
            let b = table[cross_rule.row_b][reduce_index(r as i64 + c as i64 + cross_rule.offset, modulus)]
                .unwrap();
            table[r][c] = Some(a.try_mul(&b)?);
        }
    }

    // Locate duplicates precisely before handing off to full validation.
    let mut first_seen: HashMap<ProjectivePauli, (usize, usize)> = HashMap::new();
    for r in 1..=n_rows {
        for c in 1..=n_cols {
            let op = table[r][c].unwrap();
            if op.is_identity() {
                return Err(Error::Construction {
                    row: r,
                    column: c,
                    message: "rule produced the identity".into(),
                });
            }
            if let Some(&(r0, c0)) = first_seen.get(&op) {
                let message = if r0 == r {
                    format!("repeats column {c0} of the same row")
                } else {
                    format!("collides with row {r0}, column {c0}")
                };
                return Err(Error::Construction {
                    row: r,
                    column: c,
                    message,
                });
            }
            first_seen.insert(op, (r, c));
        }
    }
    for r in 1..=n_rows {
        for c1 in 1..=n_cols {
            for c2 in (c1 + 1)..=n_cols {
                let (a, b) = (table[r][c1].unwrap(), table[r][c2].unwrap());
                if !a.commutes_with(&b)? {
                    return Err(Error::Construction {
                        row: r,
                        column: c2,
                        message: format!("anticommutes with column {c1}"),
                    });
                }
            }
        }
    }

    let rows = (1..=n_rows)
        .map(|r| {
            let ops: Vec<ProjectivePauli> = (1..=n_cols).map(|c| table[r][c].unwrap()).collect();
            CommutingSet::new(n_qubits, ops)
        })
        .collect::<Result<Vec<_>>>()?;
    MubSet::new(n_qubits, rows, provenance)
}

/// Seed-table data file: two seed rows plus the expansion rules, as shipped
/// in `data/seeds/`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedTable {
    pub n_qubits: usize,
    pub provenance: Provenance,
    pub modulus: usize,
    pub row_rule: RowRule,
    pub cross_rule: CrossRule,
    /// Index-interpretation and derivation notes.
    pub notes: String,
    pub seed_rows: [Vec<String>; 2],
}

impl SeedTable {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn parse_seed_rows(&self) -> Result<[Vec<ProjectivePauli>; 2]> {
        let parse_row = |row: &[String]| -> Result<Vec<ProjectivePauli>> {
            row.iter().map(|s| ProjectivePauli::from_str(s)).collect()
        };
        Ok([
            parse_row(&self.seed_rows[0])?,
            parse_row(&self.seed_rows[1])?,
        ])
    }

    pub fn expand(&self) -> Result<MubSet> {
        let seeds = self.parse_seed_rows()?;
        let n_rows = (1usize << self.n_qubits) + 1;
        let n_cols = (1usize << self.n_qubits) - 1;
        expand_table(
            [&seeds[0], &seeds[1]],
            self.row_rule,
            self.cross_rule,
            self.modulus,
            n_rows,
            n_cols,
            self.provenance,
        )
    }
}

/// Exhaustively enumerates every maximal commuting class of the nonidentity
/// projective Paulis on `n_qubits` qubits. Each class has 2^N - 1 members.
pub fn maximal_commuting_classes(n_qubits: usize) -> Result<Vec<Vec<ProjectivePauli>>> {
    if n_qubits == 0 || n_qubits > 3 {
        return Err(Error::Unsupported {
            what: "exhaustive class enumeration",
            n: n_qubits,
        });
    }
    let n = n_qubits;
    let count = 1usize << (2 * n);
    let op_of = |idx: usize| -> ProjectivePauli {
        let x = (idx >> n) as u64;
        let z = (idx & ((1 << n) - 1)) as u64;
        ProjectivePauli::from_parts(n, x, z).unwrap()
    };
    let commute = |a: usize, b: usize| -> bool {
        let (xa, za) = ((a >> n) as u64, (a & ((1 << n) - 1)) as u64);
        let (xb, zb) = ((b >> n) as u64, (b & ((1 << n) - 1)) as u64);
        ((xa & zb).count_ones() + (za & xb).count_ones()) % 2 == 0
    };
    let mut classes: HashSet<u64> = HashSet::new();

    fn grow(
        start: usize,
        gens: &mut Vec<usize>,
        span: &mut Vec<usize>,
        n: usize,
        count: usize,
        commute: &dyn Fn(usize, usize) -> bool,
        classes: &mut HashSet<u64>,
    ) {
        if gens.len() == n {
            let mask = span
                .iter()
                .filter(|&&s| s != 0)
                .fold(0u64, |m, &s| m | (1u64 << s));
            classes.insert(mask);
            return;
        }
        for idx in start..count {
            if span.contains(&idx) {
                continue;
            }
            if !gens.iter().all(|&g| commute(g, idx)) {
                continue;
            }
            let prev_len = span.len();
            let extension: Vec<usize> = span.iter().map(|&s| s ^ idx).collect();
            span.extend(extension);
            gens.push(idx);
            grow(idx + 1, gens, span, n, count, commute, classes);
            gens.pop();
            span.truncate(prev_len);
        }
    }

    let mut gens = Vec::new();
    let mut span = vec![0usize];
    grow(1, &mut gens, &mut span, n, count, &commute, &mut classes);

    let mut out: Vec<Vec<ProjectivePauli>> = classes
        .into_iter()
        .map(|mask| {
            (1..count)
                .filter(|&i| mask >> i & 1 == 1)
                .map(op_of)
                .collect()
        })
        .collect();
    out.sort();
    Ok(out)
}

/// Enumerates every partition of the 4^N - 1 nonidentity projective Paulis
/// into 2^N + 1 maximal commuting classes. Each returned set is a valid MUB
/// table. Guarded to N <= 3.
pub fn search_mub_partitions(n_qubits: usize) -> Result<Vec<MubSet>> {
    if n_qubits == 0 || n_qubits > 3 {
        return Err(Error::Unsupported {
            what: "exhaustive MUB partition search",
            n: n_qubits,
        });
    }
    let classes = maximal_commuting_classes(n_qubits)?;
    let n = n_qubits;
    let count = 1usize << (2 * n);
    let idx_of = |op: &ProjectivePauli| -> usize {
        ((op.x_bits() as usize) << n) | (op.z_bits() as usize)
    };
    let masks: Vec<u64> = classes
        .iter()
        .map(|cl| cl.iter().fold(0u64, |m, op| m | (1u64 << idx_of(op))))
        .collect();
    let mut containing: Vec<Vec<usize>> = vec![Vec::new(); count];
    for (ci, cl) in classes.iter().enumerate() {
        for op in cl {
            containing[idx_of(op)].push(ci);
        }
    }
    let full: u64 = if count == 64 {
        !1
    } else {
        ((1u64 << count) - 1) & !1
    };

    let mut solutions: Vec<Vec<usize>> = Vec::new();
    // Deterministic pivot (fewest remaining options) makes each partition
    // discoverable by exactly one choice sequence.
    fn cover(
        covered: u64,
        chosen: &mut Vec<usize>,
        full: u64,
        masks: &[u64],
        containing: &[Vec<usize>],
        solutions: &mut Vec<Vec<usize>>,
    ) {
        if covered == full {
            let mut sol = chosen.clone();
            sol.sort_unstable();
            solutions.push(sol);
            return;
        }
        let mut pivot = None;
        let mut pivot_options: Vec<usize> = Vec::new();
        for idx in 1..containing.len() {
            if covered >> idx & 1 == 1 {
                continue;
            }
            let options: Vec<usize> = containing[idx]
                .iter()
                .copied()
                .filter(|&ci| masks[ci] & covered == 0)
                .collect();
            if pivot.is_none() || options.len() < pivot_options.len() {
                pivot = Some(idx);
                pivot_options = options;
                if pivot_options.len() <= 1 {
                    break;
                }
            }
        }
        for ci in pivot_options {
            chosen.push(ci);
            cover(covered | masks[ci], chosen, full, masks, containing, solutions);
            chosen.pop();
        }
    }
    let mut chosen = Vec::new();
    cover(0, &mut chosen, full, &masks, &containing, &mut solutions);
    solutions.sort();
    solutions.dedup();

    solutions
        .into_iter()
        .map(|sol| {
            let rows = sol
                .iter()
                .map(|&ci| CommutingSet::new(n, classes[ci].clone()))
                .collect::<Result<Vec<_>>>()?;
            MubSet::new(n, rows, Provenance::Searched)
        })
        .collect()
}
