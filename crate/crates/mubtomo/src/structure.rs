//! Entanglement structure and CNOT-cost analysis of commuting classes.
//!
//! Each basis (commuting class) factorizes over a unique finest partition of
//! the qubits; the class group is the direct product of its restrictions to
//! the blocks. Entangled blocks are reduced to graph-state canonical form and
//! the minimal number of CNOT gates for a block is defined as the minimum
//! edge count over the local-complementation orbit of its graph. The total
//! CNOT count over all 2^N + 1 bases is the complexity score of a MUB set.

use serde::Serialize;
use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use crate::error::{Error, Result};
use crate::mub::{CommutingSet, MubSet};

/// Orbit enumeration guard.
pub const MAX_ORBIT_QUBITS: usize = 8;

/// A partition of the qubits `1..=N` into factorization blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactorizationStructure {
    n_qubits: usize,
    blocks: Vec<Vec<usize>>,
}

impl FactorizationStructure {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Blocks of 1-based qubit indices, each ascending, ordered by first
    /// element.
    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// Block sizes, largest first.
    pub fn label(&self) -> Vec<usize> {
        let mut sizes: Vec<usize> = self.blocks.iter().map(Vec::len).collect();
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        sizes
    }

    pub fn is_fully_factorized(&self) -> bool {
        self.blocks.iter().all(|b| b.len() == 1)
    }
}

/// All set partitions of `0..n` (Bell(5) = 52, so brute force is fine).
fn set_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    let mut parts: Vec<Vec<Vec<usize>>> = vec![vec![vec![0]]];
    for item in 1..n {
        let mut next = Vec::new();
        for p in &parts {
            for i in 0..p.len() {
                let mut q = p.clone();
                q[i].push(item);
                next.push(q);
            }
            let mut q = p.clone();
            q.push(vec![item]);
            next.push(q);
        }
        parts = next;
    }
    parts
}

/// Number of class members (plus identity) supported inside the 0-based
/// qubit set `block`.
fn subgroup_order(row: &CommutingSet, block: &[usize]) -> usize {
    let n = row.n_qubits();
    let mask = crate::pauli::qubit_mask(n, &block.iter().map(|&q| q + 1).collect::<Vec<_>>());
    1 + row
        .operators()
        .iter()
        .filter(|op| op.supported_within(mask))
        .count()
}

fn partition_is_valid(row: &CommutingSet, partition: &[Vec<usize>]) -> bool {
    let product: usize = partition
        .iter()
        .map(|block| subgroup_order(row, block))
        .product();
    product == 1usize << row.n_qubits()
}

/// The finest partition of the qubits over which the class group is a direct
/// product of block-supported subgroups (meet of all valid partitions).
pub fn factorization_structure(row: &CommutingSet) -> Result<FactorizationStructure> {
    let n = row.n_qubits();
    let valid: Vec<Vec<Vec<usize>>> = set_partitions(n)
        .into_iter()
        .filter(|p| partition_is_valid(row, p))
        .collect();
    if valid.is_empty() {
        return Err(Error::Internal(
            "no valid factorization partition; class is not a full stabilizer".into(),
        ));
    }
    // Meet: common refinement via block-id intersection.
    let mut labels: Vec<Vec<usize>> = vec![vec![0; n]];
    for p in &valid {
        let mut lab = vec![0usize; n];
        for (bi, block) in p.iter().enumerate() {
            for &q in block {
                lab[q] = bi;
            }
        }
        labels.push(lab);
    }
    let mut groups: HashMap<Vec<usize>, Vec<usize>> = HashMap::new();
    for q in 0..n {
        let key: Vec<usize> = labels.iter().map(|lab| lab[q]).collect();
        groups.entry(key).or_default().push(q);
    }
    let mut blocks: Vec<Vec<usize>> = groups
        .into_values()
        .map(|b| b.iter().map(|&q| q + 1).collect())
        .collect();
    for b in &mut blocks {
        b.sort_unstable();
    }
    blocks.sort();
    let meet_zero_based: Vec<Vec<usize>> = blocks
        .iter()
        .map(|b| b.iter().map(|&q| q - 1).collect())
        .collect();
    if !partition_is_valid(row, &meet_zero_based) {
        return Err(Error::Internal(
            "meet of valid factorizations is not itself valid".into(),
        ));
    }
    Ok(FactorizationStructure {
        n_qubits: n,
        blocks,
    })
}

/// Per-class factorization counts for a whole MUB set.
///
/// The counts follow the block-size multisets in a fixed order per register
/// size: for N=3 `({1,1,1}, {2,1}, {3})`; for N=4
/// `({1,1,1,1}, {2,1,1}, {3,1}, {2,2}, {4})`; for N=5
/// `({1x5}, {2,1,1,1}, {3,1,1}, {2,2,1}, {4,1}, {3,2}, {5})`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StructureLabel {
    pub n_qubits: usize,
    pub counts: Vec<usize>,
}

fn label_classes(n_qubits: usize) -> Option<Vec<Vec<usize>>> {
    // block-size multisets, largest-first within each class
    match n_qubits {
        2 => Some(vec![vec![1, 1], vec![2]]),
        3 => Some(vec![vec![1, 1, 1], vec![2, 1], vec![3]]),
        4 => Some(vec![
            vec![1, 1, 1, 1],
            vec![2, 1, 1],
            vec![3, 1],
            vec![2, 2],
            vec![4],
        ]),
        5 => Some(vec![
            vec![1, 1, 1, 1, 1],
            vec![2, 1, 1, 1],
            vec![3, 1, 1],
            vec![2, 2, 1],
            vec![4, 1],
            vec![3, 2],
            vec![5],
        ]),
        _ => None,
    }
}

impl StructureLabel {
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }
}

impl fmt::Display for StructureLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.counts.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Counts the classes of a MUB set by factorization block-size multiset.
pub fn structure_label(set: &MubSet) -> Result<StructureLabel> {
    let classes = label_classes(set.n_qubits()).ok_or(Error::Unsupported {
        what: "structure label",
        n: set.n_qubits(),
    })?;
    let mut counts = vec![0usize; classes.len()];
    for row in set.rows() {
        let label = factorization_structure(row)?.label();
        let idx = classes
            .iter()
            .position(|c| *c == label)
            .ok_or_else(|| Error::Internal(format!("unclassified block sizes {label:?}")))?;
        counts[idx] += 1;
    }
    debug_assert_eq!(counts.iter().sum::<usize>(), set.rows().len());
    Ok(StructureLabel {
        n_qubits: set.n_qubits(),
        counts,
    })
}

/// Simple undirected graph on up to [`MAX_ORBIT_QUBITS`] vertices, stored as
/// adjacency bitmask rows.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Graph {
    n: usize,
    adj: Vec<u32>,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Self { n, adj: vec![0; n] }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut g = Self::empty(n);
        for &(a, b) in edges {
            g.adj[a] |= 1 << b;
            g.adj[b] |= 1 << a;
        }
        g
    }

    pub fn n_vertices(&self) -> usize {
        self.n
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a] >> b & 1 == 1
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for a in 0..self.n {
            for b in (a + 1)..self.n {
                if self.has_edge(a, b) {
                    out.push((a, b));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|r| r.count_ones() as usize).sum::<usize>() / 2
    }

    pub fn neighbors(&self, v: usize) -> u32 {
        self.adj[v]
    }

    /// Toggle every edge inside the neighborhood of `v`.
    pub fn local_complement(&mut self, v: usize) {
        let nb = self.adj[v];
        for i in 0..self.n {
            if nb >> i & 1 == 1 {
                self.adj[i] ^= nb & !(1 << i);
            }
        }
    }

    fn key(&self) -> u64 {
        self.adj
            .iter()
            .enumerate()
            .fold(0u64, |k, (i, &r)| k | (u64::from(r) << (8 * i)))
    }

    /// Sorted degree sequence, a cheap orbit-respecting fingerprint of one
    /// representative.
    pub fn degree_sequence(&self) -> Vec<usize> {
        let mut d: Vec<usize> = self.adj.iter().map(|r| r.count_ones() as usize).collect();
        d.sort_unstable();
        d
    }
}

/// Per-qubit local substitution recorded by the graph reduction: the
/// conjugation `P -> U P U^dag` with `U = S^phase * H^hadamard` (Hadamard
/// applied first).
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub struct LocalOp {
    pub hadamard: bool,
    pub phase: bool,
}

/// A commuting class in graph-state canonical form: the class stabilizer
/// equals the graph stabilizer `{X_v Z_N(v)}` after the recorded per-qubit
/// local substitutions.
#[derive(Clone, Debug)]
pub struct GraphForm {
    pub graph: Graph,
    pub local_ops: Vec<LocalOp>,
}

/// Local-op action on a symplectic pair in block-local bit layout
/// (bit `q` = qubit `q`).
fn apply_local(xbits: u64, zbits: u64, ops: &[LocalOp]) -> (u64, u64) {
    let (mut x, mut z) = (xbits, zbits);
    for (q, op) in ops.iter().enumerate() {
        let bit = 1u64 << q;
        if op.hadamard {
            let xq = x & bit;
            let zq = z & bit;
            x = (x & !bit) | zq;
            z = (z & !bit) | xq;
        }
        if op.phase {
            z ^= x & bit;
        }
    }
    (x, z)
}

/// GF(2) span as a set of symplectic vectors, for group comparisons.
fn gf2_span(vectors: &[(u64, u64)]) -> HashSet<(u64, u64)> {
    let mut span = HashSet::from([(0u64, 0u64)]);
    for &(x, z) in vectors {
        let ext: Vec<(u64, u64)> = span.iter().map(|&(a, b)| (a ^ x, b ^ z)).collect();
        span.extend(ext);
    }
    span
}

/// Reduces a commuting class to graph-state canonical form.
///
/// Binary Gaussian elimination on the generator check matrix; Hadamard-type
/// substitutions are toggled on pivot-failure columns until the X block is
/// invertible; the symmetrized `Z X^-1` is the adjacency, with phase-type
/// substitutions absorbing its diagonal. Verified against the graph
/// stabilizer before returning.
pub fn graph_form(row: &CommutingSet) -> Result<GraphForm> {
    let n = row.n_qubits();
    if n > MAX_ORBIT_QUBITS {
        return Err(Error::SizeGuard {
            what: "graph reduction",
            n,
            max: MAX_ORBIT_QUBITS,
        });
    }
    // Generator check matrix in block-local layout: bit q = qubit q+1.
    let to_local = |bits: u64| -> u64 {
        let mut out = 0u64;
        for q in 0..n {
            out |= (bits >> (n - 1 - q) & 1) << q;
        }
        out
    };
    let mut xm: Vec<u64> = Vec::with_capacity(n);
    let mut zm: Vec<u64> = Vec::with_capacity(n);
    let originals: Vec<(u64, u64)> = row
        .generators()
        .map(|g| (to_local(g.x_bits()), to_local(g.z_bits())))
        .collect();
    for &(x, z) in &originals {
        xm.push(x);
        zm.push(z);
    }
    let mut had = vec![false; n];

    let pivot_columns = |m: &[u64]| -> Vec<usize> {
        let mut rows = m.to_vec();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..n {
            if let Some(pr) = (r..rows.len()).find(|&i| rows[i] >> c & 1 == 1) {
                rows.swap(r, pr);
                for i in 0..rows.len() {
                    if i != r && rows[i] >> c & 1 == 1 {
                        rows[i] ^= rows[r];
                    }
                }
                pivots.push(c);
                r += 1;
            }
        }
        pivots
    };

    let mut passes = 0;
    loop {
        let pivots = pivot_columns(&xm);
        if pivots.len() == n {
            break;
        }
        passes += 1;
        if passes > n + 1 {
            return Err(Error::Internal(
                "X block cannot be made invertible; generators are not a stabilizer".into(),
            ));
        }
        for c in 0..n {
            if !pivots.contains(&c) {
                let bit = 1u64 << c;
                for r in 0..n {
                    let xq = xm[r] & bit;
                    let zq = zm[r] & bit;
                    xm[r] = (xm[r] & !bit) | zq;
                    zm[r] = (zm[r] & !bit) | xq;
                }
                had[c] = !had[c];
            }
        }
    }

    // Invert X over GF(2): eliminate [X | I] -> [I | X^-1].
    let mut aug: Vec<(u64, u64)> = xm
        .iter()
        .enumerate()
        .map(|(i, &x)| (x, 1u64 << i))
        .collect();
    for c in 0..n {
        let pr = (c..n)
            .find(|&i| aug[i].0 >> c & 1 == 1)
            .ok_or_else(|| Error::Internal("X block singular after reduction".into()))?;
        aug.swap(c, pr);
        for i in 0..n {
            if i != c && aug[i].0 >> c & 1 == 1 {
                let (px, pi) = aug[c];
                aug[i].0 ^= px;
                aug[i].1 ^= pi;
            }
        }
    }
    // gamma = X^-1 Z  (row i of X^-1 combines generator rows of Z)
    let mut gamma: Vec<u64> = vec![0; n];
    for (i, g) in gamma.iter_mut().enumerate() {
        let comb = aug[i].1;
        for r in 0..n {
            if comb >> r & 1 == 1 {
                *g ^= zm[r];
            }
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (gamma[i] >> j & 1) != (gamma[j] >> i & 1) {
                return Err(Error::Internal("adjacency candidate not symmetric".into()));
            }
        }
    }
    let mut local_ops: Vec<LocalOp> = had
        .iter()
        .map(|&h| LocalOp {
            hadamard: h,
            phase: false,
        })
        .collect();
    let mut adj = vec![0u32; n];
    for i in 0..n {
        if gamma[i] >> i & 1 == 1 {
            local_ops[i].phase = true;
        }
        adj[i] = (gamma[i] & !(1 << i)) as u32;
    }
    let graph = Graph { n, adj };

    // Invariant: local-op image of the class group equals the graph group.
    let transformed: Vec<(u64, u64)> = originals
        .iter()
        .map(|&(x, z)| apply_local(x, z, &local_ops))
        .collect();
    let graph_gens: Vec<(u64, u64)> = (0..n)
        .map(|v| (1u64 << v, u64::from(graph.neighbors(v))))
        .collect();
    if gf2_span(&transformed) != gf2_span(&graph_gens) {
        return Err(Error::Internal(
            "graph stabilizer does not match the reduced class".into(),
        ));
    }
    Ok(GraphForm { graph, local_ops })
}

/// Breadth-first closure of a graph under local complementation.
fn lc_orbit<F: FnMut(&Graph)>(start: &Graph, mut visit: F) -> Result<()> {
    if start.n_vertices() > MAX_ORBIT_QUBITS {
        return Err(Error::SizeGuard {
            what: "local-complementation orbit",
            n: start.n_vertices(),
            max: MAX_ORBIT_QUBITS,
        });
    }
    let mut seen = HashSet::from([start.key()]);
    let mut queue = VecDeque::from([start.clone()]);
    visit(start);
    while let Some(g) = queue.pop_front() {
        for v in 0..g.n_vertices() {
            let mut h = g.clone();
            h.local_complement(v);
            if seen.insert(h.key()) {
                visit(&h);
                queue.push_back(h);
            }
        }
    }
    Ok(())
}

/// Minimum edge count over the local-complementation orbit.
pub fn lc_orbit_min_edges(graph: &Graph) -> Result<usize> {
    let mut best = usize::MAX;
    lc_orbit(graph, |g| best = best.min(g.edge_count()))?;
    Ok(best)
}

/// A minimum-edge orbit representative together with the complementation
/// sequence leading to it from the input graph.
pub fn lc_orbit_min_representative(graph: &Graph) -> Result<(Graph, Vec<usize>)> {
    if graph.n_vertices() > MAX_ORBIT_QUBITS {
        return Err(Error::SizeGuard {
            what: "local-complementation orbit",
            n: graph.n_vertices(),
            max: MAX_ORBIT_QUBITS,
        });
    }
    let mut prev: HashMap<u64, Option<(u64, usize)>> = HashMap::from([(graph.key(), None)]);
    let mut queue = VecDeque::from([graph.clone()]);
    let mut best = (graph.edge_count(), graph.key(), graph.clone());
    while let Some(g) = queue.pop_front() {
        for v in 0..g.n_vertices() {
            let mut h = g.clone();
            h.local_complement(v);
            let k = h.key();
            if let std::collections::hash_map::Entry::Vacant(e) = prev.entry(k) {
                e.insert(Some((g.key(), v)));
                if h.edge_count() < best.0 {
                    best = (h.edge_count(), k, h.clone());
                }
                queue.push_back(h);
            }
        }
    }
    let mut path = Vec::new();
    let mut cursor = best.1;
    while let Some(&Some((parent, v))) = prev.get(&cursor) {
        path.push(v);
        cursor = parent;
    }
    path.reverse();
    Ok((best.2, path))
}

/// Orbit fingerprint: sorted multiset of degree sequences over the orbit.
/// Distinguishes local-equivalence classes without naming them.
pub fn lc_orbit_fingerprint(graph: &Graph) -> Result<Vec<Vec<usize>>> {
    let mut seqs = Vec::new();
    lc_orbit(graph, |g| seqs.push(g.degree_sequence()))?;
    seqs.sort();
    Ok(seqs)
}

/// Minimal CNOT count of one basis: the sum over factorization blocks of the
/// minimum LC-orbit edge count of the block's graph form. Singleton blocks
/// contribute nothing.
pub fn row_cnot_count(row: &CommutingSet) -> Result<usize> {
    let structure = factorization_structure(row)?;
    let mut total = 0;
    for block in structure.blocks() {
        if block.len() == 1 {
            continue;
        }
        let sub = row.restrict(block)?;
        let form = graph_form(&sub)?;
        total += lc_orbit_min_edges(&form.graph)?;
    }
    Ok(total)
}

/// Complexity score of a whole MUB set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ComplexityReport {
    pub structure: StructureLabel,
    pub per_row_cnots: Vec<usize>,
    /// Total CNOT count over all bases.
    pub total: usize,
}

pub fn complexity(set: &MubSet) -> Result<ComplexityReport> {
    let per_row_cnots = set
        .rows()
        .iter()
        .map(row_cnot_count)
        .collect::<Result<Vec<_>>>()?;
    let total = per_row_cnots.iter().sum();
    Ok(ComplexityReport {
        structure: structure_label(set)?,
        per_row_cnots,
        total,
    })
}

/// Complexity in nats at a given CNOT process fidelity:
/// `sum_j n_j * ln(1/phi)`.
pub fn complexity_nats(report: &ComplexityReport, phi_cnot: f64) -> Result<f64> {
    if !(phi_cnot > 0.0 && phi_cnot <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "CNOT fidelity must lie in (0, 1], got {phi_cnot}"
        )));
    }
    Ok(report.total as f64 * (1.0 / phi_cnot).ln())
}
