//! Mutually-unbiased-basis (MUB) measurement schemes for small qubit registers.
//!
//! The crate builds complete sets of 2^N + 1 mutually unbiased bases for
//! N = 2..=5 qubits out of commuting classes of Pauli strings, scores each set
//! by the number of CNOT gates needed to realize its measurement circuits,
//! synthesizes and verifies those circuits over the {Rx, Ry, Rz at pi/2, CNOT}
//! gate alphabet, and simulates full quantum-state tomography (MUB scheme vs.
//! the standard 3^N local-setting scheme) under depolarizing gate noise and
//! classical readout flips, reconstructing density matrices by linear
//! inversion with an optional projection back to the physical state space.
//!
//! Modules follow the pipeline:
//!
//! - [`pauli`]: exact N-qubit Pauli arithmetic in binary symplectic form
//! - [`mub`]: commuting classes, table expansion from seed rows, MUB
//!   verification, and the exhaustive partition search for N <= 3
//! - [`structure`]: entanglement factorization of each basis, graph-state
//!   canonical forms, local-complementation orbits, CNOT-count scoring
//! - [`circuit`]: measurement-circuit representation, dense unitary
//!   simulation, circuit synthesis and row derivation
//! - [`tables`]: the built-in seeded tables and their golden files
//! - [`tomography`]: probability models, sampling with noise, linear
//!   inversion, physical projection, and error metrics

// Table and matrix code indexes 1-based rows/columns to match the data
// files; iterator rewrites obscure that.
#![allow(clippy::needless_range_loop)]

pub mod circuit;
pub mod error;
pub mod mub;
pub mod pauli;
pub mod structure;
pub mod tables;
pub mod tomography;

pub use error::{Error, Result};
