//! Electronic band structures of tight-binding crystals from a variational
//! quantum deflation loop that needs only three measurement settings per
//! cost evaluation, whatever the number of orbitals.
//!
//! The pipeline is:
//!
//! 1. [`tbmodel`]: a tight-binding model gives a Hermitian Bloch matrix
//!    `H(k)` at every point of a high-symmetry path, plus exact bands.
//! 2. [`pauli`]: `H(k)` maps onto a qubit Hamiltonian with one qubit per
//!    orbital; the conventional `2N + 1` qubit-wise commuting grouping is
//!    kept as the comparison baseline.
//! 3. [`simulator`]: a Hamming-weight preserving ansatz is prepared on a
//!    dense statevector and sampled shot by shot.
//! 4. [`protocol`]: the `Z`, `XX` and `XY` settings give `|a_j|^2` and the
//!    Pauli correlators `C_jl`; same-parity pairs come from the product rule.
//! 5. [`vqd`]: deflation sweeps every level along the path.
//!
//! [`bench`] reproduces the correlator statistics and circuit-execution
//! studies, [`report`] writes CSV/SVG/JSON artifacts and [`validation`]
//! runs the analytic invariant batteries.

pub mod bench;
pub mod error;
pub mod models;
pub mod optimizer;
pub mod pauli;
pub mod protocol;
pub mod report;
pub mod seed;
pub mod simulator;
pub mod tbmodel;
pub mod validation;
pub mod vqd;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
