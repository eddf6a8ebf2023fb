//! Constrained feedback-based quantum optimization on an exact statevector
//! simulator.
//!
//! The crate takes a quadratic constrained binary optimization problem,
//! compiles its objective and squared equality constraints to diagonal Pauli
//! sums, assembles the constraint operator `L = H_c + sum_j gamma_j H_p^(j)`,
//! and grows a layered circuit `prod_k M(zeta_k) C` whose parameters are
//! assigned by a Lyapunov feedback law evaluated against `L`.
//!
//! Modules, bottom-up:
//!
//! - [`problem`]: binary polynomials, QCBO problems, canonicalization.
//! - [`pauli`]: Pauli strings, Pauli sums, commutators, Ising compilation.
//! - [`operators`]: cost/penalty Hamiltonians, the constraint operator and
//!   its ground-state diagnostics.
//! - [`statevector`]: dense amplitudes, gates, matrix-free expectations.
//! - [`controllers`]: the feedback laws.
//! - [`engine`]: the layer loop and per-layer records.
//! - [`oracle`]: brute-force references and performance metrics.

pub mod controllers;
pub mod engine;
pub mod error;
pub mod operators;
pub mod oracle;
pub mod pauli;
pub mod problem;
pub mod statevector;

pub use controllers::{ControllerKind, ControllerSpec};
pub use engine::{run, ControlArgument, LayerRecord, Mode, RunConfig, RunTrace};
pub use error::{Error, Result};
pub use operators::ConstraintOperator;
pub use pauli::{Pauli, PauliString, PauliSum};
pub use problem::{BinaryPolynomial, QcboProblem};
pub use statevector::StateVector;

/// Basis index of a bit vector; qubit 1 (`bits[0]`) is the most significant bit.
pub fn basis_index(bits: &[u8]) -> usize {
    bits.iter().fold(0usize, |acc, &b| (acc << 1) | (b as usize & 1))
}

/// Inverse of [`basis_index`].
pub fn index_bits(index: usize, n: usize) -> Vec<u8> {
    (0..n).map(|j| ((index >> (n - 1 - j)) & 1) as u8).collect()
}

/// Renders a bit vector as e.g. `"001"`.
pub fn bit_string(bits: &[u8]) -> String {
    bits.iter().map(|&b| if b == 0 { '0' } else { '1' }).collect()
}
