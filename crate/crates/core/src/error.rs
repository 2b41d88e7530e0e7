//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by the numerical layers of the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A text input (Pauli string or Hamiltonian file) failed to parse.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Pauli string length does not match the declared qubit count.
    #[error("pauli string has length {got}, expected {expected}")]
    StringLength { got: usize, expected: usize },

    /// A character outside {{I, X, Y, Z}} appeared in a Pauli string.
    #[error("illegal pauli character '{0}'")]
    IllegalCharacter(char),

    /// Two objects that must agree on size/decomposition do not.
    #[error("size mismatch: {0}")]
    SizeMismatch(String),

    /// A basis index or qubit index is out of range.
    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: u64, limit: u64 },

    /// A quantity asserted real retained an imaginary residue.
    #[error("imaginary residue {0:.3e} exceeds tolerance")]
    ImaginaryResidue(f64),

    /// Dense storage limit exceeded.
    #[error("system too large for dense work: {0} qubits")]
    SizeLimit(usize),

    /// The mixed-energy denominator fell below its floor.
    #[error("mixed-energy denominator {0:.3e} below floor; reference orthogonal to population")]
    VanishingDenominator(f64),

    /// The walker population died out.
    #[error("walker population extinct at iteration {0}")]
    PopulationExtinct(usize),

    /// Too many consecutive invalid mixed-energy evaluations.
    #[error("mixed energy invalid for {0} consecutive iterations; run aborted")]
    InvalidEnergyStreak(usize),

    /// A configuration value failed validation.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// File I/O failure.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
