//! Stochastic projector Monte Carlo (FCIQMC) with tree-tensor-network trial
//! wave functions.
//!
//! The crate is organized around a small set of building blocks:
//!
//! * [`pauli`] — Pauli-string algebra, Hamiltonian containers, sparse
//!   matrix-element access, and the inter-subsystem interaction metric.
//! * [`models`] — built-in model Hamiltonians (Heisenberg chain, layered
//!   Hubbard cell) and the Jordan-Wigner fermion-to-qubit mapping.
//! * [`statevector`] — dense statevector simulation of small circuits and the
//!   real-amplitude ansatz.
//! * [`htn`] — the two-layer tree tensor network: lower/upper tensors,
//!   transition-matrix contraction, overlaps, and dense expansion.
//! * [`vqe`] — variational energy minimization for plain circuits and for the
//!   tree-tensor-network ansatz.
//! * [`fciqmc`] — the walker dynamics: spawning, death/cloning, annihilation,
//!   variable shift control, and the mixed-energy estimator.
//! * [`oracle`] — dense exact diagonalization and derived diagnostics used to
//!   verify everything else.

pub mod error;
pub mod fciqmc;
pub mod htn;
pub mod models;
pub mod oracle;
pub mod pauli;
pub mod statevector;
pub mod vqe;

pub use error::{Error, Result};
pub use fciqmc::{QmcConfig, ReferenceWavefunction, RunTrace, WalkerPopulation};
pub use htn::{HtnState, TransitionMatrix};
pub use pauli::{Decomposition, PauliOp, PauliString, PauliSum};
pub use statevector::{Circuit, ParameterVector, Statevector};
pub use vqe::{OptimizerConfig, VqeResult};
