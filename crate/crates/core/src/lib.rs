//! Dynamical invariants and cyclic phases of time-dependent Hamiltonians in
//! truncated Hilbert spaces (ħ = 1).
//!
//! - [`linalg`]: dense complex operators, Hermitian eigensolver, exponentials.
//! - [`propagator`]: Hamiltonian schedules and fourth-order unitary evolution.
//! - [`invariant`]: invariant paths, smooth eigenframes, gauge transformations.
//! - [`phases`]: dynamical and geometric phases, Abelian and non-Abelian.
//! - [`cranked`]: cranked Hamiltonians and the family sharing their invariant.
//! - [`oscillator`]: the cranked generalized harmonic oscillator in Fock space.
//! - [`scenario`]: the oscillator phase pipeline end to end.
//! - `cli` (feature `cli`): TOML-driven scenario runner.

#[cfg(feature = "cli")]
pub mod cli;
pub mod cranked;
pub mod error;
pub mod grid;
pub mod invariant;
pub mod linalg;
pub mod oscillator;
pub mod phases;
pub mod propagator;
pub mod scenario;
