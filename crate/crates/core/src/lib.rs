//! Downfolded-Hamiltonian toolkit: FCIDUMP ingestion, coupled-cluster
//! amplitudes, unitary downfolding of molecular Hamiltonians onto active
//! spaces via nested-commutator expansions, a brute-force Fock-space
//! reference implementation, and a Jordan-Wigner statevector backend with
//! an adaptive VQE driver.
//!
//! The crate is organized so that every operator-algebra code path
//! (`wick`, `qubit`, `adapt`) can be cross-checked against the independent
//! determinant-basis machinery in [`oracle`].

pub mod active_space;
pub mod adapt;
pub mod amplitudes;
pub mod fcidump;
pub mod natural_virtuals;
pub mod oracle;
pub mod qubit;
pub mod spin_orbital;
pub mod wick;

pub use active_space::ActiveSpace;
pub use fcidump::IntegralSet;
pub use spin_orbital::SpinOrbitalHamiltonian;
pub use wick::NormalOrderedOperator;
