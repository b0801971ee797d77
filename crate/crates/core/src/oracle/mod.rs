//! Brute-force Fock-space reference implementations.
//!
//! Everything here works on explicit determinant bases and matrices and
//! deliberately shares no contraction code with the `wick` module: it is
//! the ground truth the operator algebra is validated against.

mod basis;
mod bch_oracle;
mod eig;
mod extract;
mod matrix;

pub use basis::DeterminantBasis;
pub use bch_oracle::bch_matrix_oracle;
pub use eig::exact_ground_state;
pub use extract::extract_body_rank;
pub use matrix::{hamiltonian_to_matrix, normal_ordered_to_matrix, SparseOperatorMatrix};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("spin orbital index {index} out of range for {n_spin_orbitals} spin orbitals")]
    IndexOutOfRange { index: usize, n_spin_orbitals: usize },
    #[error("matrix is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("eigensolver failed to converge: {0}")]
    Convergence(String),
    #[error("system too large for the oracle: {n_spin_orbitals} spin orbitals (cap {cap})")]
    TooLarge { n_spin_orbitals: usize, cap: usize },
    #[error("basis lacks determinant {det:#b} required for extraction")]
    InsufficientBasis { det: u64 },
    #[error("empty basis")]
    EmptyBasis,
}
