//! Direct matrix evaluation of the truncated commutator expansions: the
//! same term lists as the operator-algebra path, computed as explicit
//! matrix products over the full Fock space and projected onto the
//! active-space determinants. Used as ground truth for the `wick`
//! pipeline.

use super::basis::DeterminantBasis;
use super::extract::extract_body_rank;
use super::matrix::{hamiltonian_to_matrix, normal_ordered_to_matrix, SparseOperatorMatrix};
use super::OracleError;
use crate::active_space::ActiveSpace;
use crate::spin_orbital::{reference_energy, SpinOrbitalHamiltonian};
use crate::wick::{BchScheme, InnerOperator, NormalOrderedOperator};
use ndarray::{Array2, Array4};
use std::collections::BTreeMap;
use std::sync::Arc;

/// Dense-product feasibility cap (full Fock space of 2^n determinants).
pub const BCH_ORACLE_MAX_SPIN_ORBITALS: usize = 12;

fn commutator(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    a.dot(b) - b.dot(a)
}

/// Full-Fock-space matrices of H_N and F_N built by elementary action
/// (no shared code with the wick contraction engine).
fn hn_fn_matrices(
    h: &SpinOrbitalHamiltonian,
    basis: &Arc<DeterminantBasis>,
) -> Result<(Array2<f64>, Array2<f64>), OracleError> {
    let n = basis.len();
    let e_ref = reference_energy(h);
    let mut m_hn = hamiltonian_to_matrix(h, basis)?.to_dense();
    for i in 0..n {
        m_hn[[i, i]] -= e_ref;
    }
    let ns = h.n_spin_orbitals;
    let fock = h.fock();
    let f_as_h = SpinOrbitalHamiltonian {
        n_spin_orbitals: ns,
        h: fock.clone(),
        v_antisym: Array4::zeros((ns, ns, ns, ns)),
        e_nuclear: 0.0,
        reference_occupation: h.reference_occupation.clone(),
    };
    let mut m_fn = hamiltonian_to_matrix(&f_as_h, basis)?.to_dense();
    let f_vacuum: f64 = h.reference_occupation.iter().map(|&i| fock[[i, i]]).sum();
    for i in 0..n {
        m_fn[[i, i]] -= f_vacuum;
    }
    Ok((m_hn, m_fn))
}

/// Evaluates the scheme's nested commutators as matrix products, applies
/// body-rank extraction when the scheme truncates below rank 4, and
/// returns the matrix over active-space determinants (same electron count
/// and Sz as the reference) together with that determinant basis.
pub fn bch_matrix_oracle(
    h: &SpinOrbitalHamiltonian,
    sigma: &NormalOrderedOperator,
    scheme: BchScheme,
    space: &ActiveSpace,
) -> Result<(Arc<DeterminantBasis>, Array2<f64>), OracleError> {
    let ns = h.n_spin_orbitals;
    if ns > BCH_ORACLE_MAX_SPIN_ORBITALS {
        return Err(OracleError::TooLarge {
            n_spin_orbitals: ns,
            cap: BCH_ORACLE_MAX_SPIN_ORBITALS,
        });
    }
    let basis = Arc::new(DeterminantBasis::full_fock(ns)?);
    let (m_hn, m_fn) = hn_fn_matrices(h, &basis)?;
    let m_sigma = normal_ordered_to_matrix(sigma, &basis)?.to_dense();

    let mut total = m_hn.clone();
    for term in scheme.commutator_terms() {
        let mut current = match term.inner {
            InnerOperator::FullHamiltonian => m_hn.clone(),
            InnerOperator::FockOnly => m_fn.clone(),
        };
        for _ in 0..term.depth {
            current = commutator(&current, &m_sigma);
        }
        total = total + current * term.prefactor;
    }

    let n_elec = h.reference_occupation.len();
    let sz2 = 0;
    let active_mask: u64 = space
        .active_spin_orbitals
        .iter()
        .fold(0u64, |m, &p| m | (1 << p));
    let active_basis = Arc::new(DeterminantBasis::active_sector(ns, n_elec, sz2, active_mask));

    let projected = if scheme.final_body_rank() < 4 {
        // Truncate the true operator content by extraction and rebuild.
        let mut map = BTreeMap::new();
        for ((r, c), &v) in total.indexed_iter() {
            if v != 0.0 {
                map.insert((r, c), v);
            }
        }
        let sparse = SparseOperatorMatrix::from_map(basis.clone(), map);
        let truncated = extract_body_rank(&sparse, scheme.final_body_rank(), &h.reference_occupation)?;
        normal_ordered_to_matrix(&truncated, &active_basis)?.to_dense()
    } else {
        let dim = active_basis.len();
        let mut out = Array2::zeros((dim, dim));
        for (r_out, &dr) in active_basis.determinants.iter().enumerate() {
            let r_in = basis.position(dr).unwrap();
            for (c_out, &dc) in active_basis.determinants.iter().enumerate() {
                let c_in = basis.position(dc).unwrap();
                out[[r_out, c_out]] = total[[r_in, c_in]];
            }
        }
        out
    };
    Ok((active_basis, projected))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fcidump::IntegralSet;
    use crate::spin_orbital::to_spin_orbitals;

    fn tiny_h() -> SpinOrbitalHamiltonian {
        let mut set = IntegralSet::zeros(2, 2, 0);
        set.e_nuclear = 0.5;
        set.h_one[[0, 0]] = -1.2;
        set.h_one[[1, 1]] = -0.4;
        set.h_one[[0, 1]] = -0.05;
        set.h_one[[1, 0]] = -0.05;
        set.eri_chem[[0, 0, 0, 0]] = 0.6;
        set.eri_chem[[1, 1, 1, 1]] = 0.55;
        set.eri_chem[[0, 0, 1, 1]] = 0.35;
        set.eri_chem[[1, 1, 0, 0]] = 0.35;
        for &(a, b, c, d) in &[
            (1usize, 0usize, 1usize, 0usize),
            (0, 1, 1, 0),
            (1, 0, 0, 1),
            (0, 1, 0, 1),
        ] {
            set.eri_chem[[a, b, c, d]] = 0.15;
        }
        to_spin_orbitals(&set).unwrap()
    }

    #[test]
    fn zero_sigma_gives_bare_active_hamiltonian() {
        let h = tiny_h();
        let sigma = NormalOrderedOperator::new(2, 2);
        let space = ActiveSpace::full(2);
        let (basis, m) = bch_matrix_oracle(&h, &sigma, BchScheme::A7, &space).unwrap();
        // must equal the bare H_N on the sector
        let e_ref = reference_energy(&h);
        let sector = Arc::new(DeterminantBasis::sector(4, 2, 0));
        let mut bare = hamiltonian_to_matrix(&h, &sector).unwrap().to_dense();
        for i in 0..sector.len() {
            bare[[i, i]] -= e_ref;
        }
        assert_eq!(basis.len(), sector.len());
        let dev = (&m - &bare).iter().fold(0.0f64, |mm, v| mm.max(v.abs()));
        assert!(dev < 1e-10, "deviation {dev}");
    }

    #[test]
    fn too_large_rejected() {
        let mut set = IntegralSet::zeros(8, 4, 0);
        set.h_one[[0, 0]] = -1.0;
        let h = to_spin_orbitals(&set).unwrap();
        let sigma = NormalOrderedOperator::new(4, 12);
        let space = ActiveSpace::full(8);
        assert!(matches!(
            bch_matrix_oracle(&h, &sigma, BchScheme::A4, &space),
            Err(OracleError::TooLarge { .. })
        ));
    }
}
