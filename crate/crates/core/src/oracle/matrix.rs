//! Sparse matrices of operators over determinant bases, built by direct
//! second-quantized action with fermionic sign bookkeeping.

use super::basis::DeterminantBasis;
use super::OracleError;
use crate::spin_orbital::SpinOrbitalHamiltonian;
use crate::wick::NormalOrderedOperator;
use ndarray::Array2;
use std::collections::BTreeMap;
use std::sync::Arc;

/// Row/column/value triplets over a determinant basis. Triplets are sorted
/// by (row, col) and never store explicit zeros.
#[derive(Debug, Clone)]
pub struct SparseOperatorMatrix {
    pub basis: Arc<DeterminantBasis>,
    pub triplets: Vec<(usize, usize, f64)>,
}

impl SparseOperatorMatrix {
    pub fn from_map(basis: Arc<DeterminantBasis>, map: BTreeMap<(usize, usize), f64>) -> Self {
        let triplets = map
            .into_iter()
            .filter(|&(_, v)| v != 0.0)
            .map(|((r, c), v)| (r, c, v))
            .collect();
        Self { basis, triplets }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let n = self.dim();
        let mut m = Array2::zeros((n, n));
        for &(r, c, v) in &self.triplets {
            m[[r, c]] += v;
        }
        m
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for &(r, c, v) in &self.triplets {
            y[r] += v * x[c];
        }
    }

    /// Largest |M - M^T| entry.
    pub fn symmetry_deviation(&self) -> f64 {
        let mut map: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for &(r, c, v) in &self.triplets {
            *map.entry((r, c)).or_insert(0.0) += v;
        }
        let mut dev = 0.0f64;
        for (&(r, c), &v) in &map {
            let vt = map.get(&(c, r)).copied().unwrap_or(0.0);
            dev = dev.max((v - vt).abs());
        }
        dev
    }

    /// Largest |M + M^T| entry (anti-Hermiticity check).
    pub fn antisymmetry_deviation(&self) -> f64 {
        let mut map: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for &(r, c, v) in &self.triplets {
            *map.entry((r, c)).or_insert(0.0) += v;
        }
        let mut dev = 0.0f64;
        for (&(r, c), &v) in &map {
            let vt = map.get(&(c, r)).copied().unwrap_or(0.0);
            dev = dev.max((v + vt).abs());
        }
        dev
    }
}

/// Parity of occupied orbitals below `p` in `det`.
#[inline]
pub fn sign_below(det: u64, p: usize) -> f64 {
    if (det & ((1u64 << p) - 1)).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Applies an elementary operator string (rightmost op first) to a
/// determinant; returns the resulting determinant and sign, or None when
/// annihilated.
pub fn apply_string(det: u64, ops: &[(bool, usize)]) -> Option<(u64, f64)> {
    let mut d = det;
    let mut sign = 1.0;
    for &(creation, p) in ops.iter().rev() {
        let bit = 1u64 << p;
        if creation {
            if d & bit != 0 {
                return None;
            }
            sign *= sign_below(d, p);
            d |= bit;
        } else {
            if d & bit == 0 {
                return None;
            }
            sign *= sign_below(d, p);
            d &= !bit;
        }
    }
    Some((d, sign))
}

/// Matrix of the bare Hamiltonian (e_nuclear on the diagonal, one- plus
/// two-electron action).
pub fn hamiltonian_to_matrix(
    h: &SpinOrbitalHamiltonian,
    basis: &Arc<DeterminantBasis>,
) -> Result<SparseOperatorMatrix, OracleError> {
    let ns = h.n_spin_orbitals;
    if basis.n_spin_orbitals != ns {
        return Err(OracleError::IndexOutOfRange {
            index: ns,
            n_spin_orbitals: basis.n_spin_orbitals,
        });
    }
    let mut map: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (col, &det) in basis.determinants.iter().enumerate() {
        if h.e_nuclear != 0.0 {
            *map.entry((col, col)).or_insert(0.0) += h.e_nuclear;
        }
        let occ: Vec<usize> = (0..ns).filter(|&p| det >> p & 1 == 1).collect();
        // one-body
        for &q in &occ {
            let s1 = sign_below(det, q);
            let d1 = det & !(1 << q);
            for p in 0..ns {
                if d1 >> p & 1 == 1 {
                    continue;
                }
                let val = h.h[[p, q]];
                if val == 0.0 {
                    continue;
                }
                let d2 = d1 | (1 << p);
                if let Some(row) = basis.position(d2) {
                    *map.entry((row, col)).or_insert(0.0) += s1 * sign_below(d1, p) * val;
                }
            }
        }
        // two-body: 1/4 sum <pq||rs> a+_p a+_q a_s a_r
        for &r in &occ {
            let s1 = sign_below(det, r);
            let d1 = det & !(1 << r);
            for &s in &occ {
                if s == r {
                    continue;
                }
                let s2 = sign_below(d1, s);
                let d2 = d1 & !(1 << s);
                for q in 0..ns {
                    if d2 >> q & 1 == 1 {
                        continue;
                    }
                    let s3 = sign_below(d2, q);
                    let d3 = d2 | (1 << q);
                    for p in 0..ns {
                        if d3 >> p & 1 == 1 {
                            continue;
                        }
                        let val = h.v_antisym[[p, q, r, s]];
                        if val == 0.0 {
                            continue;
                        }
                        let d4 = d3 | (1 << p);
                        if let Some(row) = basis.position(d4) {
                            *map.entry((row, col)).or_insert(0.0) +=
                                0.25 * s1 * s2 * s3 * sign_below(d3, p) * val;
                        }
                    }
                }
            }
        }
    }
    Ok(SparseOperatorMatrix::from_map(basis.clone(), map))
}

/// Matrix of a normal-ordered operator: the scalar rides the diagonal and
/// every block entry is applied as its (sign-corrected) elementary string.
pub fn normal_ordered_to_matrix(
    op: &NormalOrderedOperator,
    basis: &Arc<DeterminantBasis>,
) -> Result<SparseOperatorMatrix, OracleError> {
    let ns = op.n_spin_orbitals();
    if basis.n_spin_orbitals != ns {
        return Err(OracleError::IndexOutOfRange {
            index: ns,
            n_spin_orbitals: basis.n_spin_orbitals,
        });
    }
    let strings = op.elementary_strings();
    let mut map: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (col, &det) in basis.determinants.iter().enumerate() {
        if op.scalar != 0.0 {
            *map.entry((col, col)).or_insert(0.0) += op.scalar;
        }
        for (coeff, ops) in &strings {
            if let Some((out, sign)) = apply_string(det, ops) {
                if let Some(row) = basis.position(out) {
                    *map.entry((row, col)).or_insert(0.0) += coeff * sign;
                }
            }
        }
    }
    Ok(SparseOperatorMatrix::from_map(basis.clone(), map))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wick::BlockKey;
    use ndarray::{ArrayD, IxDyn};

    #[test]
    fn number_operator_is_diagonal_bit() {
        // n_0 = a+_0 a_0 as a one-body Hamiltonian h_00 = 1
        let ns = 3;
        let mut h = SpinOrbitalHamiltonian {
            n_spin_orbitals: ns,
            h: ndarray::Array2::zeros((ns, ns)),
            v_antisym: ndarray::Array4::zeros((ns, ns, ns, ns)),
            e_nuclear: 0.0,
            reference_occupation: vec![],
        };
        h.h[[0, 0]] = 1.0;
        let basis = Arc::new(DeterminantBasis::full_fock(ns).unwrap());
        let m = hamiltonian_to_matrix(&h, &basis).unwrap();
        let dense = m.to_dense();
        for (i, &det) in basis.determinants.iter().enumerate() {
            for j in 0..basis.len() {
                let expect = if i == j && det & 1 == 1 { 1.0 } else { 0.0 };
                assert_eq!(dense[[i, j]], expect);
            }
        }
    }

    #[test]
    fn apply_string_signs() {
        // a+_1 a_0 on |0> (det 0b001) -> |1> with + sign
        assert_eq!(apply_string(0b001, &[(true, 1), (false, 0)]), Some((0b010, 1.0)));
        // a+_0 on |1> crosses nothing below 0
        assert_eq!(apply_string(0b010, &[(true, 0)]), Some((0b011, 1.0)));
        // a+_1 on |0 occupied> crosses orbital 0
        assert_eq!(apply_string(0b001, &[(true, 1)]), Some((0b011, -1.0)));
        // annihilating an empty orbital kills the ket
        assert_eq!(apply_string(0b001, &[(false, 1)]), None);
    }

    #[test]
    fn normal_ordered_single_excitation_matrix() {
        // C {a+_1 a_0} on 1 occ + 1 virt, full Fock space of 2 orbitals.
        let mut op = NormalOrderedOperator::new(1, 1);
        let mut t = ArrayD::zeros(IxDyn(&[1, 1]));
        t[[0, 0]] = 0.8;
        op.set_block(
            BlockKey {
                rank: 1,
                upper_particles: 1,
                lower_particles: 0,
            },
            t,
        );
        let basis = Arc::new(DeterminantBasis::full_fock(2).unwrap());
        let m = normal_ordered_to_matrix(&op, &basis).unwrap().to_dense();
        // dets: 0b00, 0b01, 0b10, 0b11; action maps 0b01 -> 0b10
        assert_eq!(m[[2, 1]], 0.8);
        let total: f64 = m.iter().map(|v| v.abs()).sum();
        assert_eq!(total, 0.8);
    }
}
