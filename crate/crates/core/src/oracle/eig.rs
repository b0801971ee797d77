//! Ground-state eigensolvers: dense for small dimensions, Lanczos with
//! full reorthogonalization above.

use super::matrix::SparseOperatorMatrix;
use super::OracleError;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

const DENSE_CUTOFF: usize = 2000;
const RESIDUAL_TOL: f64 = 1e-9;
const HERMITICITY_TOL: f64 = 1e-10;

/// Lowest eigenvalue and unit-norm eigenvector of a Hermitian sparse
/// matrix. The residual ||Mv - Ev|| is verified to 1e-9.
pub fn exact_ground_state(m: &SparseOperatorMatrix) -> Result<(f64, Vec<f64>), OracleError> {
    let n = m.dim();
    if n == 0 {
        return Err(OracleError::EmptyBasis);
    }
    let dev = m.symmetry_deviation();
    if dev > HERMITICITY_TOL {
        return Err(OracleError::NotHermitian(dev));
    }
    let (energy, vector) = if n <= DENSE_CUTOFF {
        dense_ground_state(m)
    } else {
        lanczos_ground_state(m)?
    };
    let mut resid = vec![0.0; n];
    m.matvec(&vector, &mut resid);
    let rnorm: f64 = resid
        .iter()
        .zip(&vector)
        .map(|(r, v)| (r - energy * v).powi(2))
        .sum::<f64>()
        .sqrt();
    if rnorm > RESIDUAL_TOL {
        return Err(OracleError::Convergence(format!(
            "eigenpair residual {rnorm:.3e}"
        )));
    }
    Ok((energy, vector))
}

fn dense_ground_state(m: &SparseOperatorMatrix) -> (f64, Vec<f64>) {
    let n = m.dim();
    let mut dense = DMatrix::<f64>::zeros(n, n);
    for &(r, c, v) in &m.triplets {
        dense[(r, c)] += v;
    }
    // enforce exact symmetry to keep the solver happy
    let sym = (&dense + dense.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut best = 0;
    for i in 1..n {
        if eig.eigenvalues[i] < eig.eigenvalues[best] {
            best = i;
        }
    }
    let v: Vec<f64> = eig.eigenvectors.column(best).iter().copied().collect();
    (eig.eigenvalues[best], v)
}

fn lanczos_ground_state(m: &SparseOperatorMatrix) -> Result<(f64, Vec<f64>), OracleError> {
    let n = m.dim();
    let max_steps = n.min(600);
    let mut rng = ChaCha12Rng::seed_from_u64(0x5eed_1a2c_3e4f_0101);
    let mut q: Vec<DVector<f64>> = Vec::with_capacity(max_steps);
    let mut v0 = DVector::from_fn(n, |_, _| rng.gen::<f64>() - 0.5);
    v0 /= v0.norm();
    q.push(v0);
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut buf = vec![0.0; n];
    let mut last_energy = f64::INFINITY;
    for step in 0..max_steps {
        let qk = q[step].clone();
        m.matvec(qk.as_slice(), &mut buf);
        let mut w = DVector::from_column_slice(&buf);
        let alpha = qk.dot(&w);
        alphas.push(alpha);
        w -= &qk * alpha;
        if step > 0 {
            let prev = &q[step - 1];
            w -= prev * betas[step - 1];
        }
        // full reorthogonalization (twice for numerical robustness)
        for _ in 0..2 {
            for qi in &q {
                let overlap = qi.dot(&w);
                w -= qi * overlap;
            }
        }
        // assemble tridiagonal eigenproblem every few steps
        if step >= 1 && (step % 5 == 0 || step + 1 == max_steps) {
            let k = alphas.len();
            let mut t = DMatrix::<f64>::zeros(k, k);
            for i in 0..k {
                t[(i, i)] = alphas[i];
                if i + 1 < k {
                    t[(i, i + 1)] = betas[i];
                    t[(i + 1, i)] = betas[i];
                }
            }
            let eig = t.symmetric_eigen();
            let mut best = 0;
            for i in 1..k {
                if eig.eigenvalues[i] < eig.eigenvalues[best] {
                    best = i;
                }
            }
            let energy = eig.eigenvalues[best];
            // residual of the Ritz pair
            let mut vec = DVector::<f64>::zeros(n);
            for (i, qi) in q.iter().enumerate() {
                vec += qi * eig.eigenvectors[(i, best)];
            }
            vec /= vec.norm();
            m.matvec(vec.as_slice(), &mut buf);
            let rnorm: f64 = buf
                .iter()
                .zip(vec.iter())
                .map(|(r, v)| (r - energy * v).powi(2))
                .sum::<f64>()
                .sqrt();
            if rnorm <= RESIDUAL_TOL * 0.5 {
                return Ok((energy, vec.iter().copied().collect()));
            }
            if (last_energy - energy).abs() < 1e-15 && rnorm > RESIDUAL_TOL {
                return Err(OracleError::Convergence(format!(
                    "Lanczos stagnated at residual {rnorm:.3e} after {step} steps"
                )));
            }
            last_energy = energy;
        }
        let beta = w.norm();
        if beta < 1e-13 {
            // Krylov space exhausted: diagonalize what we have.
            let k = alphas.len();
            let mut t = DMatrix::<f64>::zeros(k, k);
            for i in 0..k {
                t[(i, i)] = alphas[i];
                if i + 1 < k {
                    t[(i, i + 1)] = betas[i];
                    t[(i + 1, i)] = betas[i];
                }
            }
            let eig = t.symmetric_eigen();
            let mut best = 0;
            for i in 1..k {
                if eig.eigenvalues[i] < eig.eigenvalues[best] {
                    best = i;
                }
            }
            let mut vec = DVector::<f64>::zeros(n);
            for (i, qi) in q.iter().enumerate() {
                vec += qi * eig.eigenvectors[(i, best)];
            }
            vec /= vec.norm();
            return Ok((eig.eigenvalues[best], vec.iter().copied().collect()));
        }
        betas.push(beta);
        q.push(w / beta);
    }
    Err(OracleError::Convergence(
        "Lanczos iteration cap reached".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::DeterminantBasis;
    use std::collections::BTreeMap;
    use std::sync::Arc;

    fn matrix_from_dense(vals: &[&[f64]]) -> SparseOperatorMatrix {
        let n = vals.len();
        // a dummy basis of the right size
        let n_so = (usize::BITS - (n - 1).leading_zeros()) as usize;
        let basis = Arc::new(DeterminantBasis::full_fock(n_so.max(1)).unwrap());
        let mut map = BTreeMap::new();
        for (r, row) in vals.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    map.insert((r, c), v);
                }
            }
        }
        let mut m = SparseOperatorMatrix::from_map(basis.clone(), map);
        // truncate the dummy basis to n rows by construction: the matrix
        // dimension follows the basis, so instead assert sizes line up.
        m.triplets.retain(|&(r, c, _)| r < n && c < n);
        m
    }

    #[test]
    fn diagonal_matrix() {
        let basis = Arc::new(DeterminantBasis::full_fock(2).unwrap());
        let mut map = BTreeMap::new();
        map.insert((0, 0), 3.0);
        map.insert((1, 1), 1.0);
        map.insert((2, 2), 2.0);
        map.insert((3, 3), 5.0);
        let m = SparseOperatorMatrix::from_map(basis, map);
        let (e, v) = exact_ground_state(&m).unwrap();
        assert!((e - 1.0).abs() < 1e-12);
        assert!((v[1].abs() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn two_by_two_offdiagonal() {
        let basis = Arc::new(DeterminantBasis::full_fock(1).unwrap());
        let mut map = BTreeMap::new();
        map.insert((0, 1), 1.0);
        map.insert((1, 0), 1.0);
        let m = SparseOperatorMatrix::from_map(basis, map);
        let (e, v) = exact_ground_state(&m).unwrap();
        assert!((e + 1.0).abs() < 1e-12);
        assert!((v[0].abs() - 1.0 / 2.0f64.sqrt()).abs() < 1e-10);
        assert!((v[0] + v[1]).abs() < 1e-10);
    }

    #[test]
    fn non_hermitian_rejected() {
        let basis = Arc::new(DeterminantBasis::full_fock(1).unwrap());
        let mut map = BTreeMap::new();
        map.insert((0, 1), 1.0);
        let m = SparseOperatorMatrix::from_map(basis, map);
        assert!(matches!(
            exact_ground_state(&m),
            Err(OracleError::NotHermitian(_))
        ));
    }

    #[test]
    fn lanczos_agrees_with_dense() {
        // random sparse symmetric matrix, compare lanczos against dense
        use rand::Rng;
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let n_so = 9; // 512-dim
        let basis = Arc::new(DeterminantBasis::full_fock(n_so).unwrap());
        let n = basis.len();
        let mut map = BTreeMap::new();
        for i in 0..n {
            map.insert((i, i), rng.gen::<f64>() * 4.0 - 2.0);
        }
        for _ in 0..4 * n {
            let i = rng.gen_range(0..n);
            let j = rng.gen_range(0..n);
            if i != j {
                let v = rng.gen::<f64>() - 0.5;
                *map.entry((i, j)).or_insert(0.0) += v;
                *map.entry((j, i)).or_insert(0.0) += v;
            }
        }
        let m = SparseOperatorMatrix::from_map(basis, map);
        let (e_dense, _) = dense_ground_state(&m);
        let (e_lanczos, v) = lanczos_ground_state(&m).unwrap();
        assert!((e_dense - e_lanczos).abs() < 1e-8);
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-10);
    }

    #[test]
    fn ground_state_invariant_under_basis_permutation() {
        let basis = Arc::new(DeterminantBasis::full_fock(2).unwrap());
        let mut map = BTreeMap::new();
        let vals = [
            ((0usize, 0usize), 1.0),
            ((1, 1), -0.5),
            ((0, 1), 0.3),
            ((1, 0), 0.3),
            ((2, 2), 0.7),
            ((3, 3), 2.0),
        ];
        for (k, v) in vals {
            map.insert(k, v);
        }
        let m = SparseOperatorMatrix::from_map(basis.clone(), map);
        let (e1, _) = exact_ground_state(&m).unwrap();
        // permute indices 0<->1
        let mut map2 = BTreeMap::new();
        let p = |i: usize| match i {
            0 => 1,
            1 => 0,
            x => x,
        };
        for (k, v) in vals {
            map2.insert((p(k.0), p(k.1)), v);
        }
        let m2 = SparseOperatorMatrix::from_map(basis, map2);
        let (e2, _) = exact_ground_state(&m2).unwrap();
        assert!((e1 - e2).abs() < 1e-12);
    }

    #[test]
    fn dummy_helper_not_used() {
        // keep matrix_from_dense referenced
        let m = matrix_from_dense(&[&[1.0, 0.0], &[0.0, 2.0]]);
        assert_eq!(m.triplets.len(), 2);
    }
}
