//! Particle-hole normal ordering of the bare Hamiltonian.

use super::{BlockKey, NormalOrderedOperator, Space};
use crate::spin_orbital::{reference_energy, SpinOrbitalHamiltonian};
use ndarray::{ArrayD, IxDyn};

/// Splits H into its reference expectation value and the normal-ordered
/// remainder H_N = F_N + V_N (zero scalar): F_N carries the Fock matrix in
/// the rank-1 blocks and V_N the antisymmetrized integrals in the rank-2
/// blocks.
pub fn normal_order_hamiltonian(h: &SpinOrbitalHamiltonian) -> (f64, NormalOrderedOperator) {
    let n_occ = h.n_occupied();
    let n_so = h.n_spin_orbitals;
    let n_virt = n_so - n_occ;
    assert!(
        h.reference_occupation.iter().copied().eq(0..n_occ),
        "reference must occupy the lowest spin orbitals"
    );
    let e_ref = reference_energy(h);
    let mut op = NormalOrderedOperator::new(n_occ, n_virt);
    let f = h.fock();

    for upper_particles in 0..=1usize {
        for lower_particles in 0..=1usize {
            let key = BlockKey {
                rank: 1,
                upper_particles,
                lower_particles,
            };
            let shape = key.shape(n_occ, n_virt);
            let mut t = ArrayD::zeros(IxDyn(&shape));
            for p in 0..shape[0] {
                for q in 0..shape[1] {
                    let gp = op.global_index(key.axis_space(0), p);
                    let gq = op.global_index(key.axis_space(1), q);
                    t[[p, q]] = f[[gp, gq]];
                }
            }
            op.set_block(key, t);
        }
    }

    for upper_particles in 0..=2usize {
        for lower_particles in 0..=2usize {
            let key = BlockKey {
                rank: 2,
                upper_particles,
                lower_particles,
            };
            let shape = key.shape(n_occ, n_virt);
            if shape.iter().any(|&d| d == 0) {
                continue;
            }
            let spaces: Vec<Space> = (0..4).map(|ax| key.axis_space(ax)).collect();
            let mut t = ArrayD::zeros(IxDyn(&shape));
            for p in 0..shape[0] {
                for q in 0..shape[1] {
                    for r in 0..shape[2] {
                        for s in 0..shape[3] {
                            let gp = op.global_index(spaces[0], p);
                            let gq = op.global_index(spaces[1], q);
                            let gr = op.global_index(spaces[2], r);
                            let gs = op.global_index(spaces[3], s);
                            t[[p, q, r, s]] = h.v_antisym[[gp, gq, gr, gs]];
                        }
                    }
                }
            }
            op.set_block(key, t);
        }
    }
    (e_ref, op)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fcidump::IntegralSet;
    use crate::spin_orbital::to_spin_orbitals;

    #[test]
    fn zero_electron_reference_keeps_raw_tensors() {
        let mut set = IntegralSet::zeros(2, 0, 0);
        set.e_nuclear = 0.25;
        set.h_one[[0, 0]] = -1.0;
        set.h_one[[1, 1]] = -0.5;
        set.h_one[[0, 1]] = 0.1;
        set.h_one[[1, 0]] = 0.1;
        set.eri_chem[[0, 0, 0, 0]] = 0.6;
        let h = to_spin_orbitals(&set).unwrap();
        let (e_ref, hn) = normal_order_hamiltonian(&h);
        assert_eq!(e_ref, 0.25);
        // With no electrons, F = h and all indices are particles.
        let key = BlockKey {
            rank: 1,
            upper_particles: 1,
            lower_particles: 1,
        };
        let f = hn.block(&key).unwrap();
        assert_eq!(f[[0, 0]], -1.0);
        assert_eq!(f[[0, 2]], 0.1);
        let key2 = BlockKey {
            rank: 2,
            upper_particles: 2,
            lower_particles: 2,
        };
        let v = hn.block(&key2).unwrap();
        assert_eq!(v[[0, 1, 0, 1]], 0.6);
    }
}
