//! Spin-orbital expansion of spatial-orbital integrals.
//!
//! Spin orbitals are interleaved: spatial orbital `p` maps to alpha at
//! `2p` and beta at `2p+1`. The two-electron tensor is stored in
//! antisymmetrized physicists' convention `<pq||rs>`.

use crate::fcidump::IntegralSet;
use ndarray::{Array2, Array4};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpinOrbitalError {
    #[error("invalid state: {0}")]
    InvalidState(String),
}

#[derive(Debug, Clone)]
pub struct SpinOrbitalHamiltonian {
    pub n_spin_orbitals: usize,
    /// One-electron integrals over spin orbitals.
    pub h: Array2<f64>,
    /// Antisymmetrized two-electron integrals `<pq||rs>`.
    pub v_antisym: Array4<f64>,
    pub e_nuclear: f64,
    /// Occupied spin orbitals of the reference determinant, ascending.
    pub reference_occupation: Vec<usize>,
}

/// Spin projection (+1 for alpha, -1 for beta, in units of 1/2) of a spin
/// orbital in the interleaved ordering.
pub fn spin_of(p: usize) -> i32 {
    if p % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Expands an [`IntegralSet`] into interleaved spin orbitals. Restricted
/// closed-shell references only.
pub fn to_spin_orbitals(set: &IntegralSet) -> Result<SpinOrbitalHamiltonian, SpinOrbitalError> {
    if set.n_electrons % 2 != 0 {
        return Err(SpinOrbitalError::InvalidState(format!(
            "ms2={} inconsistent with closed-shell handling of {} electrons",
            set.ms2, set.n_electrons
        )));
    }
    if set.ms2 != 0 {
        return Err(SpinOrbitalError::InvalidState(format!(
            "only ms2=0 (closed-shell) references are supported, got {}",
            set.ms2
        )));
    }
    let n = set.n_spatial;
    let ns = 2 * n;
    let mut h = Array2::zeros((ns, ns));
    for p in 0..ns {
        for q in 0..ns {
            if p % 2 == q % 2 {
                h[[p, q]] = set.h_one[[p / 2, q / 2]];
            }
        }
    }
    let mut v = Array4::zeros((ns, ns, ns, ns));
    for p in 0..ns {
        for q in 0..ns {
            for r in 0..ns {
                for s in 0..ns {
                    // <pq|rs> = (pr|qs) with spin deltas.
                    let direct = if p % 2 == r % 2 && q % 2 == s % 2 {
                        set.eri_chem[[p / 2, r / 2, q / 2, s / 2]]
                    } else {
                        0.0
                    };
                    let exchange = if p % 2 == s % 2 && q % 2 == r % 2 {
                        set.eri_chem[[p / 2, s / 2, q / 2, r / 2]]
                    } else {
                        0.0
                    };
                    v[[p, q, r, s]] = direct - exchange;
                }
            }
        }
    }
    Ok(SpinOrbitalHamiltonian {
        n_spin_orbitals: ns,
        h,
        v_antisym: v,
        e_nuclear: set.e_nuclear,
        reference_occupation: (0..set.n_electrons).collect(),
    })
}

impl SpinOrbitalHamiltonian {
    pub fn n_occupied(&self) -> usize {
        self.reference_occupation.len()
    }

    /// Fock matrix f_pq = h_pq + sum_i <pi||qi> over occupied i.
    pub fn fock(&self) -> Array2<f64> {
        let ns = self.n_spin_orbitals;
        let mut f = self.h.clone();
        for p in 0..ns {
            for q in 0..ns {
                let mut acc = 0.0;
                for &i in &self.reference_occupation {
                    acc += self.v_antisym[[p, i, q, i]];
                }
                f[[p, q]] += acc;
            }
        }
        f
    }

    /// Largest off-diagonal Fock element; zero for canonical orbitals.
    pub fn fock_off_diagonal_norm(&self) -> f64 {
        let f = self.fock();
        let mut m = 0.0f64;
        for p in 0..self.n_spin_orbitals {
            for q in 0..self.n_spin_orbitals {
                if p != q {
                    m = m.max(f[[p, q]].abs());
                }
            }
        }
        m
    }
}

/// <phi0|H|phi0> = e_nuclear + sum_i h_ii + 1/2 sum_ij <ij||ij>.
pub fn reference_energy(h: &SpinOrbitalHamiltonian) -> f64 {
    let mut e = h.e_nuclear;
    for &i in &h.reference_occupation {
        e += h.h[[i, i]];
    }
    for &i in &h.reference_occupation {
        for &j in &h.reference_occupation {
            e += 0.5 * h.v_antisym[[i, j, i, j]];
        }
    }
    e
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_orbital_example() {
        // n_spatial=1, h11=-1.0, (11|11)=0.5
        let mut set = IntegralSet::zeros(1, 2, 0);
        set.h_one[[0, 0]] = -1.0;
        set.eri_chem[[0, 0, 0, 0]] = 0.5;
        let h = to_spin_orbitals(&set).unwrap();
        assert_eq!(h.n_spin_orbitals, 2);
        // <01||01> = (00|11) - 0 = 0.5
        assert_eq!(h.v_antisym[[0, 1, 0, 1]], 0.5);
        // same-spin diagonal vanishes by Pauli antisymmetry
        assert_eq!(h.v_antisym[[0, 0, 0, 0]], 0.0);
        assert_eq!(h.v_antisym[[1, 0, 0, 1]], -0.5);
    }

    #[test]
    fn all_zero_integrals() {
        let set = IntegralSet::zeros(2, 2, 0);
        let h = to_spin_orbitals(&set).unwrap();
        assert!(h.h.iter().all(|&x| x == 0.0));
        assert!(h.v_antisym.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn spin_forbidden_blocks_exactly_zero() {
        let mut set = IntegralSet::zeros(2, 2, 0);
        set.h_one[[0, 1]] = 0.3;
        set.h_one[[1, 0]] = 0.3;
        let h = to_spin_orbitals(&set).unwrap();
        for p in 0..4 {
            for q in 0..4 {
                if p % 2 != q % 2 {
                    assert_eq!(h.h[[p, q]], 0.0);
                }
            }
        }
        assert_eq!(h.h[[0, 2]], 0.3);
    }

    #[test]
    fn antisymmetry_invariant() {
        let mut set = IntegralSet::zeros(2, 2, 0);
        set.eri_chem[[0, 0, 0, 0]] = 0.7;
        set.eri_chem[[1, 1, 1, 1]] = 0.6;
        for &(p, q, r, s, v) in &[(1usize, 0usize, 1usize, 0usize, 0.18)] {
            for &(a, b, c, d) in &[
                (p, q, r, s),
                (q, p, r, s),
                (p, q, s, r),
                (q, p, s, r),
                (r, s, p, q),
                (s, r, p, q),
                (r, s, q, p),
                (s, r, q, p),
            ] {
                set.eri_chem[[a, b, c, d]] = v;
            }
        }
        let h = to_spin_orbitals(&set).unwrap();
        let ns = h.n_spin_orbitals;
        for p in 0..ns {
            for q in 0..ns {
                for r in 0..ns {
                    for s in 0..ns {
                        let v = h.v_antisym[[p, q, r, s]];
                        assert!((v + h.v_antisym[[q, p, r, s]]).abs() < 1e-15);
                        assert!((v + h.v_antisym[[p, q, s, r]]).abs() < 1e-15);
                        assert!((v - h.v_antisym[[r, s, p, q]]).abs() < 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn odd_electron_count_rejected() {
        let set = IntegralSet::zeros(2, 3, 1);
        assert!(to_spin_orbitals(&set).is_err());
    }

    #[test]
    fn reference_energy_zero_and_one_electron() {
        // zero electrons: e_nuclear only
        let set = IntegralSet::zeros(2, 0, 0);
        let mut h = to_spin_orbitals(&set).unwrap();
        h.e_nuclear = 2.5;
        assert_eq!(reference_energy(&h), 2.5);
        // one-electron reference built by hand (bypasses the closed-shell
        // restriction of to_spin_orbitals)
        let mut h1 = h.clone();
        h1.h[[0, 0]] = -0.9;
        h1.reference_occupation = vec![0];
        assert!((reference_energy(&h1) - (2.5 - 0.9)).abs() < 1e-15);
    }
}
