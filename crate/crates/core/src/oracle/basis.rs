//! Determinant bases as occupation bitstrings.

use super::OracleError;
use crate::spin_orbital::spin_of;
use std::collections::HashMap;

/// An ordered, duplicate-free list of occupation bitstrings (bit p set =
/// spin orbital p occupied). Sector constructors fix particle number and
/// Sz; the full Fock constructor enumerates every bitstring.
#[derive(Debug, Clone)]
pub struct DeterminantBasis {
    pub n_spin_orbitals: usize,
    /// Electron count when the basis is a fixed sector.
    pub n_electrons: Option<usize>,
    /// 2*Sz when the basis is a fixed sector.
    pub sz2: Option<i32>,
    pub determinants: Vec<u64>,
    index: HashMap<u64, usize>,
}

pub fn sz2_of_det(det: u64, n_spin_orbitals: usize) -> i32 {
    (0..n_spin_orbitals)
        .filter(|&p| det >> p & 1 == 1)
        .map(spin_of)
        .sum()
}

impl DeterminantBasis {
    fn from_dets(
        n_spin_orbitals: usize,
        n_electrons: Option<usize>,
        sz2: Option<i32>,
        mut dets: Vec<u64>,
    ) -> Self {
        dets.sort_unstable();
        dets.dedup();
        let index = dets.iter().enumerate().map(|(i, &d)| (d, i)).collect();
        Self {
            n_spin_orbitals,
            n_electrons,
            sz2,
            determinants: dets,
            index,
        }
    }

    /// All determinants with `n_electrons` electrons and spin projection
    /// `sz2`, in ascending bitstring order.
    pub fn sector(n_spin_orbitals: usize, n_electrons: usize, sz2: i32) -> Self {
        assert!(n_spin_orbitals <= 64, "bitstring encoding caps at 64");
        let dets = enumerate_sector(n_spin_orbitals, n_electrons, sz2, u64::MAX);
        Self::from_dets(n_spin_orbitals, Some(n_electrons), Some(sz2), dets)
    }

    /// Sector determinants restricted to a mask of allowed spin orbitals.
    pub fn active_sector(
        n_spin_orbitals: usize,
        n_electrons: usize,
        sz2: i32,
        active_mask: u64,
    ) -> Self {
        let dets = enumerate_sector(n_spin_orbitals, n_electrons, sz2, active_mask);
        Self::from_dets(n_spin_orbitals, Some(n_electrons), Some(sz2), dets)
    }

    /// Every bitstring over `n_spin_orbitals` bits.
    pub fn full_fock(n_spin_orbitals: usize) -> Result<Self, OracleError> {
        const CAP: usize = 14;
        if n_spin_orbitals > CAP {
            return Err(OracleError::TooLarge {
                n_spin_orbitals,
                cap: CAP,
            });
        }
        let dets: Vec<u64> = (0..(1u64 << n_spin_orbitals)).collect();
        Ok(Self::from_dets(n_spin_orbitals, None, None, dets))
    }

    pub fn len(&self) -> usize {
        self.determinants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.determinants.is_empty()
    }

    pub fn position(&self, det: u64) -> Option<usize> {
        self.index.get(&det).copied()
    }
}

fn enumerate_sector(n_so: usize, n_elec: usize, sz2: i32, mask: u64) -> Vec<u64> {
    use itertools::Itertools;
    let allowed: Vec<usize> = (0..n_so).filter(|&p| mask >> p & 1 == 1).collect();
    allowed
        .into_iter()
        .combinations(n_elec)
        .map(|occ| occ.iter().fold(0u64, |d, &p| d | (1 << p)))
        .filter(|&d| sz2_of_det(d, n_so) == sz2)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sector_counts() {
        // 4 spin orbitals, 2 electrons, Sz=0: alpha on {0,2}, beta on {1,3}
        let b = DeterminantBasis::sector(4, 2, 0);
        assert_eq!(b.len(), 4);
        for &d in &b.determinants {
            assert_eq!(d.count_ones(), 2);
            assert_eq!(sz2_of_det(d, 4), 0);
        }
        // ordering ascending and duplicate-free
        for w in b.determinants.windows(2) {
            assert!(w[0] < w[1]);
        }
    }

    #[test]
    fn active_sector_restricts() {
        let b = DeterminantBasis::active_sector(8, 2, 0, 0b1111);
        for &d in &b.determinants {
            assert_eq!(d & !0b1111, 0);
        }
        assert_eq!(b.len(), 4);
    }

    #[test]
    fn full_fock_enumerates_everything() {
        let b = DeterminantBasis::full_fock(3).unwrap();
        assert_eq!(b.len(), 8);
        assert!(DeterminantBasis::full_fock(20).is_err());
    }
}
