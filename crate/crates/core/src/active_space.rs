//! Active-space definitions over spatial orbitals.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ActiveSpaceError {
    #[error("active space invalid: {0}")]
    Invalid(String),
}

/// Ordered spin-orbital index sets defining the internal/external boundary.
/// Spin orbitals inherit the interleaved ordering of the Hamiltonian.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActiveSpace {
    pub active_spatial: Vec<usize>,
    pub active_spin_orbitals: Vec<usize>,
    pub external_spin_orbitals: Vec<usize>,
    pub n_spatial: usize,
}

impl ActiveSpace {
    pub fn new(mut active_spatial: Vec<usize>, n_spatial: usize) -> Result<Self, ActiveSpaceError> {
        active_spatial.sort_unstable();
        active_spatial.dedup();
        if let Some(&bad) = active_spatial.iter().find(|&&p| p >= n_spatial) {
            return Err(ActiveSpaceError::Invalid(format!(
                "spatial orbital {bad} out of range [0,{n_spatial})"
            )));
        }
        let mut active_so = Vec::with_capacity(2 * active_spatial.len());
        for &p in &active_spatial {
            active_so.push(2 * p);
            active_so.push(2 * p + 1);
        }
        let external: Vec<usize> = (0..2 * n_spatial)
            .filter(|so| !active_so.contains(so))
            .collect();
        Ok(Self {
            active_spatial,
            active_spin_orbitals: active_so,
            external_spin_orbitals: external,
            n_spatial,
        })
    }

    /// The first `count` spatial orbitals; the usual choice after sorting
    /// orbitals by energy or natural occupation.
    pub fn first(count: usize, n_spatial: usize) -> Result<Self, ActiveSpaceError> {
        if count > n_spatial {
            return Err(ActiveSpaceError::Invalid(format!(
                "requested {count} active orbitals from {n_spatial}"
            )));
        }
        Self::new((0..count).collect(), n_spatial)
    }

    pub fn full(n_spatial: usize) -> Self {
        Self::first(n_spatial, n_spatial).expect("full space is always valid")
    }

    pub fn n_active_spin_orbitals(&self) -> usize {
        self.active_spin_orbitals.len()
    }

    pub fn contains_spin_orbital(&self, so: usize) -> bool {
        self.active_spin_orbitals.binary_search(&so).is_ok()
    }

    /// True when every occupied spin orbital of `reference` is active.
    pub fn covers_occupied(&self, reference: &[usize]) -> bool {
        reference.iter().all(|&i| self.contains_spin_orbital(i))
    }

    /// Qubit index of a global spin orbital (its position in the active
    /// list), if active.
    pub fn qubit_of(&self, so: usize) -> Option<usize> {
        self.active_spin_orbitals.binary_search(&so).ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_is_disjoint_and_exhaustive() {
        let space = ActiveSpace::new(vec![0, 2], 4).unwrap();
        assert_eq!(space.active_spin_orbitals, vec![0, 1, 4, 5]);
        assert_eq!(space.external_spin_orbitals, vec![2, 3, 6, 7]);
        let mut all: Vec<usize> = space
            .active_spin_orbitals
            .iter()
            .chain(&space.external_spin_orbitals)
            .copied()
            .collect();
        all.sort_unstable();
        assert_eq!(all, (0..8).collect::<Vec<_>>());
    }

    #[test]
    fn covers_occupied_check() {
        let space = ActiveSpace::first(2, 4).unwrap();
        assert!(space.covers_occupied(&[0, 1, 2, 3]));
        assert!(!space.covers_occupied(&[0, 1, 4]));
    }

    #[test]
    fn out_of_range_rejected() {
        assert!(ActiveSpace::new(vec![5], 4).is_err());
    }
}
