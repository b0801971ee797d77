//! Projection of a normal-ordered operator onto an active space.

use super::{NormalOrderedOperator, Space, WickError};
use crate::active_space::ActiveSpace;
use ndarray::Axis;

/// Keeps only tensor entries whose spin orbitals are all active. Because
/// the occupied orbitals are required to be active, a normal-ordered term
/// with an external index annihilates every active-space state, so this
/// tensor-level restriction implements the active-space sandwich of the
/// operator.
pub fn project_active(
    op: &NormalOrderedOperator,
    space: &ActiveSpace,
) -> Result<NormalOrderedOperator, WickError> {
    if !space.covers_occupied(&op.reference_occupation()) {
        return Err(WickError::ActiveSpaceMissingOccupied);
    }
    let keep: Vec<bool> = (0..op.n_virtual)
        .map(|a| space.contains_spin_orbital(op.n_occupied + a))
        .collect();
    let mut out = op.clone();
    let keys: Vec<_> = out.blocks().map(|(k, _)| *k).collect();
    for key in keys {
        let mut tensor = out.block(&key).unwrap().clone();
        for ax in 0..2 * key.rank {
            if key.axis_space(ax) == Space::Particle {
                for (a, &k) in keep.iter().enumerate() {
                    if !k {
                        tensor.index_axis_mut(Axis(ax), a).fill(0.0);
                    }
                }
            }
        }
        out.set_block(key, tensor);
    }
    out.prune();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wick::BlockKey;
    use ndarray::{ArrayD, IxDyn};

    #[test]
    fn full_space_is_identity() {
        let mut op = NormalOrderedOperator::new(2, 2);
        let key = BlockKey {
            rank: 1,
            upper_particles: 1,
            lower_particles: 0,
        };
        let mut t = ArrayD::zeros(IxDyn(&[2, 2]));
        t[[0, 1]] = 0.4;
        t[[1, 0]] = -0.2;
        op.set_block(key, t);
        let space = ActiveSpace::full(2);
        let projected = project_active(&op, &space).unwrap();
        assert!(projected.max_abs_diff(&op) == 0.0);
    }

    #[test]
    fn external_term_dropped() {
        // 2 occupied + 2 virtual spin orbitals = 2 spatial; keep spatial 0.
        let mut op = NormalOrderedOperator::new(2, 2);
        let key = BlockKey {
            rank: 1,
            upper_particles: 1,
            lower_particles: 0,
        };
        let mut t = ArrayD::zeros(IxDyn(&[2, 2]));
        t[[0, 1]] = 0.4; // particle 0 = global 2 (active), hole 1
        t[[1, 0]] = -0.2; // particle 1 = global 3 (external)
        op.set_block(key, t);
        let space = ActiveSpace::new(vec![0, 1], 2).unwrap();
        // spatial orbitals: 0 -> so 0,1 (occ); 1 -> so 2,3 (virt); both active
        let projected = project_active(&op, &space).unwrap();
        assert_eq!(projected.block(&key).unwrap()[[0, 1]], 0.4);
        // now restrict to a space missing spin orbital 3
        let space_small = ActiveSpace::new(vec![0], 2).unwrap();
        // occupied = {0,1} subset of active {0,1}: ok; both particles external
        let projected = project_active(&op, &space_small).unwrap();
        assert!(projected.block(&key).is_none());
    }

    #[test]
    fn missing_occupied_rejected() {
        let op = NormalOrderedOperator::new(4, 0);
        let space = ActiveSpace::new(vec![0], 2).unwrap();
        assert!(matches!(
            project_active(&op, &space),
            Err(WickError::ActiveSpaceMissingOccupied)
        ));
    }
}
