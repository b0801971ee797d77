//! Numeric Wick contraction of normal-ordered operators.
//!
//! A product of two normal-ordered strings expands into all ways of
//! contracting quasiparticle annihilators of the left factor with
//! quasiparticle creators of the right factor (hole-hole and
//! particle-particle pairings). In a commutator the uncontracted
//! (disconnected) products cancel between the two orderings, so only terms
//! with at least one contraction are materialized. Pairings are enumerated
//! over individual slots with the sign given by the permutation parity of
//! the rearrangement; the per-block antisymmetrization at the end restores
//! the canonical antisymmetric coefficient layout.

use super::{
    antisymmetrize_groups, permutation_parity, BlockKey, NormalOrderedOperator, Space, WickError,
};
use itertools::Itertools;
use ndarray::{ArrayD, Ix2, IxDyn};
use std::collections::BTreeMap;

/// Contracts `a` axes `pairs[i].0` against `b` axes `pairs[i].1`; output
/// axes are a's free axes (ascending) followed by b's free axes.
fn tensordot(a: &ArrayD<f64>, b: &ArrayD<f64>, pairs: &[(usize, usize)]) -> ArrayD<f64> {
    let a_con: Vec<usize> = pairs.iter().map(|p| p.0).collect();
    let b_con: Vec<usize> = pairs.iter().map(|p| p.1).collect();
    let a_free: Vec<usize> = (0..a.ndim()).filter(|ax| !a_con.contains(ax)).collect();
    let b_free: Vec<usize> = (0..b.ndim()).filter(|ax| !b_con.contains(ax)).collect();
    let a_perm: Vec<usize> = a_free.iter().chain(a_con.iter()).copied().collect();
    let b_perm: Vec<usize> = b_con.iter().chain(b_free.iter()).copied().collect();
    let fa: usize = a_free.iter().map(|&ax| a.shape()[ax]).product();
    let ca: usize = a_con.iter().map(|&ax| a.shape()[ax]).product();
    let fb: usize = b_free.iter().map(|&ax| b.shape()[ax]).product();
    let a2 = a
        .view()
        .permuted_axes(IxDyn(&a_perm))
        .as_standard_layout()
        .into_owned()
        .into_shape_with_order((fa, ca))
        .expect("tensordot lhs reshape")
        .into_dimensionality::<Ix2>()
        .unwrap();
    let b2 = b
        .view()
        .permuted_axes(IxDyn(&b_perm))
        .as_standard_layout()
        .into_owned()
        .into_shape_with_order((ca, fb))
        .expect("tensordot rhs reshape")
        .into_dimensionality::<Ix2>()
        .unwrap();
    let c = a2.dot(&b2);
    let mut out_shape: Vec<usize> = a_free.iter().map(|&ax| a.shape()[ax]).collect();
    out_shape.extend(b_free.iter().map(|&ax| b.shape()[ax]));
    c.into_shape_with_order(IxDyn(&out_shape))
        .expect("tensordot output reshape")
}

/// Op-string position of a tensor axis: uppers occupy positions 0..k in
/// axis order, lowers occupy positions k..2k in reversed axis order.
fn position_of_axis(rank: usize, axis: usize) -> usize {
    if axis < rank {
        axis
    } else {
        2 * rank - 1 - (axis - rank)
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
struct SlotRef {
    operand: usize, // 0 = left factor, 1 = right factor
    axis: usize,
}

/// Accumulates all >=1-contraction terms of the product `left * right`
/// into `raw` / `scalar`, weighted by `overall`.
fn accumulate_products(
    left: &NormalOrderedOperator,
    right: &NormalOrderedOperator,
    overall: f64,
    max_rank: usize,
    raw: &mut BTreeMap<BlockKey, ArrayD<f64>>,
    scalar: &mut f64,
) {
    let n_occ = left.n_occupied;
    let n_virt = left.n_virtual;
    for (key_l, t_l) in left.blocks() {
        let kl = key_l.rank;
        // Left-factor quasiparticle annihilators: upper holes, lower particles.
        let l_upper_holes: Vec<usize> = (key_l.upper_particles..kl).collect();
        let l_lower_particles: Vec<usize> = (kl..kl + key_l.lower_particles).collect();
        for (key_r, t_r) in right.blocks() {
            let kr = key_r.rank;
            // Right-factor quasiparticle creators: upper particles, lower holes.
            let r_upper_particles: Vec<usize> = (0..key_r.upper_particles).collect();
            let r_lower_holes: Vec<usize> = (kr + key_r.lower_particles..2 * kr).collect();
            let max_h = l_upper_holes.len().min(r_lower_holes.len());
            let max_p = l_lower_particles.len().min(r_upper_particles.len());
            for m_h in 0..=max_h {
                for m_p in 0..=max_p {
                    if m_h + m_p == 0 {
                        continue;
                    }
                    let out_rank = kl + kr - m_h - m_p;
                    if out_rank > max_rank {
                        continue;
                    }
                    for l_h in l_upper_holes.iter().copied().combinations(m_h) {
                        for r_h_set in r_lower_holes.iter().copied().combinations(m_h) {
                            for r_h in r_h_set.iter().copied().permutations(m_h) {
                                for l_p in l_lower_particles.iter().copied().combinations(m_p) {
                                    for r_p_set in
                                        r_upper_particles.iter().copied().combinations(m_p)
                                    {
                                        for r_p in r_p_set.iter().copied().permutations(m_p) {
                                            contract_one(
                                                key_l, t_l, key_r, t_r, &l_h, &r_h, &l_p, &r_p,
                                                overall, n_occ, n_virt, raw, scalar,
                                            );
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn contract_one(
    key_l: &BlockKey,
    t_l: &ArrayD<f64>,
    key_r: &BlockKey,
    t_r: &ArrayD<f64>,
    l_h: &[usize],
    r_h: &[usize],
    l_p: &[usize],
    r_p: &[usize],
    overall: f64,
    n_occ: usize,
    n_virt: usize,
    raw: &mut BTreeMap<BlockKey, ArrayD<f64>>,
    scalar: &mut f64,
) {
    let kl = key_l.rank;
    let kr = key_r.rank;
    let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(l_h.len() + l_p.len());
    pairs.extend(l_h.iter().copied().zip(r_h.iter().copied()));
    pairs.extend(l_p.iter().copied().zip(r_p.iter().copied()));
    let contracted_l: Vec<usize> = pairs.iter().map(|p| p.0).collect();
    let contracted_r: Vec<usize> = pairs.iter().map(|p| p.1).collect();

    let m = tensordot(t_l, t_r, &pairs);

    // Output slot template, grouped particles-then-holes on each side.
    let l_free = |range: std::ops::Range<usize>| -> Vec<SlotRef> {
        range
            .filter(|ax| !contracted_l.contains(ax))
            .map(|axis| SlotRef { operand: 0, axis })
            .collect()
    };
    let r_free = |range: std::ops::Range<usize>| -> Vec<SlotRef> {
        range
            .filter(|ax| !contracted_r.contains(ax))
            .map(|axis| SlotRef { operand: 1, axis })
            .collect()
    };
    let mut upper: Vec<SlotRef> = l_free(0..key_l.upper_particles);
    upper.extend(r_free(0..key_r.upper_particles));
    let upper_particles = upper.len();
    upper.extend(l_free(key_l.upper_particles..kl));
    upper.extend(r_free(key_r.upper_particles..kr));
    let mut lower: Vec<SlotRef> = l_free(kl..kl + key_l.lower_particles);
    lower.extend(r_free(kr..kr + key_r.lower_particles));
    let lower_particles = lower.len();
    lower.extend(l_free(kl + key_l.lower_particles..2 * kl));
    lower.extend(r_free(kr + key_r.lower_particles..2 * kr));

    let out_rank = upper.len();
    debug_assert_eq!(out_rank, lower.len());

    // Parity of rearranging [left ops, right ops] into
    // [contracted pairs adjacent][output string order].
    let pos = |s: &SlotRef| -> usize {
        match s.operand {
            0 => position_of_axis(kl, s.axis),
            _ => 2 * kl + position_of_axis(kr, s.axis),
        }
    };
    let mut target: Vec<usize> = Vec::with_capacity(2 * (kl + kr));
    for &(la, ra) in &pairs {
        target.push(position_of_axis(kl, la));
        target.push(2 * kl + position_of_axis(kr, ra));
    }
    for s in &upper {
        target.push(pos(s));
    }
    for s in lower.iter().rev() {
        target.push(pos(s));
    }
    let sign = if permutation_parity(&target) { -1.0 } else { 1.0 };
    let weight = sign * overall * key_l.normalization() * key_r.normalization();

    if out_rank == 0 {
        *scalar += weight * m[IxDyn(&[])];
        return;
    }

    // Transpose m from [left free asc, right free asc] to template order.
    let l_free_axes: Vec<usize> = (0..2 * kl).filter(|ax| !contracted_l.contains(ax)).collect();
    let r_free_axes: Vec<usize> = (0..2 * kr).filter(|ax| !contracted_r.contains(ax)).collect();
    let m_axis_of = |s: &SlotRef| -> usize {
        match s.operand {
            0 => l_free_axes.iter().position(|&ax| ax == s.axis).unwrap(),
            _ => {
                l_free_axes.len() + r_free_axes.iter().position(|&ax| ax == s.axis).unwrap()
            }
        }
    };
    let perm: Vec<usize> = upper.iter().chain(lower.iter()).map(|s| m_axis_of(s)).collect();
    let m_t = m.view().permuted_axes(IxDyn(&perm));

    let out_key = BlockKey {
        rank: out_rank,
        upper_particles,
        lower_particles,
    };
    let entry = raw.entry(out_key).or_insert_with(|| {
        ArrayD::zeros(IxDyn(&out_key.shape(n_occ, n_virt)))
    });
    if weight == 1.0 {
        ndarray::Zip::from(entry).and(&m_t).for_each(|e, &v| *e += v);
    } else {
        ndarray::Zip::from(entry)
            .and(&m_t)
            .for_each(|e, &v| *e += weight * v);
    }
}

/// Commutator [a, b] in normal-ordered form, discarding output blocks of
/// rank above `max_rank`. Input scalars commute and are ignored.
pub fn wick_commutator(
    a: &NormalOrderedOperator,
    b: &NormalOrderedOperator,
    max_rank: usize,
) -> Result<NormalOrderedOperator, WickError> {
    if max_rank > 4 {
        return Err(WickError::UnsupportedRank(max_rank));
    }
    assert_eq!(a.n_occupied, b.n_occupied, "operand vacua differ");
    assert_eq!(a.n_virtual, b.n_virtual, "operand vacua differ");
    let mut raw: BTreeMap<BlockKey, ArrayD<f64>> = BTreeMap::new();
    let mut scalar = 0.0;
    accumulate_products(a, b, 1.0, max_rank, &mut raw, &mut scalar);
    accumulate_products(b, a, -1.0, max_rank, &mut raw, &mut scalar);
    let mut out = NormalOrderedOperator::new(a.n_occupied, a.n_virtual);
    out.scalar = scalar;
    for (key, m) in raw {
        out.set_block(key, antisymmetrize_groups(&m, &key.groups()));
    }
    out.prune();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr2;

    #[test]
    fn tensordot_matches_manual() {
        let a = arr2(&[[1.0, 2.0], [3.0, 4.0]]).into_dyn();
        let b = arr2(&[[5.0, 6.0], [7.0, 8.0]]).into_dyn();
        // contract a axis 1 with b axis 0: plain matmul
        let c = tensordot(&a, &b, &[(1, 0)]);
        assert_eq!(c[[0, 0]], 19.0);
        assert_eq!(c[[1, 1]], 50.0);
        // contract a axis 0 with b axis 1
        let d = tensordot(&a, &b, &[(0, 1)]);
        // d[i, j] = sum_k a[k, i] b[j, k]
        assert_eq!(d[[0, 1]], 1.0 * 7.0 + 3.0 * 8.0);
    }

    #[test]
    fn commutator_with_self_is_zero() {
        let mut op = NormalOrderedOperator::new(2, 2);
        let key = BlockKey {
            rank: 1,
            upper_particles: 1,
            lower_particles: 0,
        };
        let mut t = ArrayD::zeros(IxDyn(&[2, 2]));
        t[[0, 0]] = 0.3;
        t[[1, 1]] = -0.6;
        t[[0, 1]] = 0.1;
        op.set_block(key, t);
        let c = wick_commutator(&op, &op, 4).unwrap();
        assert!(c.is_zero() || c.max_abs_diff(&NormalOrderedOperator::new(2, 2)) < 1e-14);
    }

    #[test]
    fn fock_commutator_particle_ladder() {
        // [F_pp, sigma_exc]: expect +sum_d f_ad t_di on the excitation block
        // and nothing else for a pure particle-particle F.
        let n_occ = 1;
        let n_virt = 2;
        let mut f = NormalOrderedOperator::new(n_occ, n_virt);
        let mut fpp = ArrayD::zeros(IxDyn(&[2, 2]));
        fpp[[0, 0]] = 1.0;
        fpp[[1, 1]] = 2.0;
        fpp[[0, 1]] = 0.25;
        fpp[[1, 0]] = 0.25;
        f.set_block(
            BlockKey {
                rank: 1,
                upper_particles: 1,
                lower_particles: 1,
            },
            fpp.clone(),
        );
        let mut s = NormalOrderedOperator::new(n_occ, n_virt);
        let mut t = ArrayD::zeros(IxDyn(&[2, 1]));
        t[[0, 0]] = 0.5;
        t[[1, 0]] = -0.1;
        s.set_block(
            BlockKey {
                rank: 1,
                upper_particles: 1,
                lower_particles: 0,
            },
            t.clone(),
        );
        let c = wick_commutator(&f, &s, 4).unwrap();
        let exc = c
            .block(&BlockKey {
                rank: 1,
                upper_particles: 1,
                lower_particles: 0,
            })
            .expect("excitation block present");
        for a in 0..2 {
            let expect: f64 = (0..2).map(|d| fpp[[a, d]] * t[[d, 0]]).sum();
            assert!((exc[[a, 0]] - expect).abs() < 1e-14, "a={a}");
        }
        // de-excitation block must be absent for this combination
        assert!(c
            .block(&BlockKey {
                rank: 1,
                upper_particles: 0,
                lower_particles: 1,
            })
            .is_none());
    }

    #[test]
    fn hole_fock_commutator_sign() {
        // [F_hh, sigma_exc] excitation coefficient = -sum_j t_aj f_ji.
        let n_occ = 2;
        let n_virt = 1;
        let mut f = NormalOrderedOperator::new(n_occ, n_virt);
        let mut fhh = ArrayD::zeros(IxDyn(&[2, 2]));
        fhh[[0, 0]] = -1.0;
        fhh[[1, 1]] = -2.0;
        fhh[[0, 1]] = 0.3;
        fhh[[1, 0]] = 0.3;
        f.set_block(
            BlockKey {
                rank: 1,
                upper_particles: 0,
                lower_particles: 0,
            },
            fhh.clone(),
        );
        let mut s = NormalOrderedOperator::new(n_occ, n_virt);
        let mut t = ArrayD::zeros(IxDyn(&[1, 2]));
        t[[0, 0]] = 0.5;
        t[[0, 1]] = 0.2;
        s.set_block(
            BlockKey {
                rank: 1,
                upper_particles: 1,
                lower_particles: 0,
            },
            t.clone(),
        );
        let c = wick_commutator(&f, &s, 4).unwrap();
        let exc = c
            .block(&BlockKey {
                rank: 1,
                upper_particles: 1,
                lower_particles: 0,
            })
            .expect("excitation block present");
        for i in 0..2 {
            let expect: f64 = -(0..2).map(|j| t[[0, j]] * fhh[[j, i]]).sum::<f64>();
            assert!((exc[[0, i]] - expect).abs() < 1e-14, "i={i}");
        }
    }
}
