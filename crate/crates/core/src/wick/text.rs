//! Flat text export of normal-ordered operators.
//!
//! Line 1 (comment) records the vacuum; line 2 is the scalar; each
//! following record is `k p1 .. pk q1 .. qk value` — the coefficient of
//! the normal-ordered string `a+_{p1} .. a+_{pk} a_{qk} .. a_{q1}` over
//! 0-based active-space spin-orbital indices, written once per
//! group-sorted index tuple so the operator is the plain sum of records.

use super::{BlockKey, NormalOrderedOperator, Space, WickError};
use crate::active_space::ActiveSpace;
use ndarray::{ArrayD, IxDyn};

/// Serializes `op` using active-space positions (ascending order of the
/// active spin orbitals) as indices. The operator must already be
/// projected onto `space`.
pub fn write_operator(op: &NormalOrderedOperator, space: &ActiveSpace) -> Result<String, WickError> {
    let position = |global: usize| -> Result<usize, WickError> {
        space.qubit_of(global).ok_or(WickError::Format(format!(
            "operator touches external spin orbital {global}"
        )))
    };
    let mut out = String::new();
    out.push_str(&format!(
        "# normal-ordered operator: active_spin_orbitals={} occupied={}\n",
        space.n_active_spin_orbitals(),
        op.n_occupied
    ));
    out.push_str(&format!("{:.17e}\n", op.scalar));
    for (key, tensor) in op.blocks() {
        let k = key.rank;
        for (idx, &value) in tensor.indexed_iter() {
            if value == 0.0 {
                continue;
            }
            // Only group-sorted representatives are written.
            let mut sorted = true;
            for group in key.groups() {
                let axes: Vec<usize> = group.collect();
                for w in axes.windows(2) {
                    if idx[w[0]] >= idx[w[1]] {
                        sorted = false;
                    }
                }
            }
            if !sorted {
                continue;
            }
            let mut line = format!("{k}");
            for ax in 0..2 * k {
                let global = op.global_index(key.axis_space(ax), idx[ax]);
                line.push_str(&format!(" {}", position(global)?));
            }
            line.push_str(&format!(" {value:.17e}\n"));
            out.push_str(&line);
        }
    }
    Ok(out)
}

/// Parses the output of [`write_operator`]. The header comment supplies
/// the active-space size and occupation; records are antisymmetry-expanded
/// back into blocks.
pub fn parse_operator(text: &str) -> Result<NormalOrderedOperator, WickError> {
    let mut lines = text.lines().peekable();
    let mut n_active = None;
    let mut n_occ = None;
    while let Some(line) = lines.peek() {
        let t = line.trim();
        if t.starts_with('#') {
            for tok in t.trim_start_matches('#').split_whitespace() {
                if let Some(v) = tok.strip_prefix("active_spin_orbitals=") {
                    n_active = v.parse::<usize>().ok();
                }
                if let Some(v) = tok.strip_prefix("occupied=") {
                    n_occ = v.parse::<usize>().ok();
                }
            }
            lines.next();
        } else {
            break;
        }
    }
    let n_active = n_active.ok_or(WickError::Format("missing active size header".into()))?;
    let n_occ = n_occ.ok_or(WickError::Format("missing occupation header".into()))?;
    let n_virt = n_active - n_occ;
    let scalar: f64 = lines
        .next()
        .and_then(|l| l.trim().parse().ok())
        .ok_or(WickError::Format("missing scalar line".into()))?;
    let mut op = NormalOrderedOperator::new(n_occ, n_virt);
    op.scalar = scalar;
    let mut pending: std::collections::BTreeMap<BlockKey, ArrayD<f64>> =
        std::collections::BTreeMap::new();
    for line in lines {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = t.split_whitespace().collect();
        let k: usize = toks[0]
            .parse()
            .map_err(|_| WickError::Format(format!("bad rank in record: {t}")))?;
        if toks.len() != 2 + 2 * k {
            return Err(WickError::Format(format!("record arity mismatch: {t}")));
        }
        let mut indices = Vec::with_capacity(2 * k);
        for tok in &toks[1..1 + 2 * k] {
            indices.push(
                tok.parse::<usize>()
                    .map_err(|_| WickError::Format(format!("bad index in record: {t}")))?,
            );
        }
        let value: f64 = toks[1 + 2 * k]
            .parse()
            .map_err(|_| WickError::Format(format!("bad value in record: {t}")))?;
        // Indices below n_occ are holes (the occupied orbitals are the
        // lowest active positions); sort each side particles-first.
        let classify = |pos: usize| -> (Space, usize) {
            if pos < n_occ {
                (Space::Hole, pos)
            } else {
                (Space::Particle, pos - n_occ)
            }
        };
        let mut upper: Vec<(Space, usize)> = indices[..k].iter().map(|&p| classify(p)).collect();
        let mut lower: Vec<(Space, usize)> = indices[k..].iter().map(|&p| classify(p)).collect();
        let mut sign = 1.0;
        for side in [&mut upper, &mut lower] {
            // insertion sort tracking parity (particles before holes)
            for i in 1..side.len() {
                let mut j = i;
                while j > 0 && side[j - 1].0 > side[j].0 {
                    side.swap(j - 1, j);
                    sign = -sign;
                    j -= 1;
                }
            }
        }
        let key = BlockKey {
            rank: k,
            upper_particles: upper.iter().filter(|(s, _)| *s == Space::Particle).count(),
            lower_particles: lower.iter().filter(|(s, _)| *s == Space::Particle).count(),
        };
        let tensor = pending
            .entry(key)
            .or_insert_with(|| ArrayD::zeros(IxDyn(&key.shape(n_occ, n_virt))));
        let tuple: Vec<usize> = upper
            .iter()
            .chain(lower.iter())
            .map(|&(_, local)| local)
            .collect();
        fill_antisymmetric(tensor, &key, &tuple, sign * value);
    }
    for (key, tensor) in pending {
        op.set_block(key, tensor);
    }
    Ok(op)
}

/// Writes `value` at `tuple` and at every within-group permutation with
/// alternating sign.
pub(crate) fn fill_antisymmetric(
    tensor: &mut ArrayD<f64>,
    key: &BlockKey,
    tuple: &[usize],
    value: f64,
) {
    use itertools::Itertools;
    let groups = key.groups();
    let perms_per_group: Vec<Vec<Vec<usize>>> = groups
        .iter()
        .map(|g| {
            let axes: Vec<usize> = g.clone().collect();
            axes.iter().copied().permutations(axes.len()).collect()
        })
        .collect();
    let mut choice = vec![0usize; perms_per_group.len()];
    loop {
        let mut idx = tuple.to_vec();
        let mut odd = false;
        for (gi, g) in groups.iter().enumerate() {
            let axes: Vec<usize> = g.clone().collect();
            let p = &perms_per_group[gi][choice[gi]];
            let mut rel = Vec::with_capacity(axes.len());
            for (slot, &src) in axes.iter().zip(p.iter()) {
                idx[*slot] = tuple[src];
                rel.push(axes.iter().position(|&a| a == src).unwrap());
            }
            if super::permutation_parity(&rel) {
                odd = !odd;
            }
        }
        tensor[IxDyn(&idx)] = if odd { -value } else { value };
        let mut gi = 0;
        loop {
            if gi == choice.len() {
                return;
            }
            choice[gi] += 1;
            if choice[gi] < perms_per_group[gi].len() {
                break;
            }
            choice[gi] = 0;
            gi += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_small_operator() {
        let mut op = NormalOrderedOperator::new(2, 2);
        op.scalar = -0.125;
        let key = BlockKey {
            rank: 2,
            upper_particles: 2,
            lower_particles: 0,
        };
        let mut t = ArrayD::zeros(IxDyn(&[2, 2, 2, 2]));
        t[[0, 1, 0, 1]] = 0.3;
        t[[1, 0, 0, 1]] = -0.3;
        t[[0, 1, 1, 0]] = -0.3;
        t[[1, 0, 1, 0]] = 0.3;
        op.set_block(key, t);
        let space = ActiveSpace::full(2);
        let text = write_operator(&op, &space).unwrap();
        let back = parse_operator(&text).unwrap();
        assert!(back.max_abs_diff(&op) < 1e-15);
        assert_eq!(back.scalar, -0.125);
    }
}
