//! Particle-hole normal-ordered operators as blocked coefficient tensors.
//!
//! An operator is a scalar plus rank-k blocks (k = 1..4). A block of rank k
//! holds the coefficients of
//!
//! ```text
//!   1/(n_uP! n_uH! n_lP! n_lH!) * sum C[u1..uk | l1..lk] {a+_u1 .. a+_uk a_lk .. a_l1}
//! ```
//!
//! where the upper (creation) indices are ordered particles-then-holes and
//! likewise the lower (annihilation) indices; `{..}` denotes normal ordering
//! with respect to the Fermi vacuum of `reference_occupation`. Tensors are
//! antisymmetric within each equal-space index group, so each block is the
//! restriction of one globally antisymmetric coefficient tensor.
//!
//! Hole index `i` refers to global spin orbital `i`; particle index `a`
//! refers to global spin orbital `n_occupied + a` (the reference occupies
//! the lowest spin orbitals).

mod bch;
mod contraction;
mod normal_order;
mod project;
mod text;

pub use bch::{build_effective_hamiltonian, BchScheme, CommutatorTerm, InnerOperator};
pub use contraction::wick_commutator;
pub use normal_order::normal_order_hamiltonian;
pub use project::project_active;
pub use text::{parse_operator, write_operator};
pub(crate) use text::fill_antisymmetric;

use ndarray::{ArrayD, IxDyn};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum WickError {
    #[error("unsupported body rank {0} (max 4)")]
    UnsupportedRank(usize),
    #[error("active space must contain every occupied spin orbital of the reference")]
    ActiveSpaceMissingOccupied,
    #[error("operator text format: {0}")]
    Format(String),
}

/// Index space of a slot: particle (virtual) or hole (occupied).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Space {
    Particle,
    Hole,
}

/// Identifies a block: rank plus the number of particle slots among the
/// upper and lower index groups (particles always precede holes).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BlockKey {
    pub rank: usize,
    pub upper_particles: usize,
    pub lower_particles: usize,
}

impl BlockKey {
    pub fn upper_spaces(&self) -> Vec<Space> {
        let mut v = vec![Space::Particle; self.upper_particles];
        v.extend(vec![Space::Hole; self.rank - self.upper_particles]);
        v
    }
    pub fn lower_spaces(&self) -> Vec<Space> {
        let mut v = vec![Space::Particle; self.lower_particles];
        v.extend(vec![Space::Hole; self.rank - self.lower_particles]);
        v
    }
    /// Space of tensor axis `ax` (uppers are axes 0..rank, lowers follow).
    pub fn axis_space(&self, ax: usize) -> Space {
        if ax < self.rank {
            if ax < self.upper_particles {
                Space::Particle
            } else {
                Space::Hole
            }
        } else if ax - self.rank < self.lower_particles {
            Space::Particle
        } else {
            Space::Hole
        }
    }
    /// 1 / (n_uP! n_uH! n_lP! n_lH!).
    pub fn normalization(&self) -> f64 {
        let fact = |n: usize| (1..=n).product::<usize>() as f64;
        1.0 / (fact(self.upper_particles)
            * fact(self.rank - self.upper_particles)
            * fact(self.lower_particles)
            * fact(self.rank - self.lower_particles))
    }
    /// Axis ranges of the four index groups: upper-P, upper-H, lower-P, lower-H.
    pub fn groups(&self) -> [std::ops::Range<usize>; 4] {
        let k = self.rank;
        [
            0..self.upper_particles,
            self.upper_particles..k,
            k..k + self.lower_particles,
            k + self.lower_particles..2 * k,
        ]
    }
    pub fn shape(&self, n_occ: usize, n_virt: usize) -> Vec<usize> {
        (0..2 * self.rank)
            .map(|ax| match self.axis_space(ax) {
                Space::Particle => n_virt,
                Space::Hole => n_occ,
            })
            .collect()
    }
}

/// Scalar plus normal-ordered coefficient blocks over a fixed Fermi vacuum.
#[derive(Debug, Clone)]
pub struct NormalOrderedOperator {
    pub scalar: f64,
    pub n_occupied: usize,
    pub n_virtual: usize,
    pub hermitian: bool,
    blocks: BTreeMap<BlockKey, ArrayD<f64>>,
}

/// Coefficient below which a whole block is dropped.
pub const BLOCK_PRUNE_THRESHOLD: f64 = 1e-14;

impl NormalOrderedOperator {
    pub fn new(n_occupied: usize, n_virtual: usize) -> Self {
        Self {
            scalar: 0.0,
            n_occupied,
            n_virtual,
            hermitian: false,
            blocks: BTreeMap::new(),
        }
    }

    pub fn n_spin_orbitals(&self) -> usize {
        self.n_occupied + self.n_virtual
    }

    pub fn reference_occupation(&self) -> Vec<usize> {
        (0..self.n_occupied).collect()
    }

    /// Global spin-orbital index of a (space, local index) pair.
    pub fn global_index(&self, space: Space, local: usize) -> usize {
        match space {
            Space::Hole => local,
            Space::Particle => self.n_occupied + local,
        }
    }

    pub fn blocks(&self) -> impl Iterator<Item = (&BlockKey, &ArrayD<f64>)> {
        self.blocks.iter()
    }

    pub fn block(&self, key: &BlockKey) -> Option<&ArrayD<f64>> {
        self.blocks.get(key)
    }

    pub fn max_rank(&self) -> usize {
        self.blocks.keys().map(|k| k.rank).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.scalar == 0.0 && self.blocks.is_empty()
    }

    /// Inserts a block, dropping it if negligible.
    pub fn set_block(&mut self, key: BlockKey, tensor: ArrayD<f64>) {
        debug_assert_eq!(
            tensor.shape(),
            key.shape(self.n_occupied, self.n_virtual).as_slice()
        );
        let max = tensor.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if max > BLOCK_PRUNE_THRESHOLD {
            self.blocks.insert(key, tensor);
        } else {
            self.blocks.remove(&key);
        }
    }

    pub fn add_to_block(&mut self, key: BlockKey, tensor: &ArrayD<f64>) {
        match self.blocks.get_mut(&key) {
            Some(existing) => *existing += tensor,
            None => {
                self.blocks
                    .insert(key, tensor.to_owned());
            }
        }
    }

    /// Removes blocks whose largest coefficient is negligible.
    pub fn prune(&mut self) {
        self.blocks
            .retain(|_, t| t.iter().fold(0.0f64, |m, v| m.max(v.abs())) > BLOCK_PRUNE_THRESHOLD);
    }

    /// Restricts to blocks of rank <= max_rank (scalar kept).
    pub fn truncated(&self, max_rank: usize) -> Self {
        let mut out = self.clone();
        out.blocks.retain(|k, _| k.rank <= max_rank);
        out
    }

    /// Restricts to blocks of rank exactly `rank`, scalar dropped.
    pub fn rank_part(&self, rank: usize) -> Self {
        let mut out = Self::new(self.n_occupied, self.n_virtual);
        for (k, t) in &self.blocks {
            if k.rank == rank {
                out.blocks.insert(*k, t.clone());
            }
        }
        out
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.scalar *= factor;
        for t in out.blocks.values_mut() {
            t.mapv_inplace(|v| v * factor);
        }
        out.prune();
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n_occupied, other.n_occupied);
        assert_eq!(self.n_virtual, other.n_virtual);
        let mut out = self.clone();
        out.hermitian = false;
        out.scalar += other.scalar;
        for (k, t) in &other.blocks {
            out.add_to_block(*k, t);
        }
        out.prune();
        out
    }

    /// Adjoint: swaps upper and lower index groups.
    pub fn dagger(&self) -> Self {
        let mut out = Self::new(self.n_occupied, self.n_virtual);
        out.scalar = self.scalar;
        for (key, tensor) in &self.blocks {
            let k = key.rank;
            let new_key = BlockKey {
                rank: k,
                upper_particles: key.lower_particles,
                lower_particles: key.upper_particles,
            };
            let perm: Vec<usize> = (k..2 * k).chain(0..k).collect();
            let t = tensor.view().permuted_axes(IxDyn(&perm)).to_owned();
            out.blocks.insert(new_key, t);
        }
        out
    }

    /// (X + X†)/2 with the magnitude of the discarded anti-Hermitian
    /// residue. The result is tagged Hermitian.
    pub fn hermitized(&self) -> (Self, f64) {
        let dag = self.dagger();
        let mut sym = self.add(&dag).scaled(0.5);
        let anti = self.add(&dag.scaled(-1.0)).scaled(0.5);
        let mut residue = 0.0f64;
        for (_, t) in anti.blocks() {
            residue = residue.max(t.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        }
        sym.hermitian = true;
        (sym, residue)
    }

    /// Largest deviation from Hermiticity (block-level check of the
    /// Hermitian tag invariant).
    pub fn hermiticity_deviation(&self) -> f64 {
        let anti = self.add(&self.dagger().scaled(-1.0));
        let mut residue = anti.scalar.abs();
        for (_, t) in anti.blocks() {
            residue = residue.max(t.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        }
        residue
    }

    /// Largest deviation from within-group antisymmetry across all blocks.
    pub fn antisymmetry_deviation(&self) -> f64 {
        let mut dev = 0.0f64;
        for (key, t) in &self.blocks {
            for group in key.groups() {
                let axes: Vec<usize> = group.collect();
                for w in axes.windows(2) {
                    let mut perm: Vec<usize> = (0..t.ndim()).collect();
                    perm.swap(w[0], w[1]);
                    let swapped = t.view().permuted_axes(IxDyn(&perm));
                    ndarray::Zip::from(t).and(&swapped).for_each(|&a, &b| {
                        dev = dev.max((a + b).abs());
                    });
                }
            }
        }
        dev
    }

    /// Largest absolute difference against another operator.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let diff = self.add(&other.scaled(-1.0));
        let mut m = diff.scalar.abs();
        for (_, t) in diff.blocks() {
            m = m.max(t.iter().fold(0.0f64, |mm, v| mm.max(v.abs())));
        }
        m
    }

    /// Expands every block entry into an elementary operator string.
    ///
    /// Each item is `(coefficient, ops)` where `ops` is a list of
    /// `(is_creation, global_spin_orbital)` in quasiparticle normal order
    /// (apply right-to-left to a ket). The coefficient absorbs the block
    /// normalization and the reordering parity, so the operator equals
    /// `scalar + sum coeff * ops`.
    pub fn elementary_strings(&self) -> Vec<(f64, Vec<(bool, usize)>)> {
        let mut out = Vec::new();
        for (key, tensor) in &self.blocks {
            let k = key.rank;
            let norm = key.normalization();
            // Template string: a+_{u0}..a+_{u(k-1)} a_{l(k-1)}..a_{l0}.
            // Sequence entry: (axis, is_creation).
            let mut seq: Vec<(usize, bool)> = (0..k).map(|ax| (ax, true)).collect();
            seq.extend((0..k).rev().map(|j| (k + j, false)));
            // Quasiparticle creation ops first (stable), parity from the
            // permutation. a+ on particle and a on hole are creators.
            let is_q_creator = |&(ax, cre): &(usize, bool)| match key.axis_space(ax) {
                Space::Particle => cre,
                Space::Hole => !cre,
            };
            let mut order: Vec<usize> = (0..2 * k).collect();
            order.sort_by_key(|&i| if is_q_creator(&seq[i]) { 0 } else { 1 });
            let parity = permutation_parity(&order);
            let sign = if parity { -1.0 } else { 1.0 };
            let template: Vec<(usize, bool)> = order.iter().map(|&i| seq[i]).collect();
            for (idx, &c) in tensor.indexed_iter() {
                if c == 0.0 {
                    continue;
                }
                let ops: Vec<(bool, usize)> = template
                    .iter()
                    .map(|&(ax, cre)| (cre, self.global_index(key.axis_space(ax), idx[ax])))
                    .collect();
                out.push((c * norm * sign, ops));
            }
        }
        out
    }
}

/// Parity of the permutation `perm` (true = odd), where `perm[i]` is the
/// original position of the element now at position `i`.
pub fn permutation_parity(perm: &[usize]) -> bool {
    let mut inversions = 0usize;
    for i in 0..perm.len() {
        for j in i + 1..perm.len() {
            if perm[i] > perm[j] {
                inversions += 1;
            }
        }
    }
    inversions % 2 == 1
}

/// Sums sgn(pi) * T_pi over all permutations pi acting within each listed
/// axis group. Applied once per block after raw accumulation, this turns a
/// plain coefficient layout into the antisymmetric canonical one.
pub fn antisymmetrize_groups(
    tensor: &ArrayD<f64>,
    groups: &[std::ops::Range<usize>],
) -> ArrayD<f64> {
    use itertools::Itertools;
    let ndim = tensor.ndim();
    let mut out = ArrayD::<f64>::zeros(tensor.raw_dim());
    // Cartesian product of permutations of each group.
    let group_perms: Vec<Vec<Vec<usize>>> = groups
        .iter()
        .map(|g| {
            let axes: Vec<usize> = g.clone().collect();
            axes.iter()
                .copied()
                .permutations(axes.len())
                .collect::<Vec<_>>()
        })
        .collect();
    let mut choice = vec![0usize; group_perms.len()];
    loop {
        let mut perm: Vec<usize> = (0..ndim).collect();
        let mut odd = false;
        for (gi, g) in groups.iter().enumerate() {
            let axes: Vec<usize> = g.clone().collect();
            let p = &group_perms[gi][choice[gi]];
            let mut rel: Vec<usize> = Vec::with_capacity(axes.len());
            for (slot, &target) in axes.iter().zip(p.iter()) {
                perm[*slot] = target;
                rel.push(axes.iter().position(|&a| a == target).unwrap());
            }
            if permutation_parity(&rel) {
                odd = !odd;
            }
        }
        let view = tensor.view().permuted_axes(IxDyn(&perm));
        if odd {
            ndarray::Zip::from(&mut out).and(&view).for_each(|o, &v| *o -= v);
        } else {
            ndarray::Zip::from(&mut out).and(&view).for_each(|o, &v| *o += v);
        }
        // odometer
        let mut gi = 0;
        loop {
            if gi == choice.len() {
                return out;
            }
            choice[gi] += 1;
            if choice[gi] < group_perms[gi].len() {
                break;
            }
            choice[gi] = 0;
            gi += 1;
        }
    }
}
