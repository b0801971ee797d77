//! Label-string tensor contraction over dynamic-dimension arrays.
//!
//! Supports specs like `"mnaf,mnef->ae"`: every label must appear with a
//! consistent dimension, labels are unique within one operand, and the
//! output labels are a subset of the input labels. Written for clarity at
//! small orbital counts rather than peak throughput.

use ndarray::{ArrayD, ArrayViewD, IxDyn};
use std::collections::BTreeMap;

pub fn einsum(spec: &str, ops: &[ArrayViewD<f64>]) -> ArrayD<f64> {
    let (inputs, output) = parse_spec(spec);
    assert_eq!(inputs.len(), ops.len(), "operand count mismatch in {spec}");

    let mut dims: BTreeMap<char, usize> = BTreeMap::new();
    for (labels, op) in inputs.iter().zip(ops) {
        assert_eq!(labels.len(), op.ndim(), "rank mismatch in {spec}");
        for (i, &l) in labels.iter().enumerate() {
            let d = op.shape()[i];
            if let Some(&prev) = dims.get(&l) {
                assert_eq!(prev, d, "dimension mismatch for label {l} in {spec}");
            } else {
                dims.insert(l, d);
            }
        }
    }
    for l in &output {
        assert!(dims.contains_key(l), "output label {l} missing in {spec}");
    }

    // Label order: output labels first, then summed labels.
    let mut all_labels: Vec<char> = output.clone();
    for l in dims.keys() {
        if !all_labels.contains(l) {
            all_labels.push(*l);
        }
    }
    let sizes: Vec<usize> = all_labels.iter().map(|l| dims[l]).collect();
    let out_shape: Vec<usize> = output.iter().map(|l| dims[l]).collect();
    let out_len: usize = out_shape.iter().product::<usize>().max(1);
    let mut out = vec![0.0f64; out_len];

    // Per-operand strides in label space (standard layout copies).
    let owned: Vec<ndarray::CowArray<f64, IxDyn>> =
        ops.iter().map(|o| o.as_standard_layout()).collect();
    let mut strides: Vec<Vec<usize>> = Vec::with_capacity(ops.len());
    for (labels, op) in inputs.iter().zip(ops) {
        let shape = op.shape();
        let mut op_strides = vec![0usize; all_labels.len()];
        let mut s = 1usize;
        for ax in (0..labels.len()).rev() {
            let pos = all_labels.iter().position(|&l| l == labels[ax]).unwrap();
            op_strides[pos] += s;
            s *= shape[ax];
        }
        strides.push(op_strides);
    }
    let mut out_strides = vec![0usize; all_labels.len()];
    {
        let mut s = 1usize;
        for ax in (0..output.len()).rev() {
            out_strides[ax] = s;
            s *= out_shape[ax];
        }
    }

    let total: usize = sizes.iter().product::<usize>().max(1);
    let mut assignment = vec![0usize; all_labels.len()];
    let mut op_offsets = vec![0usize; ops.len()];
    let mut out_offset = 0usize;
    let slices: Vec<&[f64]> = owned.iter().map(|o| o.as_slice().unwrap()).collect();
    for _ in 0..total {
        let mut product = 1.0f64;
        for (oi, slice) in slices.iter().enumerate() {
            product *= slice[op_offsets[oi]];
        }
        out[out_offset] += product;
        // odometer increment
        let mut ax = all_labels.len();
        loop {
            if ax == 0 {
                break;
            }
            ax -= 1;
            assignment[ax] += 1;
            for (oi, st) in strides.iter().enumerate() {
                op_offsets[oi] += st[ax];
            }
            out_offset += out_strides[ax];
            if assignment[ax] < sizes[ax] {
                break;
            }
            // roll over: subtract the full extent
            for (oi, st) in strides.iter().enumerate() {
                op_offsets[oi] -= st[ax] * sizes[ax];
            }
            out_offset -= out_strides[ax] * sizes[ax];
            assignment[ax] = 0;
        }
    }
    ArrayD::from_shape_vec(IxDyn(&out_shape), out).unwrap()
}

fn parse_spec(spec: &str) -> (Vec<Vec<char>>, Vec<char>) {
    let (lhs, rhs) = spec.split_once("->").expect("spec needs ->");
    let inputs: Vec<Vec<char>> = lhs.split(',').map(|s| s.trim().chars().collect()).collect();
    for labels in &inputs {
        let mut seen = std::collections::HashSet::new();
        for &l in labels {
            assert!(seen.insert(l), "repeated label {l} within one operand");
        }
    }
    (inputs, rhs.trim().chars().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr2;

    #[test]
    fn matmul_and_trace() {
        let a = arr2(&[[1.0, 2.0], [3.0, 4.0]]).into_dyn();
        let b = arr2(&[[5.0, 6.0], [7.0, 8.0]]).into_dyn();
        let c = einsum("ij,jk->ik", &[a.view(), b.view()]);
        assert_eq!(c[[0, 0]], 19.0);
        assert_eq!(c[[1, 0]], 43.0);
        let t = einsum("ij,ij->", &[a.view(), b.view()]);
        assert_eq!(t[IxDyn(&[])], 5.0 + 12.0 + 21.0 + 32.0);
    }

    #[test]
    fn outer_product_and_transpose_output() {
        let a = arr2(&[[1.0, 2.0], [3.0, 4.0]]).into_dyn();
        let b = arr2(&[[1.0, 0.0], [0.0, 1.0]]).into_dyn();
        let c = einsum("ia,jb->ijab", &[a.view(), b.view()]);
        assert_eq!(c[[1, 0, 0, 0]], 3.0);
        assert_eq!(c[[0, 1, 1, 1]], 2.0);
        let d = einsum("ij,jk->ki", &[a.view(), b.view()]);
        assert_eq!(d[[0, 1]], 3.0);
    }

    #[test]
    fn three_operand_contraction() {
        let a = arr2(&[[1.0, 2.0], [3.0, 4.0]]).into_dyn();
        let v = ndarray::arr1(&[1.0, -1.0]).into_dyn();
        let s = einsum("ij,i,j->", &[a.view(), v.view(), v.view()]);
        assert_eq!(s[IxDyn(&[])], 1.0 - 2.0 - 3.0 + 4.0);
    }
}
