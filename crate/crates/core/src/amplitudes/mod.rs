//! Cluster amplitudes: MP2/CCD/CCSD solvers, the internal/external
//! partition, the anti-Hermitian external generator, and amplitude
//! diagnostics.

mod einsum;
mod solver;

pub use einsum::einsum;
pub use solver::{solve_ccd, solve_ccsd, solve_mp2, ccsd_residual_norm, CcOptions};

use crate::active_space::ActiveSpace;
use crate::wick::{BlockKey, NormalOrderedOperator};
use ndarray::{Array2, Array4, ArrayD, IxDyn};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CcError {
    #[error("degenerate orbital-energy denominator at (i={i}, j={j}, a={a}, b={b}): |delta|={delta:.3e}")]
    DegenerateDenominator {
        i: usize,
        j: usize,
        a: usize,
        b: usize,
        delta: f64,
    },
    #[error("amplitude equations not converged after {iterations} iterations (residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("amplitude iteration diverged (residual {residual:.3e})")]
    Diverged { residual: f64 },
    #[error("expected amplitudes with method tag {expected:?}, got {got:?}")]
    WrongMethodTag {
        expected: AmplitudeMethod,
        got: AmplitudeMethod,
    },
    #[error("amplitude text format: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AmplitudeMethod {
    Mp2,
    Ccd,
    Ccsd,
    CcsdT1Zero,
}

impl AmplitudeMethod {
    pub fn name(&self) -> &'static str {
        match self {
            AmplitudeMethod::Mp2 => "mp2",
            AmplitudeMethod::Ccd => "ccd",
            AmplitudeMethod::Ccsd => "ccsd",
            AmplitudeMethod::CcsdT1Zero => "ccsd_t1_zero",
        }
    }
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mp2" => Some(Self::Mp2),
            "ccd" => Some(Self::Ccd),
            "ccsd" => Some(Self::Ccsd),
            "ccsd_t1_zero" | "ccsd(t1=0)" => Some(Self::CcsdT1Zero),
            _ => None,
        }
    }
    pub const ALL: [AmplitudeMethod; 4] = [
        AmplitudeMethod::Mp2,
        AmplitudeMethod::Ccd,
        AmplitudeMethod::Ccsd,
        AmplitudeMethod::CcsdT1Zero,
    ];
}

impl std::fmt::Display for AmplitudeMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// t1 over (occupied, virtual) and antisymmetrized t2 over
/// (occ, occ, virt, virt) spin orbitals.
#[derive(Debug, Clone)]
pub struct ClusterAmplitudes {
    pub t1: Array2<f64>,
    pub t2: Array4<f64>,
    pub method: AmplitudeMethod,
    pub correlation_energy: f64,
}

impl ClusterAmplitudes {
    pub fn n_occupied(&self) -> usize {
        self.t1.shape()[0]
    }
    pub fn n_virtual(&self) -> usize {
        self.t1.shape()[1]
    }

    /// Largest deviation from the t2 antisymmetry invariant.
    pub fn t2_antisymmetry_deviation(&self) -> f64 {
        let mut dev = 0.0f64;
        let (no, nv) = (self.n_occupied(), self.n_virtual());
        for i in 0..no {
            for j in 0..no {
                for a in 0..nv {
                    for b in 0..nv {
                        let t = self.t2[[i, j, a, b]];
                        dev = dev.max((t + self.t2[[j, i, a, b]]).abs());
                        dev = dev.max((t + self.t2[[i, j, b, a]]).abs());
                    }
                }
            }
        }
        dev
    }
}

/// Copies CCSD amplitudes with t1 forced to zero; t2 is bit-identical to
/// the input (it was solved in the presence of t1). The correlation
/// energy is recomputed from the retained tensors.
pub fn ccsd_t1_zeroed(
    amps: &ClusterAmplitudes,
    h: &crate::spin_orbital::SpinOrbitalHamiltonian,
) -> Result<ClusterAmplitudes, CcError> {
    if amps.method != AmplitudeMethod::Ccsd {
        return Err(CcError::WrongMethodTag {
            expected: AmplitudeMethod::Ccsd,
            got: amps.method,
        });
    }
    let mut out = amps.clone();
    out.t1.fill(0.0);
    out.method = AmplitudeMethod::CcsdT1Zero;
    out.correlation_energy = solver::correlation_energy(h, &out.t1, &out.t2);
    Ok(out)
}

/// The internal/external split of a set of amplitudes: external tensors
/// carry every element with at least one external index, internal tensors
/// the rest. ext + int reassembles the input exactly.
#[derive(Debug, Clone)]
pub struct ExternalPartition {
    pub t1_ext: Array2<f64>,
    pub t1_int: Array2<f64>,
    pub t2_ext: Array4<f64>,
    pub t2_int: Array4<f64>,
    pub method: AmplitudeMethod,
}

/// Masks amplitudes by whether any spin-orbital index lies outside the
/// active space.
pub fn partition_external(amps: &ClusterAmplitudes, space: &ActiveSpace) -> ExternalPartition {
    let no = amps.n_occupied();
    let nv = amps.n_virtual();
    let active = |global: usize| space.contains_spin_orbital(global);
    let mut t1_ext = amps.t1.clone();
    let mut t1_int = amps.t1.clone();
    for i in 0..no {
        for a in 0..nv {
            let internal = active(i) && active(no + a);
            if internal {
                t1_ext[[i, a]] = 0.0;
            } else {
                t1_int[[i, a]] = 0.0;
            }
        }
    }
    let mut t2_ext = amps.t2.clone();
    let mut t2_int = amps.t2.clone();
    for i in 0..no {
        for j in 0..no {
            for a in 0..nv {
                for b in 0..nv {
                    let internal =
                        active(i) && active(j) && active(no + a) && active(no + b);
                    if internal {
                        t2_ext[[i, j, a, b]] = 0.0;
                    } else {
                        t2_int[[i, j, a, b]] = 0.0;
                    }
                }
            }
        }
    }
    ExternalPartition {
        t1_ext,
        t1_int,
        t2_ext,
        t2_int,
        method: amps.method,
    }
}

/// Assembles the anti-Hermitian generator T_ext - T_ext^dagger as a
/// normal-ordered operator (rank-1 and rank-2 blocks).
pub fn build_sigma_ext(part: &ExternalPartition) -> NormalOrderedOperator {
    let no = part.t1_ext.shape()[0];
    let nv = part.t1_ext.shape()[1];
    let mut op = NormalOrderedOperator::new(no, nv);

    let mut exc1 = ArrayD::zeros(IxDyn(&[nv, no]));
    let mut dex1 = ArrayD::zeros(IxDyn(&[no, nv]));
    for i in 0..no {
        for a in 0..nv {
            let t = part.t1_ext[[i, a]];
            exc1[[a, i]] = t;
            dex1[[i, a]] = -t;
        }
    }
    op.set_block(
        BlockKey {
            rank: 1,
            upper_particles: 1,
            lower_particles: 0,
        },
        exc1,
    );
    op.set_block(
        BlockKey {
            rank: 1,
            upper_particles: 0,
            lower_particles: 1,
        },
        dex1,
    );

    let mut exc2 = ArrayD::zeros(IxDyn(&[nv, nv, no, no]));
    let mut dex2 = ArrayD::zeros(IxDyn(&[no, no, nv, nv]));
    for i in 0..no {
        for j in 0..no {
            for a in 0..nv {
                for b in 0..nv {
                    let t = part.t2_ext[[i, j, a, b]];
                    exc2[[a, b, i, j]] = t;
                    dex2[[i, j, a, b]] = -t;
                }
            }
        }
    }
    op.set_block(
        BlockKey {
            rank: 2,
            upper_particles: 2,
            lower_particles: 0,
        },
        exc2,
    );
    op.set_block(
        BlockKey {
            rank: 2,
            upper_particles: 0,
            lower_particles: 2,
        },
        dex2,
    );
    op.prune();
    op
}

/// Frobenius-norm amplitude diagnostics over full and external tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticReport {
    pub t1_diagnostic: f64,
    pub t1_ext_diagnostic: f64,
    pub t2_diagnostic: f64,
    pub t2_ext_diagnostic: f64,
    pub max_t1_ext: f64,
    pub max_t2_ext: f64,
}

fn frobenius<D: ndarray::Dimension>(t: &ndarray::Array<f64, D>) -> f64 {
    t.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// ||t||_F / sqrt(n_electrons) for t1 and t2, full and external, plus the
/// largest external amplitudes.
pub fn diagnostics(part: &ExternalPartition, n_electrons: usize) -> DiagnosticReport {
    let t1_full = &part.t1_ext + &part.t1_int;
    let t2_full = &part.t2_ext + &part.t2_int;
    let root_n = (n_electrons as f64).sqrt();
    let maxabs2 = |t: &Array2<f64>| t.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let maxabs4 = |t: &Array4<f64>| t.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    DiagnosticReport {
        t1_diagnostic: frobenius(&t1_full) / root_n,
        t1_ext_diagnostic: frobenius(&part.t1_ext) / root_n,
        t2_diagnostic: frobenius(&t2_full) / root_n,
        t2_ext_diagnostic: frobenius(&part.t2_ext) / root_n,
        max_t1_ext: maxabs2(&part.t1_ext),
        max_t2_ext: maxabs4(&part.t2_ext),
    }
}

/// One record per nonzero amplitude: `T1 i a value` / `T2 i j a b value`,
/// 0-based global spin-orbital indices, 17 significant digits.
pub fn write_amplitudes(amps: &ClusterAmplitudes) -> String {
    let no = amps.n_occupied();
    let mut out = String::new();
    out.push_str(&format!(
        "# amplitudes method={} n_occupied={} n_virtual={} correlation_energy={:.17e}\n",
        amps.method,
        no,
        amps.n_virtual(),
        amps.correlation_energy
    ));
    for ((i, a), &v) in amps.t1.indexed_iter() {
        if v != 0.0 {
            out.push_str(&format!("T1 {} {} {v:.17e}\n", i, no + a));
        }
    }
    for ((i, j, a, b), &v) in amps.t2.indexed_iter() {
        if v != 0.0 {
            out.push_str(&format!("T2 {} {} {} {} {v:.17e}\n", i, j, no + a, no + b));
        }
    }
    out
}

/// Parses the output of [`write_amplitudes`].
pub fn parse_amplitudes(text: &str) -> Result<ClusterAmplitudes, CcError> {
    let mut method = AmplitudeMethod::Ccsd;
    let mut no = None;
    let mut nv = None;
    let mut corr = 0.0;
    let mut records: Vec<(Vec<usize>, f64)> = Vec::new();
    for line in text.lines() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if t.starts_with('#') {
            for tok in t.trim_start_matches('#').split_whitespace() {
                if let Some(v) = tok.strip_prefix("method=") {
                    method = AmplitudeMethod::parse(v)
                        .ok_or_else(|| CcError::Format(format!("unknown method {v}")))?;
                }
                if let Some(v) = tok.strip_prefix("n_occupied=") {
                    no = v.parse().ok();
                }
                if let Some(v) = tok.strip_prefix("n_virtual=") {
                    nv = v.parse().ok();
                }
                if let Some(v) = tok.strip_prefix("correlation_energy=") {
                    corr = v.parse().unwrap_or(0.0);
                }
            }
            continue;
        }
        let toks: Vec<&str> = t.split_whitespace().collect();
        let arity = match toks[0] {
            "T1" => 2,
            "T2" => 4,
            other => return Err(CcError::Format(format!("unknown record kind {other}"))),
        };
        if toks.len() != arity + 2 {
            return Err(CcError::Format(format!("record arity mismatch: {t}")));
        }
        let mut idx = Vec::with_capacity(arity);
        for tok in &toks[1..1 + arity] {
            idx.push(
                tok.parse::<usize>()
                    .map_err(|_| CcError::Format(format!("bad index in {t}")))?,
            );
        }
        let val: f64 = toks[arity + 1]
            .parse()
            .map_err(|_| CcError::Format(format!("bad value in {t}")))?;
        records.push((idx, val));
    }
    let no = no.ok_or_else(|| CcError::Format("missing n_occupied header".into()))?;
    let nv = nv.ok_or_else(|| CcError::Format("missing n_virtual header".into()))?;
    let mut t1 = Array2::zeros((no, nv));
    let mut t2 = Array4::zeros((no, no, nv, nv));
    for (idx, val) in records {
        match idx.len() {
            2 => t1[[idx[0], idx[1] - no]] = val,
            4 => t2[[idx[0], idx[1], idx[2] - no, idx[3] - no]] = val,
            _ => unreachable!(),
        }
    }
    Ok(ClusterAmplitudes {
        t1,
        t2,
        method,
        correlation_energy: corr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_amps() -> ClusterAmplitudes {
        let mut t1 = Array2::zeros((2, 2));
        t1[[0, 1]] = 0.2;
        let mut t2 = Array4::zeros((2, 2, 2, 2));
        t2[[0, 1, 0, 1]] = 0.1;
        t2[[1, 0, 0, 1]] = -0.1;
        t2[[0, 1, 1, 0]] = -0.1;
        t2[[1, 0, 1, 0]] = 0.1;
        ClusterAmplitudes {
            t1,
            t2,
            method: AmplitudeMethod::Ccsd,
            correlation_energy: -0.05,
        }
    }

    #[test]
    fn partition_full_space_has_zero_external() {
        let amps = toy_amps();
        let space = ActiveSpace::full(2);
        let part = partition_external(&amps, &space);
        assert!(part.t1_ext.iter().all(|&x| x == 0.0));
        assert!(part.t2_ext.iter().all(|&x| x == 0.0));
        // reassembly is the identity
        assert_eq!(&part.t1_ext + &part.t1_int, amps.t1);
        assert_eq!(&part.t2_ext + &part.t2_int, amps.t2);
    }

    #[test]
    fn partition_occupied_only_space_is_all_external() {
        let amps = toy_amps();
        // active space = spatial orbital 0 only (the occupied one)
        let space = ActiveSpace::new(vec![0], 2).unwrap();
        let part = partition_external(&amps, &space);
        assert_eq!(part.t1_ext, amps.t1);
        assert_eq!(part.t2_ext, amps.t2);
        assert!(part.t1_int.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn diagnostics_values() {
        let amps = toy_amps();
        let space = ActiveSpace::new(vec![0], 2).unwrap();
        let part = partition_external(&amps, &space);
        let report = diagnostics(&part, 4);
        // single nonzero t1 of 0.2 with 4 electrons -> 0.1
        assert!((report.t1_diagnostic - 0.1).abs() < 1e-15);
        assert!((report.t1_ext_diagnostic - 0.1).abs() < 1e-15);
        assert_eq!(report.max_t1_ext, 0.2);
        assert_eq!(report.max_t2_ext, 0.1);
        // sign-flip invariance
        let mut flipped = amps.clone();
        flipped.t1.mapv_inplace(|v| -v);
        flipped.t2.mapv_inplace(|v| -v);
        let report2 = diagnostics(&partition_external(&flipped, &space), 4);
        assert_eq!(report, report2);
    }

    #[test]
    fn zero_amplitudes_zero_diagnostics() {
        let amps = ClusterAmplitudes {
            t1: Array2::zeros((2, 2)),
            t2: Array4::zeros((2, 2, 2, 2)),
            method: AmplitudeMethod::Mp2,
            correlation_energy: 0.0,
        };
        let space = ActiveSpace::full(2);
        let r = diagnostics(&partition_external(&amps, &space), 4);
        assert_eq!(r.t1_diagnostic, 0.0);
        assert_eq!(r.t2_diagnostic, 0.0);
        assert_eq!(r.max_t2_ext, 0.0);
    }

    #[test]
    fn sigma_single_t2_element_antihermitian_pair() {
        let mut part = ExternalPartition {
            t1_ext: Array2::zeros((2, 2)),
            t1_int: Array2::zeros((2, 2)),
            t2_ext: Array4::zeros((2, 2, 2, 2)),
            t2_int: Array4::zeros((2, 2, 2, 2)),
            method: AmplitudeMethod::Ccsd,
        };
        part.t2_ext[[0, 1, 0, 1]] = 0.3;
        part.t2_ext[[1, 0, 0, 1]] = -0.3;
        part.t2_ext[[0, 1, 1, 0]] = -0.3;
        part.t2_ext[[1, 0, 1, 0]] = 0.3;
        let sigma = build_sigma_ext(&part);
        let exc = sigma
            .block(&BlockKey {
                rank: 2,
                upper_particles: 2,
                lower_particles: 0,
            })
            .unwrap();
        let dex = sigma
            .block(&BlockKey {
                rank: 2,
                upper_particles: 0,
                lower_particles: 2,
            })
            .unwrap();
        assert_eq!(exc[[0, 1, 0, 1]], 0.3);
        assert_eq!(dex[[0, 1, 0, 1]], -0.3);
        // anti-Hermitian: sigma^dagger = -sigma
        assert!(sigma.dagger().max_abs_diff(&sigma.scaled(-1.0)) < 1e-15);
    }

    #[test]
    fn zero_partition_gives_zero_sigma() {
        let part = ExternalPartition {
            t1_ext: Array2::zeros((1, 1)),
            t1_int: Array2::zeros((1, 1)),
            t2_ext: Array4::zeros((1, 1, 1, 1)),
            t2_int: Array4::zeros((1, 1, 1, 1)),
            method: AmplitudeMethod::Mp2,
        };
        assert!(build_sigma_ext(&part).is_zero());
    }

    #[test]
    fn amplitude_text_roundtrip() {
        let amps = toy_amps();
        let text = write_amplitudes(&amps);
        let back = parse_amplitudes(&text).unwrap();
        assert_eq!(back.t1, amps.t1);
        assert_eq!(back.t2, amps.t2);
        assert_eq!(back.method, AmplitudeMethod::Ccsd);
        assert_eq!(back.correlation_energy, amps.correlation_energy);
    }
}
