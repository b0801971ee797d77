//! Truncated commutator expansions of the similarity-transformed
//! Hamiltonian and their body-rank control.

use super::{wick_commutator, NormalOrderedOperator, WickError};

/// Innermost operator of a nested commutator chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerOperator {
    /// The full normal-ordered Hamiltonian F_N + V_N.
    FullHamiltonian,
    /// Only the rank-1 (Fock) part.
    FockOnly,
}

/// One nested commutator `prefactor * [...[inner, s], s, ...]` with
/// `depth` applications of sigma.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommutatorTerm {
    pub prefactor: f64,
    pub depth: usize,
    pub inner: InnerOperator,
}

/// Named truncations of the commutator expansion. The second-order form
/// keeps `H + [H,s] + 1/2 [[F,s],s]`; the third-order form keeps
/// `H + [H,s] + 1/2 [[H,s],s] + 1/6 [[[F,s],s],s]`. The suffix selects the
/// body rank retained in the final operator (2 by default, 3 or 4 when
/// higher-body terms are kept).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[allow(non_camel_case_types)]
pub enum BchScheme {
    Bare,
    A4,
    A4_3,
    A7,
    A7_3,
    A7_34,
}

impl BchScheme {
    pub const ALL: [BchScheme; 6] = [
        BchScheme::Bare,
        BchScheme::A4,
        BchScheme::A4_3,
        BchScheme::A7,
        BchScheme::A7_3,
        BchScheme::A7_34,
    ];

    pub fn final_body_rank(&self) -> usize {
        match self {
            BchScheme::Bare | BchScheme::A4 | BchScheme::A7 => 2,
            BchScheme::A4_3 | BchScheme::A7_3 => 3,
            BchScheme::A7_34 => 4,
        }
    }

    pub fn commutator_terms(&self) -> Vec<CommutatorTerm> {
        use InnerOperator::*;
        match self {
            BchScheme::Bare => vec![],
            BchScheme::A4 | BchScheme::A4_3 => vec![
                CommutatorTerm {
                    prefactor: 1.0,
                    depth: 1,
                    inner: FullHamiltonian,
                },
                CommutatorTerm {
                    prefactor: 0.5,
                    depth: 2,
                    inner: FockOnly,
                },
            ],
            BchScheme::A7 | BchScheme::A7_3 | BchScheme::A7_34 => vec![
                CommutatorTerm {
                    prefactor: 1.0,
                    depth: 1,
                    inner: FullHamiltonian,
                },
                CommutatorTerm {
                    prefactor: 0.5,
                    depth: 2,
                    inner: FullHamiltonian,
                },
                CommutatorTerm {
                    prefactor: 1.0 / 6.0,
                    depth: 3,
                    inner: FockOnly,
                },
            ],
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BchScheme::Bare => "bare",
            BchScheme::A4 => "a4",
            BchScheme::A4_3 => "a4_3",
            BchScheme::A7 => "a7",
            BchScheme::A7_3 => "a7_3",
            BchScheme::A7_34 => "a7_34",
        }
    }

    pub fn parse(s: &str) -> Option<BchScheme> {
        match s.to_ascii_lowercase().as_str() {
            "bare" => Some(BchScheme::Bare),
            "a4" => Some(BchScheme::A4),
            "a4_3" | "a4(3)" => Some(BchScheme::A4_3),
            "a7" => Some(BchScheme::A7),
            "a7_3" | "a7(3)" => Some(BchScheme::A7_3),
            "a7_34" | "a7(34)" => Some(BchScheme::A7_34),
            _ => None,
        }
    }
}

impl std::fmt::Display for BchScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Largest anti-Hermitian residue tolerated after Hermitization.
pub const HERMITIZATION_TOLERANCE: f64 = 1e-10;

/// Sums the scheme's commutator terms on top of H_N, truncates the result
/// to the scheme's body rank, and Hermitizes it. Intermediates keep blocks
/// up to rank 4; only the final sum is truncated.
pub fn build_effective_hamiltonian(
    hn: &NormalOrderedOperator,
    sigma_ext: &NormalOrderedOperator,
    scheme: BchScheme,
) -> Result<NormalOrderedOperator, WickError> {
    let mut sum = hn.clone();
    for term in scheme.commutator_terms() {
        let mut current = match term.inner {
            InnerOperator::FullHamiltonian => hn.clone(),
            InnerOperator::FockOnly => hn.rank_part(1),
        };
        for _ in 0..term.depth {
            current = wick_commutator(&current, sigma_ext, 4)?;
        }
        sum = sum.add(&current.scaled(term.prefactor));
    }
    let truncated = sum.truncated(scheme.final_body_rank());
    let (hermitized, residue) = truncated.hermitized();
    if residue >= HERMITIZATION_TOLERANCE {
        return Err(WickError::Format(format!(
            "anti-Hermitian residue {residue:.3e} exceeds {HERMITIZATION_TOLERANCE:.0e}"
        )));
    }
    Ok(hermitized)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scheme_term_lists() {
        assert!(BchScheme::Bare.commutator_terms().is_empty());
        let a4 = BchScheme::A4.commutator_terms();
        assert_eq!(a4.len(), 2);
        assert_eq!(a4[0].depth, 1);
        assert_eq!(a4[1].prefactor, 0.5);
        assert_eq!(a4[1].inner, InnerOperator::FockOnly);
        let a7 = BchScheme::A7.commutator_terms();
        assert_eq!(a7.len(), 3);
        assert_eq!(a7[1].inner, InnerOperator::FullHamiltonian);
        assert!((a7[2].prefactor - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(BchScheme::A4_3.final_body_rank(), 3);
        assert_eq!(BchScheme::A7_34.final_body_rank(), 4);
        assert_eq!(BchScheme::parse("a7(34)"), Some(BchScheme::A7_34));
    }

    #[test]
    fn zero_sigma_returns_hn() {
        let mut hn = NormalOrderedOperator::new(1, 1);
        let key = super::super::BlockKey {
            rank: 1,
            upper_particles: 1,
            lower_particles: 1,
        };
        let mut t = ndarray::ArrayD::zeros(ndarray::IxDyn(&[1, 1]));
        t[[0, 0]] = -0.5;
        hn.set_block(key, t);
        let sigma = NormalOrderedOperator::new(1, 1);
        for scheme in BchScheme::ALL {
            let heff = build_effective_hamiltonian(&hn, &sigma, scheme).unwrap();
            assert!(heff.max_abs_diff(&hn) < 1e-15, "{scheme}");
        }
    }
}
