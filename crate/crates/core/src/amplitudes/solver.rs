//! Spin-orbital amplitude solvers.
//!
//! The CCSD working equations are the standard spin-orbital projection
//! equations in intermediate form, with the off-diagonal Fock pieces kept
//! in the residual so non-canonical (e.g. natural-virtual) bases converge
//! to the same equations. Iteration updates are preconditioned by the
//! diagonal orbital-energy denominators and accelerated with DIIS.

use super::einsum::einsum;
use super::{AmplitudeMethod, CcError, ClusterAmplitudes};
use crate::spin_orbital::SpinOrbitalHamiltonian;
use nalgebra::{DMatrix, DVector};
use ndarray::{s, Array2, Array4, ArrayD, Ix2, Ix4, IxDyn};

#[derive(Debug, Clone, Copy)]
pub struct CcOptions {
    pub max_iterations: usize,
    pub residual_tol: f64,
    pub diis_size: usize,
}

impl Default for CcOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            residual_tol: 1e-9,
            diis_size: 8,
        }
    }
}

const DEGENERACY_FLOOR: f64 = 1e-8;
const DIVERGENCE_CEILING: f64 = 1e3;

struct Blocks {
    f: Array2<f64>,
    no: usize,
    nv: usize,
    oovv: ArrayD<f64>,
    ooov: ArrayD<f64>,
    oooo: ArrayD<f64>,
    ovvv: ArrayD<f64>,
    vovv: ArrayD<f64>,
    oovo: ArrayD<f64>,
    ovvo: ArrayD<f64>,
    ovov: ArrayD<f64>,
    vvvv: ArrayD<f64>,
    vvvo: ArrayD<f64>,
    ovoo: ArrayD<f64>,
    d1: Array2<f64>,
    d2: Array4<f64>,
}

fn blocks(h: &SpinOrbitalHamiltonian) -> Result<Blocks, CcError> {
    let ns = h.n_spin_orbitals;
    let no = h.n_occupied();
    let nv = ns - no;
    assert!(
        h.reference_occupation.iter().copied().eq(0..no),
        "reference must occupy the lowest spin orbitals"
    );
    let f = h.fock();
    let v = &h.v_antisym;
    let o = s![0..no];
    let u = s![no..ns];
    let grab4 = |a: ndarray::SliceInfo<[ndarray::SliceInfoElem; 1], ndarray::Ix1, ndarray::Ix1>,
                 b,
                 c,
                 d|
     -> ArrayD<f64> {
        v.slice(s![a.clone(), b, c, d]).to_owned().into_dyn()
    };
    let _ = grab4;
    let oovv = v.slice(s![o, o, u, u]).to_owned().into_dyn();
    let ooov = v.slice(s![o, o, o, u]).to_owned().into_dyn();
    let oooo = v.slice(s![o, o, o, o]).to_owned().into_dyn();
    let ovvv = v.slice(s![o, u, u, u]).to_owned().into_dyn();
    let vovv = v.slice(s![u, o, u, u]).to_owned().into_dyn();
    let oovo = v.slice(s![o, o, u, o]).to_owned().into_dyn();
    let ovvo = v.slice(s![o, u, u, o]).to_owned().into_dyn();
    let ovov = v.slice(s![o, u, o, u]).to_owned().into_dyn();
    let vvvv = v.slice(s![u, u, u, u]).to_owned().into_dyn();
    let vvvo = v.slice(s![u, u, u, o]).to_owned().into_dyn();
    let ovoo = v.slice(s![o, u, o, o]).to_owned().into_dyn();
    let mut d1 = Array2::zeros((no, nv));
    for i in 0..no {
        for a in 0..nv {
            d1[[i, a]] = f[[i, i]] - f[[no + a, no + a]];
        }
    }
    let mut d2 = Array4::zeros((no, no, nv, nv));
    for i in 0..no {
        for j in 0..no {
            for a in 0..nv {
                for b in 0..nv {
                    let delta = f[[i, i]] + f[[j, j]] - f[[no + a, no + a]] - f[[no + b, no + b]];
                    if delta.abs() < DEGENERACY_FLOOR && oovv[[i, j, a, b]].abs() > 1e-12 {
                        return Err(CcError::DegenerateDenominator {
                            i,
                            j,
                            a: no + a,
                            b: no + b,
                            delta,
                        });
                    }
                    d2[[i, j, a, b]] = delta;
                }
            }
        }
    }
    Ok(Blocks {
        f,
        no,
        nv,
        oovv,
        ooov,
        oooo,
        ovvv,
        vovv,
        oovo,
        ovvo,
        ovov,
        vvvv,
        vvvo,
        ovoo,
        d1,
        d2,
    })
}

fn p_ab(x: &ArrayD<f64>) -> ArrayD<f64> {
    x - &x.view().permuted_axes(IxDyn(&[0, 1, 3, 2]))
}

fn p_ij(x: &ArrayD<f64>) -> ArrayD<f64> {
    x - &x.view().permuted_axes(IxDyn(&[1, 0, 2, 3]))
}

/// Right-hand sides of the T1/T2 equations: at the solution,
/// rhs1 = D1*t1 and rhs2 = D2*t2.
fn amplitude_rhs(b: &Blocks, t1: &ArrayD<f64>, t2: &ArrayD<f64>) -> (ArrayD<f64>, ArrayD<f64>) {
    let no = b.no;
    let nv = b.nv;
    let f_ov = b.f.slice(s![0..no, no..no + nv]).to_owned().into_dyn();
    // off-diagonal Fock blocks
    let mut f_vv = b.f.slice(s![no..no + nv, no..no + nv]).to_owned();
    for a in 0..nv {
        f_vv[[a, a]] = 0.0;
    }
    let f_vv = f_vv.into_dyn();
    let mut f_oo = b.f.slice(s![0..no, 0..no]).to_owned();
    for i in 0..no {
        f_oo[[i, i]] = 0.0;
    }
    let f_oo = f_oo.into_dyn();

    let t11 = einsum("ia,jb->ijab", &[t1.view(), t1.view()]);
    let t11a = &t11 - &t11.view().permuted_axes(IxDyn(&[0, 1, 3, 2]));
    let tau_t = t2 + &(0.5 * &t11a);
    let tau = t2 + &t11a;

    // one-particle intermediates
    let fae = &f_vv - &(0.5 * einsum("me,ma->ae", &[f_ov.view(), t1.view()]))
        + einsum("mf,mafe->ae", &[t1.view(), b.ovvv.view()])
        - 0.5 * einsum("mnaf,mnef->ae", &[tau_t.view(), b.oovv.view()]);
    let fmi = &f_oo + &(0.5 * einsum("ie,me->mi", &[t1.view(), f_ov.view()]))
        + einsum("ne,mnie->mi", &[t1.view(), b.ooov.view()])
        + 0.5 * einsum("inef,mnef->mi", &[tau_t.view(), b.oovv.view()]);
    let fme = &f_ov + &einsum("nf,mnef->me", &[t1.view(), b.oovv.view()]);

    // two-particle intermediates
    let wmnij_t1 = einsum("je,mnie->mnij", &[t1.view(), b.ooov.view()]);
    let wmnij = &b.oooo + &(&wmnij_t1 - &wmnij_t1.view().permuted_axes(IxDyn(&[0, 1, 3, 2])))
        + 0.25 * einsum("ijef,mnef->mnij", &[tau.view(), b.oovv.view()]);
    let wabef_t1 = einsum("mb,amef->abef", &[t1.view(), b.vovv.view()]);
    let wabef = &b.vvvv - &(&wabef_t1 - &wabef_t1.view().permuted_axes(IxDyn(&[1, 0, 2, 3])))
        + 0.25 * einsum("mnab,mnef->abef", &[tau.view(), b.oovv.view()]);
    let half_t2_plus_tt = 0.5 * t2 + &einsum("jf,nb->jnfb", &[t1.view(), t1.view()]);
    let wmbej = &b.ovvo + &einsum("jf,mbef->mbej", &[t1.view(), b.ovvv.view()])
        - einsum("nb,mnej->mbej", &[t1.view(), b.oovo.view()])
        - einsum("jnfb,mnef->mbej", &[half_t2_plus_tt.view(), b.oovv.view()]);

    // T1 right-hand side
    let rhs1 = &f_ov + &einsum("ie,ae->ia", &[t1.view(), fae.view()])
        - einsum("ma,mi->ia", &[t1.view(), fmi.view()])
        + einsum("imae,me->ia", &[t2.view(), fme.view()])
        - einsum("nf,naif->ia", &[t1.view(), b.ovov.view()])
        - 0.5 * einsum("imef,maef->ia", &[t2.view(), b.ovvv.view()])
        - 0.5 * einsum("mnae,nmei->ia", &[t2.view(), b.oovo.view()]);

    // T2 right-hand side
    let fae_eff = &fae - &(0.5 * einsum("mb,me->be", &[t1.view(), fme.view()]));
    let fmi_eff = &fmi + &(0.5 * einsum("je,me->mj", &[t1.view(), fme.view()]));
    let mut rhs2 = b.oovv.clone();
    rhs2 = rhs2 + p_ab(&einsum("ijae,be->ijab", &[t2.view(), fae_eff.view()]));
    rhs2 = rhs2 - p_ij(&einsum("imab,mj->ijab", &[t2.view(), fmi_eff.view()]));
    rhs2 = rhs2 + 0.5 * einsum("mnab,mnij->ijab", &[tau.view(), wmnij.view()]);
    rhs2 = rhs2 + 0.5 * einsum("ijef,abef->ijab", &[tau.view(), wabef.view()]);
    let ring = einsum("imae,mbej->ijab", &[t2.view(), wmbej.view()])
        - einsum("ie,ma,mbej->ijab", &[t1.view(), t1.view(), b.ovvo.view()]);
    rhs2 = rhs2 + p_ij(&p_ab(&ring));
    rhs2 = rhs2 + p_ij(&einsum("ie,abej->ijab", &[t1.view(), b.vvvo.view()]));
    rhs2 = rhs2 - p_ab(&einsum("ma,mbij->ijab", &[t1.view(), b.ovoo.view()]));
    (rhs1, rhs2)
}

pub(crate) fn correlation_energy(
    h: &SpinOrbitalHamiltonian,
    t1: &Array2<f64>,
    t2: &Array4<f64>,
) -> f64 {
    let no = t1.shape()[0];
    let ns = h.n_spin_orbitals;
    let f = h.fock();
    let f_ov = f.slice(s![0..no, no..ns]).to_owned().into_dyn();
    let oovv = h
        .v_antisym
        .slice(s![0..no, 0..no, no..ns, no..ns])
        .to_owned()
        .into_dyn();
    let t1d = t1.to_owned().into_dyn();
    let t2d = t2.to_owned().into_dyn();
    let e1 = einsum("ia,ia->", &[f_ov.view(), t1d.view()])[IxDyn(&[])];
    let e2 = 0.25 * einsum("ijab,ijab->", &[oovv.view(), t2d.view()])[IxDyn(&[])];
    let e11 = 0.5 * einsum("ijab,ia,jb->", &[oovv.view(), t1d.view(), t1d.view()])[IxDyn(&[])];
    e1 + e2 + e11
}

struct Diis {
    size: usize,
    vectors: Vec<DVector<f64>>,
    errors: Vec<DVector<f64>>,
}

impl Diis {
    fn new(size: usize) -> Self {
        Self {
            size,
            vectors: Vec::new(),
            errors: Vec::new(),
        }
    }

    fn push_and_extrapolate(&mut self, vector: DVector<f64>, error: DVector<f64>) -> DVector<f64> {
        self.vectors.push(vector);
        self.errors.push(error);
        if self.vectors.len() > self.size {
            self.vectors.remove(0);
            self.errors.remove(0);
        }
        let m = self.vectors.len();
        if m < 2 {
            return self.vectors.last().unwrap().clone();
        }
        let mut b = DMatrix::<f64>::from_element(m + 1, m + 1, -1.0);
        b[(m, m)] = 0.0;
        for x in 0..m {
            for y in 0..m {
                b[(x, y)] = self.errors[x].dot(&self.errors[y]);
            }
        }
        let mut rhs = DVector::<f64>::zeros(m + 1);
        rhs[m] = -1.0;
        match b.lu().solve(&rhs) {
            Some(c) => {
                let mut out = DVector::<f64>::zeros(self.vectors[0].len());
                for x in 0..m {
                    out += &self.vectors[x] * c[x];
                }
                out
            }
            None => self.vectors.last().unwrap().clone(),
        }
    }
}

fn solve_cc(
    h: &SpinOrbitalHamiltonian,
    options: &CcOptions,
    freeze_t1: bool,
) -> Result<ClusterAmplitudes, CcError> {
    let b = blocks(h)?;
    let (no, nv) = (b.no, b.nv);
    let d1 = b.d1.clone().into_dyn();
    let d2 = b.d2.clone().into_dyn();
    // MP2 initial guess
    let mut t1 = ArrayD::<f64>::zeros(IxDyn(&[no, nv]));
    let mut t2 = &b.oovv / &d2_guard(&d2);
    let mut diis = Diis::new(options.diis_size);
    let mut residual = f64::INFINITY;
    for iteration in 0..options.max_iterations {
        let (rhs1, rhs2) = amplitude_rhs(&b, &t1, &t2);
        // full-equation residuals
        let r1 = &rhs1 - &(&d1 * &t1);
        let r2 = &rhs2 - &(&d2 * &t2);
        let r1_max = if freeze_t1 {
            0.0
        } else {
            r1.iter().fold(0.0f64, |m, v| m.max(v.abs()))
        };
        let r2_max = r2.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        residual = r1_max.max(r2_max);
        if residual > DIVERGENCE_CEILING || !residual.is_finite() {
            return Err(CcError::Diverged { residual });
        }
        if residual < options.residual_tol && iteration > 0 {
            break;
        }
        let t1_new = if freeze_t1 {
            t1.clone()
        } else {
            &rhs1 / &d1_guard(&d1)
        };
        let t2_new = &rhs2 / &d2_guard(&d2);
        // DIIS on the stacked amplitude vector
        let mut vec = Vec::with_capacity(t1_new.len() + t2_new.len());
        vec.extend(t1_new.iter().copied());
        vec.extend(t2_new.iter().copied());
        let mut err = Vec::with_capacity(vec.len());
        err.extend((&t1_new - &t1).iter().copied());
        err.extend((&t2_new - &t2).iter().copied());
        let mixed = diis.push_and_extrapolate(
            DVector::from_vec(vec),
            DVector::from_vec(err),
        );
        let flat = mixed.as_slice();
        t1 = ArrayD::from_shape_vec(IxDyn(&[no, nv]), flat[..no * nv].to_vec()).unwrap();
        t2 = ArrayD::from_shape_vec(IxDyn(&[no, no, nv, nv]), flat[no * nv..].to_vec()).unwrap();
        if freeze_t1 {
            t1.fill(0.0);
        }
    }
    if residual >= options.residual_tol {
        return Err(CcError::NotConverged {
            iterations: options.max_iterations,
            residual,
        });
    }
    let t1 = t1.into_dimensionality::<Ix2>().unwrap();
    let t2 = t2.into_dimensionality::<Ix4>().unwrap();
    let correlation_energy = correlation_energy(h, &t1, &t2);
    Ok(ClusterAmplitudes {
        t1,
        t2,
        method: if freeze_t1 {
            AmplitudeMethod::Ccd
        } else {
            AmplitudeMethod::Ccsd
        },
        correlation_energy,
    })
}

/// Replaces zero denominators (possible only where the coupling vanishes)
/// by 1 so the elementwise division stays finite.
fn d2_guard(d: &ArrayD<f64>) -> ArrayD<f64> {
    d.mapv(|x| if x.abs() < DEGENERACY_FLOOR { 1.0 } else { x })
}

fn d1_guard(d: &ArrayD<f64>) -> ArrayD<f64> {
    d.mapv(|x| if x.abs() < DEGENERACY_FLOOR { 1.0 } else { x })
}

/// Standard CCSD with DIIS; exact for two-electron systems.
pub fn solve_ccsd(
    h: &SpinOrbitalHamiltonian,
    options: &CcOptions,
) -> Result<ClusterAmplitudes, CcError> {
    solve_cc(h, options, false)
}

/// CCD: the doubles equations with t1 pinned at zero.
pub fn solve_ccd(
    h: &SpinOrbitalHamiltonian,
    options: &CcOptions,
) -> Result<ClusterAmplitudes, CcError> {
    solve_cc(h, options, true)
}

/// Infinity norm of the CCSD projection equations at the given amplitudes.
pub fn ccsd_residual_norm(h: &SpinOrbitalHamiltonian, amps: &ClusterAmplitudes) -> f64 {
    let b = blocks(h).expect("denominators were valid when the amplitudes were solved");
    let t1 = amps.t1.clone().into_dyn();
    let t2 = amps.t2.clone().into_dyn();
    let (rhs1, rhs2) = amplitude_rhs(&b, &t1, &t2);
    let r1 = &rhs1 - &(&b.d1.clone().into_dyn() * &t1);
    let r2 = &rhs2 - &(&b.d2.clone().into_dyn() * &t2);
    let skip_t1 = matches!(amps.method, AmplitudeMethod::Ccd);
    let r1_max = if skip_t1 {
        0.0
    } else {
        r1.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    };
    r1_max.max(r2.iter().fold(0.0f64, |m, v| m.max(v.abs())))
}

/// First-order (MP2) amplitudes. In a canonical basis this is the closed
/// form <ij||ab> / (e_i + e_j - e_a - e_b); with off-diagonal Fock blocks
/// present the first-order equations are iterated to convergence so the
/// energy stays invariant under occupied/virtual-preserving rotations.
pub fn solve_mp2(h: &SpinOrbitalHamiltonian) -> Result<ClusterAmplitudes, CcError> {
    let b = blocks(h)?;
    let (no, nv) = (b.no, b.nv);
    let d2 = b.d2.clone().into_dyn();
    let mut t2 = &b.oovv / &d2_guard(&d2);
    if h.fock_off_diagonal_norm() > 1e-10 {
        // Non-canonical first-order equations:
        // 0 = <ij||ab> + P(ab) f_be' t_ijae - P(ij) f_mj' t_imab - D*t
        let mut f_vv = b.f.slice(s![no..no + nv, no..no + nv]).to_owned();
        for a in 0..nv {
            f_vv[[a, a]] = 0.0;
        }
        let f_vv = f_vv.into_dyn();
        let mut f_oo = b.f.slice(s![0..no, 0..no]).to_owned();
        for i in 0..no {
            f_oo[[i, i]] = 0.0;
        }
        let f_oo = f_oo.into_dyn();
        let mut diis = Diis::new(8);
        let mut converged = false;
        for _ in 0..200 {
            let rhs = &b.oovv + &p_ab(&einsum("ijae,be->ijab", &[t2.view(), f_vv.view()]))
                - p_ij(&einsum("imab,mj->ijab", &[t2.view(), f_oo.view()]));
            let r = &rhs - &(&d2 * &t2);
            let rmax = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if rmax < 1e-11 {
                converged = true;
                break;
            }
            let t2_new = &rhs / &d2_guard(&d2);
            let err: Vec<f64> = (&t2_new - &t2).iter().copied().collect();
            let mixed = diis.push_and_extrapolate(
                DVector::from_vec(t2_new.iter().copied().collect()),
                DVector::from_vec(err),
            );
            t2 = ArrayD::from_shape_vec(IxDyn(&[no, no, nv, nv]), mixed.as_slice().to_vec())
                .unwrap();
        }
        if !converged {
            return Err(CcError::NotConverged {
                iterations: 200,
                residual: f64::NAN,
            });
        }
    }
    let t2 = t2.into_dimensionality::<Ix4>().unwrap();
    let t2d = t2.to_owned().into_dyn();
    let correlation_energy =
        0.25 * einsum("ijab,ijab->", &[b.oovv.view(), t2d.view()])[IxDyn(&[])];
    Ok(ClusterAmplitudes {
        t1: Array2::zeros((no, nv)),
        t2,
        method: AmplitudeMethod::Mp2,
        correlation_energy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fcidump::IntegralSet;
    use crate::spin_orbital::to_spin_orbitals;

    #[test]
    fn zero_two_electron_integrals_give_zero_amplitudes() {
        let mut set = IntegralSet::zeros(2, 2, 0);
        set.h_one[[0, 0]] = -1.5;
        set.h_one[[1, 1]] = -0.3;
        let h = to_spin_orbitals(&set).unwrap();
        let mp2 = solve_mp2(&h).unwrap();
        assert!(mp2.t2.iter().all(|&x| x == 0.0));
        assert_eq!(mp2.correlation_energy, 0.0);
        let ccsd = solve_ccsd(&h, &CcOptions::default()).unwrap();
        assert!(ccsd.t1.iter().all(|&x| x.abs() < 1e-12));
        assert!(ccsd.t2.iter().all(|&x| x.abs() < 1e-12));
        let ccd = solve_ccd(&h, &CcOptions::default()).unwrap();
        assert!(ccd.t2.iter().all(|&x| x.abs() < 1e-12));
    }

    #[test]
    fn mp2_energy_recompute_is_bit_identical() {
        let mut set = IntegralSet::zeros(2, 2, 0);
        set.h_one[[0, 0]] = -1.5;
        set.h_one[[1, 1]] = -0.3;
        set.eri_chem[[0, 0, 0, 0]] = 0.7;
        set.eri_chem[[1, 1, 1, 1]] = 0.6;
        set.eri_chem[[0, 0, 1, 1]] = 0.4;
        set.eri_chem[[1, 1, 0, 0]] = 0.4;
        for &(a, b, c, d) in &[(1usize, 0, 1, 0), (0, 1, 1, 0), (1, 0, 0, 1), (0, 1, 0, 1)] {
            set.eri_chem[[a, b, c, d]] = 0.2;
        }
        let h = to_spin_orbitals(&set).unwrap();
        let amps = solve_mp2(&h).unwrap();
        let no = amps.n_occupied();
        let ns = h.n_spin_orbitals;
        let oovv = h
            .v_antisym
            .slice(s![0..no, 0..no, no..ns, no..ns])
            .to_owned()
            .into_dyn();
        let t2d = amps.t2.clone().into_dyn();
        let recomputed = 0.25 * einsum("ijab,ijab->", &[oovv.view(), t2d.view()])[IxDyn(&[])];
        assert_eq!(recomputed, amps.correlation_energy);
        assert!(amps.correlation_energy < 0.0);
    }
}
