#!/usr/bin/env python3
"""Generate FCIDUMP fixtures for hydrogen chains with reference energies.

Self-contained electronic-structure generator (numpy/scipy only): s-type
Gaussian integrals in closed form, RHF with DIIS, closed-shell MP2,
spin-orbital CCSD/CCD, and determinant FCI. Each fixture is written as
<name>.fcidump plus a <name>.meta.toml sidecar carrying the geometry,
basis, and reference energies.

Run from the repository root:  python3 fixtures/generate.py
"""

import itertools
import math
import os

import numpy as np
from scipy.special import erf

ANGSTROM_TO_BOHR = 1.8897261246257702

# Contracted s-type basis sets for hydrogen: list of shells, each shell a
# list of (exponent, contraction coefficient) pairs.
BASES = {
    "sto-3g": [
        [(3.425250914, 0.1543289673),
         (0.6239137298, 0.5353281423),
         (0.1688554040, 0.4446345422)],
    ],
    "6-31g": [
        [(18.73113696, 0.03349460434),
         (2.825394365, 0.2347269535),
         (0.6401216923, 0.8137573261)],
        [(0.1612777588, 1.0)],
    ],
}


def boys0(t):
    if t < 1e-12:
        return 1.0 - t / 3.0
    return 0.5 * math.sqrt(math.pi / t) * erf(math.sqrt(t))


def prim_norm(alpha):
    return (2.0 * alpha / math.pi) ** 0.75


class Shell:
    def __init__(self, center, prims):
        self.center = np.asarray(center, dtype=float)
        self.prims = [(a, c * prim_norm(a)) for a, c in prims]

    def normalize(self):
        s = 0.0
        for a1, c1 in self.prims:
            for a2, c2 in self.prims:
                s += c1 * c2 * (math.pi / (a1 + a2)) ** 1.5
        scale = 1.0 / math.sqrt(s)
        self.prims = [(a, c * scale) for a, c in self.prims]


def overlap_prim(a, A, b, B):
    p = a + b
    ab2 = float(np.dot(A - B, A - B))
    return (math.pi / p) ** 1.5 * math.exp(-a * b / p * ab2)


def kinetic_prim(a, A, b, B):
    p = a + b
    ab2 = float(np.dot(A - B, A - B))
    mu = a * b / p
    return mu * (3.0 - 2.0 * mu * ab2) * (math.pi / p) ** 1.5 * math.exp(-mu * ab2)


def nuclear_prim(a, A, b, B, C, Z):
    p = a + b
    ab2 = float(np.dot(A - B, A - B))
    P = (a * A + b * B) / p
    pc2 = float(np.dot(P - C, P - C))
    return -Z * 2.0 * math.pi / p * math.exp(-a * b / p * ab2) * boys0(p * pc2)


def eri_prim(a, A, b, B, c, C, d, D):
    p = a + b
    q = c + d
    P = (a * A + b * B) / p
    Q = (c * C + d * D) / q
    ab2 = float(np.dot(A - B, A - B))
    cd2 = float(np.dot(C - D, C - D))
    pq2 = float(np.dot(P - Q, P - Q))
    pref = 2.0 * math.pi ** 2.5 / (p * q * math.sqrt(p + q))
    return pref * math.exp(-a * b / p * ab2 - c * d / q * cd2) * boys0(p * q / (p + q) * pq2)


def build_integrals(atoms, basis):
    shells = []
    for _, center in atoms:
        for prims in BASES[basis]:
            sh = Shell(np.asarray(center) * ANGSTROM_TO_BOHR, prims)
            sh.normalize()
            shells.append(sh)
    n = len(shells)
    S = np.zeros((n, n))
    T = np.zeros((n, n))
    V = np.zeros((n, n))
    for i, si in enumerate(shells):
        for j, sj in enumerate(shells):
            for a, ca in si.prims:
                for b, cb in sj.prims:
                    w = ca * cb
                    S[i, j] += w * overlap_prim(a, si.center, b, sj.center)
                    T[i, j] += w * kinetic_prim(a, si.center, b, sj.center)
                    for Zname, c in atoms:
                        V[i, j] += w * nuclear_prim(a, si.center, b, sj.center,
                                                    np.asarray(c) * ANGSTROM_TO_BOHR, 1.0)
    eri = np.zeros((n, n, n, n))
    for i, j, k, l in itertools.product(range(n), repeat=4):
        if i < j or k < l or (i, j) < (k, l):
            continue
        val = 0.0
        si, sj, sk, sl = shells[i], shells[j], shells[k], shells[l]
        for a, ca in si.prims:
            for b, cb in sj.prims:
                for c, cc in sk.prims:
                    for d, cd in sl.prims:
                        val += ca * cb * cc * cd * eri_prim(
                            a, si.center, b, sj.center, c, sk.center, d, sl.center)
        for p, q in ((i, j), (j, i)):
            for r, s in ((k, l), (l, k)):
                eri[p, q, r, s] = val
                eri[r, s, p, q] = val
    e_nuc = 0.0
    for x in range(len(atoms)):
        for y in range(x + 1, len(atoms)):
            rx = np.asarray(atoms[x][1]) * ANGSTROM_TO_BOHR
            ry = np.asarray(atoms[y][1]) * ANGSTROM_TO_BOHR
            e_nuc += 1.0 / float(np.linalg.norm(rx - ry))
    return S, T + V, eri, e_nuc


def rhf(S, hcore, eri, n_elec, e_nuc, max_iter=200, tol=1e-12):
    n = S.shape[0]
    nocc = n_elec // 2
    s_eval, s_evec = np.linalg.eigh(S)
    X = s_evec @ np.diag(s_eval ** -0.5) @ s_evec.T
    F = hcore.copy()
    D = np.zeros((n, n))
    e_old = 0.0
    diis_f, diis_r = [], []
    for it in range(max_iter):
        Fp = X.T @ F @ X
        eps, Cp = np.linalg.eigh(Fp)
        C = X @ Cp
        Cocc = C[:, :nocc]
        D = 2.0 * Cocc @ Cocc.T
        J = np.einsum("pqrs,rs->pq", eri, D)
        K = np.einsum("prqs,rs->pq", eri, D)
        F = hcore + J - 0.5 * K
        err = X.T @ (F @ D @ S - S @ D @ F) @ X
        diis_f.append(F.copy())
        diis_r.append(err.copy())
        if len(diis_f) > 8:
            diis_f.pop(0)
            diis_r.pop(0)
        if len(diis_f) > 1:
            m = len(diis_f)
            B = -np.ones((m + 1, m + 1))
            B[m, m] = 0.0
            for x in range(m):
                for y in range(m):
                    B[x, y] = np.sum(diis_r[x] * diis_r[y])
            rhs = np.zeros(m + 1)
            rhs[m] = -1.0
            try:
                c = np.linalg.solve(B, rhs)
                F = sum(c[x] * diis_f[x] for x in range(m))
            except np.linalg.LinAlgError:
                pass
        e_scf = 0.5 * np.sum(D * (hcore + (hcore + J - 0.5 * K))) + e_nuc
        if abs(e_scf - e_old) < tol and it > 2:
            break
        e_old = e_scf
    else:
        raise RuntimeError("SCF not converged")
    Fp = X.T @ F @ X
    eps, Cp = np.linalg.eigh(Fp)
    C = X @ Cp
    return e_scf, C, eps


def mo_integrals(hcore, eri, C):
    h_mo = C.T @ hcore @ C
    eri_mo = np.einsum("pqrs,pi,qj,rk,sl->ijkl", eri, C, C, C, C, optimize=True)
    return h_mo, eri_mo


def mp2_energy(eri_mo, eps, nocc):
    n = eri_mo.shape[0]
    e = 0.0
    for i in range(nocc):
        for j in range(nocc):
            for a in range(nocc, n):
                for b in range(nocc, n):
                    iajb = eri_mo[i, a, j, b]
                    ibja = eri_mo[i, b, j, a]
                    e += iajb * (2.0 * iajb - ibja) / (eps[i] + eps[j] - eps[a] - eps[b])
    return e


def spin_orbital_tensors(h_mo, eri_mo, eps):
    n = h_mo.shape[0]
    ns = 2 * n
    h = np.zeros((ns, ns))
    for p in range(ns):
        for q in range(ns):
            if p % 2 == q % 2:
                h[p, q] = h_mo[p // 2, q // 2]
    v = np.zeros((ns, ns, ns, ns))
    for p, q, r, s in itertools.product(range(ns), repeat=4):
        d1 = eri_mo[p // 2, r // 2, q // 2, s // 2] if (p % 2 == r % 2 and q % 2 == s % 2) else 0.0
        d2 = eri_mo[p // 2, s // 2, q // 2, r // 2] if (p % 2 == s % 2 and q % 2 == r % 2) else 0.0
        v[p, q, r, s] = d1 - d2
    eps_so = np.repeat(eps, 2)
    return h, v, eps_so


def ccsd(v, eps_so, n_elec, freeze_t1=False, tol=1e-11, max_iter=1000):
    """Spin-orbital CCSD for a canonical RHF reference. Returns (e_corr, t1, t2)."""
    ns = len(eps_so)
    o = slice(0, n_elec)
    u = slice(n_elec, ns)
    nocc, nvir = n_elec, ns - n_elec
    eo, ev = eps_so[o], eps_so[u]
    d1 = eo[:, None] - ev[None, :]
    d2 = eo[:, None, None, None] + eo[None, :, None, None] - ev[None, None, :, None] - ev[None, None, None, :]
    t1 = np.zeros((nocc, nvir))
    t2 = v[o, o, u, u] / d2
    diis_t, diis_r = [], []
    for it in range(max_iter):
        tau_t = t2 + 0.5 * (np.einsum("ia,jb->ijab", t1, t1) - np.einsum("ib,ja->ijab", t1, t1))
        tau = t2 + np.einsum("ia,jb->ijab", t1, t1) - np.einsum("ib,ja->ijab", t1, t1)
        Fae = np.einsum("mf,mafe->ae", t1, v[o, u, u, u]) - 0.5 * np.einsum(
            "mnaf,mnef->ae", tau_t, v[o, o, u, u])
        Fmi = np.einsum("ne,mnie->mi", t1, v[o, o, o, u]) + 0.5 * np.einsum(
            "inef,mnef->mi", tau_t, v[o, o, u, u])
        Fme = np.einsum("nf,mnef->me", t1, v[o, o, u, u])
        Wmnij = v[o, o, o, o] + np.einsum("je,mnie->mnij", t1, v[o, o, o, u]) - np.einsum(
            "ie,mnje->mnij", t1, v[o, o, o, u]) + 0.25 * np.einsum(
            "ijef,mnef->mnij", tau, v[o, o, u, u])
        Wabef = v[u, u, u, u] - np.einsum("mb,amef->abef", t1, v[u, o, u, u]) + np.einsum(
            "ma,bmef->abef", t1, v[u, o, u, u]) + 0.25 * np.einsum(
            "mnab,mnef->abef", tau, v[o, o, u, u])
        Wmbej = v[o, u, u, o] + np.einsum("jf,mbef->mbej", t1, v[o, u, u, u]) - np.einsum(
            "nb,mnej->mbej", t1, v[o, o, u, o]) - np.einsum(
            "jnfb,mnef->mbej", 0.5 * t2 + np.einsum("jf,nb->jnfb", t1, t1), v[o, o, u, u])
        # T1 residual (full equation value)
        r1 = (np.einsum("ie,ae->ia", t1, Fae) - np.einsum("ma,mi->ia", t1, Fmi)
              + np.einsum("imae,me->ia", t2, Fme) - np.einsum("nf,naif->ia", t1, v[o, u, o, u])
              - 0.5 * np.einsum("imef,maef->ia", t2, v[o, u, u, u])
              - 0.5 * np.einsum("mnae,nmei->ia", t2, v[o, o, u, o]))
        # T2 residual
        P_ab = lambda x: x - x.transpose(0, 1, 3, 2)
        P_ij = lambda x: x - x.transpose(1, 0, 2, 3)
        r2 = v[o, o, u, u].copy()
        r2 += P_ab(np.einsum("ijae,be->ijab", t2, Fae - 0.5 * np.einsum("mb,me->be", t1, Fme)))
        r2 -= P_ij(np.einsum("imab,mj->ijab", t2, Fmi + 0.5 * np.einsum("je,me->mj", t1, Fme)))
        r2 += 0.5 * np.einsum("mnab,mnij->ijab", tau, Wmnij)
        r2 += 0.5 * np.einsum("ijef,abef->ijab", tau, Wabef)
        r2 += P_ij(P_ab(np.einsum("imae,mbej->ijab", t2, Wmbej)
                        - np.einsum("ie,ma,mbej->ijab", t1, t1, v[o, u, u, o])))
        r2 += P_ij(np.einsum("ie,abej->ijab", t1, v[u, u, u, o]))
        r2 -= P_ab(np.einsum("ma,mbij->ijab", t1, v[o, u, o, o]))
        t1_new = np.zeros_like(t1) if freeze_t1 else r1 / d1
        t2_new = r2 / d2
        res = max(np.max(np.abs(t1_new - t1)) if t1.size else 0.0,
                  np.max(np.abs(t2_new - t2)))
        err = np.concatenate([(t1_new - t1).ravel(), (t2_new - t2).ravel()])
        flat = np.concatenate([t1_new.ravel(), t2_new.ravel()])
        diis_t.append(flat)
        diis_r.append(err)
        if len(diis_t) > 8:
            diis_t.pop(0)
            diis_r.pop(0)
        if len(diis_t) > 1:
            m = len(diis_t)
            B = -np.ones((m + 1, m + 1))
            B[m, m] = 0.0
            for x in range(m):
                for y in range(m):
                    B[x, y] = float(np.dot(diis_r[x], diis_r[y]))
            rhs = np.zeros(m + 1)
            rhs[m] = -1.0
            try:
                c = np.linalg.solve(B, rhs)
                flat = sum(c[x] * diis_t[x] for x in range(m))
            except np.linalg.LinAlgError:
                pass
        t1 = flat[:nocc * nvir].reshape(nocc, nvir)
        t2 = flat[nocc * nvir:].reshape(nocc, nocc, nvir, nvir)
        if freeze_t1:
            t1 = np.zeros_like(t1)
        if res < tol and it > 1:
            break
    else:
        raise RuntimeError("CCSD not converged")
    e_corr = 0.25 * np.einsum("ijab,ijab->", v[o, o, u, u], t2) + 0.5 * np.einsum(
        "ijab,ia,jb->", v[o, o, u, u], t1, t1)
    return e_corr, t1, t2


def fci_ground_state(h_so, v_so, n_elec, e_nuc):
    """Determinant CI in the Sz=0 sector; interleaved spin orbitals."""
    ns = h_so.shape[0]
    dets = []
    for occ in itertools.combinations(range(ns), n_elec):
        sz = sum(1 if p % 2 == 0 else -1 for p in occ)
        if sz == 0:
            dets.append(sum(1 << p for p in occ))
    dets.sort()
    index = {d: i for i, d in enumerate(dets)}
    dim = len(dets)
    H = np.zeros((dim, dim))

    def parity_below(det, p):
        return bin(det & ((1 << p) - 1)).count("1") % 2

    for col, det in enumerate(dets):
        occ = [p for p in range(ns) if det >> p & 1]
        # one-body
        for q in occ:
            d1 = det & ~(1 << q)
            s1 = (-1) ** parity_below(det, q)
            for p in range(ns):
                if d1 >> p & 1:
                    continue
                if abs(h_so[p, q]) < 1e-15:
                    continue
                d2 = d1 | (1 << p)
                s2 = (-1) ** parity_below(d1, p)
                row = index.get(d2)
                if row is not None:
                    H[row, col] += s1 * s2 * h_so[p, q]
        # two-body: 1/4 sum <pq||rs> a+p a+q a_s a_r
        for r_i in range(len(occ)):
            for s_i in range(len(occ)):
                if r_i == s_i:
                    continue
                r, s = occ[r_i], occ[s_i]
                d1 = det & ~(1 << r)
                sg1 = (-1) ** parity_below(det, r)
                d2 = d1 & ~(1 << s)
                sg2 = (-1) ** parity_below(d1, s)
                for q in range(ns):
                    if d2 >> q & 1:
                        continue
                    d3 = d2 | (1 << q)
                    sg3 = (-1) ** parity_below(d2, q)
                    for p in range(ns):
                        if d3 >> p & 1:
                            continue
                        val = v_so[p, q, r, s]
                        if abs(val) < 1e-15:
                            continue
                        d4 = d3 | (1 << p)
                        sg4 = (-1) ** parity_below(d3, p)
                        row = index.get(d4)
                        if row is not None:
                            H[row, col] += 0.25 * sg1 * sg2 * sg3 * sg4 * val
    evals = np.linalg.eigvalsh(H)
    return evals[0] + e_nuc


def write_fcidump(path, h_mo, eri_mo, e_nuc, n_elec, eps):
    n = h_mo.shape[0]
    lines = [f"&FCI NORB={n},NELEC={n_elec},MS2=0,",
             " ORBSYM=" + "1," * n,
             " ISYM=1,",
             "&END"]

    def rec(val, i, j, k, l):
        lines.append(f"{val:24.17e} {i:4d} {j:4d} {k:4d} {l:4d}")

    for i in range(n):
        for j in range(i + 1):
            for k in range(i + 1):
                lmax = j + 1 if k == i else k + 1
                for l in range(lmax):
                    val = eri_mo[i, j, k, l]
                    if abs(val) > 1e-16:
                        rec(val, i + 1, j + 1, k + 1, l + 1)
    for i in range(n):
        for j in range(i + 1):
            if abs(h_mo[i, j]) > 1e-16:
                rec(h_mo[i, j], i + 1, j + 1, 0, 0)
    for i in range(n):
        rec(eps[i], i + 1, 0, 0, 0)
    rec(e_nuc, 0, 0, 0, 0)
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def generate(name, atoms, basis, n_elec, outdir):
    S, hcore, eri, e_nuc = build_integrals(atoms, basis)
    e_scf, C, eps = rhf(S, hcore, eri, n_elec, e_nuc)
    h_mo, eri_mo = mo_integrals(hcore, eri, C)
    nocc = n_elec // 2
    e_mp2 = mp2_energy(eri_mo, eps, nocc)
    h_so, v_so, eps_so = spin_orbital_tensors(h_mo, eri_mo, eps)
    e_ccsd, _, _ = ccsd(v_so, eps_so, n_elec)
    e_ccd, _, _ = ccsd(v_so, eps_so, n_elec, freeze_t1=True)
    e_fci = fci_ground_state(h_so, v_so, n_elec, e_nuc)
    path = os.path.join(outdir, f"{name}.fcidump")
    write_fcidump(path, h_mo, eri_mo, e_nuc, n_elec, eps)
    geom = "; ".join(f"{el} {c[0]:.6f} {c[1]:.6f} {c[2]:.6f}" for el, c in atoms)
    with open(os.path.join(outdir, f"{name}.meta.toml"), "w") as f:
        f.write(f'name = "{name}"\n')
        f.write(f'geometry_angstrom = "{geom}"\n')
        f.write(f'basis = "{basis}"\n')
        f.write('generator = "fixtures/generate.py (numpy/scipy Gaussian s-orbital integrals)"\n')
        f.write(f'n_electrons = {n_elec}\n')
        f.write("\n[energies_hartree]\n")
        f.write(f"scf = {e_scf:.12f}\n")
        f.write(f"mp2 = {e_scf + e_mp2:.12f}\n")
        f.write(f"mp2_corr = {e_mp2:.12f}\n")
        f.write(f"ccsd = {e_scf + e_ccsd:.12f}\n")
        f.write(f"ccsd_corr = {e_ccsd:.12f}\n")
        f.write(f"ccd = {e_scf + e_ccd:.12f}\n")
        f.write(f"ccd_corr = {e_ccd:.12f}\n")
        f.write(f"fci = {e_fci:.12f}\n")
    print(f"{name:>18}: SCF {e_scf:.8f}  MP2c {e_mp2:.8f}  CCSDc {e_ccsd:.8f}  "
          f"CCDc {e_ccd:.8f}  FCI {e_fci:.8f}")
    return e_scf, e_fci


def hchain(n, spacing):
    return [("H", (0.0, 0.0, i * spacing)) for i in range(n)]


def main():
    outdir = os.path.dirname(os.path.abspath(__file__))
    generate("h2_sto3g_0.7414", hchain(2, 0.7414), "sto-3g", 2, outdir)
    generate("h2_631g_0.7414", hchain(2, 0.7414), "6-31g", 2, outdir)
    generate("h4_sto3g_0.80", hchain(4, 0.80), "sto-3g", 4, outdir)
    generate("h4_sto3g_1.00", hchain(4, 1.00), "sto-3g", 4, outdir)
    generate("h4_sto3g_1.60", hchain(4, 1.60), "sto-3g", 4, outdir)
    generate("h4_631g_1.00", hchain(4, 1.00), "6-31g", 4, outdir)
    generate("h6_sto3g_1.00", hchain(6, 1.00), "sto-3g", 6, outdir)
    generate("h6_sto3g_1.50", hchain(6, 1.50), "sto-3g", 6, outdir)


if __name__ == "__main__":
    main()
