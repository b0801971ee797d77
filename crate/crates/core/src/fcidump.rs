//! FCIDUMP parsing and writing.
//!
//! The accepted dialect is a namelist header (`NORB`, `NELEC`, `MS2`,
//! optional `ORBSYM`/`ISYM`) followed by `value i j k l` records with
//! 1-based indices in chemists' `(ij|kl)` convention:
//!
//! * all-zero indices: nuclear repulsion,
//! * `j=k=l=0`: orbital energy of orbital `i`,
//! * `k=l=0`: one-electron integral `h_ij`,
//! * otherwise: two-electron integral `(ij|kl)`.
//!
//! Only the permutation-unique elements need to be stored; the parser
//! expands the full 8-fold symmetry.

use ndarray::{Array2, Array4};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FcidumpError {
    #[error("line {line}: malformed header: {msg}")]
    Header { line: usize, msg: String },
    #[error("line {line}: malformed record: {msg}")]
    Record { line: usize, msg: String },
    #[error("line {line}: orbital index {index} out of range [1, {norb}]")]
    IndexOutOfRange { line: usize, index: i64, norb: usize },
    #[error("line {line}: duplicate record contradicts earlier value ({new} vs {old})")]
    InconsistentDuplicate { line: usize, new: f64, old: f64 },
    #[error("invalid integral set: {0}")]
    InvalidState(String),
}

/// Nuclear repulsion plus one- and two-electron integrals over spatial
/// molecular orbitals, chemists' convention.
#[derive(Debug, Clone)]
pub struct IntegralSet {
    pub n_spatial: usize,
    pub n_electrons: usize,
    /// Twice the spin projection, 2*Sz.
    pub ms2: i32,
    pub e_nuclear: f64,
    /// One-electron integrals h_pq (symmetric).
    pub h_one: Array2<f64>,
    /// Two-electron integrals (pq|rs) with 8-fold permutational symmetry.
    pub eri_chem: Array4<f64>,
    pub orbital_energies: Option<Vec<f64>>,
    pub orbital_symmetry_labels: Option<Vec<usize>>,
}

impl IntegralSet {
    pub fn zeros(n_spatial: usize, n_electrons: usize, ms2: i32) -> Self {
        Self {
            n_spatial,
            n_electrons,
            ms2,
            e_nuclear: 0.0,
            h_one: Array2::zeros((n_spatial, n_spatial)),
            eri_chem: Array4::zeros((n_spatial, n_spatial, n_spatial, n_spatial)),
            orbital_energies: None,
            orbital_symmetry_labels: None,
        }
    }

    /// Checks the structural invariants: symmetric h, 8-fold ERI symmetry,
    /// electron count within capacity.
    pub fn validate(&self) -> Result<(), FcidumpError> {
        let n = self.n_spatial;
        if self.n_electrons > 2 * n {
            return Err(FcidumpError::InvalidState(format!(
                "{} electrons exceed capacity of {} spatial orbitals",
                self.n_electrons, n
            )));
        }
        for p in 0..n {
            for q in 0..n {
                if (self.h_one[[p, q]] - self.h_one[[q, p]]).abs() > 1e-12 {
                    return Err(FcidumpError::InvalidState(format!(
                        "h_one not symmetric at ({p},{q})"
                    )));
                }
            }
        }
        for p in 0..n {
            for q in 0..n {
                for r in 0..n {
                    for s in 0..n {
                        let v = self.eri_chem[[p, q, r, s]];
                        for w in [
                            self.eri_chem[[q, p, r, s]],
                            self.eri_chem[[p, q, s, r]],
                            self.eri_chem[[r, s, p, q]],
                        ] {
                            if (v - w).abs() > 1e-12 {
                                return Err(FcidumpError::InvalidState(format!(
                                    "eri 8-fold symmetry violated at ({p},{q},{r},{s})"
                                )));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Folds the listed spatial orbitals into the core: their (doubly
    /// occupied) mean field is absorbed into `e_nuclear` and an effective
    /// one-electron operator over the remaining orbitals.
    pub fn freeze_core(&self, frozen: &[usize]) -> Result<IntegralSet, FcidumpError> {
        if frozen.is_empty() {
            return Ok(self.clone());
        }
        let n = self.n_spatial;
        let mut frozen = frozen.to_vec();
        frozen.sort_unstable();
        frozen.dedup();
        if let Some(&bad) = frozen.iter().find(|&&f| f >= n) {
            return Err(FcidumpError::InvalidState(format!(
                "frozen orbital {bad} out of range"
            )));
        }
        let n_occ = self.n_electrons / 2;
        if self.n_electrons % 2 != 0 || self.ms2 != 0 {
            return Err(FcidumpError::InvalidState(
                "frozen core requires a closed-shell reference".into(),
            ));
        }
        if let Some(&bad) = frozen.iter().find(|&&f| f >= n_occ) {
            return Err(FcidumpError::InvalidState(format!(
                "frozen orbital {bad} is not occupied in the reference"
            )));
        }
        let kept: Vec<usize> = (0..n).filter(|p| !frozen.contains(p)).collect();
        let m = kept.len();
        let mut e_core = self.e_nuclear;
        for &i in &frozen {
            e_core += 2.0 * self.h_one[[i, i]];
            for &j in &frozen {
                e_core += 2.0 * self.eri_chem[[i, i, j, j]] - self.eri_chem[[i, j, j, i]];
            }
        }
        let mut h = Array2::zeros((m, m));
        for (pp, &p) in kept.iter().enumerate() {
            for (qq, &q) in kept.iter().enumerate() {
                let mut v = self.h_one[[p, q]];
                for &i in &frozen {
                    v += 2.0 * self.eri_chem[[p, q, i, i]] - self.eri_chem[[p, i, i, q]];
                }
                h[[pp, qq]] = v;
            }
        }
        let mut eri = Array4::zeros((m, m, m, m));
        for (pp, &p) in kept.iter().enumerate() {
            for (qq, &q) in kept.iter().enumerate() {
                for (rr, &r) in kept.iter().enumerate() {
                    for (ss, &s) in kept.iter().enumerate() {
                        eri[[pp, qq, rr, ss]] = self.eri_chem[[p, q, r, s]];
                    }
                }
            }
        }
        Ok(IntegralSet {
            n_spatial: m,
            n_electrons: self.n_electrons - 2 * frozen.len(),
            ms2: self.ms2,
            e_nuclear: e_core,
            h_one: h,
            eri_chem: eri,
            orbital_energies: self
                .orbital_energies
                .as_ref()
                .map(|e| kept.iter().map(|&p| e[p]).collect()),
            orbital_symmetry_labels: self
                .orbital_symmetry_labels
                .as_ref()
                .map(|l| kept.iter().map(|&p| l[p]).collect()),
        })
    }
}

fn parse_header(
    text: &str,
) -> Result<(usize, usize, i32, Option<Vec<usize>>, usize), FcidumpError> {
    // Collect header lines until &END or / terminator.
    let mut header = String::new();
    let mut end_line = 0;
    let mut started = false;
    for (lineno, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if !started {
            let upper = trimmed.to_ascii_uppercase();
            if !upper.starts_with("&FCI") {
                return Err(FcidumpError::Header {
                    line: lineno + 1,
                    msg: "expected &FCI namelist".into(),
                });
            }
            started = true;
            header.push_str(&trimmed[4..]);
            header.push(' ');
        } else {
            header.push_str(trimmed);
            header.push(' ');
        }
        let upper = header.to_ascii_uppercase();
        if upper.contains("&END") || upper.contains("/") {
            end_line = lineno + 1;
            break;
        }
    }
    if end_line == 0 {
        return Err(FcidumpError::Header {
            line: 1,
            msg: "header terminator (&END or /) not found".into(),
        });
    }
    let upper = header.to_ascii_uppercase();
    let body = upper.split("&END").next().unwrap().split('/').next().unwrap();
    let mut norb = None;
    let mut nelec = None;
    let mut ms2 = 0i32;
    let mut orbsym: Option<Vec<usize>> = None;
    // Tokenize on commas, treating KEY=V1,V2,... lists.
    let mut key: Option<String> = None;
    let mut values: Vec<String> = Vec::new();
    let mut assignments: Vec<(String, Vec<String>)> = Vec::new();
    for tok in body.split(|c| c == ',' || c == ' ').map(str::trim) {
        if tok.is_empty() {
            continue;
        }
        if let Some(eq) = tok.find('=') {
            if let Some(k) = key.take() {
                assignments.push((k, std::mem::take(&mut values)));
            }
            key = Some(tok[..eq].trim().to_string());
            let v = tok[eq + 1..].trim();
            if !v.is_empty() {
                values.push(v.to_string());
            }
        } else if key.is_some() {
            values.push(tok.to_string());
        }
    }
    if let Some(k) = key.take() {
        assignments.push((k, values));
    }
    for (k, vals) in assignments {
        let first = || -> Result<i64, FcidumpError> {
            vals.first()
                .and_then(|v| v.parse::<i64>().ok())
                .ok_or_else(|| FcidumpError::Header {
                    line: 1,
                    msg: format!("could not parse value for {k}"),
                })
        };
        match k.as_str() {
            "NORB" => norb = Some(first()? as usize),
            "NELEC" => nelec = Some(first()? as usize),
            "MS2" => ms2 = first()? as i32,
            "ORBSYM" => {
                let mut syms = Vec::new();
                for v in &vals {
                    syms.push(v.parse::<usize>().map_err(|_| FcidumpError::Header {
                        line: 1,
                        msg: format!("bad ORBSYM entry {v}"),
                    })?);
                }
                orbsym = Some(syms);
            }
            _ => {} // tolerate ISYM and other keys
        }
    }
    let norb = norb.ok_or(FcidumpError::Header {
        line: 1,
        msg: "NORB missing".into(),
    })?;
    let nelec = nelec.ok_or(FcidumpError::Header {
        line: 1,
        msg: "NELEC missing".into(),
    })?;
    Ok((norb, nelec, ms2, orbsym, end_line))
}

/// Parses an FCIDUMP stream into an [`IntegralSet`].
pub fn parse_fcidump(text: &str) -> Result<IntegralSet, FcidumpError> {
    let (norb, nelec, ms2, orbsym, header_end) = parse_header(text)?;
    let mut set = IntegralSet::zeros(norb, nelec, ms2);
    set.orbital_symmetry_labels = orbsym;
    let mut energies: Vec<Option<f64>> = vec![None; norb];
    let mut seen: std::collections::HashMap<(usize, usize, usize, usize), f64> =
        std::collections::HashMap::new();
    let mut seen_one: std::collections::HashMap<(usize, usize), f64> =
        std::collections::HashMap::new();
    let mut seen_nuc: Option<f64> = None;

    for (lineno, line) in text.lines().enumerate().skip(header_end) {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let mut parts = trimmed.split_whitespace();
        let val: f64 = parts
            .next()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| FcidumpError::Record {
                line: lineno + 1,
                msg: "missing or unparsable value field".into(),
            })?;
        let mut idx = [0i64; 4];
        for slot in idx.iter_mut() {
            *slot = parts
                .next()
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| FcidumpError::Record {
                    line: lineno + 1,
                    msg: "expected four integer indices".into(),
                })?;
        }
        if parts.next().is_some() {
            return Err(FcidumpError::Record {
                line: lineno + 1,
                msg: "trailing fields after indices".into(),
            });
        }
        for &ix in &idx {
            if ix < 0 || ix as usize > norb {
                return Err(FcidumpError::IndexOutOfRange {
                    line: lineno + 1,
                    index: ix,
                    norb,
                });
            }
        }
        let [i, j, k, l] = idx.map(|x| x as usize);
        match (i, j, k, l) {
            (0, 0, 0, 0) => {
                if let Some(old) = seen_nuc {
                    if (old - val).abs() > 1e-10 {
                        return Err(FcidumpError::InconsistentDuplicate {
                            line: lineno + 1,
                            new: val,
                            old,
                        });
                    }
                }
                seen_nuc = Some(val);
                set.e_nuclear = val;
            }
            (i, 0, 0, 0) => energies[i - 1] = Some(val),
            (i, j, 0, 0) if j > 0 => {
                let key = (i.min(j), i.max(j));
                if let Some(&old) = seen_one.get(&key) {
                    if (old - val).abs() > 1e-10 {
                        return Err(FcidumpError::InconsistentDuplicate {
                            line: lineno + 1,
                            new: val,
                            old,
                        });
                    }
                }
                seen_one.insert(key, val);
                set.h_one[[i - 1, j - 1]] = val;
                set.h_one[[j - 1, i - 1]] = val;
            }
            (i, j, k, l) if j > 0 && k > 0 && l > 0 => {
                let (a, b, c, d) = (i - 1, j - 1, k - 1, l - 1);
                let mut canon = [
                    (a, b, c, d),
                    (b, a, c, d),
                    (a, b, d, c),
                    (b, a, d, c),
                    (c, d, a, b),
                    (d, c, a, b),
                    (c, d, b, a),
                    (d, c, b, a),
                ];
                canon.sort_unstable();
                if let Some(&old) = seen.get(&canon[0]) {
                    if (old - val).abs() > 1e-10 {
                        return Err(FcidumpError::InconsistentDuplicate {
                            line: lineno + 1,
                            new: val,
                            old,
                        });
                    }
                }
                seen.insert(canon[0], val);
                for &(p, q, r, s) in &[
                    (a, b, c, d),
                    (b, a, c, d),
                    (a, b, d, c),
                    (b, a, d, c),
                    (c, d, a, b),
                    (d, c, a, b),
                    (c, d, b, a),
                    (d, c, b, a),
                ] {
                    set.eri_chem[[p, q, r, s]] = val;
                }
            }
            _ => {
                return Err(FcidumpError::Record {
                    line: lineno + 1,
                    msg: format!("unrecognized index pattern {i} {j} {k} {l}"),
                });
            }
        }
    }
    if energies.iter().all(|e| e.is_some()) && norb > 0 {
        set.orbital_energies = Some(energies.into_iter().map(|e| e.unwrap()).collect());
    }
    set.validate()?;
    Ok(set)
}

/// Writes the permutation-unique elements of an [`IntegralSet`] in FCIDUMP
/// format. `parse_fcidump` round-trips the output bit-exactly.
pub fn write_fcidump(set: &IntegralSet) -> String {
    let n = set.n_spatial;
    let mut out = String::new();
    out.push_str(&format!(
        "&FCI NORB={},NELEC={},MS2={},\n",
        n, set.n_electrons, set.ms2
    ));
    let syms: Vec<String> = match &set.orbital_symmetry_labels {
        Some(l) => l.iter().map(|s| s.to_string()).collect(),
        None => vec!["1".to_string(); n],
    };
    out.push_str(&format!(" ORBSYM={},\n ISYM=1,\n&END\n", syms.join(",")));
    let mut rec = |val: f64, i: usize, j: usize, k: usize, l: usize| {
        out.push_str(&format!("{val:24.17e} {i:4} {j:4} {k:4} {l:4}\n"));
    };
    for i in 0..n {
        for j in 0..=i {
            for k in 0..=i {
                let lmax = if k == i { j } else { k };
                for l in 0..=lmax {
                    let v = set.eri_chem[[i, j, k, l]];
                    if v != 0.0 {
                        rec(v, i + 1, j + 1, k + 1, l + 1);
                    }
                }
            }
        }
    }
    for i in 0..n {
        for j in 0..=i {
            let v = set.h_one[[i, j]];
            if v != 0.0 {
                rec(v, i + 1, j + 1, 0, 0);
            }
        }
    }
    if let Some(energies) = &set.orbital_energies {
        for (i, &e) in energies.iter().enumerate() {
            rec(e, i + 1, 0, 0, 0);
        }
    }
    rec(set.e_nuclear, 0, 0, 0, 0);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_h2_file() {
        let text = "\
&FCI NORB=2,NELEC=2,MS2=0,
 ORBSYM=1,1,
 ISYM=1,
&END
0.67449 1 1 1 1
0.6634  2 2 1 1
0.69746 2 2 2 2
0.18123 2 1 2 1
-1.2524 1 1 0 0
-0.4759 2 2 0 0
0.71371 0 0 0 0
";
        let set = parse_fcidump(text).unwrap();
        assert_eq!(set.n_spatial, 2);
        assert_eq!(set.n_electrons, 2);
        assert_eq!(set.ms2, 0);
        assert_eq!(set.e_nuclear, 0.71371);
        assert_eq!(set.h_one[[0, 0]], -1.2524);
        assert_eq!(set.eri_chem[[1, 0, 1, 0]], 0.18123);
        // 8-fold expansion
        assert_eq!(set.eri_chem[[0, 1, 0, 1]], 0.18123);
        assert_eq!(set.eri_chem[[0, 1, 1, 0]], 0.18123);
        assert_eq!(set.eri_chem[[1, 1, 0, 0]], 0.6634);
        assert_eq!(set.eri_chem[[0, 0, 1, 1]], 0.6634);
    }

    #[test]
    fn nuclear_repulsion_only() {
        let text = "&FCI NORB=2,NELEC=0,MS2=0,\n&END\n1.5 0 0 0 0\n";
        let set = parse_fcidump(text).unwrap();
        assert_eq!(set.e_nuclear, 1.5);
        assert!(set.h_one.iter().all(|&x| x == 0.0));
        assert!(set.eri_chem.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn index_out_of_range() {
        let text = "&FCI NORB=2,NELEC=2,MS2=0,\n&END\n1.0 3 1 0 0\n";
        match parse_fcidump(text) {
            Err(FcidumpError::IndexOutOfRange { index: 3, .. }) => {}
            other => panic!("expected bounds error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_header_names_line() {
        let text = "NORB=2\n&END\n";
        match parse_fcidump(text) {
            Err(FcidumpError::Header { line: 1, .. }) => {}
            other => panic!("expected header error, got {other:?}"),
        }
    }

    #[test]
    fn contradictory_duplicate() {
        let text = "&FCI NORB=1,NELEC=0,MS2=0,\n&END\n1.0 1 1 0 0\n2.0 1 1 0 0\n";
        match parse_fcidump(text) {
            Err(FcidumpError::InconsistentDuplicate { line: 4, .. }) => {}
            other => panic!("expected duplicate error, got {other:?}"),
        }
    }

    #[test]
    fn agreeing_duplicate_is_fine() {
        let text = "&FCI NORB=1,NELEC=0,MS2=0,\n&END\n1.0 1 1 0 0\n1.0 1 1 0 0\n";
        assert!(parse_fcidump(text).is_ok());
    }

    #[test]
    fn write_parse_roundtrip_bit_exact() {
        let text = "\
&FCI NORB=2,NELEC=2,MS2=0,
&END
0.674493103326006 1 1 1 1
0.663400923364565 2 2 1 1
0.697397949820144 2 2 2 2
0.181287535812378 2 1 2 1
-1.252477495309982 1 1 0 0
-0.475934275145876 2 2 0 0
-0.578320434085325 1 0 0 0
0.670269947542222 2 0 0 0
0.713753950538574 0 0 0 0
";
        let a = parse_fcidump(text).unwrap();
        let b = parse_fcidump(&write_fcidump(&a)).unwrap();
        assert_eq!(a.e_nuclear, b.e_nuclear);
        assert_eq!(a.h_one, b.h_one);
        assert_eq!(a.eri_chem, b.eri_chem);
        assert_eq!(a.orbital_energies, b.orbital_energies);
    }

    #[test]
    fn freeze_core_shifts_constant() {
        // Freezing with an empty list is the identity.
        let set = IntegralSet::zeros(3, 4, 0);
        let out = set.freeze_core(&[]).unwrap();
        assert_eq!(out.n_spatial, 3);
        // Freezing orbital 0 of a 4-electron system leaves 2 electrons.
        let mut set = IntegralSet::zeros(3, 4, 0);
        set.h_one[[0, 0]] = -2.0;
        set.h_one[[1, 1]] = -1.0;
        set.h_one[[2, 2]] = -0.5;
        let out = set.freeze_core(&[0]).unwrap();
        assert_eq!(out.n_spatial, 2);
        assert_eq!(out.n_electrons, 2);
        assert!((out.e_nuclear - (-4.0)).abs() < 1e-14);
        assert_eq!(out.h_one[[0, 0]], -1.0);
    }
}
