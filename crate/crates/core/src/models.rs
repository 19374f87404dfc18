//! Hamiltonian factors of the four driven lattice models.
//!
//! Basis convention: flattened index = internal + internals * cell, with the
//! cell index running fastest along the periodic (sliced) direction of 2D
//! lattices. A bond block `hop` couples cell `n` (rows) to cell `n + 1`
//! (columns); its adjoint fills the reverse block. With this convention the
//! Bloch block is `onsite + hop e^{ik} + hop^H e^{-ik}`.

use std::f64::consts::PI;

use faer::{c64, Mat};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{kron, pauli_x, pauli_y, pauli_z, identity, CMatrix, I, ONE, ZERO};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Boundary {
    #[serde(rename = "pbc")]
    Periodic,
    #[serde(rename = "obc")]
    Open,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ordkr {
    pub k1: f64,
    pub k2: f64,
    pub length: usize,
    pub boundary: Boundary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pql {
    pub jx: f64,
    pub jy: f64,
    pub jd: f64,
    pub v: f64,
    pub length: usize,
    pub boundary: Boundary,
}

/// Periodically quenched Haldane lattice with third-neighbor hopping.
/// Direction 1 is the one sliced into momenta, direction 2 the one cut.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pqghm {
    pub t1: f64,
    pub t2: f64,
    pub t31: f64,
    pub t32: f64,
    pub phi1: f64,
    pub phi2: f64,
    #[serde(rename = "T1")]
    pub dur1: f64,
    #[serde(rename = "T2")]
    pub dur2: f64,
    pub l1: usize,
    pub l2: usize,
    pub boundary1: Boundary,
    pub boundary2: Boundary,
}

/// Kicked Harper model at flux `2 pi p / q`. `y` is the sliced direction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Khm {
    pub j: f64,
    pub v: f64,
    pub p: u32,
    pub q: u32,
    pub lx: usize,
    pub ly: usize,
    pub boundary_x: Boundary,
    pub boundary_y: Boundary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelSpec {
    Ordkr(Ordkr),
    Pql(Pql),
    Pqghm(Pqghm),
    Khm(Khm),
}

/// Pair of Hermitian generators; for the kicked Harper model `first` is the
/// hopping and `second` the kick, so both enter the period in time order.
#[derive(Clone, Debug)]
pub struct GeneratorPair {
    pub first: CMatrix,
    pub second: CMatrix,
}

fn c(re: f64) -> c64 {
    c64::new(re, 0.0)
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 { a } else { gcd(b, a % b) }
}

fn check_len(name: &str, l: usize) -> Result<()> {
    if l < 4 {
        return Err(Error::Config(format!("{name} must be at least 4, got {l}")));
    }
    Ok(())
}

impl Khm {
    pub fn flux(&self) -> f64 {
        2.0 * PI * self.p as f64 / self.q as f64
    }
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        match self {
            ModelSpec::Ordkr(m) => {
                check_len("length", m.length)?;
                if !finite(&[m.k1, m.k2]) {
                    return Err(Error::Config("non-finite kicking strength".into()));
                }
            }
            ModelSpec::Pql(m) => {
                check_len("length", m.length)?;
                if !finite(&[m.jx, m.jy, m.jd, m.v]) {
                    return Err(Error::Config("non-finite hopping".into()));
                }
            }
            ModelSpec::Pqghm(m) => {
                check_len("l1", m.l1)?;
                check_len("l2", m.l2)?;
                if !finite(&[m.t1, m.t2, m.t31, m.t32, m.phi1, m.phi2, m.dur1, m.dur2]) {
                    return Err(Error::Config("non-finite parameter".into()));
                }
            }
            ModelSpec::Khm(m) => {
                check_len("lx", m.lx)?;
                check_len("ly", m.ly)?;
                if m.q == 0 || m.p == 0 || gcd(m.p, m.q) != 1 {
                    return Err(Error::Config(format!("p={} and q={} must be coprime and positive", m.p, m.q)));
                }
                if m.lx % m.q as usize != 0 {
                    return Err(Error::Config(format!("lx={} is not divisible by q={}", m.lx, m.q)));
                }
                if !finite(&[m.j, m.v]) {
                    return Err(Error::Config("non-finite parameter".into()));
                }
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Ordkr(_) => "ordkr",
            ModelSpec::Pql(_) => "pql",
            ModelSpec::Pqghm(_) => "pqghm",
            ModelSpec::Khm(_) => "khm",
        }
    }

    /// Orbitals per cell.
    pub fn internals(&self) -> usize {
        match self {
            ModelSpec::Ordkr(_) | ModelSpec::Pqghm(_) => 2,
            ModelSpec::Pql(_) => 4,
            ModelSpec::Khm(_) => 1,
        }
    }

    pub fn is_two_dimensional(&self) -> bool {
        matches!(self, ModelSpec::Pqghm(_) | ModelSpec::Khm(_))
    }

    /// Per-cell chiral operator of the symmetric time frames, if any.
    pub fn chiral_operator(&self) -> Option<CMatrix> {
        match self {
            ModelSpec::Ordkr(_) => Some(pauli_z()),
            ModelSpec::Pql(_) => Some(crate::numerics::scale(&kron(&pauli_z(), &pauli_y()), -ONE)),
            _ => None,
        }
    }

    pub fn param(&self, name: &str) -> Result<f64> {
        let v = match (self, name) {
            (ModelSpec::Ordkr(m), "k1") => m.k1,
            (ModelSpec::Ordkr(m), "k2") => m.k2,
            (ModelSpec::Pql(m), "jx") => m.jx,
            (ModelSpec::Pql(m), "jy") => m.jy,
            (ModelSpec::Pql(m), "jd") => m.jd,
            (ModelSpec::Pql(m), "v") => m.v,
            (ModelSpec::Pqghm(m), "t1") => m.t1,
            (ModelSpec::Pqghm(m), "t2") => m.t2,
            (ModelSpec::Pqghm(m), "t31") => m.t31,
            (ModelSpec::Pqghm(m), "t32") => m.t32,
            (ModelSpec::Pqghm(m), "phi1") => m.phi1,
            (ModelSpec::Pqghm(m), "phi2") => m.phi2,
            (ModelSpec::Pqghm(m), "T1") => m.dur1,
            (ModelSpec::Pqghm(m), "T2") => m.dur2,
            (ModelSpec::Khm(m), "j") => m.j,
            (ModelSpec::Khm(m), "v") => m.v,
            _ => return Err(Error::InvalidAxis(name.to_string())),
        };
        Ok(v)
    }

    pub fn set_param(&mut self, name: &str, value: f64) -> Result<()> {
        let slot = match (self, name) {
            (ModelSpec::Ordkr(m), "k1") => &mut m.k1,
            (ModelSpec::Ordkr(m), "k2") => &mut m.k2,
            (ModelSpec::Pql(m), "jx") => &mut m.jx,
            (ModelSpec::Pql(m), "jy") => &mut m.jy,
            (ModelSpec::Pql(m), "jd") => &mut m.jd,
            (ModelSpec::Pql(m), "v") => &mut m.v,
            (ModelSpec::Pqghm(m), "t1") => &mut m.t1,
            (ModelSpec::Pqghm(m), "t2") => &mut m.t2,
            (ModelSpec::Pqghm(m), "t31") => &mut m.t31,
            (ModelSpec::Pqghm(m), "t32") => &mut m.t32,
            (ModelSpec::Pqghm(m), "phi1") => &mut m.phi1,
            (ModelSpec::Pqghm(m), "phi2") => &mut m.phi2,
            (ModelSpec::Pqghm(m), "T1") => &mut m.dur1,
            (ModelSpec::Pqghm(m), "T2") => &mut m.dur2,
            (ModelSpec::Khm(m), "j") => &mut m.j,
            (ModelSpec::Khm(m), "v") => &mut m.v,
            (_, other) => return Err(Error::InvalidAxis(other.to_string())),
        };
        *slot = value;
        Ok(())
    }

    /// Copy with the boundary of the 1D chain (or of the cut direction of a
    /// 2D lattice) replaced.
    pub fn with_boundary(&self, b: Boundary) -> ModelSpec {
        let mut out = self.clone();
        match &mut out {
            ModelSpec::Ordkr(m) => m.boundary = b,
            ModelSpec::Pql(m) => m.boundary = b,
            ModelSpec::Pqghm(m) => m.boundary2 = b,
            ModelSpec::Khm(m) => m.boundary_x = b,
        }
        out
    }

    /// Copy with the chain length (or the extent across the cut) replaced.
    pub fn with_open_cells(&self, n: usize) -> ModelSpec {
        let mut out = self.clone();
        match &mut out {
            ModelSpec::Ordkr(m) => m.length = n,
            ModelSpec::Pql(m) => m.length = n,
            ModelSpec::Pqghm(m) => m.l2 = n,
            ModelSpec::Khm(m) => m.lx = n,
        }
        out
    }

    /// Cells along the chain, or along the cut direction of a 2D lattice.
    pub fn open_cells(&self) -> usize {
        match self {
            ModelSpec::Ordkr(m) => m.length,
            ModelSpec::Pql(m) => m.length,
            ModelSpec::Pqghm(m) => m.l2,
            ModelSpec::Khm(m) => m.lx,
        }
    }

    /// Cells along the sliced (periodic) direction of a 2D lattice.
    pub fn periodic_cells(&self) -> usize {
        match self {
            ModelSpec::Pqghm(m) => m.l1,
            ModelSpec::Khm(m) => m.ly,
            _ => 1,
        }
    }

    pub fn boundary(&self) -> Boundary {
        match self {
            ModelSpec::Ordkr(m) => m.boundary,
            ModelSpec::Pql(m) => m.boundary,
            ModelSpec::Pqghm(m) => m.boundary2,
            ModelSpec::Khm(m) => m.boundary_x,
        }
    }
}

/// 1D chain from an onsite block and a forward bond block.
pub fn chain(cells: usize, onsite: Option<&CMatrix>, hop: &CMatrix, boundary: Boundary) -> CMatrix {
    let k = hop.nrows();
    let mut h = Mat::zeros(k * cells, k * cells);
    for n in 0..cells {
        if let Some(o) = onsite {
            for a in 0..k {
                for b in 0..k {
                    h[(k * n + a, k * n + b)] += o[(a, b)];
                }
            }
        }
        let m = n + 1;
        let m = if m == cells {
            match boundary {
                Boundary::Open => continue,
                Boundary::Periodic => 0,
            }
        } else {
            m
        };
        for a in 0..k {
            for b in 0..k {
                h[(k * n + a, k * m + b)] += hop[(a, b)];
                h[(k * m + b, k * n + a)] += hop[(a, b)].conj();
            }
        }
    }
    h
}

/// `onsite + hop e^{ik} + hop^H e^{-ik}`.
pub fn bloch_block(onsite: Option<&CMatrix>, hop: &CMatrix, k: f64) -> CMatrix {
    let e = c64::cis(k);
    Mat::from_fn(hop.nrows(), hop.ncols(), |a, b| {
        let o = onsite.map_or(ZERO, |o| o[(a, b)]);
        o + hop[(a, b)] * e + hop[(b, a)].conj() * e.conj()
    })
}

struct ChainTerms {
    onsite1: Option<CMatrix>,
    hop1: CMatrix,
    onsite2: Option<CMatrix>,
    hop2: CMatrix,
}

fn ordkr_terms(m: &Ordkr) -> ChainTerms {
    ChainTerms {
        onsite1: None,
        hop1: crate::numerics::scale(&pauli_x(), c(m.k1 / 2.0)),
        onsite2: None,
        // (K2 / 2i) sigma_y
        hop2: crate::numerics::scale(&pauli_y(), c64::new(0.0, -m.k2 / 2.0)),
    }
}

fn pql_terms(m: &Pql) -> ChainTerms {
    let s0 = identity(2);
    let hop1 = {
        let a = kron(&s0, &pauli_z());
        let b = kron(&pauli_y(), &s0);
        Mat::from_fn(4, 4, |i, j| a[(i, j)] * m.jx - I * m.v * b[(i, j)])
    };
    let onsite2 = crate::numerics::scale(&kron(&s0, &pauli_x()), c(m.jy));
    let hop2 = crate::numerics::scale(&kron(&pauli_z(), &pauli_x()), I * m.jd);
    ChainTerms { onsite1: None, hop1, onsite2: Some(onsite2), hop2 }
}

/// Real-space generators of the kicked rotor chain, `2L x 2L`.
pub fn build_ordkr(m: &Ordkr) -> Result<GeneratorPair> {
    check_len("length", m.length)?;
    let t = ordkr_terms(m);
    Ok(GeneratorPair {
        first: chain(m.length, None, &t.hop1, m.boundary),
        second: chain(m.length, None, &t.hop2, m.boundary),
    })
}

/// Real-space generators of the quenched ladder, `4L x 4L`.
pub fn build_pql(m: &Pql) -> Result<GeneratorPair> {
    check_len("length", m.length)?;
    let t = pql_terms(m);
    Ok(GeneratorPair {
        first: chain(m.length, t.onsite1.as_ref(), &t.hop1, m.boundary),
        second: chain(m.length, t.onsite2.as_ref(), &t.hop2, m.boundary),
    })
}

/// Bloch blocks of the 1D models at momentum `k`.
pub fn bloch_pair(spec: &ModelSpec, k: f64) -> Result<GeneratorPair> {
    let t = match spec {
        ModelSpec::Ordkr(m) => ordkr_terms(m),
        ModelSpec::Pql(m) => pql_terms(m),
        _ => return Err(Error::Config(format!("{} has no 1D Bloch form", spec.name()))),
    };
    Ok(GeneratorPair {
        first: bloch_block(t.onsite1.as_ref(), &t.hop1, k),
        second: bloch_block(t.onsite2.as_ref(), &t.hop2, k),
    })
}

/// Bloch vector `(h_x, h_y, h_z)` of one quench stage of the Haldane lattice.
pub fn pqghm_hvec(t1: f64, t2: f64, t3: f64, phi: f64, k1: f64, k2: f64) -> [f64; 3] {
    let hx = t1 * (1.0 + k1.cos() + k2.cos()) + t3 * (2.0 * (k1 - k2).cos() + (k1 + k2).cos());
    let hy = t1 * (k1.sin() + k2.sin()) + t3 * (k1 + k2).sin();
    let hz = 2.0 * t2 * phi.sin() * (k1.sin() - k2.sin() - (k1 - k2).sin());
    [hx, hy, hz]
}

fn sigma_combo(v: [c64; 3]) -> CMatrix {
    let (x, y, z) = (pauli_x(), pauli_y(), pauli_z());
    Mat::from_fn(2, 2, |i, j| v[0] * x[(i, j)] + v[1] * y[(i, j)] + v[2] * z[(i, j)])
}

/// Onsite and forward-bond coefficients along direction 2 at fixed `k1`.
fn pqghm_slice_terms(t1: f64, t2: f64, t3: f64, phi: f64, k1: f64) -> (CMatrix, CMatrix) {
    let (s, co) = (k1.sin(), k1.cos());
    let sp = phi.sin();
    let onsite = sigma_combo([c(t1 * (1.0 + co)), c(t1 * s), c(2.0 * t2 * sp * s)]);
    let inv2i = c64::new(0.0, -0.5);
    let fx = c(t1 / 2.0 + 1.5 * t3 * co) + inv2i * (t3 * s);
    let fy = c64::new(0.0, -t1 / 2.0) + c(t3 / 2.0 * s) + inv2i * (t3 * co);
    let fz = c64::new(0.0, t2 * sp) - c(t2 * sp * s) - c64::new(0.0, t2 * sp * co);
    (onsite, sigma_combo([fx, fy, fz]))
}

/// Stage generators at momentum `k1`, `2 L2 x 2 L2`, boundary along direction 2.
pub fn build_pqghm_slice(m: &Pqghm, k1: f64) -> Result<GeneratorPair> {
    check_len("l2", m.l2)?;
    let (o1, h1) = pqghm_slice_terms(m.t1, m.t2, m.t31, m.phi1, k1);
    let (o2, h2) = pqghm_slice_terms(m.t1, m.t2, m.t32, m.phi2, k1);
    Ok(GeneratorPair {
        first: chain(m.l2, Some(&o1), &h1, m.boundary2),
        second: chain(m.l2, Some(&o2), &h2, m.boundary2),
    })
}

/// Bonds `(d1, d2, [cx, cy, cz])` of one stage: the block from cell `n` to
/// `n + d` is `cx sx + cy sy + cz sz`.
fn pqghm_bonds(t1: f64, t2: f64, t3: f64, phi: f64) -> Vec<(i64, i64, [c64; 3])> {
    let a = 2.0 * t2 * phi.sin();
    let inv2i = c64::new(0.0, -0.5);
    vec![
        (1, 0, [c(t1 / 2.0), inv2i * t1, inv2i * a]),
        (0, 1, [c(t1 / 2.0), inv2i * t1, -inv2i * a]),
        (1, 1, [c(t3 / 2.0), inv2i * t3, ZERO]),
        (1, -1, [c(t3), ZERO, -inv2i * a]),
    ]
}

fn pqghm_lattice(m: &Pqghm, t3: f64, phi: f64) -> CMatrix {
    let (l1, l2) = (m.l1 as i64, m.l2 as i64);
    let dim = 2 * m.l1 * m.l2;
    let mut h: CMatrix = Mat::zeros(dim, dim);
    let cell = |n1: i64, n2: i64| (n1 + l1 * n2) as usize;
    let onsite = sigma_combo([c(m.t1), ZERO, ZERO]);
    let bonds: Vec<_> = pqghm_bonds(m.t1, m.t2, t3, phi)
        .into_iter()
        .map(|(d1, d2, v)| (d1, d2, sigma_combo(v)))
        .collect();
    let wrap = |x: i64, l: i64, b: Boundary| -> Option<i64> {
        if (0..l).contains(&x) {
            Some(x)
        } else if b == Boundary::Periodic {
            Some(x.rem_euclid(l))
        } else {
            None
        }
    };
    for n2 in 0..l2 {
        for n1 in 0..l1 {
            let a = cell(n1, n2);
            for s in 0..2 {
                for t in 0..2 {
                    h[(2 * a + s, 2 * a + t)] += onsite[(s, t)];
                }
            }
            for (d1, d2, blk) in &bonds {
                let (Some(m1), Some(m2)) = (wrap(n1 + d1, l1, m.boundary1), wrap(n2 + d2, l2, m.boundary2)) else {
                    continue;
                };
                let b = cell(m1, m2);
                for s in 0..2 {
                    for t in 0..2 {
                        h[(2 * a + s, 2 * b + t)] += blk[(s, t)];
                        h[(2 * b + t, 2 * a + s)] += blk[(s, t)].conj();
                    }
                }
            }
        }
    }
    h
}

/// Full lattice generators, `2 L1 L2` square, cell index `n1 + L1 n2`.
pub fn build_pqghm_realspace(m: &Pqghm) -> Result<GeneratorPair> {
    check_len("l1", m.l1)?;
    check_len("l2", m.l2)?;
    Ok(GeneratorPair { first: pqghm_lattice(m, m.t31, m.phi1), second: pqghm_lattice(m, m.t32, m.phi2) })
}

/// Hopping and kick of the kicked Harper model.
///
/// With `ky` the pair is the `lx`-site chain at that momentum; without it the
/// full `lx * ly` lattice with cell index `y + ly x`.
pub fn build_khm(m: &Khm, ky: Option<f64>) -> Result<GeneratorPair> {
    ModelSpec::Khm(m.clone()).validate()?;
    let lam = m.flux();
    match ky {
        Some(k) => {
            let hop = chain(m.lx, None, &Mat::from_fn(1, 1, |_, _| c(m.j / 2.0)), m.boundary_x);
            let kick = Mat::from_fn(m.lx, m.lx, |i, j| {
                if i == j { c(m.v * (lam * i as f64 - k).cos()) } else { ZERO }
            });
            Ok(GeneratorPair { first: hop, second: kick })
        }
        None => {
            let (lx, ly) = (m.lx, m.ly);
            let dim = lx * ly;
            let idx = |x: usize, y: usize| y + ly * x;
            let mut hop: CMatrix = Mat::zeros(dim, dim);
            let mut kick: CMatrix = Mat::zeros(dim, dim);
            for x in 0..lx {
                for y in 0..ly {
                    let xn = x + 1;
                    let xn = if xn == lx { (m.boundary_x == Boundary::Periodic).then_some(0) } else { Some(xn) };
                    if let Some(xn) = xn {
                        hop[(idx(x, y), idx(xn, y))] += c(m.j / 2.0);
                        hop[(idx(xn, y), idx(x, y))] += c(m.j / 2.0);
                    }
                    let yn = y + 1;
                    let yn = if yn == ly { (m.boundary_y == Boundary::Periodic).then_some(0) } else { Some(yn) };
                    if let Some(yn) = yn {
                        // (V/2) e^{i lam x} c^dag_{x,y+1} c_{x,y} + h.c.
                        let amp = c64::cis(lam * x as f64) * (m.v / 2.0);
                        kick[(idx(x, yn), idx(x, y))] += amp;
                        kick[(idx(x, y), idx(x, yn))] += amp.conj();
                    }
                }
            }
            Ok(GeneratorPair { first: hop, second: kick })
        }
    }
}
