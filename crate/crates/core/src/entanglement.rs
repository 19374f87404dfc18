//! Correlation-matrix entanglement of filled Floquet states.
//!
//! For a Gaussian state the reduced density matrix of a region A is fixed by
//! the one-body correlator restricted to A, so the entanglement spectrum and
//! entropy follow from a `|A| x |A|` eigenproblem. [`manybody_oracle`] checks
//! that shortcut against the explicit Fock-space construction.

use faer::{c64, Mat};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::floquet::Side;
use crate::numerics::{self, CMatrix, ONE, ZERO};

pub const ZETA_CLAMP: f64 = 1e-12;
const RANGE_TOL: f64 = 1e-6;

/// A contiguous block of cell layers along the cut direction.
///
/// `layer_size` is the number of orbitals per layer (internal states times
/// cells transverse to the cut), so A is the flattened index range
/// `layer_size * start .. layer_size * (start + len)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub layers: usize,
    pub layer_size: usize,
    pub start: usize,
    pub len: usize,
    pub periodic: bool,
}

impl Partition {
    /// First half of the layers.
    pub fn half(layers: usize, layer_size: usize, periodic: bool) -> Self {
        Self { layers, layer_size, start: 0, len: layers / 2, periodic }
    }

    pub fn validate(&self) -> Result<()> {
        if self.len == 0 || self.len >= self.layers || self.start + self.len > self.layers {
            return Err(Error::Config(format!(
                "partition [{}, {}) is not a proper nonempty block of {} layers",
                self.start,
                self.start + self.len,
                self.layers
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.layers * self.layer_size
    }

    pub fn indices(&self) -> std::ops::Range<usize> {
        self.layer_size * self.start..self.layer_size * (self.start + self.len)
    }

    pub fn complement(&self) -> Vec<usize> {
        let a = self.indices();
        (0..self.dim()).filter(|i| !a.contains(i)).collect()
    }

    /// Layer positions of the entanglement cuts.
    pub fn cuts(&self) -> Vec<usize> {
        let end = self.start + self.len;
        let mut out = Vec::new();
        if self.periodic || self.start > 0 {
            out.push(self.start);
        }
        if self.periodic || end < self.layers {
            out.push(end % self.layers);
        }
        out
    }

    /// Whether each end of A (left, right) borders B rather than a hard wall.
    fn cut_ends(&self) -> (bool, bool) {
        (self.periodic || self.start > 0, self.periodic || self.start + self.len < self.layers)
    }
}

/// `C_mn = <n|P|m>` for `m, n` in A.
pub fn correlation_matrix(p: &CMatrix, partition: &Partition) -> Result<CMatrix> {
    partition.validate()?;
    if p.nrows() != partition.dim() || p.ncols() != partition.dim() {
        return Err(Error::Config(format!("projector dimension {} != partition dimension {}", p.nrows(), partition.dim())));
    }
    let dev = numerics::hermiticity_deviation(p);
    if dev > 1e-8 {
        return Err(Error::NotProjector { deviation: dev });
    }
    let tr: f64 = (0..p.nrows()).map(|i| p[(i, i)].re).sum();
    if (tr - tr.round()).abs() > 1e-6 {
        return Err(Error::NotProjector { deviation: (tr - tr.round()).abs() });
    }
    let a = partition.indices();
    let off = a.start;
    Ok(Mat::from_fn(a.len(), a.len(), |m, n| p[(n + off, m + off)]))
}

/// `max |P^2 - P|`.
pub fn idempotence_deviation(p: &CMatrix) -> f64 {
    let p2 = p * p;
    numerics::max_abs_diff(&p2, p)
}

#[derive(Clone, Debug)]
pub struct EntanglementReport {
    /// Correlation eigenvalues clipped to `[0, 1]`, ascending.
    pub zeta: Vec<f64>,
    /// `ln(1/zeta - 1)` with zeta clamped to `[1e-12, 1 - 1e-12]`.
    pub xi: Vec<f64>,
    /// Single-particle modes on A, one ket per column (eigenvectors of `C^T`).
    pub modes: CMatrix,
    pub entropy: f64,
    pub maximally_entangled: usize,
    pub left_cut_weight: Vec<f64>,
    pub right_cut_weight: Vec<f64>,
    /// Weight near any entanglement cut.
    pub cut_weight: Vec<f64>,
}

impl EntanglementReport {
    pub fn side_weight(&self, j: usize, side: Side) -> f64 {
        match side {
            Side::Left => self.left_cut_weight[j],
            Side::Right => self.right_cut_weight[j],
        }
    }
}

pub fn xi_of(zeta: f64) -> f64 {
    xi_clamped(zeta, ZETA_CLAMP)
}

pub fn xi_clamped(zeta: f64, eps: f64) -> f64 {
    let z = zeta.clamp(eps, 1.0 - eps);
    (1.0 / z - 1.0).ln()
}

/// Eigen-decomposes `C` and derives the entanglement energies.
pub fn entanglement_spectrum(c: &CMatrix, partition: &Partition, delta: f64) -> Result<EntanglementReport> {
    let eig = numerics::hermitian_eig(c)?;
    for &z in &eig.values {
        if !(-RANGE_TOL..=1.0 + RANGE_TOL).contains(&z) {
            return Err(Error::SpectrumOutOfRange { value: z });
        }
    }
    let zeta: Vec<f64> = eig.values.iter().map(|z| z.clamp(0.0, 1.0)).collect();
    let xi = zeta.iter().map(|&z| xi_of(z)).collect();
    let n = c.nrows();
    // eigenvectors of C^T are the conjugates of those of C
    let modes = Mat::from_fn(n, n, |i, j| eig.vectors[(i, j)].conj());

    let m = (partition.len as f64 / 10.0).ceil() as usize;
    let ls = partition.layer_size;
    let (has_left, has_right) = partition.cut_ends();
    let mut left = Vec::with_capacity(n);
    let mut right = Vec::with_capacity(n);
    let mut both = Vec::with_capacity(n);
    for j in 0..n {
        let l: f64 = (0..m * ls).map(|i| modes[(i, j)].norm_sqr()).sum();
        let r: f64 = ((partition.len - m) * ls..partition.len * ls).map(|i| modes[(i, j)].norm_sqr()).sum();
        left.push(l);
        right.push(r);
        let mut w = 0.0;
        if has_left {
            w += l;
        }
        if has_right {
            w += r;
        }
        both.push(w.min(1.0));
    }
    Ok(EntanglementReport {
        entropy: entanglement_entropy(&zeta),
        maximally_entangled: count_maximally_entangled(&zeta, delta),
        zeta,
        xi,
        modes,
        left_cut_weight: left,
        right_cut_weight: right,
        cut_weight: both,
    })
}

/// Binary-entropy sum with `0 ln 0 = 0`.
pub fn entanglement_entropy(zeta: &[f64]) -> f64 {
    let h = |z: f64| if z <= 0.0 || z >= 1.0 { 0.0 } else { -z * z.ln() - (1.0 - z) * (1.0 - z).ln() };
    pairwise_sum(&zeta.iter().map(|&z| h(z)).collect::<Vec<_>>())
}

pub fn count_maximally_entangled(zeta: &[f64], delta: f64) -> usize {
    zeta.iter().filter(|&&z| (z - 0.5).abs() <= delta).count()
}

/// Pairwise summation; fixed association order independent of threading.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2..=8 => xs.iter().sum(),
        n => pairwise_sum(&xs[..n / 2]) + pairwise_sum(&xs[n / 2..]),
    }
}

/// Eigenvalues of `rho_A` predicted from the correlation spectrum: one per
/// occupation pattern `s` of the modes, `prod_{s} zeta prod_{not s} (1 - zeta)`.
pub fn fock_spectrum_from_zeta(zeta: &[f64]) -> Vec<f64> {
    let n = zeta.len();
    let mut out: Vec<f64> = (0..1usize << n)
        .map(|s| (0..n).map(|j| if s >> j & 1 == 1 { zeta[j] } else { 1.0 - zeta[j] }).product())
        .collect();
    out.sort_by(f64::total_cmp);
    out
}

pub const ORACLE_MAX_MODES: usize = 14;

#[derive(Clone, Debug)]
pub struct OracleResult {
    /// Eigenvalues of the reduced density matrix, ascending.
    pub rho_eigenvalues: Vec<f64>,
    pub entropy: f64,
    /// Normalization of `exp(-H_A)`, the inverse vacuum probability.
    pub partition_function: f64,
}

/// Reduced density matrix of a Slater determinant built in Fock space.
///
/// `occupied` holds one orbital per column. Modes of A are ordered before
/// those of B so the Fock space factorizes without extra signs.
pub fn manybody_oracle(occupied: &CMatrix, partition: &Partition) -> Result<OracleResult> {
    let dim = occupied.nrows();
    if dim > ORACLE_MAX_MODES {
        return Err(Error::OracleTooLarge { dim, cap: ORACLE_MAX_MODES });
    }
    partition.validate()?;
    if dim != partition.dim() {
        return Err(Error::Config(format!("orbital dimension {dim} != partition dimension {}", partition.dim())));
    }
    let nocc = occupied.ncols();
    let order: Vec<usize> = partition.indices().chain(partition.complement()).collect();
    let na = partition.indices().len();
    let nb = dim - na;

    // psi[a][b] over A and B occupation bit patterns
    let mut psi = vec![ZERO; (1usize << na) * (1usize << nb)];
    for conf in 0u32..(1u32 << dim) {
        if conf.count_ones() as usize != nocc {
            continue;
        }
        let rows: Vec<usize> = (0..dim).filter(|&i| conf >> i & 1 == 1).map(|i| order[i]).collect();
        let sub: Vec<Vec<c64>> = rows.iter().map(|&r| (0..nocc).map(|j| occupied[(r, j)]).collect()).collect();
        let amp = determinant(sub);
        let a = (conf as usize) & ((1 << na) - 1);
        let b = (conf as usize) >> na;
        psi[a * (1 << nb) + b] = amp;
    }

    let mut rho_eigenvalues = Vec::with_capacity(1 << na);
    let mut vacuum = 0.0;
    for count in 0..=na {
        let states: Vec<usize> = (0..1usize << na).filter(|a| a.count_ones() as usize == count).collect();
        let block = Mat::from_fn(states.len(), states.len(), |i, j| {
            let (a, a2) = (states[i], states[j]);
            (0..1usize << nb).fold(ZERO, |acc, b| acc + psi[a * (1 << nb) + b] * psi[a2 * (1 << nb) + b].conj())
        });
        if count == 0 {
            vacuum = block[(0, 0)].re;
        }
        rho_eigenvalues.extend(numerics::hermitian_eigenvalues(&block)?);
    }
    rho_eigenvalues.sort_by(f64::total_cmp);
    let entropy = rho_eigenvalues.iter().filter(|&&l| l > 0.0).map(|&l| -l * l.ln()).sum();
    let partition_function = if vacuum > 0.0 { 1.0 / vacuum } else { f64::INFINITY };
    Ok(OracleResult { rho_eigenvalues, entropy, partition_function })
}

/// Determinant by Gaussian elimination with partial pivoting.
pub(crate) fn determinant(mut m: Vec<Vec<c64>>) -> c64 {
    let n = m.len();
    let mut det = ONE;
    for col in 0..n {
        let piv = (col..n).max_by(|&a, &b| m[a][col].norm().total_cmp(&m[b][col].norm())).unwrap_or(col);
        if m[piv][col].norm() == 0.0 {
            return ZERO;
        }
        if piv != col {
            m.swap(piv, col);
            det = -det;
        }
        det *= m[col][col];
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            for c in col..n {
                let v = m[col][c];
                m[r][c] -= f * v;
            }
        }
    }
    det
}

/// Torus built from momentum slices along its periodic direction.
///
/// Real-space index is `s + internals * (p + periodic * o)` with `p` the
/// periodic coordinate and `o` the open (cut) coordinate; slice index is
/// `s + internals * o`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SlicedTorus {
    pub periodic: usize,
    pub open: usize,
    pub internals: usize,
}

impl SlicedTorus {
    pub fn momenta(&self) -> Vec<f64> {
        (0..self.periodic).map(|j| 2.0 * std::f64::consts::PI * j as f64 / self.periodic as f64).collect()
    }

    pub fn partition(&self, start: usize, len: usize, open_periodic: bool) -> Partition {
        Partition { layers: self.open, layer_size: self.internals * self.periodic, start, len, periodic: open_periodic }
    }

    /// Occupied projector restricted to the open-coordinate layers of
    /// `partition`, assembled from slice projectors at [`Self::momenta`].
    pub fn restricted_projector(&self, slice_projectors: &[CMatrix], partition: &Partition) -> Result<CMatrix> {
        let (lp, m) = (self.periodic, self.internals);
        if slice_projectors.len() != lp {
            return Err(Error::LengthMismatch { left: slice_projectors.len(), right: lp });
        }
        let rows = m * partition.len;
        let off = m * partition.start;
        let ks = self.momenta();
        // g[d] = (1/Lp) sum_k e^{i k d} P_k restricted to A layers
        let g: Vec<CMatrix> = (0..lp)
            .map(|d| {
                let mut acc: CMatrix = Mat::zeros(rows, rows);
                for (pk, &k) in slice_projectors.iter().zip(&ks) {
                    let ph = c64::cis(k * d as f64) / lp as f64;
                    for j in 0..rows {
                        for i in 0..rows {
                            acc[(i, j)] += ph * pk[(i + off, j + off)];
                        }
                    }
                }
                acc
            })
            .collect();
        let n = rows * lp;
        Ok(Mat::from_fn(n, n, |i, j| {
            let (s, p, o) = (i % m, (i / m) % lp, i / (m * lp));
            let (t, q, u) = (j % m, (j / m) % lp, j / (m * lp));
            let d = (p + lp - q) % lp;
            g[d][(s + m * o, t + m * u)]
        }))
    }
}
