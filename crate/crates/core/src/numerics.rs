//! Dense complex linear algebra: Hermitian and unitary eigendecompositions
//! and exponentials of Hermitian generators.
//!
//! Everything runs on `faer` with sequential kernels so results are
//! bit-reproducible regardless of how many workers the caller uses.

use faer::{c64, Mat, Side};
use faer::linalg::solvers::Solve;

use crate::error::{Error, Result};

pub type CMatrix = Mat<c64>;

pub const I: c64 = c64 { re: 0.0, im: 1.0 };
pub const ONE: c64 = c64 { re: 1.0, im: 0.0 };
pub const ZERO: c64 = c64 { re: 0.0, im: 0.0 };

const UNITARY_INPUT_TOL: f64 = 1e-8;
const UNITARY_RESIDUAL_TOL: f64 = 1e-8;
const HERMITIAN_REL_TOL: f64 = 1e-10;

/// Ascending real eigenvalues with column-orthonormal eigenvectors.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

/// Eigenphases `E` of a unitary, `U v = exp(-i E) v`, with `E` in `[-pi, pi)`
/// sorted ascending.
#[derive(Clone, Debug)]
pub struct UnitaryEigen {
    pub phases: Vec<f64>,
    pub vectors: CMatrix,
}

pub fn identity(n: usize) -> CMatrix {
    Mat::from_fn(n, n, |i, j| if i == j { ONE } else { ZERO })
}

pub fn zeros(n: usize) -> CMatrix {
    Mat::zeros(n, n)
}

pub fn adjoint(m: &CMatrix) -> CMatrix {
    m.adjoint().to_owned()
}

pub fn max_abs(m: &CMatrix) -> f64 {
    let mut out = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            out = out.max(m[(i, j)].norm());
        }
    }
    out
}

/// `max |A - B|` entrywise.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.nrows(), b.nrows());
    assert_eq!(a.ncols(), b.ncols());
    let mut out = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            out = out.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    out
}

pub fn hermiticity_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut out = 0.0f64;
    for j in 0..n {
        for i in 0..=j {
            out = out.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    out
}

/// `max |U^H U - I|`.
pub fn unitarity_deviation(u: &CMatrix) -> f64 {
    let g = u.adjoint() * u;
    max_abs_diff(&g, &identity(u.nrows()))
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = (a.nrows(), a.ncols());
    let (br, bc) = (b.nrows(), b.ncols());
    Mat::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

pub fn scale(m: &CMatrix, s: c64) -> CMatrix {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * s)
}

/// Builds a matrix from row slices. Panics on ragged input.
pub fn from_rows(rows: &[&[c64]]) -> CMatrix {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    assert!(rows.iter().all(|r| r.len() == m), "ragged rows");
    Mat::from_fn(n, m, |i, j| rows[i][j])
}

pub fn pauli_x() -> CMatrix {
    from_rows(&[&[ZERO, ONE], &[ONE, ZERO]])
}

pub fn pauli_y() -> CMatrix {
    from_rows(&[&[ZERO, -I], &[I, ZERO]])
}

pub fn pauli_z() -> CMatrix {
    from_rows(&[&[ONE, ZERO], &[ZERO, -ONE]])
}

fn check_square_finite(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    let n = m.nrows();
    for j in 0..n {
        for i in 0..n {
            let z = m[(i, j)];
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::NonFinite { dim: n });
            }
        }
    }
    Ok(n)
}

fn check_hermitian(m: &CMatrix) -> Result<usize> {
    let n = check_square_finite(m)?;
    let dev = hermiticity_deviation(m);
    if dev > HERMITIAN_REL_TOL * max_abs(m).max(f64::MIN_POSITIVE) && dev > 0.0 {
        return Err(Error::NotHermitian { deviation: dev });
    }
    Ok(n)
}

/// Eigendecomposition of a Hermitian matrix; eigenvalues ascending.
pub fn hermitian_eig(m: &CMatrix) -> Result<EigenDecomposition> {
    let n = check_hermitian(m)?;
    if n == 0 {
        return Ok(EigenDecomposition { values: Vec::new(), vectors: Mat::zeros(0, 0) });
    }
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|_| Error::NoConvergence { dim: n })?;
    let s = evd.S().column_vector();
    let values = (0..n).map(|i| s[i].re).collect();
    Ok(EigenDecomposition { values, vectors: evd.U().to_owned() })
}

/// Eigenvalues only, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Result<Vec<f64>> {
    let n = check_hermitian(m)?;
    if n == 0 {
        return Ok(Vec::new());
    }
    let vals = m
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|_| Error::NoConvergence { dim: n })?;
    Ok(vals)
}

/// `exp(-i s H)` for Hermitian `H`.
pub fn exp_hermitian(h: &CMatrix, s: f64) -> Result<CMatrix> {
    let eig = hermitian_eig(h)?;
    let n = eig.values.len();
    let v = &eig.vectors;
    let phases: Vec<c64> = eig.values.iter().map(|&l| c64::cis(-s * l)).collect();
    let vd = Mat::from_fn(n, n, |i, j| v[(i, j)] * phases[j]);
    Ok(&vd * v.adjoint())
}

/// Maps a phase onto `[-pi, pi)`.
pub fn wrap_phase(x: f64) -> f64 {
    use std::f64::consts::PI;
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y >= PI { y - 2.0 * PI } else { y }
}

/// `E = -arg(z)` with `arg` in `(-pi, pi]`, so `E` lies in `[-pi, pi)`.
pub fn quasienergy_of(z: c64) -> f64 {
    let e = -z.im.atan2(z.re);
    if e >= std::f64::consts::PI { e - 2.0 * std::f64::consts::PI } else { e }
}

/// Center (as a phase) of the widest gap between sorted phases on the circle.
pub fn widest_gap_center(sorted: &[f64]) -> f64 {
    use std::f64::consts::PI;
    if sorted.is_empty() {
        return 0.0;
    }
    let mut best = (sorted[0] + 2.0 * PI) - sorted[sorted.len() - 1];
    let mut center = sorted[sorted.len() - 1] + best / 2.0;
    for w in sorted.windows(2) {
        let g = w[1] - w[0];
        if g > best {
            best = g;
            center = w[0] + g / 2.0;
        }
    }
    wrap_phase(center)
}

/// Eigendecomposition of a unitary matrix.
///
/// Uses the Cayley map of `exp(i theta) U`, which is Hermitian, so degenerate
/// eigenspaces come out orthonormal. `theta` is moved into the widest spectral
/// gap when the first pass fails the residual check.
pub fn unitary_eig(u: &CMatrix) -> Result<UnitaryEigen> {
    let n = check_square_finite(u)?;
    let dev = unitarity_deviation(u);
    if dev > UNITARY_INPUT_TOL {
        return Err(Error::NotUnitary { deviation: dev });
    }
    if n == 0 {
        return Ok(UnitaryEigen { phases: Vec::new(), vectors: Mat::zeros(0, 0) });
    }

    // golden-ratio offset keeps the singular point away from 0 and pi
    let mut theta = 0.618_033_988_749_895_f64;
    let mut last_residual = f64::INFINITY;
    for _ in 0..3 {
        let rot = c64::cis(theta);
        let plus = Mat::from_fn(n, n, |i, j| {
            let d = if i == j { ONE } else { ZERO };
            d + rot * u[(i, j)]
        });
        let minus = Mat::from_fn(n, n, |i, j| {
            let d = if i == j { ONE } else { ZERO };
            d - rot * u[(i, j)]
        });
        let x = plus.partial_piv_lu().solve(&minus);
        let mut h = Mat::from_fn(n, n, |i, j| I * x[(i, j)]);
        for j in 0..n {
            for i in 0..=j {
                let a = (h[(i, j)] + h[(j, i)].conj()) * 0.5;
                h[(i, j)] = a;
                h[(j, i)] = a.conj();
            }
        }
        let good = (0..n).all(|j| (0..n).all(|i| h[(i, j)].re.is_finite() && h[(i, j)].im.is_finite()));
        if !good {
            theta += 0.5;
            continue;
        }
        let eig = h
            .self_adjoint_eigen(Side::Lower)
            .map_err(|_| Error::NoConvergence { dim: n })?;
        let v = eig.U().to_owned();
        let uv = u * &v;
        let mut phases = Vec::with_capacity(n);
        let mut residual = 0.0f64;
        for j in 0..n {
            let mut d = ZERO;
            for i in 0..n {
                d += v[(i, j)].conj() * uv[(i, j)];
            }
            let e = quasienergy_of(d);
            let lam = c64::cis(-e);
            for i in 0..n {
                residual = residual.max((uv[(i, j)] - lam * v[(i, j)]).norm());
            }
            phases.push(e);
        }
        if residual <= UNITARY_RESIDUAL_TOL {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| phases[a].total_cmp(&phases[b]));
            let sorted: Vec<f64> = order.iter().map(|&j| phases[j]).collect();
            let vectors = Mat::from_fn(n, n, |i, j| v[(i, order[j])]);
            return Ok(UnitaryEigen { phases: sorted, vectors });
        }
        last_residual = residual;
        let mut sorted = phases.clone();
        sorted.sort_by(f64::total_cmp);
        // exp(i theta) exp(-i c) = -1 at the gap center c
        theta = widest_gap_center(&sorted) + std::f64::consts::PI;
    }
    Err(Error::Residual { residual: last_residual, tolerance: UNITARY_RESIDUAL_TOL })
}
