//! Floquet operators, quasienergy spectra, occupied projectors and edge modes.

use std::f64::consts::PI;

use faer::{c64, Mat};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{self, Boundary, GeneratorPair, ModelSpec};
use crate::numerics::{self, CMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeFrame {
    Original,
    Frame1,
    Frame2,
}

/// A Hermitian generator applied for `duration`.
#[derive(Clone, Debug)]
pub struct Factor {
    pub generator: CMatrix,
    pub duration: f64,
}

impl Factor {
    pub fn new(generator: CMatrix, duration: f64) -> Self {
        Self { generator, duration }
    }
}

/// Time-ordered product of exponentials; `factors[0]` acts first.
pub fn floquet_operator(factors: &[Factor]) -> Result<CMatrix> {
    let first = factors.first().ok_or_else(|| Error::Config("empty factor list".into()))?;
    let n = first.generator.nrows();
    let mut u = numerics::identity(n);
    for f in factors {
        if f.generator.nrows() != n {
            return Err(Error::Config("factor dimensions differ".into()));
        }
        let e = numerics::exp_hermitian(&f.generator, f.duration)?;
        u = &e * &u;
    }
    Ok(u)
}

/// Arranges a generator pair with its stage durations into a frame.
///
/// `d1`, `d2` are the durations of the two stages in the original frame.
pub fn frame_factors(pair: GeneratorPair, d1: f64, d2: f64, frame: TimeFrame) -> Vec<Factor> {
    let GeneratorPair { first, second } = pair;
    match frame {
        TimeFrame::Original => vec![Factor::new(first, d1), Factor::new(second, d2)],
        TimeFrame::Frame1 => vec![
            Factor::new(first.clone(), d1 / 2.0),
            Factor::new(second, d2),
            Factor::new(first, d1 / 2.0),
        ],
        TimeFrame::Frame2 => vec![
            Factor::new(second.clone(), d2 / 2.0),
            Factor::new(first, d1),
            Factor::new(second, d2 / 2.0),
        ],
    }
}

/// Durations of the two drive stages.
pub fn stage_durations(spec: &ModelSpec) -> (f64, f64) {
    match spec {
        ModelSpec::Ordkr(_) => (1.0, 1.0),
        ModelSpec::Pql(_) => (0.5, 0.5),
        ModelSpec::Pqghm(m) => (m.dur1, m.dur2),
        ModelSpec::Khm(_) => (1.0, 1.0),
    }
}

fn check_frame(spec: &ModelSpec, frame: TimeFrame) -> Result<()> {
    if frame != TimeFrame::Original && spec.is_two_dimensional() {
        return Err(Error::Config(format!("{} has no symmetric time frames", spec.name())));
    }
    Ok(())
}

/// Real-space factor list of a model in the requested frame.
pub fn time_frame_factors(spec: &ModelSpec, frame: TimeFrame) -> Result<Vec<Factor>> {
    spec.validate()?;
    check_frame(spec, frame)?;
    let pair = match spec {
        ModelSpec::Ordkr(m) => models::build_ordkr(m)?,
        ModelSpec::Pql(m) => models::build_pql(m)?,
        ModelSpec::Pqghm(m) => models::build_pqghm_realspace(m)?,
        ModelSpec::Khm(m) => models::build_khm(m, None)?,
    };
    let (d1, d2) = stage_durations(spec);
    Ok(frame_factors(pair, d1, d2, frame))
}

/// Factor list of a 1D model's Bloch block at momentum `k`.
pub fn bloch_factors(spec: &ModelSpec, frame: TimeFrame, k: f64) -> Result<Vec<Factor>> {
    let pair = models::bloch_pair(spec, k)?;
    let (d1, d2) = stage_durations(spec);
    Ok(frame_factors(pair, d1, d2, frame))
}

/// Factor list of a 2D model at momentum `k` along its sliced direction.
pub fn slice_factors(spec: &ModelSpec, k: f64) -> Result<Vec<Factor>> {
    spec.validate()?;
    let pair = match spec {
        ModelSpec::Pqghm(m) => models::build_pqghm_slice(m, k)?,
        ModelSpec::Khm(m) => models::build_khm(m, Some(k))?,
        _ => return Err(Error::Config(format!("{} is not a sliced 2D model", spec.name()))),
    };
    let (d1, d2) = stage_durations(spec);
    Ok(frame_factors(pair, d1, d2, TimeFrame::Original))
}

/// How the flattened basis groups into cells along the open direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Layout {
    pub cells: usize,
    pub internals: usize,
}

impl Layout {
    pub fn dim(&self) -> usize {
        self.cells * self.internals
    }

    /// Probability on the first `m` and last `m` cells.
    pub fn end_weights(&self, v: &CMatrix, col: usize, m: usize) -> (f64, f64) {
        let k = self.internals;
        let m = m.min(self.cells);
        let left: f64 = (0..m * k).map(|i| v[(i, col)].norm_sqr()).sum();
        let right: f64 = ((self.cells - m) * k..self.cells * k).map(|i| v[(i, col)].norm_sqr()).sum();
        (left, right)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Debug)]
pub struct FloquetSpectrum {
    pub energies: Vec<f64>,
    pub vectors: CMatrix,
    pub layout: Layout,
    pub boundary: Boundary,
    /// Weight on the outer edge cells at both ends.
    pub edge_weight: Vec<f64>,
    pub left_weight: Vec<f64>,
    pub right_weight: Vec<f64>,
    pub edge_cells: usize,
}

impl FloquetSpectrum {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn side_weight(&self, j: usize, side: Side) -> f64 {
        match side {
            Side::Left => self.left_weight[j],
            Side::Right => self.right_weight[j],
        }
    }

    /// Largest quasienergy splitting from `-E` over all states; zero for a
    /// chiral-symmetric spectrum.
    pub fn chiral_asymmetry(&self) -> f64 {
        let mut neg: Vec<f64> = self.energies.iter().map(|&e| numerics::wrap_phase(-e)).collect();
        neg.sort_by(f64::total_cmp);
        circular_multiset_distance(&self.energies, &neg)
    }

    /// Minimal distance of any quasienergy from 0 and from pi.
    pub fn gaps(&self) -> (f64, f64) {
        let g0 = self.energies.iter().map(|e| e.abs()).fold(f64::INFINITY, f64::min);
        let gp = self.energies.iter().map(|e| PI - e.abs()).fold(f64::INFINITY, f64::min);
        (g0, gp)
    }
}

/// Distance between two multisets of phases, each sorted on `[-pi, pi)`:
/// the best rank pairing over cyclic shifts, measured on the circle.
pub fn circular_multiset_distance(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    let mut best = if n == 0 { 0.0 } else { f64::INFINITY };
    for shift in 0..n {
        let mut worst = 0.0f64;
        for i in 0..n {
            worst = worst.max(numerics::wrap_phase(a[i] - b[(i + shift) % n]).abs());
            if worst >= best {
                break;
            }
        }
        best = best.min(worst);
    }
    best
}

/// Diagonalizes `u` and tags each state by its weight near the ends of the
/// open direction (`ceil(fraction * cells)` cells on each side).
pub fn quasienergy_spectrum(
    u: &CMatrix,
    layout: Layout,
    boundary: Boundary,
    edge_region_fraction: f64,
) -> Result<FloquetSpectrum> {
    if u.nrows() != layout.dim() {
        return Err(Error::Config(format!("layout dimension {} != matrix dimension {}", layout.dim(), u.nrows())));
    }
    let eig = numerics::unitary_eig(u)?;
    let m = ((edge_region_fraction * layout.cells as f64).ceil() as usize).max(1);
    Ok(tag_spectrum(eig.phases, eig.vectors, layout, boundary, m))
}

fn tag_spectrum(energies: Vec<f64>, vectors: CMatrix, layout: Layout, boundary: Boundary, m: usize) -> FloquetSpectrum {
    let n = energies.len();
    let mut left_weight = Vec::with_capacity(n);
    let mut right_weight = Vec::with_capacity(n);
    let mut edge_weight = Vec::with_capacity(n);
    for j in 0..n {
        let (l, r) = layout.end_weights(&vectors, j, m);
        // the two ends overlap only for tiny lattices
        let both = if 2 * m >= layout.cells { 1.0f64.min(l + r) } else { l + r };
        left_weight.push(l);
        right_weight.push(r);
        edge_weight.push(both);
    }
    FloquetSpectrum { energies, vectors, layout, boundary, edge_weight, left_weight, right_weight, edge_cells: m }
}

/// Which states count as occupied.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum FillingWindow {
    /// Half-open quasienergy interval `[lower, upper)`.
    Range { lower: f64, upper: f64 },
    /// The `index`-th of `bands` equally populated groups of quasienergies,
    /// counted upward from `start`.
    Band { index: usize, bands: usize, start: f64 },
}

impl Default for FillingWindow {
    fn default() -> Self {
        FillingWindow::Range { lower: -PI, upper: 0.0 }
    }
}

impl FillingWindow {
    pub fn band(index: usize, bands: usize) -> Self {
        FillingWindow::Band { index, bands, start: -PI }
    }
}

const PROXIMITY: f64 = 1e-6;

/// Indices of occupied states and a flag raised when a state sits within
/// `1e-6` of a window edge.
pub fn occupied_indices(energies: &[f64], window: FillingWindow) -> Result<(Vec<usize>, bool)> {
    match window {
        FillingWindow::Range { lower, upper } => {
            if !(lower <= upper) {
                return Err(Error::Config(format!("filling window [{lower}, {upper}) is inverted")));
            }
            let mut near = false;
            let mut occ = Vec::new();
            for (j, &e) in energies.iter().enumerate() {
                let full = upper - lower >= 2.0 * PI;
                if !full && ((e - lower).abs() < PROXIMITY || (e - upper).abs() < PROXIMITY) {
                    near = true;
                }
                if full || (e >= lower && e < upper) {
                    occ.push(j);
                }
            }
            Ok((occ, near))
        }
        FillingWindow::Band { index, bands, start } => {
            let n = energies.len();
            if bands == 0 || index >= bands {
                return Err(Error::Config(format!("band index {index} out of range for {bands} bands")));
            }
            if !n.is_multiple_of(bands) {
                return Err(Error::Config(format!("{n} states do not split into {bands} equal bands")));
            }
            let key = |e: f64| (e - start).rem_euclid(2.0 * PI);
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| key(energies[a]).total_cmp(&key(energies[b])));
            let per = n / bands;
            let lo = index * per;
            let hi = lo + per;
            let mut near = false;
            let gap = |a: usize, b: usize| numerics::wrap_phase(energies[b] - energies[a]).abs();
            if bands > 1 {
                let before = order[(lo + n - 1) % n];
                let after = order[hi % n];
                near = gap(before, order[lo]) < PROXIMITY || gap(order[hi - 1], after) < PROXIMITY;
            }
            let mut occ: Vec<usize> = order[lo..hi].to_vec();
            occ.sort_unstable();
            Ok((occ, near))
        }
    }
}

#[derive(Clone, Debug)]
pub struct Projector {
    pub matrix: CMatrix,
    pub occupied: usize,
    /// A quasienergy lies within `1e-6` of the window boundary.
    pub near_boundary: bool,
}

/// `sum_{j in occ} |psi_j><psi_j|` over a spectrum.
pub fn occupied_projector(spectrum: &FloquetSpectrum, window: FillingWindow) -> Result<Projector> {
    let (occ, near) = occupied_indices(&spectrum.energies, window)?;
    if near {
        log::warn!("quasienergy within {PROXIMITY:e} of the filling window edge");
    }
    Ok(Projector { matrix: projector_from_columns(&spectrum.vectors, &occ), occupied: occ.len(), near_boundary: near })
}

pub fn projector_from_columns(v: &CMatrix, cols: &[usize]) -> CMatrix {
    let n = v.nrows();
    let sub = Mat::from_fn(n, cols.len(), |i, j| v[(i, cols[j])]);
    &sub * sub.adjoint()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeCriteria {
    pub energy_tol: f64,
    pub min_weight: f64,
}

impl Default for EdgeCriteria {
    fn default() -> Self {
        Self { energy_tol: 1e-3, min_weight: 0.6 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeCount {
    pub zero: usize,
    pub pi: usize,
    /// The cluster at 0 contains states that are not edge-localized.
    pub zero_gapless: bool,
    pub pi_gapless: bool,
}

/// Counts edge-localized modes pinned at quasienergy 0 and pi.
///
/// Each near-degenerate cluster is rotated onto the eigenbasis of its
/// edge-region projector before thresholding. A cluster holding any state
/// below `min_weight` after rotation means bulk states share that
/// quasienergy; it is reported gapless and contributes no count.
pub fn count_edge_modes(spectrum: &FloquetSpectrum, criteria: EdgeCriteria) -> Result<EdgeCount> {
    let zero: Vec<usize> = (0..spectrum.len()).filter(|&j| spectrum.energies[j].abs() < criteria.energy_tol).collect();
    let pi: Vec<usize> =
        (0..spectrum.len()).filter(|&j| PI - spectrum.energies[j].abs() < criteria.energy_tol).collect();
    let (z, zg) = classify_cluster(spectrum, &zero, criteria.min_weight)?;
    let (p, pg) = classify_cluster(spectrum, &pi, criteria.min_weight)?;
    Ok(EdgeCount { zero: z, pi: p, zero_gapless: zg, pi_gapless: pg })
}

/// Edge weights of a cluster after rotating it onto the eigenbasis of the
/// edge-region projector.
pub fn rotated_edge_weights(spectrum: &FloquetSpectrum, cluster: &[usize]) -> Result<Vec<f64>> {
    if cluster.is_empty() {
        return Ok(Vec::new());
    }
    let layout = spectrum.layout;
    let k = layout.internals;
    let m = spectrum.edge_cells.min(layout.cells);
    let v = &spectrum.vectors;
    let in_edge = |i: usize| {
        let cell = i / k;
        cell < m || cell >= layout.cells - m
    };
    let rows: Vec<usize> = (0..layout.dim()).filter(|&i| in_edge(i)).collect();
    let sub = Mat::from_fn(rows.len(), cluster.len(), |i, j| v[(rows[i], cluster[j])]);
    let g = sub.adjoint() * &sub;
    let mut g = g;
    // exact Hermitian symmetrization
    for j in 0..g.ncols() {
        for i in 0..j {
            let a = (g[(i, j)] + g[(j, i)].conj()) * 0.5;
            g[(i, j)] = a;
            g[(j, i)] = a.conj();
        }
        g[(j, j)] = c64::new(g[(j, j)].re, 0.0);
    }
    numerics::hermitian_eigenvalues(&g)
}

fn classify_cluster(spectrum: &FloquetSpectrum, cluster: &[usize], min_weight: f64) -> Result<(usize, bool)> {
    let w = rotated_edge_weights(spectrum, cluster)?;
    if w.iter().any(|&x| x < min_weight) {
        return Ok((0, true));
    }
    Ok((w.len(), false))
}

/// One momentum slice prepared for branch tracking.
#[derive(Clone, Debug)]
pub struct BranchSlice {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
    pub left_weight: Vec<f64>,
    pub right_weight: Vec<f64>,
}

impl From<&FloquetSpectrum> for BranchSlice {
    fn from(s: &FloquetSpectrum) -> Self {
        BranchSlice {
            values: s.energies.clone(),
            vectors: s.vectors.clone(),
            left_weight: s.left_weight.clone(),
            right_weight: s.right_weight.clone(),
        }
    }
}

/// Net signed number of branches localized on `side` that cross `reference`
/// upward while the momentum runs once around a uniform periodic grid.
///
/// Branches are followed between neighbouring slices by maximal eigenvector
/// overlap. With `circular` values are phases and differences are wrapped.
/// A crossing by a state localized on neither side is a gap closing.
pub fn spectral_flow(
    slices: &[BranchSlice],
    reference: f64,
    circular: bool,
    side: Side,
    min_weight: f64,
) -> Result<i64> {
    let nk = slices.len();
    let mut net = 0i64;
    for i in 0..nk {
        let a = &slices[i];
        let b = &slices[(i + 1) % nk];
        let overlap = a.vectors.adjoint() * &b.vectors;
        for s in 0..a.values.len() {
            let mut best = 0;
            let mut best_val = -1.0;
            for t in 0..b.values.len() {
                let o = overlap[(s, t)].norm_sqr();
                if o > best_val {
                    best_val = o;
                    best = t;
                }
            }
            let (ea, eb) = (a.values[s], b.values[best]);
            let (d, x) = if circular {
                (numerics::wrap_phase(eb - ea), numerics::wrap_phase(reference - ea))
            } else {
                (eb - ea, reference - ea)
            };
            let sign = if d > 0.0 && x > 0.0 && x <= d {
                1
            } else if d < 0.0 && x <= 0.0 && x > d {
                -1
            } else {
                0
            };
            if sign == 0 {
                continue;
            }
            let own = 0.5 * (weight(a, s, side) + weight(b, best, side));
            let other = 0.5 * (weight(a, s, flip(side)) + weight(b, best, flip(side)));
            if own >= min_weight {
                net += sign;
            } else if other < min_weight {
                return Err(Error::GapClosed { reference });
            }
        }
    }
    Ok(net)
}

fn flip(side: Side) -> Side {
    match side {
        Side::Left => Side::Right,
        Side::Right => Side::Left,
    }
}

fn weight(s: &BranchSlice, j: usize, side: Side) -> f64 {
    match side {
        Side::Left => s.left_weight[j],
        Side::Right => s.right_weight[j],
    }
}

/// Centers of the `bands` widest gaps among bulk (non edge-localized)
/// quasienergies of all slices, ordered upward from `start`.
///
/// Entry `b` is the gap directly above band `b`.
pub fn band_gap_centers(slices: &[FloquetSpectrum], bands: usize, start: f64, min_weight: f64) -> Result<Vec<f64>> {
    let key = |e: f64| (e - start).rem_euclid(2.0 * PI);
    let mut bulk: Vec<f64> = slices
        .iter()
        .flat_map(|s| {
            (0..s.len())
                .filter(|&j| s.left_weight[j] < min_weight && s.right_weight[j] < min_weight)
                .map(|j| key(s.energies[j]))
                .collect::<Vec<_>>()
        })
        .collect();
    if bulk.len() < bands || bands == 0 {
        return Err(Error::Config(format!("cannot resolve {bands} bands from {} bulk states", bulk.len())));
    }
    bulk.sort_by(f64::total_cmp);
    let n = bulk.len();
    let mut gaps: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let lo = bulk[i];
            let hi = if i + 1 < n { bulk[i + 1] } else { bulk[0] + 2.0 * PI };
            (hi - lo, lo + (hi - lo) / 2.0)
        })
        .collect();
    gaps.sort_by(|a, b| b.0.total_cmp(&a.0));
    // a gap wrapping past `start` sits above the last band, not below the first
    let floor = bulk[0];
    let mut centers: Vec<f64> = gaps[..bands]
        .iter()
        .map(|g| {
            let k = g.1.rem_euclid(2.0 * PI);
            if k < floor { k + 2.0 * PI } else { k }
        })
        .collect();
    centers.sort_by(f64::total_cmp);
    Ok(centers.into_iter().map(|k| numerics::wrap_phase(k + start)).collect())
}

/// Signed crossings of edge branches on `side` through the gap centers
/// bounding band `band`: `(upper, lower)`.
pub fn chiral_edge_band_count(
    slices: &[FloquetSpectrum],
    band: usize,
    bands: usize,
    side: Side,
    min_weight: f64,
) -> Result<(i64, i64)> {
    if band >= bands {
        return Err(Error::Config(format!("band {band} out of range for {bands} bands")));
    }
    let centers = band_gap_centers(slices, bands, -PI, min_weight)?;
    let upper = centers[band];
    let lower = centers[(band + bands - 1) % bands];
    let tracks: Vec<BranchSlice> = slices.iter().map(BranchSlice::from).collect();
    let up = spectral_flow(&tracks, upper, true, side, min_weight)?;
    let lo = spectral_flow(&tracks, lower, true, side, min_weight)?;
    Ok((up, lo))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{Ordkr, Pql};
    use crate::numerics::{identity, max_abs_diff};

    fn ordkr(k2: f64, l: usize, b: Boundary) -> ModelSpec {
        ModelSpec::Ordkr(Ordkr { k1: 0.5 * PI, k2, length: l, boundary: b })
    }

    #[test]
    fn single_factor_is_exponential() {
        let h = numerics::pauli_y();
        let u = floquet_operator(&[Factor::new(h.clone(), 0.4)]).unwrap();
        assert!(max_abs_diff(&u, &numerics::exp_hermitian(&h, 0.4).unwrap()) < 1e-15);
    }

    #[test]
    fn commuting_diagonal_factors() {
        let d1 = numerics::pauli_z();
        let d2 = numerics::scale(&identity(2), c64::new(0.3, 0.0));
        let u = floquet_operator(&[Factor::new(d1.clone(), 1.0), Factor::new(d2.clone(), 1.0)]).unwrap();
        let sum = Mat::from_fn(2, 2, |i, j| d1[(i, j)] + d2[(i, j)]);
        assert!(max_abs_diff(&u, &numerics::exp_hermitian(&sum, 1.0).unwrap()) < 1e-14);
    }

    #[test]
    fn frames_reduce_when_second_vanishes() {
        let h1 = numerics::pauli_x();
        let pair = || GeneratorPair { first: h1.clone(), second: numerics::zeros(2) };
        let want = numerics::exp_hermitian(&h1, 1.0).unwrap();
        for f in [TimeFrame::Original, TimeFrame::Frame1, TimeFrame::Frame2] {
            let u = floquet_operator(&frame_factors(pair(), 1.0, 1.0, f)).unwrap();
            assert!(max_abs_diff(&u, &want) < 1e-14);
        }
    }

    #[test]
    fn ordkr_frame1_chiral() {
        let spec = ordkr(0.3 * PI, 8, Boundary::Periodic);
        let u = floquet_operator(&time_frame_factors(&spec, TimeFrame::Frame1).unwrap()).unwrap();
        let g = numerics::kron(&identity(8), &spec.chiral_operator().unwrap());
        let lhs = &(&g * &u) * &g;
        assert!(max_abs_diff(&lhs, &numerics::adjoint(&u)) < 1e-8);
    }

    #[test]
    fn two_d_models_reject_symmetric_frames() {
        let spec = ModelSpec::Khm(crate::models::Khm {
            j: 1.0,
            v: 1.0,
            p: 1,
            q: 3,
            lx: 6,
            ly: 4,
            boundary_x: Boundary::Periodic,
            boundary_y: Boundary::Periodic,
        });
        assert!(matches!(time_frame_factors(&spec, TimeFrame::Frame1), Err(Error::Config(_))));
    }

    #[test]
    fn full_and_empty_windows() {
        let spec = ordkr(0.3 * PI, 6, Boundary::Open);
        let u = floquet_operator(&time_frame_factors(&spec, TimeFrame::Original).unwrap()).unwrap();
        let s = quasienergy_spectrum(&u, Layout { cells: 6, internals: 2 }, Boundary::Open, 0.1).unwrap();
        let full = occupied_projector(&s, FillingWindow::Range { lower: -PI, upper: PI }).unwrap();
        assert!(max_abs_diff(&full.matrix, &identity(12)) < 1e-10);
        let empty = occupied_projector(&s, FillingWindow::Range { lower: 0.5, upper: 0.5 }).unwrap();
        assert_eq!(empty.occupied, 0);
        assert!(numerics::max_abs(&empty.matrix) == 0.0);
    }

    #[test]
    fn identity_has_no_edge_modes() {
        let u = identity(40);
        let s = quasienergy_spectrum(&u, Layout { cells: 20, internals: 2 }, Boundary::Open, 0.1).unwrap();
        assert!(s.energies.iter().all(|e| e.abs() < 1e-12));
        let c = count_edge_modes(&s, EdgeCriteria::default()).unwrap();
        assert_eq!((c.zero, c.pi), (0, 0));
        assert!(c.zero_gapless);
    }

    #[test]
    fn band_window_splits_evenly() {
        let e = [-2.0, -1.9, 0.0, 0.1, 2.0, 2.1];
        let (occ, near) = occupied_indices(&e, FillingWindow::band(1, 3)).unwrap();
        assert_eq!(occ, vec![2, 3]);
        assert!(!near);
        assert!(occupied_indices(&e, FillingWindow::band(0, 4)).is_err());
        assert!(occupied_indices(&e, FillingWindow::band(3, 3)).is_err());
    }

    #[test]
    fn proximity_flag() {
        let (_, near) = occupied_indices(&[-1.0, 1e-8], FillingWindow::default()).unwrap();
        assert!(near);
    }

    #[test]
    fn pql_frame_spectra_agree() {
        let spec = ModelSpec::Pql(Pql { jx: 0.5 * PI, jy: 0.6 * PI, jd: 0.7, v: 0.2 * PI, length: 5, boundary: Boundary::Open });
        let layout = Layout { cells: 5, internals: 4 };
        let spectra: Vec<_> = [TimeFrame::Original, TimeFrame::Frame1, TimeFrame::Frame2]
            .into_iter()
            .map(|f| {
                let u = floquet_operator(&time_frame_factors(&spec, f).unwrap()).unwrap();
                quasienergy_spectrum(&u, layout, Boundary::Open, 0.1).unwrap().energies
            })
            .collect();
        assert!(circular_multiset_distance(&spectra[0], &spectra[1]) < 1e-8);
        assert!(circular_multiset_distance(&spectra[0], &spectra[2]) < 1e-8);
    }

    #[test]
    fn gap_centers_put_wrapping_gap_last() {
        let energies = vec![-2.6, -1.9, -0.3, 0.3, 1.9, 2.6];
        let layout = Layout { cells: 6, internals: 1 };
        let s = tag_spectrum(energies, identity(6), layout, Boundary::Periodic, 1);
        let c = band_gap_centers(&[s], 3, -PI, 2.0).unwrap();
        assert!((c[0] + 1.1).abs() < 1e-12 && (c[1] - 1.1).abs() < 1e-12);
        assert!((c[2].abs() - PI).abs() < 1e-12);
    }
}
