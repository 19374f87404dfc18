//! End-to-end routes from a model to its spectra, entanglement data and
//! invariants.
//!
//! Periodic chains can go through Bloch blocks: the restricted projector is
//! then a block Toeplitz matrix built from `(1/L) sum_k e^{ikd} P(k)`, which
//! is exact and far cheaper than diagonalizing the full Floquet operator.
//! Tori are handled the same way along their sliced direction.

use std::f64::consts::PI;

use faer::{c64, Mat};
use serde::{Deserialize, Serialize};

use crate::entanglement::{
    self, correlation_matrix, entanglement_spectrum, EntanglementReport, Partition, SlicedTorus,
};
use crate::error::{Error, Result};
use crate::floquet::{
    self, bloch_factors, floquet_operator, frame_factors, occupied_indices, occupied_projector, projector_from_columns,
    quasienergy_spectrum, slice_factors, spectral_flow, time_frame_factors, BranchSlice, EdgeCount, EdgeCriteria,
    FillingWindow, FloquetSpectrum, Layout, Side, TimeFrame,
};
use crate::models::{pqghm_hvec, Boundary, GeneratorPair, ModelSpec};
use crate::numerics::{self, CMatrix, ZERO};
use crate::parallel;
use crate::topology::{
    flatband_projector_q, local_chern_marker, lower_entanglement_projector, open_bulk_winding, real_space_chern,
    Invariant, MarkerField, Region, TieRule, WindingConfig,
};

/// Numerical thresholds shared by every route.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Edge-mode quasienergy window around 0 and pi.
    pub edge_energy: f64,
    /// Minimum edge weight of an edge mode.
    pub edge_weight: f64,
    /// Fraction of cells at each end forming the edge region.
    pub edge_region_fraction: f64,
    /// Window around 1/2 for maximally entangled modes.
    pub delta: f64,
    /// Clamp on zeta before the logarithm in xi.
    pub zeta_clamp: f64,
    /// Cells excluded at each end of A from the winding trace.
    pub edge_exclusion: Option<usize>,
    /// Minimum gap between the Chern averaging region and a cut, as a
    /// fraction of the extent of A across the cut.
    pub region_margin: f64,
    /// Minimum weight near one side for a branch to count in a spectral flow.
    pub flow_weight: f64,
    pub tie_rule: TieRule,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            edge_energy: 1e-3,
            edge_weight: 0.6,
            edge_region_fraction: 0.1,
            delta: 1e-4,
            zeta_clamp: entanglement::ZETA_CLAMP,
            edge_exclusion: None,
            region_margin: 0.125,
            flow_weight: 0.5,
            tie_rule: TieRule::Positive,
        }
    }
}

impl Tolerances {
    pub fn edge_criteria(&self) -> EdgeCriteria {
        EdgeCriteria { energy_tol: self.edge_energy, min_weight: self.edge_weight }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must lie in [0, 1], got {v}")))
            }
        };
        unit("edge_weight", self.edge_weight)?;
        unit("edge_region_fraction", self.edge_region_fraction)?;
        unit("region_margin", self.region_margin)?;
        unit("flow_weight", self.flow_weight)?;
        if !(self.edge_energy > 0.0) || !(self.delta > 0.0) || !(self.zeta_clamp > 0.0 && self.zeta_clamp < 0.5) {
            return Err(Error::Config("edge_energy, delta and zeta_clamp must be positive (zeta_clamp < 1/2)".into()));
        }
        Ok(())
    }
}

/// Number of quasienergy bands of a model's Bloch operator.
pub fn band_count(spec: &ModelSpec) -> usize {
    match spec {
        ModelSpec::Khm(m) => m.q as usize,
        _ => spec.internals(),
    }
}

fn require_1d(spec: &ModelSpec) -> Result<()> {
    if spec.is_two_dimensional() {
        return Err(Error::Config(format!("{} is two-dimensional; this route needs a chain", spec.name())));
    }
    Ok(())
}

fn require_2d(spec: &ModelSpec) -> Result<()> {
    if !spec.is_two_dimensional() {
        return Err(Error::Config(format!("{} is one-dimensional; this route needs a lattice", spec.name())));
    }
    Ok(())
}

/// Spectrum of the full real-space Floquet operator of a chain.
pub fn chain_spectrum(spec: &ModelSpec, frame: TimeFrame, tol: &Tolerances) -> Result<FloquetSpectrum> {
    require_1d(spec)?;
    let u = floquet_operator(&time_frame_factors(spec, frame)?)?;
    let layout = Layout { cells: spec.open_cells(), internals: spec.internals() };
    quasienergy_spectrum(&u, layout, spec.boundary(), tol.edge_region_fraction)
}

/// Zero and pi edge modes of the open chain.
pub fn edge_counts(spec: &ModelSpec, tol: &Tolerances) -> Result<(EdgeCount, FloquetSpectrum)> {
    let spectrum = chain_spectrum(&spec.with_boundary(Boundary::Open), TimeFrame::Original, tol)?;
    Ok((floquet::count_edge_modes(&spectrum, tol.edge_criteria())?, spectrum))
}

pub fn momenta(n: usize) -> Vec<f64> {
    (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect()
}

/// Floquet eigensystems of the Bloch blocks of a chain at `ks`.
pub fn bloch_eigen(spec: &ModelSpec, frame: TimeFrame, ks: &[f64]) -> Result<Vec<numerics::UnitaryEigen>> {
    require_1d(spec)?;
    parallel::map(ks, |&k| numerics::unitary_eig(&floquet_operator(&bloch_factors(spec, frame, k)?)?))
        .into_iter()
        .collect()
}

/// Smallest distance of any Bloch quasienergy to 0 and to pi.
pub fn bloch_gaps(spec: &ModelSpec, nk: usize) -> Result<(f64, f64)> {
    let eig = bloch_eigen(spec, TimeFrame::Original, &momenta(nk))?;
    Ok(spectrum_gaps(eig.iter().flat_map(|e| e.phases.iter().copied())))
}

/// Smallest distances of a set of quasienergies to 0 and to pi.
pub fn spectrum_gaps(energies: impl Iterator<Item = f64>) -> (f64, f64) {
    energies.fold((PI, PI), |(g0, gp), e| (g0.min(e.abs()), gp.min(PI - e.abs())))
}

/// Where the restricted projector of a periodic chain comes from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    #[default]
    Bloch,
    RealSpace,
}

/// `P_AA` of a chain as a block Toeplitz matrix over the cells of A.
pub fn bloch_restricted_projector(
    spec: &ModelSpec,
    frame: TimeFrame,
    window: FillingWindow,
    partition: &Partition,
) -> Result<CMatrix> {
    require_1d(spec)?;
    if spec.boundary() != Boundary::Periodic {
        return Err(Error::Config("the Bloch route needs a periodic chain".into()));
    }
    partition.validate()?;
    let l = spec.open_cells();
    let m = spec.internals();
    if partition.layers != l || partition.layer_size != m {
        return Err(Error::Config(format!(
            "partition of {}x{} does not match a chain of {l} cells with {m} orbitals",
            partition.layers, partition.layer_size
        )));
    }
    let ks = momenta(l);
    let eig = bloch_eigen(spec, frame, &ks)?;
    let mut blocks = Vec::with_capacity(l);
    for e in &eig {
        let (occ, near) = occupied_indices(&e.phases, window)?;
        if near {
            log::warn!("Bloch quasienergy within 1e-6 of the filling window edge");
        }
        blocks.push(projector_from_columns(&e.vectors, &occ));
    }
    let len = partition.len;
    // g[d + len - 1] = (1/L) sum_k e^{ikd} P(k)
    let g: Vec<CMatrix> = (0..2 * len - 1)
        .map(|i| {
            let d = i as f64 - (len - 1) as f64;
            let mut acc: CMatrix = Mat::zeros(m, m);
            for (pk, &k) in blocks.iter().zip(&ks) {
                let ph = c64::cis(k * d) / l as f64;
                for b in 0..m {
                    for a in 0..m {
                        acc[(a, b)] += ph * pk[(a, b)];
                    }
                }
            }
            acc
        })
        .collect();
    Ok(Mat::from_fn(len * m, len * m, |i, j| g[i / m + len - 1 - j / m][(i % m, j % m)]))
}

/// Occupied projector of the full chain restricted to A.
pub fn realspace_restricted_projector(
    spec: &ModelSpec,
    frame: TimeFrame,
    window: FillingWindow,
    partition: &Partition,
    tol: &Tolerances,
) -> Result<CMatrix> {
    let spectrum = chain_spectrum(spec, frame, tol)?;
    let p = occupied_projector(&spectrum, window)?;
    let c = correlation_matrix(&p.matrix, partition)?;
    Ok(transpose(&c))
}

fn transpose(m: &CMatrix) -> CMatrix {
    Mat::from_fn(m.ncols(), m.nrows(), |i, j| m[(j, i)])
}

/// Recomputes entanglement energies with a non-default clamp.
fn reclamp(report: &mut EntanglementReport, eps: f64) {
    if eps != entanglement::ZETA_CLAMP {
        report.xi = report.zeta.iter().map(|&z| entanglement::xi_clamped(z, eps)).collect();
    }
}

#[derive(Clone, Debug)]
pub struct ChainEntanglement {
    pub partition: Partition,
    pub report: EntanglementReport,
    /// Present in the chiral frames of models with a chiral operator.
    pub winding: Option<Invariant>,
    pub ties: usize,
}

/// Entanglement data and winding number of a chain for one time frame.
///
/// `partition` defaults to the left half, periodic if the chain is.
pub fn chain_entanglement(
    spec: &ModelSpec,
    frame: TimeFrame,
    window: FillingWindow,
    partition: Option<Partition>,
    route: Route,
    tol: &Tolerances,
) -> Result<ChainEntanglement> {
    require_1d(spec)?;
    let periodic = spec.boundary() == Boundary::Periodic;
    let partition = partition.unwrap_or_else(|| Partition::half(spec.open_cells(), spec.internals(), periodic));
    let paa = match route {
        Route::Bloch if periodic => bloch_restricted_projector(spec, frame, window, &partition)?,
        _ => realspace_restricted_projector(spec, frame, window, &partition, tol)?,
    };
    let mut report = entanglement_spectrum(&transpose(&paa), &partition, tol.delta)?;
    reclamp(&mut report, tol.zeta_clamp);
    let (winding, ties) = match (spec.chiral_operator(), frame) {
        (Some(gamma), TimeFrame::Frame1 | TimeFrame::Frame2) => {
            let flat = flatband_projector_q(&report, tol.tie_rule)?;
            let mut cfg = WindingConfig::new(gamma, partition.len);
            if let Some(le) = tol.edge_exclusion {
                cfg.edge_exclusion = le;
            }
            (Some(open_bulk_winding(&flat.q, &cfg)?), flat.ties)
        }
        _ => (None, 0),
    };
    Ok(ChainEntanglement { partition, report, winding, ties })
}

/// Half-chain entropy of a periodic chain from its Bloch blocks.
pub fn half_chain_entropy(spec: &ModelSpec, frame: TimeFrame, window: FillingWindow) -> Result<f64> {
    let partition = Partition::half(spec.open_cells(), spec.internals(), true);
    let paa = bloch_restricted_projector(spec, frame, window, &partition)?;
    let zeta: Vec<f64> = numerics::hermitian_eigenvalues(&paa)?.into_iter().map(|z| z.clamp(0.0, 1.0)).collect();
    Ok(entanglement::entanglement_entropy(&zeta))
}

/// Spectra of the momentum slices of a lattice, with the cut direction set
/// to `boundary`.
pub fn slice_spectra(spec: &ModelSpec, boundary: Boundary, ks: &[f64], tol: &Tolerances) -> Result<Vec<FloquetSpectrum>> {
    require_2d(spec)?;
    let spec = spec.with_boundary(boundary);
    let layout = Layout { cells: spec.open_cells(), internals: spec.internals() };
    parallel::map(ks, |&k| {
        let u = floquet_operator(&slice_factors(&spec, k)?)?;
        quasienergy_spectrum(&u, layout, boundary, tol.edge_region_fraction)
    })
    .into_iter()
    .collect()
}

#[derive(Clone, Debug)]
pub struct TorusEntanglement {
    pub partition: Partition,
    pub report: EntanglementReport,
    pub field: MarkerField,
    pub region: Region,
    pub chern: Invariant,
    /// Distances of slice quasienergies to 0 and pi.
    pub gaps: (f64, f64),
}

/// Whether the marker's `x` coordinate runs along the cut direction.
fn x_is_open(spec: &ModelSpec) -> bool {
    matches!(spec, ModelSpec::Khm(_))
}

/// Entanglement of a filled band on a torus and the real-space Chern number
/// of its entanglement Hamiltonian. A is the block of cut-direction layers
/// `(start, len)`, by default the first half.
pub fn torus_entanglement(
    spec: &ModelSpec,
    window: FillingWindow,
    block: Option<(usize, usize)>,
    tol: &Tolerances,
) -> Result<TorusEntanglement> {
    require_2d(spec)?;
    let torus = SlicedTorus { periodic: spec.periodic_cells(), open: spec.open_cells(), internals: spec.internals() };
    let slices = slice_spectra(spec, Boundary::Periodic, &torus.momenta(), tol)?;
    let gaps = spectrum_gaps(slices.iter().flat_map(|s| s.energies.iter().copied()));
    let projectors: Vec<CMatrix> =
        slices.iter().map(|s| occupied_projector(s, window).map(|p| p.matrix)).collect::<Result<_>>()?;
    let (start, len) = block.unwrap_or((0, torus.open / 2));
    let partition = torus.partition(start, len, true);
    partition.validate()?;
    let paa = torus.restricted_projector(&projectors, &partition)?;
    let mut report = entanglement_spectrum(&transpose(&paa), &partition, tol.delta)?;
    reclamp(&mut report, tol.zeta_clamp);

    let p_ent = lower_entanglement_projector(&report);
    let (m, lp, len) = (torus.internals, torus.periodic, partition.len);
    let n = paa.nrows();
    let open_of = |i: usize| (i / (m * lp)) as f64;
    let periodic_of = |i: usize| ((i / m) % lp) as f64;
    let open_x = x_is_open(spec);
    let (xs, ys): (Vec<f64>, Vec<f64>) = if open_x {
        ((0..n).map(open_of).collect(), (0..n).map(periodic_of).collect())
    } else {
        ((0..n).map(periodic_of).collect(), (0..n).map(open_of).collect())
    };
    let per_cell = local_chern_marker(&p_ent, &xs, &ys, m)?;
    // per_cell is indexed p + lp * o
    let field = if open_x {
        MarkerField { width: len, height: lp, values: (0..len * lp).map(|i| per_cell[i / len + lp * (i % len)]).collect() }
    } else {
        MarkerField { width: lp, height: len, values: per_cell }
    };
    let region = Region::central(field.width, field.height);
    region.validate(&field, !open_x, tol.region_margin)?;
    let chern = real_space_chern(&field, &region)?;
    Ok(TorusEntanglement { partition, report, field, region, chern, gaps })
}

/// Net flow of entanglement modes localized at one cut through `zeta = 1/2`
/// as the sliced momentum winds once, for a half-cylinder partition.
pub fn entanglement_crossings(
    spec: &ModelSpec,
    window: FillingWindow,
    nk: usize,
    side: Side,
    tol: &Tolerances,
) -> Result<i64> {
    require_2d(spec)?;
    let partition = Partition::half(spec.open_cells(), spec.internals(), true);
    let slices = slice_spectra(spec, Boundary::Periodic, &momenta(nk), tol)?;
    let tracks: Vec<BranchSlice> = parallel::map(&slices, |s| {
        let p = occupied_projector(s, window)?;
        let report = entanglement_spectrum(&correlation_matrix(&p.matrix, &partition)?, &partition, tol.delta)?;
        Ok(BranchSlice {
            values: report.zeta,
            vectors: report.modes,
            left_weight: report.left_cut_weight,
            right_weight: report.right_cut_weight,
        })
    })
    .into_iter()
    .collect::<Result<_>>()?;
    spectral_flow(&tracks, 0.5, false, side, tol.flow_weight)
}

/// Chiral edge branches of the open cylinder through the gaps above and
/// below `band`: `(upper, lower)`.
pub fn edge_band_flow(spec: &ModelSpec, band: usize, nk: usize, side: Side, tol: &Tolerances) -> Result<(i64, i64)> {
    let slices = slice_spectra(spec, Boundary::Open, &momenta(nk), tol)?;
    floquet::chiral_edge_band_count(&slices, band, band_count(spec), side, tol.flow_weight)
}

/// Two-momentum Bloch generators of a lattice model.
pub fn bloch_pair_2d(spec: &ModelSpec, k1: f64, k2: f64) -> Result<GeneratorPair> {
    match spec {
        ModelSpec::Pqghm(m) => {
            let h = |t3, phi| {
                let v = pqghm_hvec(m.t1, m.t2, t3, phi, k1, k2);
                let s = [numerics::pauli_x(), numerics::pauli_y(), numerics::pauli_z()];
                Mat::from_fn(2, 2, |i, j| s.iter().zip(v).fold(ZERO, |acc, (p, c)| acc + p[(i, j)] * c))
            };
            Ok(GeneratorPair { first: h(m.t31, m.phi1), second: h(m.t32, m.phi2) })
        }
        ModelSpec::Khm(m) => {
            // magnetic cell of q sites along x, twisted by k1 across its edge
            let q = m.q as usize;
            let mut hop: CMatrix = Mat::zeros(q, q);
            for x in 0..q {
                let xn = (x + 1) % q;
                let amp = if xn == 0 { c64::cis(-k1) } else { numerics::ONE } * (m.j / 2.0);
                hop[(x, xn)] += amp;
                hop[(xn, x)] += amp.conj();
            }
            let lam = m.flux();
            let kick = Mat::from_fn(q, q, |i, j| {
                if i == j { c64::new(m.v * (lam * i as f64 - k2).cos(), 0.0) } else { ZERO }
            });
            Ok(GeneratorPair { first: hop, second: kick })
        }
        _ => Err(Error::Config(format!("{} has no two-dimensional Bloch form", spec.name()))),
    }
}

/// Chern number of one Bloch quasienergy band on an `n x n` momentum grid,
/// from gauge-invariant plaquette phases.
pub fn bloch_band_chern(spec: &ModelSpec, band: usize, n: usize) -> Result<Invariant> {
    require_2d(spec)?;
    let bands = band_count(spec);
    let (d1, d2) = floquet::stage_durations(spec);
    let grid: Vec<(f64, f64)> = (0..n * n).map(|i| (2.0 * PI * (i % n) as f64 / n as f64, 2.0 * PI * (i / n) as f64 / n as f64)).collect();
    let states: Vec<CMatrix> = parallel::map(&grid, |&(k1, k2)| {
        let pair = bloch_pair_2d(spec, k1, k2)?;
        let eig = numerics::unitary_eig(&floquet_operator(&frame_factors(pair, d1, d2, TimeFrame::Original))?)?;
        let (occ, _) = occupied_indices(&eig.phases, FillingWindow::band(band, bands))?;
        Ok(Mat::from_fn(eig.vectors.nrows(), occ.len(), |i, j| eig.vectors[(i, occ[j])]))
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let link = |a: usize, b: usize| {
        let o = states[a].adjoint() * &states[b];
        let rows: Vec<Vec<c64>> = (0..o.nrows()).map(|i| (0..o.ncols()).map(|j| o[(i, j)]).collect()).collect();
        entanglement::determinant(rows)
    };
    let idx = |i: usize, j: usize| (i % n) + n * (j % n);
    let flux: Vec<f64> = (0..n * n)
        .map(|p| {
            let (i, j) = (p % n, p / n);
            let u = link(idx(i, j), idx(i + 1, j))
                * link(idx(i + 1, j), idx(i + 1, j + 1))
                * link(idx(i + 1, j + 1), idx(i, j + 1))
                * link(idx(i, j + 1), idx(i, j));
            u.arg()
        })
        .collect();
    let raw = entanglement::pairwise_sum(&flux) / (2.0 * PI);
    let value = raw.round() as i64;
    Ok(Invariant { raw, value, quantized: (raw - value as f64).abs() < 1e-6 })
}
