//! Real-space invariants of entanglement Hamiltonians and the
//! bulk-edge correspondence checks built on them.

use std::f64::consts::PI;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::entanglement::{pairwise_sum, EntanglementReport};
use crate::error::{Error, Result};
use crate::models::{pqghm_hvec, Pqghm};
use crate::numerics::{self, CMatrix, ONE};

pub const TIE_TOL: f64 = 1e-8;
pub const WINDING_QUANT_TOL: f64 = 0.1;
pub const CHERN_QUANT_TOL: f64 = 0.15;

/// What to do with correlation eigenvalues indistinguishable from 1/2.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TieRule {
    #[default]
    Positive,
    Reject,
}

#[derive(Clone, Debug)]
pub struct FlatBand {
    pub q: CMatrix,
    pub ties: usize,
}

/// `Q = sum_j sign(zeta_j - 1/2) |phi_j><phi_j|`.
pub fn flatband_projector_q(report: &EntanglementReport, rule: TieRule) -> Result<FlatBand> {
    let ties = report.zeta.iter().filter(|&&z| (z - 0.5).abs() <= TIE_TOL).count();
    if ties > 0 {
        match rule {
            TieRule::Reject => return Err(Error::Tie { count: ties }),
            TieRule::Positive => log::debug!("{ties} correlation eigenvalue(s) at 1/2 assigned +1"),
        }
    }
    let n = report.modes.nrows();
    let plus: Vec<usize> = (0..n).filter(|&j| report.zeta[j] >= 0.5 - TIE_TOL).collect();
    let v = &report.modes;
    let sub = Mat::from_fn(n, plus.len(), |i, j| v[(i, plus[j])]);
    let p = &sub * sub.adjoint();
    let q = Mat::from_fn(n, n, |i, j| p[(i, j)] * 2.0 - if i == j { ONE } else { numerics::ZERO });
    Ok(FlatBand { q, ties })
}

/// Projector onto the negative entanglement energies, `zeta < 1/2`.
pub fn lower_entanglement_projector(report: &EntanglementReport) -> CMatrix {
    let n = report.modes.nrows();
    let cols: Vec<usize> = (0..n).filter(|&j| report.zeta[j] < 0.5).collect();
    crate::floquet::projector_from_columns(&report.modes, &cols)
}

#[derive(Clone, Debug)]
pub struct WindingConfig {
    /// Chiral operator on one cell.
    pub chiral: CMatrix,
    /// Cells in A.
    pub cells: usize,
    /// Cells dropped at each end of A from the trace.
    pub edge_exclusion: usize,
}

impl WindingConfig {
    /// Default exclusion `floor(L_A / 4)`.
    pub fn new(chiral: CMatrix, cells: usize) -> Self {
        Self { chiral, cells, edge_exclusion: cells / 4 }
    }

    pub fn internals(&self) -> usize {
        self.chiral.nrows()
    }

    pub fn bulk_cells(&self) -> usize {
        self.cells.saturating_sub(2 * self.edge_exclusion)
    }

    pub fn validate(&self) -> Result<()> {
        let g2 = &self.chiral * &self.chiral;
        let dev = numerics::max_abs_diff(&g2, &numerics::identity(self.internals()));
        if dev > 1e-12 {
            return Err(Error::Config(format!("chiral operator does not square to one (deviation {dev:e})")));
        }
        if self.bulk_cells() == 0 {
            return Err(Error::Config(format!(
                "edge exclusion {} leaves no bulk in {} cells",
                self.edge_exclusion, self.cells
            )));
        }
        if 2 * self.bulk_cells() < self.cells {
            log::warn!("bulk trace covers {} of {} cells", self.bulk_cells(), self.cells);
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Invariant {
    pub raw: f64,
    pub value: i64,
    pub quantized: bool,
}

impl Invariant {
    fn from_raw(raw: f64, tol: f64) -> Self {
        let value = raw.round() as i64;
        Self { raw, value, quantized: (raw - value as f64).abs() < tol }
    }
}

/// Open-bulk winding number `Tr'(Gamma Q [Q, N]) / L'`.
///
/// The trace runs over the middle cells of A and `L'` counts the orbitals it
/// covers, so a flat chiral band of winding `w` per orbital gives `w`.
pub fn open_bulk_winding(q: &CMatrix, config: &WindingConfig) -> Result<Invariant> {
    config.validate()?;
    let k = config.internals();
    let n = config.cells * k;
    if q.nrows() != n {
        return Err(Error::Config(format!("Q has dimension {} but A has {n} orbitals", q.nrows())));
    }
    let cell = |i: usize| (i / k) as f64;
    let lo = config.edge_exclusion * k;
    let hi = (config.cells - config.edge_exclusion) * k;
    let mut terms = Vec::with_capacity(hi - lo);
    for i in lo..hi {
        let c0 = (i / k) * k;
        let mut diag = numerics::ZERO;
        for s in c0..c0 + k {
            let g = config.chiral[(i - c0, s - c0)];
            if g == numerics::ZERO {
                continue;
            }
            // (Q [Q, N])_{s i} = sum_b Q_sb Q_bi (n_i - n_b)
            let mut acc = numerics::ZERO;
            for b in 0..n {
                acc += q[(s, b)] * q[(b, i)] * (cell(i) - cell(b));
            }
            diag += g * acc;
        }
        terms.push(diag.re);
    }
    let raw = pairwise_sum(&terms) / (config.bulk_cells() * k) as f64;
    let w = Invariant::from_raw(raw, WINDING_QUANT_TOL);
    if !w.quantized {
        log::warn!("winding number not quantized: {raw}");
    }
    Ok(w)
}

/// Marker per cell, `-4 pi Im <r| P x P y P |r>` summed over internal states.
pub fn local_chern_marker(p: &CMatrix, x: &[f64], y: &[f64], internals: usize) -> Result<Vec<f64>> {
    let n = p.nrows();
    if x.len() != n || y.len() != n {
        return Err(Error::LengthMismatch { left: x.len().min(y.len()), right: n });
    }
    let dev = crate::entanglement::idempotence_deviation(p);
    if dev > 1e-6 {
        return Err(Error::NotProjector { deviation: dev });
    }
    let px = Mat::from_fn(n, n, |i, j| p[(i, j)] * x[j]);
    let pxp = &px * p;
    let per_site: Vec<f64> = (0..n)
        .map(|a| {
            let mut acc = numerics::ZERO;
            for b in 0..n {
                acc += pxp[(a, b)] * y[b] * p[(b, a)];
            }
            -4.0 * PI * acc.im
        })
        .collect();
    Ok(per_site.chunks(internals).map(|c| c.iter().sum()).collect())
}

/// Scalar field on a `width x height` grid, index `x + width * y`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MarkerField {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl MarkerField {
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.values[x + self.width * y]
    }
}

/// Axis-aligned averaging window.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub x0: usize,
    pub y0: usize,
    pub width: usize,
    pub height: usize,
}

impl Region {
    /// Central square of side `floor(min(w, h) / 2)`.
    pub fn central(width: usize, height: usize) -> Self {
        let side = width.min(height) / 2;
        Region { x0: (width - side) / 2, y0: (height - side) / 2, width: side, height: side }
    }

    /// Checks the window fits and keeps `margin * extent` cells from the
    /// cuts, which run perpendicular to the `cut_axis_is_y` direction.
    pub fn validate(&self, field: &MarkerField, cut_axis_is_y: bool, margin: f64) -> Result<()> {
        if self.width == 0 || self.height == 0 || self.x0 + self.width > field.width || self.y0 + self.height > field.height {
            return Err(Error::Config(format!("region {self:?} does not fit a {}x{} field", field.width, field.height)));
        }
        let (lo, len, extent) = if cut_axis_is_y {
            (self.y0, self.height, field.height)
        } else {
            (self.x0, self.width, field.width)
        };
        let gap = lo.min(extent - lo - len) as f64;
        if gap < margin * extent as f64 {
            return Err(Error::Config(format!("region is {gap} cells from a cut, less than {margin} x {extent}")));
        }
        Ok(())
    }
}

/// Region average of the marker, rounded with a quantization flag.
pub fn real_space_chern(field: &MarkerField, region: &Region) -> Result<Invariant> {
    if region.x0 + region.width > field.width || region.y0 + region.height > field.height {
        return Err(Error::Config(format!("region {region:?} outside field")));
    }
    let vals: Vec<f64> = (region.y0..region.y0 + region.height)
        .flat_map(|y| (region.x0..region.x0 + region.width).map(move |x| (x, y)))
        .map(|(x, y)| field.at(x, y))
        .collect();
    let raw = pairwise_sum(&vals) / (region.width * region.height) as f64;
    let ch = Invariant::from_raw(raw, CHERN_QUANT_TOL);
    if !ch.quantized {
        log::warn!("Chern number not quantized: {raw}");
    }
    Ok(ch)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub relations: Vec<(String, bool)>,
}

impl Verdict {
    fn check(&mut self, name: &str, ok: bool) {
        self.relations.push((name.to_string(), ok));
    }

    pub fn passed(&self) -> bool {
        self.relations.iter().all(|r| r.1)
    }

    pub fn violations(&self) -> Vec<&str> {
        self.relations.iter().filter(|r| !r.1).map(|r| r.0.as_str()).collect()
    }
}

/// Inputs of the 1D correspondence relations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChiralCounts {
    pub n1: i64,
    pub n2: i64,
    pub w1: i64,
    pub w2: i64,
    pub n0: i64,
    pub npi: i64,
}

fn verify_chiral(c: ChiralCounts, mult: i64) -> Verdict {
    let mut v = Verdict::default();
    let half = mult / 2;
    v.check("N1 = n0 + npi", c.n1 == c.n0 + c.npi);
    v.check("N2 = |n0 - npi|", c.n2 == (c.n0 - c.npi).abs());
    v.check(&format!("N1 = {mult}|W1|"), c.n1 == mult * c.w1.abs());
    v.check(&format!("N2 = {mult}|W2|"), c.n2 == mult * c.w2.abs());
    v.check(&format!("n0 = {half}|W1 + W2|"), c.n0 == half * (c.w1 + c.w2).abs());
    v.check(&format!("npi = {half}|W1 - W2|"), c.npi == half * (c.w1 - c.w2).abs());
    v
}

/// Twofold-degenerate (spinless chiral) case.
pub fn verify_bdi(c: ChiralCounts) -> Verdict {
    verify_chiral(c, 2)
}

/// Fourfold-degenerate (spinful) case.
pub fn verify_cii(c: ChiralCounts) -> Verdict {
    verify_chiral(c, 4)
}

/// Checks the Chern-number correspondence. `chern` is signed; the relations
/// compare magnitudes.
pub fn verify_chern(band_chern: i64, es_crossings: i64, chern: i64, edge_flow: (i64, i64)) -> Verdict {
    let mut v = Verdict::default();
    v.check("n_c = |C0|", es_crossings.abs() == band_chern.abs());
    v.check("|n_L - n'_L| = |Ch|", (edge_flow.0 - edge_flow.1).abs() == chern.abs());
    v.check("|Ch| = |C0|", chern.abs() == band_chern.abs());
    v
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GapLocation {
    Zero,
    Pi,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseBoundary {
    pub k2: f64,
    pub mu: i64,
    pub nu: i64,
    pub gap: GapLocation,
}

/// Transition lines `mu^2/K1^2 + nu^2/K2^2 = 1/pi^2` of the kicked rotor
/// chain with `K2` in `(lo, hi]`.
pub fn ordkr_phase_boundaries(k1: f64, lo: f64, hi: f64) -> Vec<PhaseBoundary> {
    let mut out = Vec::new();
    if !(hi > lo) || k1 == 0.0 {
        return out;
    }
    let k1 = k1.abs();
    let mu_max = (k1 / PI).ceil() as i64;
    for mu in 0..=mu_max {
        let rest = 1.0 / (PI * PI) - (mu as f64 / k1).powi(2);
        if rest <= 0.0 {
            continue;
        }
        let unit = 1.0 / rest.sqrt();
        let mut nu = 1i64;
        loop {
            let k2 = nu as f64 * unit;
            if k2 > hi {
                break;
            }
            if k2 > lo {
                let gap = if (mu + nu) % 2 == 0 { GapLocation::Zero } else { GapLocation::Pi };
                out.push(PhaseBoundary { k2, mu, nu, gap });
            }
            nu += 1;
        }
    }
    out.sort_by(|a, b| a.k2.total_cmp(&b.k2));
    out
}

/// `(E+, E-) = +-arccos[cos(K1 cos k) cos(K2 sin k)]`.
pub fn ordkr_dispersion(k1: f64, k2: f64, k: f64) -> (f64, f64) {
    let c = ((k1 * k.cos()).cos() * (k2 * k.sin()).cos()).clamp(-1.0, 1.0);
    let e = c.acos();
    (e, -e)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DurationAxis {
    #[serde(rename = "T1")]
    First,
    #[serde(rename = "T2")]
    Second,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollinearPoint {
    pub k1: f64,
    pub k2: f64,
    pub h1: f64,
    pub h2: f64,
    pub parallel: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaplessTimes {
    pub times: Vec<f64>,
    pub points: Vec<CollinearPoint>,
    /// The two stage vectors are collinear over a finite patch of the zone;
    /// `times` then holds the ends of each gapless interval.
    pub degenerate: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaplessOptions {
    pub grid: usize,
    pub include_antiparallel: bool,
}

impl Default for GaplessOptions {
    fn default() -> Self {
        Self { grid: 300, include_antiparallel: false }
    }
}

fn unit(h: [f64; 3]) -> Option<[f64; 3]> {
    let n = (h[0] * h[0] + h[1] * h[1] + h[2] * h[2]).sqrt();
    (n > 1e-9).then(|| [h[0] / n, h[1] / n, h[2] / n])
}

fn norm3(h: [f64; 3]) -> f64 {
    (h[0] * h[0] + h[1] * h[1] + h[2] * h[2]).sqrt()
}

/// Residual `n1 - s n2` of the stage unit vectors.
fn collinear_residual(m: &Pqghm, k: [f64; 2], sign: f64) -> Option<[f64; 3]> {
    let a = unit(pqghm_hvec(m.t1, m.t2, m.t31, m.phi1, k[0], k[1]))?;
    let b = unit(pqghm_hvec(m.t1, m.t2, m.t32, m.phi2, k[0], k[1]))?;
    Some([a[0] - sign * b[0], a[1] - sign * b[1], a[2] - sign * b[2]])
}

fn refine(m: &Pqghm, mut k: [f64; 2], sign: f64) -> Option<[f64; 2]> {
    let f = |k: [f64; 2]| collinear_residual(m, k, sign);
    let mut lambda = 1e-3;
    let mut r = f(k)?;
    let mut cost = norm3(r).powi(2);
    for _ in 0..200 {
        if cost.sqrt() < 1e-13 {
            break;
        }
        let h = 1e-7;
        let mut jac = [[0.0; 2]; 3];
        for d in 0..2 {
            let mut kp = k;
            let mut km = k;
            kp[d] += h;
            km[d] -= h;
            let (rp, rm) = (f(kp)?, f(km)?);
            for i in 0..3 {
                jac[i][d] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        // (J^T J + lambda I) dk = -J^T r
        let mut a = [[0.0; 2]; 2];
        let mut g = [0.0; 2];
        for i in 0..3 {
            for p in 0..2 {
                g[p] += jac[i][p] * r[i];
                for q in 0..2 {
                    a[p][q] += jac[i][p] * jac[i][q];
                }
            }
        }
        let mut accepted = false;
        for _ in 0..20 {
            let (a00, a11) = (a[0][0] + lambda, a[1][1] + lambda);
            let det = a00 * a11 - a[0][1] * a[1][0];
            if det.abs() < 1e-300 {
                lambda *= 10.0;
                continue;
            }
            let dk = [-(a11 * g[0] - a[0][1] * g[1]) / det, -(a00 * g[1] - a[1][0] * g[0]) / det];
            let kn = [k[0] + dk[0], k[1] + dk[1]];
            if let Some(rn) = f(kn) {
                let cn = norm3(rn).powi(2);
                if cn < cost {
                    k = kn;
                    r = rn;
                    cost = cn;
                    lambda = (lambda / 10.0).max(1e-15);
                    accepted = true;
                    break;
                }
            }
            lambda *= 10.0;
        }
        if !accepted {
            break;
        }
    }
    (cost.sqrt() < 1e-6).then(|| [numerics::wrap_phase(k[0]), numerics::wrap_phase(k[1])])
}

/// Critical quench durations where the quasienergy gap closes: points where
/// the two stage vectors are collinear and `T1 |h1| +- T2 |h2| = l pi`.
///
/// The duration on `axis` is solved for with the other held at its value in
/// `spec`; only solutions in `(lo, hi]` are returned, sorted.
pub fn pqghm_gapless_times(
    spec: &Pqghm,
    axis: DurationAxis,
    lo: f64,
    hi: f64,
    options: GaplessOptions,
) -> GaplessTimes {
    let n = options.grid.max(8);
    let step = 2.0 * PI / n as f64;
    let kk = |i: usize| -PI + step * i as f64;
    let mut signs = vec![1.0];
    if options.include_antiparallel {
        signs.push(-1.0);
    }
    let mut points: Vec<CollinearPoint> = Vec::new();
    let mut degenerate = false;
    let mut dense = Vec::new();
    for &sign in &signs {
        let cost: Vec<f64> = (0..n * n)
            .map(|idx| {
                collinear_residual(spec, [kk(idx % n), kk(idx / n)], sign).map_or(f64::INFINITY, |r| norm3(r).powi(2))
            })
            .collect();
        let flat = cost.iter().filter(|&&c| c < 1e-20).count();
        if flat * 100 > n * n {
            degenerate = true;
            dense.extend((0..n * n).filter(|&i| cost[i] < 1e-20).map(|i| (kk(i % n), kk(i / n), sign)));
            continue;
        }
        for j in 0..n {
            for i in 0..n {
                let c0 = cost[i + n * j];
                if !(c0 < 0.05) {
                    continue;
                }
                let is_min = (-1i64..=1).all(|dj| {
                    (-1i64..=1).all(|di| {
                        if di == 0 && dj == 0 {
                            return true;
                        }
                        let ii = (i as i64 + di).rem_euclid(n as i64) as usize;
                        let jj = (j as i64 + dj).rem_euclid(n as i64) as usize;
                        c0 <= cost[ii + n * jj]
                    })
                });
                if !is_min {
                    continue;
                }
                let Some(k) = refine(spec, [kk(i), kk(j)], sign) else { continue };
                let dup = points.iter().any(|p| {
                    p.parallel == (sign > 0.0)
                        && numerics::wrap_phase(p.k1 - k[0]).abs() < 1e-5
                        && numerics::wrap_phase(p.k2 - k[1]).abs() < 1e-5
                });
                if dup {
                    continue;
                }
                let h1 = norm3(pqghm_hvec(spec.t1, spec.t2, spec.t31, spec.phi1, k[0], k[1]));
                let h2 = norm3(pqghm_hvec(spec.t1, spec.t2, spec.t32, spec.phi2, k[0], k[1]));
                points.push(CollinearPoint { k1: k[0], k2: k[1], h1, h2, parallel: sign > 0.0 });
            }
        }
    }

    let solve = |h1: f64, h2: f64, sign: f64| -> Vec<f64> {
        // T1 h1 + sign T2 h2 = l pi
        let (own, other, fixed) = match axis {
            DurationAxis::First => (h1, sign * h2, spec.dur2),
            DurationAxis::Second => (sign * h2, h1, spec.dur1),
        };
        if own.abs() < 1e-12 {
            return Vec::new();
        }
        let mut out = Vec::new();
        let base = other * fixed;
        let (ea, eb) = (base + own * lo, base + own * hi);
        let a = (ea.min(eb) / PI).floor() as i64;
        let b = (ea.max(eb) / PI).ceil() as i64;
        for l in a..=b {
            let t = (l as f64 * PI - base) / own;
            if t > lo && t <= hi {
                out.push(t);
            }
        }
        out
    };

    let mut times = Vec::new();
    if degenerate {
        let ts: Vec<f64> = dense
            .iter()
            .flat_map(|&(k1, k2, sign)| {
                let h1 = norm3(pqghm_hvec(spec.t1, spec.t2, spec.t31, spec.phi1, k1, k2));
                let h2 = norm3(pqghm_hvec(spec.t1, spec.t2, spec.t32, spec.phi2, k1, k2));
                solve(h1, h2, sign)
            })
            .collect();
        times.extend(interval_ends(ts, 2.0 * step));
    }
    for p in &points {
        times.extend(solve(p.h1, p.h2, if p.parallel { 1.0 } else { -1.0 }));
    }
    times.sort_by(f64::total_cmp);
    times.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    GaplessTimes { times, points, degenerate }
}

/// Collapses a cloud of solutions into the endpoints of its clusters.
fn interval_ends(mut ts: Vec<f64>, gap: f64) -> Vec<f64> {
    ts.sort_by(f64::total_cmp);
    let mut out = Vec::new();
    let mut i = 0;
    while i < ts.len() {
        let mut j = i;
        while j + 1 < ts.len() && ts[j + 1] - ts[j] < gap {
            j += 1;
        }
        out.push(ts[i]);
        if j > i {
            out.push(ts[j]);
        }
        i = j + 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entanglement::{entanglement_spectrum, Partition};
    use crate::models::Boundary;

    fn report_from_zeta(zeta: &[f64]) -> EntanglementReport {
        let n = zeta.len();
        let c = Mat::from_fn(n, n, |i, j| if i == j { faer::c64::new(zeta[i], 0.0) } else { numerics::ZERO });
        entanglement_spectrum(&c, &Partition { layers: 2 * n, layer_size: 1, start: 0, len: n, periodic: true }, 1e-4)
            .unwrap()
    }

    #[test]
    fn q_signs() {
        let q = flatband_projector_q(&report_from_zeta(&[0.1, 0.2, 0.3]), TieRule::Positive).unwrap().q;
        assert!(numerics::max_abs_diff(&q, &numerics::scale(&numerics::identity(3), -ONE)) < 1e-14);
        let q = flatband_projector_q(&report_from_zeta(&[0.6, 0.9]), TieRule::Positive).unwrap().q;
        assert!(numerics::max_abs_diff(&q, &numerics::identity(2)) < 1e-14);
    }

    #[test]
    fn tie_rules() {
        let r = report_from_zeta(&[0.5, 0.9]);
        assert!(matches!(flatband_projector_q(&r, TieRule::Reject), Err(Error::Tie { count: 1 })));
        let f = flatband_projector_q(&r, TieRule::Positive).unwrap();
        assert_eq!(f.ties, 1);
        assert!(numerics::max_abs_diff(&f.q, &numerics::identity(2)) < 1e-14);
    }

    #[test]
    fn trivial_q_has_zero_winding() {
        let cfg = WindingConfig::new(numerics::pauli_z(), 12);
        for s in [ONE, -ONE] {
            let q = numerics::scale(&numerics::identity(24), s);
            let w = open_bulk_winding(&q, &cfg).unwrap();
            assert_eq!(w.value, 0);
            assert_eq!(w.raw, 0.0);
        }
    }

    #[test]
    fn winding_config_checks() {
        let cfg = WindingConfig { chiral: numerics::scale(&numerics::pauli_z(), faer::c64::new(2.0, 0.0)), cells: 8, edge_exclusion: 2 };
        assert!(cfg.validate().is_err());
        let cfg = WindingConfig { chiral: numerics::pauli_z(), cells: 8, edge_exclusion: 4 };
        assert!(cfg.validate().is_err());
        assert_eq!(WindingConfig::new(numerics::pauli_z(), 150).edge_exclusion, 37);
    }

    #[test]
    fn marker_vanishes_for_trivial_projectors() {
        let n = 6;
        let x: Vec<f64> = (0..n).map(|i| (i % 3) as f64).collect();
        let y: Vec<f64> = (0..n).map(|i| (i / 3) as f64).collect();
        let zero = local_chern_marker(&numerics::zeros(n), &x, &y, 1).unwrap();
        assert!(zero.iter().all(|&v| v == 0.0));
        let diag = Mat::from_fn(n, n, |i, j| if i == j && i % 2 == 0 { ONE } else { numerics::ZERO });
        let f = local_chern_marker(&diag, &x, &y, 1).unwrap();
        assert!(f.iter().all(|&v| v.abs() < 1e-15));
    }

    #[test]
    fn marker_rejects_non_projector() {
        let p = numerics::scale(&numerics::identity(4), faer::c64::new(0.5, 0.0));
        let xs = [0.0; 4];
        assert!(matches!(local_chern_marker(&p, &xs, &xs, 1), Err(Error::NotProjector { .. })));
    }

    #[test]
    fn chern_of_zero_field() {
        let f = MarkerField { width: 8, height: 8, values: vec![0.0; 64] };
        let ch = real_space_chern(&f, &Region::central(8, 8)).unwrap();
        assert_eq!(ch.value, 0);
        assert!(ch.quantized);
    }

    #[test]
    fn region_margin() {
        let f = MarkerField { width: 36, height: 18, values: vec![0.0; 36 * 18] };
        let r = Region::central(36, 18);
        assert_eq!((r.width, r.height, r.x0, r.y0), (9, 9, 13, 4));
        r.validate(&f, true, 0.125).unwrap();
        let bad = Region { x0: 0, y0: 0, width: 9, height: 9 };
        assert!(bad.validate(&f, true, 0.125).is_err());
    }

    #[test]
    fn bdi_examples() {
        let c = |n1, n2, w1, w2, n0, npi| ChiralCounts { n1, n2, w1, w2, n0, npi };
        assert!(verify_bdi(c(6, 2, 3, -1, 2, 4)).passed());
        assert!(verify_bdi(c(2, 2, 1, 1, 2, 0)).passed());
        let v = verify_bdi(c(2, 2, 1, 1, 0, 2));
        assert!(!v.passed());
        assert!(v.violations().contains(&"n0 = 1|W1 + W2|"));
    }

    #[test]
    fn cii_examples() {
        let c = |n1, n2, w1, w2, n0, npi| ChiralCounts { n1, n2, w1, w2, n0, npi };
        assert!(verify_cii(c(4, 4, 1, 1, 4, 0)).passed());
        assert!(verify_cii(c(4, 4, 1, -1, 0, 4)).passed());
        assert!(verify_cii(c(0, 0, 0, 0, 0, 0)).passed());
        assert!(!verify_cii(c(4, 4, 1, 1, 4, 4)).passed());
    }

    #[test]
    fn chern_verdicts() {
        assert!(verify_chern(1, 1, 1, (1, 0)).passed());
        assert!(verify_chern(1, 1, -1, (0, 1)).passed());
        assert!(verify_chern(0, 0, 0, (0, 0)).passed());
        assert!(!verify_chern(2, 1, 2, (2, 0)).passed());
    }

    #[test]
    fn ordkr_boundaries_at_half_pi() {
        let b = ordkr_phase_boundaries(0.5 * PI, 0.0, 4.5 * PI);
        let got: Vec<(f64, GapLocation)> = b.iter().map(|p| (p.k2 / PI, p.gap)).collect();
        assert_eq!(got.len(), 4);
        let want = [GapLocation::Pi, GapLocation::Zero, GapLocation::Pi, GapLocation::Zero];
        for (i, (k2, g)) in got.iter().enumerate() {
            assert!((k2 - (i + 1) as f64).abs() < 1e-12);
            assert_eq!(*g, want[i]);
        }
        assert!(b.iter().all(|p| p.mu == 0));
        assert!(ordkr_phase_boundaries(0.5 * PI, 1.0, 1.0).is_empty());
    }

    #[test]
    fn ordkr_boundaries_solve_ellipse() {
        let k1 = 2.5 * PI;
        for p in ordkr_phase_boundaries(k1, 0.0, 6.0 * PI) {
            let lhs = (p.mu as f64 / k1).powi(2) + (p.nu as f64 / p.k2).powi(2);
            assert!((lhs - 1.0 / (PI * PI)).abs() < 1e-14);
        }
    }

    #[test]
    fn dispersion_examples() {
        let (a, b) = ordkr_dispersion(0.5 * PI, PI, PI / 2.0);
        assert!((a - PI).abs() < 1e-7 && (b + PI).abs() < 1e-7);
        let (a, _) = ordkr_dispersion(0.5 * PI, 1.234, 0.0);
        assert!((a - PI / 2.0).abs() < 1e-15);
        assert_eq!(ordkr_dispersion(0.0, 0.0, 0.7), (0.0, -0.0));
    }

    fn ghm(t1: f64, t2: f64) -> Pqghm {
        Pqghm {
            t1: 1.0,
            t2: 0.8,
            t31: 0.75,
            t32: -0.75,
            phi1: -PI / 6.0,
            phi2: -PI / 2.0,
            dur1: t1,
            dur2: t2,
            l1: 8,
            l2: 8,
            boundary1: Boundary::Periodic,
            boundary2: Boundary::Periodic,
        }
    }

    #[test]
    fn gapless_time_at_zone_center() {
        let g = pqghm_gapless_times(&ghm(1.0, 1.2), DurationAxis::First, 0.8, 1.3, GaplessOptions::default());
        let want = (2.0 * PI - 1.2 * 0.75) / 5.25;
        assert!(g.times.iter().any(|t| (t - want).abs() < 1e-6), "{:?}", g.times);
        assert!(!g.degenerate);
    }

    #[test]
    fn empty_duration_range() {
        let g = pqghm_gapless_times(&ghm(1.0, 1.2), DurationAxis::First, 1.0, 1.0, GaplessOptions { grid: 60, ..Default::default() });
        assert!(g.times.is_empty());
    }

    #[test]
    fn identical_stages_are_degenerate() {
        let mut m = ghm(0.5, 0.5);
        m.t32 = m.t31;
        m.phi2 = m.phi1;
        let g = pqghm_gapless_times(&m, DurationAxis::First, 0.0, 2.0, GaplessOptions { grid: 60, ..Default::default() });
        assert!(g.degenerate);
        // every returned time closes the gap at some momentum
        let hmax = (0..3600)
            .map(|i| {
                let (a, b) = (-PI + 2.0 * PI * (i % 60) as f64 / 60.0, -PI + 2.0 * PI * (i / 60) as f64 / 60.0);
                norm3(pqghm_hvec(m.t1, m.t2, m.t31, m.phi1, a, b))
            })
            .fold(0.0, f64::max);
        let first = (PI / hmax) - 0.5;
        assert!((g.times[0] - first).abs() < 1e-9, "{:?} vs {first}", g.times);
    }
}
