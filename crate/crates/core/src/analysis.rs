//! Parameter sweeps, transition detection and entropy scaling fits.

use serde::{Deserialize, Serialize};

use crate::entanglement::count_maximally_entangled;
use crate::error::{Error, Result};
use crate::floquet::{FillingWindow, TimeFrame};
use crate::models::{Boundary, ModelSpec};
use crate::parallel;
use crate::pipeline::{self, band_count, Route, Tolerances};

/// Windows around 1/2 at which maximally entangled modes are counted.
pub const DELTAS: [f64; 3] = [1e-3, 1e-4, 1e-5];
pub const CUSP_THRESHOLD: f64 = 10.0;
pub const DEFAULT_GRID_POINTS: usize = 121;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Spectrum,
    Entanglement,
    Winding,
    Chern,
    EdgeCount,
}

/// Entanglement data of one time frame (chains) or one filled band (lattices).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub label: String,
    pub entropy: Option<f64>,
    /// Maximally entangled modes at each of [`DELTAS`].
    pub counts: Option<[usize; 3]>,
    pub winding: Option<f64>,
    pub chern: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub value: f64,
    pub gap_zero: Option<f64>,
    pub gap_pi: Option<f64>,
    pub channels: Vec<Channel>,
    pub edge: Option<(usize, usize)>,
    /// Warnings and per-point failures; a failed point keeps its slot.
    pub flags: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis: String,
    pub grid: Vec<f64>,
    pub records: Vec<SweepRecord>,
}

impl SweepResult {
    /// Series of one channel quantity, NaN where missing.
    pub fn series(&self, channel: usize, pick: impl Fn(&Channel) -> Option<f64>) -> Vec<f64> {
        self.records.iter().map(|r| r.channels.get(channel).and_then(&pick).unwrap_or(f64::NAN)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub tasks: Vec<Task>,
    /// Filling of chains; lattices fill each band in turn.
    pub window: FillingWindow,
    pub route: Route,
    pub tolerances: Tolerances,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            tasks: vec![Task::Spectrum, Task::Entanglement, Task::Winding, Task::EdgeCount],
            window: FillingWindow::default(),
            route: Route::Bloch,
            tolerances: Tolerances::default(),
        }
    }
}

/// `n` points spread evenly over `(lo, hi]`.
pub fn open_closed_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
}

/// `n` points spread evenly over `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Evaluates `tasks` at every grid value of `axis`. Points are independent
/// and run through the worker pool; a failing point is flagged, not fatal.
pub fn sweep(template: &ModelSpec, axis: &str, grid: &[f64], options: &SweepOptions) -> Result<SweepResult> {
    template.param(axis)?;
    template.validate()?;
    options.tolerances.validate()?;
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Config("sweep grid must be strictly increasing".into()));
    }
    let records = parallel::map(grid, |&value| {
        let mut spec = template.clone();
        let mut record = SweepRecord { value, ..Default::default() };
        match spec.set_param(axis, value) {
            Ok(()) => evaluate(&spec, options, &mut record),
            Err(e) => record.flags.push(e.to_string()),
        }
        record
    });
    Ok(SweepResult { axis: axis.to_string(), grid: grid.to_vec(), records })
}

fn evaluate(spec: &ModelSpec, options: &SweepOptions, record: &mut SweepRecord) {
    let want = |t: Task| options.tasks.contains(&t);
    let tol = &options.tolerances;
    let flag = |r: &mut SweepRecord, what: &str, e: Error| r.flags.push(format!("{what}: {e}"));

    if !spec.is_two_dimensional() {
        let periodic = spec.with_boundary(Boundary::Periodic);
        if want(Task::Spectrum) {
            match pipeline::bloch_gaps(&periodic, spec.open_cells()) {
                Ok((g0, gp)) => {
                    record.gap_zero = Some(g0);
                    record.gap_pi = Some(gp);
                }
                Err(e) => flag(record, "spectrum", e),
            }
        }
        if want(Task::Entanglement) || want(Task::Winding) {
            for (label, frame) in [("frame1", TimeFrame::Frame1), ("frame2", TimeFrame::Frame2)] {
                let mut ch = Channel { label: label.into(), ..Default::default() };
                match pipeline::chain_entanglement(&periodic, frame, options.window, None, options.route, tol) {
                    Ok(ent) => {
                        if want(Task::Entanglement) {
                            ch.entropy = Some(ent.report.entropy);
                            ch.counts = Some(DELTAS.map(|d| count_maximally_entangled(&ent.report.zeta, d)));
                        }
                        if want(Task::Winding) {
                            ch.winding = ent.winding.map(|w| w.raw);
                        }
                        if ent.ties > 0 {
                            record.flags.push(format!("{label}: {} tie(s) at zeta = 1/2", ent.ties));
                        }
                    }
                    Err(e) => flag(record, label, e),
                }
                record.channels.push(ch);
            }
        }
        if want(Task::EdgeCount) {
            match pipeline::edge_counts(spec, tol) {
                Ok((c, _)) => {
                    record.edge = Some((c.zero, c.pi));
                    if c.zero_gapless || c.pi_gapless {
                        record.flags.push("edge: gapless cluster screened out".into());
                    }
                }
                Err(e) => flag(record, "edge", e),
            }
        }
        return;
    }

    let torus = spec.with_boundary(Boundary::Periodic);
    let bands = band_count(spec);
    if want(Task::Entanglement) || want(Task::Chern) {
        for band in 0..bands.saturating_sub(1).max(1) {
            let label = format!("band{band}");
            let mut ch = Channel { label: label.clone(), ..Default::default() };
            match pipeline::torus_entanglement(&torus, FillingWindow::band(band, bands), None, tol) {
                Ok(t) => {
                    if want(Task::Entanglement) {
                        ch.entropy = Some(t.report.entropy);
                        ch.counts = Some(DELTAS.map(|d| count_maximally_entangled(&t.report.zeta, d)));
                    }
                    if want(Task::Chern) {
                        ch.chern = Some(t.chern.raw);
                    }
                    if want(Task::Spectrum) {
                        record.gap_zero = Some(t.gaps.0);
                        record.gap_pi = Some(t.gaps.1);
                    }
                }
                Err(e) => flag(record, &label, e),
            }
            record.channels.push(ch);
        }
    } else if want(Task::Spectrum) {
        let ks = pipeline::momenta(spec.periodic_cells());
        match pipeline::slice_spectra(&torus, Boundary::Periodic, &ks, tol) {
            Ok(slices) => {
                let (g0, gp) = pipeline::spectrum_gaps(slices.iter().flat_map(|s| s.energies.iter().copied()));
                record.gap_zero = Some(g0);
                record.gap_pi = Some(gp);
            }
            Err(e) => flag(record, "spectrum", e),
        }
    }
}

/// A cluster of grid points with anomalous curvature.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cusp {
    pub index: usize,
    pub at: f64,
    /// `|second difference| / median |second difference|`.
    pub strength: f64,
}

/// Grid points whose discrete second difference exceeds `threshold` times
/// the median of its magnitude. Adjacent hits form one cusp located at the
/// strongest point. NaN entries are skipped.
pub fn detect_cusps(values: &[f64], grid: &[f64], threshold: f64) -> Vec<Cusp> {
    let n = values.len().min(grid.len());
    if n < 5 {
        return Vec::new();
    }
    let d2: Vec<(usize, f64)> = (1..n - 1)
        .map(|i| (i, (values[i - 1] - 2.0 * values[i] + values[i + 1]).abs()))
        .filter(|(_, d)| d.is_finite())
        .collect();
    if d2.is_empty() {
        return Vec::new();
    }
    let mut mags: Vec<f64> = d2.iter().map(|p| p.1).collect();
    mags.sort_by(f64::total_cmp);
    let median = mags[mags.len() / 2];
    // ignore rounding noise on smooth data
    let scale = values.iter().filter(|v| v.is_finite()).fold(0.0f64, |m, v| m.max(v.abs()));
    let cut = (threshold * median).max(1e-9 * (1.0 + scale));
    let hits: Vec<(usize, f64)> = d2.into_iter().filter(|p| p.1 > cut).collect();
    let mut out: Vec<Cusp> = Vec::new();
    for group in hits.chunk_by(|a, b| b.0 == a.0 + 1) {
        let &(i, d) = group.iter().max_by(|a, b| a.1.total_cmp(&b.1)).expect("chunks are nonempty");
        let strength = if median > 0.0 { d / median } else { f64::INFINITY };
        out.push(Cusp { index: i, at: grid[i], strength });
    }
    out
}

/// Indices `i` with `values[i] != values[i + 1]`.
pub fn discontinuities<T: PartialEq>(values: &[T]) -> Vec<usize> {
    values.windows(2).enumerate().filter(|(_, w)| w[0] != w[1]).map(|(i, _)| i).collect()
}

/// Local minima of a gap series below `threshold`.
pub fn gap_minima(gaps: &[f64], threshold: f64) -> Vec<usize> {
    let n = gaps.len();
    (0..n)
        .filter(|&i| {
            let g = gaps[i];
            g < threshold && (i == 0 || g <= gaps[i - 1]) && (i + 1 == n || g <= gaps[i + 1])
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub sizes: Vec<usize>,
    pub entropies: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square deviation from the fitted line.
    pub residual: f64,
    pub central_charge: f64,
}

/// Least-squares fit of `S = (c/3) ln L + b`.
pub fn fit_central_charge(sizes: &[usize], entropies: &[f64]) -> Result<ScalingFit> {
    if sizes.len() != entropies.len() {
        return Err(Error::LengthMismatch { left: sizes.len(), right: entropies.len() });
    }
    if sizes.len() < 4 {
        return Err(Error::Config(format!("a scaling fit needs at least 4 sizes, got {}", sizes.len())));
    }
    let x: Vec<f64> = sizes.iter().map(|&l| (l as f64).ln()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = entropies.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(entropies).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Config("scaling fit needs distinct sizes".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual =
        (x.iter().zip(entropies).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum::<f64>() / n).sqrt();
    Ok(ScalingFit {
        sizes: sizes.to_vec(),
        entropies: entropies.to_vec(),
        slope,
        intercept,
        residual,
        central_charge: 3.0 * slope,
    })
}

/// Half-chain entropies of a periodic chain at each size, and their fit.
pub fn entropy_scaling(template: &ModelSpec, sizes: &[usize], frame: TimeFrame, window: FillingWindow) -> Result<ScalingFit> {
    let specs: Vec<ModelSpec> = sizes
        .iter()
        .map(|&l| {
            if template.is_two_dimensional() {
                return Err(Error::Config("entropy scaling needs a chain model".into()));
            }
            let s = template.with_boundary(Boundary::Periodic).with_open_cells(l);
            s.validate()?;
            Ok(s)
        })
        .collect::<Result<_>>()?;
    let entropies: Vec<f64> =
        specs.iter().map(|s| pipeline::half_chain_entropy(s, frame, window)).collect::<Result<_>>()?;
    fit_central_charge(sizes, &entropies)
}
