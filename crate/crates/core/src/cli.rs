//! Command-line front end: JSON run configs in, CSV tables and a JSON
//! summary out.
//!
//! Every result is computed before the output directory is touched, so a
//! run that fails writes nothing.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::analysis::{self, SweepOptions, SweepResult, Task, DELTAS};
use crate::entanglement::{self, Partition};
use crate::error::{Error, Result};
use crate::floquet::{self, FillingWindow, FloquetSpectrum, Side, TimeFrame};
use crate::models::{Boundary, ModelSpec};
use crate::parallel;
use crate::pipeline::{self, band_count, Route, Tolerances};
use crate::topology::{self, ChiralCounts, MarkerField};

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;
pub const EXIT_VERIFY: u8 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Spectrum,
    Entangle,
    Winding,
    Chern,
    EdgeCount,
    Verify,
    Sweep,
    Scaling,
    OracleCheck,
}

#[derive(Debug, Parser)]
#[command(name = "floqent", version, about = "Floquet entanglement spectra and topological invariants")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (overrides `output_dir`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for parallel stages; 0 uses all cores.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Replace a config entry by dotted path, e.g. `tolerances.delta=1e-5`.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

/// Layers of the cut direction forming A.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Block {
    pub start: usize,
    pub len: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Values(Vec<f64>),
    Range {
        lo: f64,
        hi: f64,
        #[serde(default = "default_points")]
        points: usize,
        /// Include `lo` itself; otherwise the grid covers `(lo, hi]`.
        #[serde(default)]
        include_lo: bool,
    },
}

fn default_points() -> usize {
    analysis::DEFAULT_GRID_POINTS
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        match *self {
            Grid::Values(ref v) => v.clone(),
            Grid::Range { lo, hi, points, include_lo: true } => analysis::linspace(lo, hi, points),
            Grid::Range { lo, hi, points, include_lo: false } => analysis::open_closed_grid(lo, hi, points),
        }
    }
}

fn default_tasks() -> Vec<Task> {
    SweepOptions::default().tasks
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: String,
    pub grid: Grid,
    #[serde(default = "default_tasks")]
    pub tasks: Vec<Task>,
    #[serde(default = "default_cusp_threshold")]
    pub cusp_threshold: f64,
}

fn default_cusp_threshold() -> f64 {
    analysis::CUSP_THRESHOLD
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingConfig {
    pub sizes: Vec<usize>,
}

fn default_frame() -> TimeFrame {
    TimeFrame::Frame1
}

fn default_side() -> Side {
    Side::Left
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSpec,
    #[serde(default = "default_frame")]
    pub frame: TimeFrame,
    #[serde(default)]
    pub filling: FillingWindow,
    #[serde(default)]
    pub partition: Option<Block>,
    #[serde(default)]
    pub route: Route,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Band filled on 2D lattices, counted upward from -pi.
    #[serde(default)]
    pub band: usize,
    #[serde(default = "default_side")]
    pub side: Side,
    /// Momentum points of spectral flows and Bloch-band Chern grids.
    #[serde(default)]
    pub momenta: Option<usize>,
    /// Extent across the cut of the cylinder used for spectral flows.
    #[serde(default)]
    pub cylinder_length: Option<usize>,
    /// Momentum of the 2D slice used by `oracle-check`.
    #[serde(default)]
    pub slice_momentum: Option<f64>,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub scaling: Option<ScalingConfig>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub workers: Option<usize>,
    /// Reserved; every computation is deterministic.
    #[serde(default)]
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.tolerances.validate()?;
        if self.model.is_two_dimensional() && self.band >= band_count(&self.model) {
            return Err(Error::Config(format!("band {} out of range", self.band)));
        }
        if let Some(b) = self.partition {
            Partition { layers: self.model.open_cells(), layer_size: 1, start: b.start, len: b.len, periodic: true }
                .validate()?;
        }
        if let Some(s) = &self.sweep {
            self.model.param(&s.axis)?;
        }
        if self.momenta == Some(0) {
            return Err(Error::Config("momenta must be positive".into()));
        }
        Ok(())
    }

    fn momenta(&self) -> usize {
        self.momenta.unwrap_or(match self.model {
            ModelSpec::Pqghm(_) => 120,
            _ => 96,
        })
    }

    fn cylinder(&self) -> ModelSpec {
        self.cylinder_length.map_or_else(|| self.model.clone(), |n| self.model.with_open_cells(n))
    }

    fn band_window(&self) -> FillingWindow {
        FillingWindow::band(self.band, band_count(&self.model))
    }

    fn chain_partition(&self) -> Option<Partition> {
        self.partition.map(|b| Partition {
            layers: self.model.open_cells(),
            layer_size: self.model.internals(),
            start: b.start,
            len: b.len,
            periodic: self.model.boundary() == Boundary::Periodic,
        })
    }
}

/// Sets `path` (dotted) in a JSON document to `raw`, read as JSON when it
/// parses and as a string otherwise.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{assignment}` is not KEY=VALUE")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = doc;
    let keys: Vec<&str> = path.split('.').collect();
    for (i, key) in keys.iter().enumerate() {
        if key.is_empty() {
            return Err(Error::Config(format!("override path `{path}` has an empty segment")));
        }
        let obj = match node {
            Value::Object(map) => map,
            Value::Null => {
                *node = Value::Object(Default::default());
                node.as_object_mut().expect("just set")
            }
            _ => return Err(Error::Config(format!("override path `{path}` runs through a non-object"))),
        };
        if i + 1 == keys.len() {
            obj.insert((*key).to_string(), value);
            return Ok(());
        }
        node = obj.entry(*key).or_insert(Value::Null);
    }
    Ok(())
}

pub fn load_config(path: &Path, overrides: &[String]) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut doc: Value = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    for o in overrides {
        apply_override(&mut doc, o)?;
    }
    let config: RunConfig = serde_json::from_value(doc).map_err(|e| Error::Config(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

/// A CSV table held in memory until the run succeeds.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(&self.header).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
    }
}

/// Shortest round-trip decimal.
fn num(x: f64) -> String {
    format!("{x}")
}

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map_or_else(String::new, |v| v.to_string())
}

/// Files produced by a run, keyed by file name.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub tables: Vec<(String, Table)>,
    pub summary: Value,
    /// Set when a verifier rejected the data.
    pub failed_verification: bool,
}

pub fn execute(command: Command, config: &RunConfig) -> Result<Outcome> {
    match command {
        Command::Spectrum => spectrum(config),
        Command::Entangle => entangle(config),
        Command::Winding => winding(config),
        Command::Chern => chern(config),
        Command::EdgeCount => edge_count(config),
        Command::Verify => verify(config),
        Command::Sweep => sweep(config),
        Command::Scaling => scaling(config),
        Command::OracleCheck => oracle_check(config),
    }
}

fn side_label(s: &FloquetSpectrum, j: usize, w_min: f64) -> &'static str {
    if s.left_weight[j] >= w_min {
        "left"
    } else if s.right_weight[j] >= w_min {
        "right"
    } else {
        "bulk"
    }
}

fn push_spectrum(table: &mut Table, s: &FloquetSpectrum, k: f64, w_min: f64) {
    let base = table.rows.len();
    for j in 0..s.len() {
        table.rows.push(vec![
            (base + j).to_string(),
            num(k),
            num(s.energies[j]),
            num(s.edge_weight[j]),
            side_label(s, j, w_min).to_string(),
        ]);
    }
}

const SPECTRUM_HEADER: [&str; 5] = ["index", "k_or_param", "E", "edge_weight", "side"];

fn spectrum(config: &RunConfig) -> Result<Outcome> {
    let tol = &config.tolerances;
    let mut table = Table::new(&SPECTRUM_HEADER);
    let (g0, gp) = if config.model.is_two_dimensional() {
        let ks = pipeline::momenta(config.momenta());
        let slices = pipeline::slice_spectra(&config.model, config.model.boundary(), &ks, tol)?;
        for (s, &k) in slices.iter().zip(&ks) {
            push_spectrum(&mut table, s, k, tol.edge_weight);
        }
        pipeline::spectrum_gaps(slices.iter().flat_map(|s| s.energies.iter().copied()))
    } else {
        let s = pipeline::chain_spectrum(&config.model, config.frame, tol)?;
        push_spectrum(&mut table, &s, f64::NAN, tol.edge_weight);
        pipeline::spectrum_gaps(s.energies.iter().copied())
    };
    let summary = json!({ "states": table.rows.len(), "gap_zero": g0, "gap_pi": gp });
    Ok(Outcome { tables: vec![("spectrum.csv".into(), table)], summary, ..Default::default() })
}

fn entanglement_table(report: &entanglement::EntanglementReport) -> Table {
    let mut t = Table::new(&["index", "zeta", "xi", "cut_weight"]);
    for j in 0..report.zeta.len() {
        t.rows.push(vec![j.to_string(), num(report.zeta[j]), num(report.xi[j]), num(report.cut_weight[j])]);
    }
    t
}

fn marker_table(field: &MarkerField) -> Table {
    let mut t = Table::new(&["x", "y", "marker"]);
    for y in 0..field.height {
        for x in 0..field.width {
            t.rows.push(vec![x.to_string(), y.to_string(), num(field.at(x, y))]);
        }
    }
    t
}

fn counts_json(zeta: &[f64]) -> Value {
    Value::Object(
        DELTAS.iter().map(|&d| (format!("{d:e}"), json!(entanglement::count_maximally_entangled(zeta, d)))).collect(),
    )
}

fn entangle(config: &RunConfig) -> Result<Outcome> {
    let tol = &config.tolerances;
    if config.model.is_two_dimensional() {
        let block = config.partition.map(|b| (b.start, b.len));
        let t = pipeline::torus_entanglement(&config.model, config.band_window(), block, tol)?;
        let summary = json!({
            "entropy": t.report.entropy,
            "maximally_entangled": t.report.maximally_entangled,
            "counts": counts_json(&t.report.zeta),
            "chern": t.chern,
            "region": t.region,
        });
        return Ok(Outcome {
            tables: vec![("entanglement.csv".into(), entanglement_table(&t.report)), ("lcm.csv".into(), marker_table(&t.field))],
            summary,
            ..Default::default()
        });
    }
    let e = pipeline::chain_entanglement(
        &config.model,
        config.frame,
        config.filling,
        config.chain_partition(),
        config.route,
        tol,
    )?;
    let summary = json!({
        "entropy": e.report.entropy,
        "maximally_entangled": e.report.maximally_entangled,
        "counts": counts_json(&e.report.zeta),
        "winding": e.winding,
        "ties": e.ties,
        "partition": e.partition,
    });
    Ok(Outcome { tables: vec![("entanglement.csv".into(), entanglement_table(&e.report))], summary, ..Default::default() })
}

fn chain_frames(config: &RunConfig) -> Result<[pipeline::ChainEntanglement; 2]> {
    let periodic = config.model.with_boundary(Boundary::Periodic);
    let run = |frame| {
        pipeline::chain_entanglement(&periodic, frame, config.filling, None, config.route, &config.tolerances)
    };
    Ok([run(TimeFrame::Frame1)?, run(TimeFrame::Frame2)?])
}

fn winding(config: &RunConfig) -> Result<Outcome> {
    if config.model.chiral_operator().is_none() {
        return Err(Error::Config(format!("{} has no chiral frames", config.model.name())));
    }
    let [f1, f2] = chain_frames(config)?;
    let summary = json!({
        "frame1": { "winding": f1.winding, "ties": f1.ties },
        "frame2": { "winding": f2.winding, "ties": f2.ties },
        "edge_exclusion": config.tolerances.edge_exclusion.unwrap_or(f1.partition.len / 4),
    });
    Ok(Outcome { summary, ..Default::default() })
}

fn chern(config: &RunConfig) -> Result<Outcome> {
    if !config.model.is_two_dimensional() {
        return Err(Error::Config("chern needs a 2D model".into()));
    }
    let torus = config.model.with_boundary(Boundary::Periodic);
    let block = config.partition.map(|b| (b.start, b.len));
    let t = pipeline::torus_entanglement(&torus, config.band_window(), block, &config.tolerances)?;
    let c0 = pipeline::bloch_band_chern(&torus, config.band, config.momenta().min(48))?;
    let summary = json!({ "chern": t.chern, "band_chern": c0, "region": t.region, "entropy": t.report.entropy });
    Ok(Outcome { tables: vec![("lcm.csv".into(), marker_table(&t.field))], summary, ..Default::default() })
}

fn edge_count(config: &RunConfig) -> Result<Outcome> {
    let tol = &config.tolerances;
    if config.model.is_two_dimensional() {
        let (up, lo) =
            pipeline::edge_band_flow(&config.cylinder(), config.band, config.momenta(), config.side, tol)?;
        let summary = json!({ "band": config.band, "side": config.side, "upper": up, "lower": lo, "net": up - lo });
        return Ok(Outcome { summary, ..Default::default() });
    }
    let (count, s) = pipeline::edge_counts(&config.model, tol)?;
    let mut table = Table::new(&SPECTRUM_HEADER);
    push_spectrum(&mut table, &s, f64::NAN, tol.edge_weight);
    let summary = json!({ "n0": count.zero, "npi": count.pi, "zero_gapless": count.zero_gapless, "pi_gapless": count.pi_gapless });
    Ok(Outcome { tables: vec![("spectrum.csv".into(), table)], summary, ..Default::default() })
}

fn relations_json(v: &topology::Verdict) -> Value {
    Value::Array(v.relations.iter().map(|(name, ok)| json!({ "relation": name, "pass": ok })).collect())
}

fn verify(config: &RunConfig) -> Result<Outcome> {
    let tol = &config.tolerances;
    let model = &config.model;
    if model.is_two_dimensional() {
        let torus = model.with_boundary(Boundary::Periodic);
        let c0 = pipeline::bloch_band_chern(&torus, config.band, config.momenta().min(48))?;
        let cyl = config.cylinder();
        let nc = pipeline::entanglement_crossings(&cyl, config.band_window(), config.momenta(), config.side, tol)?;
        let t = pipeline::torus_entanglement(&torus, config.band_window(), None, tol)?;
        let flow = pipeline::edge_band_flow(&cyl, config.band, config.momenta(), config.side, tol)?;
        let verdict = topology::verify_chern(c0.value, nc.abs(), t.chern.value, flow);
        let summary = json!({
            "band_chern": c0,
            "es_crossings": nc,
            "chern": t.chern,
            "edge_flow": [flow.0, flow.1],
            "relations": relations_json(&verdict),
            "pass": verdict.passed(),
        });
        return Ok(Outcome { summary, failed_verification: !verdict.passed(), ..Default::default() });
    }
    let (edges, _) = pipeline::edge_counts(model, tol)?;
    let [f1, f2] = chain_frames(config)?;
    let w = |e: &pipeline::ChainEntanglement| {
        e.winding.ok_or_else(|| Error::Config(format!("{} has no chiral frames", model.name())))
    };
    let (w1, w2) = (w(&f1)?, w(&f2)?);
    let counts = ChiralCounts {
        n1: f1.report.maximally_entangled as i64,
        n2: f2.report.maximally_entangled as i64,
        w1: w1.value,
        w2: w2.value,
        n0: edges.zero as i64,
        npi: edges.pi as i64,
    };
    let verdict = match model {
        ModelSpec::Pql(_) => topology::verify_cii(counts),
        _ => topology::verify_bdi(counts),
    };
    let pass = verdict.passed() && w1.quantized && w2.quantized;
    let summary = json!({
        "counts": counts,
        "winding_raw": [w1.raw, w2.raw],
        "quantized": w1.quantized && w2.quantized,
        "relations": relations_json(&verdict),
        "pass": pass,
    });
    Ok(Outcome { summary, failed_verification: !pass, ..Default::default() })
}

fn sweep_table(result: &SweepResult) -> Table {
    let labels: Vec<String> =
        result.records.iter().max_by_key(|r| r.channels.len()).map_or_else(Vec::new, |r| {
            r.channels.iter().map(|c| c.label.clone()).collect()
        });
    let mut header = vec![result.axis.clone(), "gap_zero".into(), "gap_pi".into()];
    for l in &labels {
        header.push(format!("{l}_S"));
        for d in DELTAS {
            header.push(format!("{l}_N_{d:e}"));
        }
        header.push(format!("{l}_W"));
        header.push(format!("{l}_Ch"));
    }
    header.extend(["n0".into(), "npi".into(), "flags".into()]);
    let mut t = Table { header, rows: Vec::new() };
    for r in &result.records {
        let mut row = vec![num(r.value), opt(r.gap_zero.map(num)), opt(r.gap_pi.map(num))];
        for i in 0..labels.len() {
            let c = r.channels.get(i).cloned().unwrap_or_default();
            row.push(opt(c.entropy.map(num)));
            for j in 0..DELTAS.len() {
                row.push(opt(c.counts.map(|n| n[j])));
            }
            row.push(opt(c.winding.map(num)));
            row.push(opt(c.chern.map(num)));
        }
        row.push(opt(r.edge.map(|e| e.0)));
        row.push(opt(r.edge.map(|e| e.1)));
        row.push(r.flags.join("; "));
        t.rows.push(row);
    }
    t
}

fn sweep(config: &RunConfig) -> Result<Outcome> {
    let sc = config.sweep.as_ref().ok_or_else(|| Error::Config("sweep needs a `sweep` section".into()))?;
    let options = SweepOptions {
        tasks: sc.tasks.clone(),
        window: config.filling,
        route: config.route,
        tolerances: config.tolerances,
    };
    let result = analysis::sweep(&config.model, &sc.axis, &sc.grid.values(), &options)?;
    let channels: Vec<Value> = (0..result.records.first().map_or(0, |r| r.channels.len()))
        .map(|c| {
            let s = result.series(c, |ch| ch.entropy);
            let cusps = analysis::detect_cusps(&s, &result.grid, sc.cusp_threshold);
            let n: Vec<Option<usize>> =
                result.records.iter().map(|r| r.channels.get(c).and_then(|ch| ch.counts.map(|n| n[1]))).collect();
            let jumps: Vec<f64> = analysis::discontinuities(&n).into_iter().map(|i| result.grid[i]).collect();
            json!({
                "label": result.records[0].channels[c].label,
                "cusps": cusps,
                "count_jumps_after": jumps,
            })
        })
        .collect();
    let flagged = result.records.iter().filter(|r| !r.flags.is_empty()).count();
    let summary = json!({ "axis": result.axis, "points": result.grid.len(), "flagged_points": flagged, "channels": channels });
    Ok(Outcome { tables: vec![("sweep.csv".into(), sweep_table(&result))], summary, ..Default::default() })
}

fn scaling(config: &RunConfig) -> Result<Outcome> {
    let sc = config.scaling.as_ref().ok_or_else(|| Error::Config("scaling needs a `scaling` section".into()))?;
    let fit = analysis::entropy_scaling(&config.model, &sc.sizes, config.frame, config.filling)?;
    let mut t = Table::new(&["L", "S"]);
    for (l, s) in fit.sizes.iter().zip(&fit.entropies) {
        t.rows.push(vec![l.to_string(), num(*s)]);
    }
    let summary = serde_json::to_value(&fit)?;
    Ok(Outcome { tables: vec![("scaling.csv".into(), t)], summary, ..Default::default() })
}

/// Fillings exercised by `oracle-check`: quasienergy windows opening
/// upward from -pi, and each equal band.
fn oracle_fillings(bands: usize) -> Vec<FillingWindow> {
    let mut out: Vec<FillingWindow> =
        [-2.0, -1.0, 0.0, 1.0, 2.0].iter().map(|&u| FillingWindow::Range { lower: -PI, upper: u }).collect();
    out.extend((0..bands).map(|b| FillingWindow::band(b, bands)));
    out
}

fn oracle_check(config: &RunConfig) -> Result<Outcome> {
    let tol = &config.tolerances;
    let model = &config.model;
    let spectrum = if model.is_two_dimensional() {
        let k = config.slice_momentum.unwrap_or(0.3);
        pipeline::slice_spectra(model, model.boundary(), &[k], tol)?.remove(0)
    } else {
        pipeline::chain_spectrum(model, config.frame, tol)?
    };
    let cells = model.open_cells();
    let m = model.internals();
    let dim = cells * m;
    if dim > entanglement::ORACLE_MAX_MODES {
        return Err(Error::OracleTooLarge { dim, cap: entanglement::ORACLE_MAX_MODES });
    }
    let periodic = model.boundary() == Boundary::Periodic;
    let mut cases = Vec::new();
    for window in oracle_fillings(band_count(model).min(dim)) {
        for start in 0..cells {
            for len in 1..cells - start {
                cases.push((window, Partition { layers: cells, layer_size: m, start, len, periodic }));
            }
        }
    }
    let results: Vec<(f64, f64)> = parallel::map(&cases, |(window, partition)| {
        let (occ, _) = floquet::occupied_indices(&spectrum.energies, *window)?;
        let v = &spectrum.vectors;
        let occupied = faer::Mat::from_fn(dim, occ.len(), |i, j| v[(i, occ[j])]);
        let p = floquet::projector_from_columns(v, &occ);
        let report = entanglement::entanglement_spectrum(&entanglement::correlation_matrix(&p, partition)?, partition, tol.delta)?;
        let oracle = entanglement::manybody_oracle(&occupied, partition)?;
        let predicted = entanglement::fock_spectrum_from_zeta(&report.zeta);
        let es = predicted.iter().zip(&oracle.rho_eigenvalues).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        Ok(((report.entropy - oracle.entropy).abs(), es))
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let ds = results.iter().fold(0.0f64, |a, r| a.max(r.0));
    let des = results.iter().fold(0.0f64, |a, r| a.max(r.1));
    let pass = ds < 1e-10 && des < 1e-10;
    let summary = json!({ "cases": cases.len(), "max_entropy_error": ds, "max_spectrum_error": des, "pass": pass });
    if !pass {
        log::error!("correlation-matrix entanglement disagrees with the Fock-space oracle: dS = {ds:e}, dES = {des:e}");
    }
    Ok(Outcome { summary, failed_verification: !pass, ..Default::default() })
}

fn write_outputs(dir: &Path, command: Command, config: &RunConfig, outcome: &Outcome) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, table) in &outcome.tables {
        std::fs::write(dir.join(name), table.to_csv()?)?;
    }
    let summary = json!({
        "command": command,
        "model": config.model,
        "result": outcome.summary,
    });
    let mut text = serde_json::to_string_pretty(&summary)?;
    text.push('\n');
    std::fs::write(dir.join("summary.json"), text)?;
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    if e.is_numerical() { EXIT_NUMERICAL } else { EXIT_CONFIG }
}

/// Runs one command end to end and maps the outcome to an exit code.
pub fn run(cli: &Cli) -> ExitCode {
    let config = match load_config(&cli.common.config, &cli.common.overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let workers = cli.common.workers.or(config.workers).unwrap_or(0);
    let outcome = parallel::with_workers(workers, || execute(cli.command, &config));
    let outcome = match outcome {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    let dir = cli.common.out.clone().or_else(|| config.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
    if let Err(e) = write_outputs(&dir, cli.command, &config, &outcome) {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_CONFIG);
    }
    if outcome.failed_verification {
        eprintln!("verification failed; see {}", dir.join("summary.json").display());
        return ExitCode::from(if cli.command == Command::OracleCheck { EXIT_NUMERICAL } else { EXIT_VERIFY });
    }
    ExitCode::SUCCESS
}
