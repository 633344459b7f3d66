//! Experiment drivers: single runs, parameter sweeps, the circuit-count
//! table, and the oracle-only trajectory, each emitting machine-readable
//! artifacts (CSV time series, JSON manifest, plain-text run log).

use std::fs::{self, File};
use std::io::{BufWriter, Write as IoWrite};
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::ansatz::{AnsatzKind, LowRankState};
use crate::config::{
    config_hash, resolved_document, BackendMode, ExperimentConfig, RunConfig, SweepConfig,
};
use crate::error::{Error, Result};
use crate::estimator::{block_class, count_circuits};
use crate::evolve::{evolve, EvolveObserver, EvolveOutput, StepDiag, TimeRecord, TimeSeries};
use crate::lindblad::build_tfim;
use crate::metrics::{bures_integrated_from_fidelities, observables_dense, purity_dense};
use crate::oracle::{integrate_exact, DensityMatrix};
use crate::state::{basis_ket, BitString};

/// Fixed time-series schema: header prefix, then one `alpha_i` column per
/// mixture weight. Numbers print with 17 significant digits so they
/// round-trip; unavailable fields stay empty.
const CSV_PREFIX: &[&str] = &[
    "t", "s_x", "s_z", "trace", "purity", "infidelity", "l2", "ep", "min_eig", "max_eig",
    "residual", "stalled",
];

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt).unwrap_or_default()
}

fn csv_header(rank: usize) -> String {
    let mut cols: Vec<String> = CSV_PREFIX.iter().map(|s| s.to_string()).collect();
    for p in 0..rank {
        cols.push(format!("alpha_{p}"));
    }
    cols.join(",")
}

fn csv_row(record: &TimeRecord) -> String {
    let mut cols = vec![
        fmt(record.t),
        fmt(record.s_x),
        fmt(record.s_z),
        fmt(record.trace),
        fmt(record.purity),
        fmt_opt(record.infidelity),
        fmt_opt(record.l2),
        fmt_opt(record.ep),
    ];
    match &record.diag {
        Some(d) => {
            cols.push(fmt(d.min_eig));
            cols.push(fmt(d.max_eig));
            cols.push(fmt(d.residual));
            cols.push(if d.stalled { "1" } else { "0" }.into());
        }
        None => cols.extend(std::iter::repeat_n(String::new(), 4)),
    }
    for a in &record.alpha {
        cols.push(fmt(*a));
    }
    cols.join(",")
}

/// Streams rows and log lines to disk as the run progresses, so a crashed
/// run leaves a usable partial CSV behind.
struct ArtifactWriter {
    csv: BufWriter<File>,
    log: BufWriter<File>,
}

impl ArtifactWriter {
    fn new(dir: &Path, rank: usize) -> Result<Self> {
        fs::create_dir_all(dir)?;
        let mut csv = BufWriter::new(File::create(dir.join("timeseries.csv"))?);
        writeln!(csv, "{}", csv_header(rank))?;
        csv.flush()?;
        let log = BufWriter::new(File::create(dir.join("run.log"))?);
        Ok(Self { csv, log })
    }
}

impl EvolveObserver for ArtifactWriter {
    fn on_step(&mut self, step: usize, t: f64, diag: &StepDiag, state: &LowRankState) {
        let _ = writeln!(
            self.log,
            "step={step} t={t:.6} min_eig={:.6e} max_eig={:.6e} residual={:.6e} trace={:.12} stalled={}",
            diag.min_eig,
            diag.max_eig,
            diag.residual,
            crate::ansatz::state_trace(state),
            diag.stalled
        );
        let _ = self.log.flush();
    }

    fn on_record(&mut self, record: &TimeRecord) -> Result<()> {
        writeln!(self.csv, "{}", csv_row(record))?;
        self.csv.flush()?;
        Ok(())
    }
}

#[derive(serde::Serialize)]
struct Manifest {
    resolved_config: ExperimentConfig,
    config_hash: String,
    seed: u64,
    version: String,
    wall_clock_seconds: f64,
    completed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    basis: Vec<String>,
    basis_complement: Vec<String>,
}

fn write_manifest(
    dir: &Path,
    cfg: &ExperimentConfig,
    basis: &[BitString],
    seed: u64,
    started: Instant,
    error: Option<String>,
) -> Result<()> {
    let manifest = Manifest {
        resolved_config: resolved_document(cfg)?,
        config_hash: format!("{:016x}", config_hash(cfg)?),
        seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        completed: error.is_none(),
        error,
        basis: basis.iter().map(|b| b.to_string()).collect(),
        basis_complement: basis.iter().map(|b| b.complement().to_string()).collect(),
    };
    let file = File::create(dir.join("manifest.json"))?;
    serde_json::to_writer_pretty(BufWriter::new(file), &manifest)?;
    Ok(())
}

fn resolved_basis(run: &RunConfig) -> Result<Vec<BitString>> {
    match &run.basis {
        Some(explicit) => Ok(explicit.clone()),
        None => crate::ansatz::hamming_basis(
            &run.initial,
            run.rank,
            &(0..run.lattice.n()).collect::<Vec<_>>(),
        ),
    }
}

/// Artifacts and in-memory results of one finished run.
pub struct RunArtifacts {
    pub dir: PathBuf,
    pub output: EvolveOutput,
}

/// Execute one configured run, writing `timeseries.csv`, `manifest.json`, and
/// `run.log` under the output path. On failure the partial CSV is already on
/// disk and the manifest carries the error record.
pub fn run_experiment(cfg: &ExperimentConfig, dir_override: Option<&Path>) -> Result<RunArtifacts> {
    let run = cfg.resolve()?;
    let dir: PathBuf = match dir_override {
        Some(d) => d.to_path_buf(),
        None => PathBuf::from(
            &cfg.output
                .as_ref()
                .ok_or_else(|| Error::Config("output.path is required".into()))?
                .path,
        ),
    };
    let basis = resolved_basis(&run)?;
    let seed = match run.backend {
        BackendMode::Shots(plan) => plan.seed,
        BackendMode::Exact => 0,
    };
    let started = Instant::now();
    let mut writer = ArtifactWriter::new(&dir, run.rank)?;
    match evolve(&run, &mut [&mut writer]) {
        Ok(output) => {
            write_manifest(&dir, cfg, &basis, seed, started, None)?;
            Ok(RunArtifacts { dir, output })
        }
        Err(e) => {
            write_manifest(&dir, cfg, &basis, seed, started, Some(e.to_string()))?;
            Err(e)
        }
    }
}

/// Print the stored basis labels, optionally in the complementary bit
/// convention, to the given sink.
pub fn print_basis_labels(run: &RunConfig, flipped: bool, out: &mut dyn IoWrite) -> Result<()> {
    let basis = resolved_basis(run)?;
    for b in &basis {
        if flipped {
            writeln!(out, "{} (complement of {})", b.complement(), b)?;
        } else {
            writeln!(out, "{b}")?;
        }
    }
    Ok(())
}

/// Summary metrics of one sweep point, taken from its recorded series.
#[derive(Clone, Debug)]
pub struct SweepRow {
    pub label: String,
    pub value: Option<f64>,
    pub bures_integrated: Option<f64>,
    pub integrated_infidelity: Option<f64>,
    pub peak_infidelity: Option<f64>,
    pub completed: bool,
}

fn series_summary(series: &TimeSeries) -> (Option<f64>, Option<f64>, Option<f64>) {
    let times = series.times();
    let fidelities: Option<Vec<f64>> = series
        .records
        .iter()
        .map(|r| r.infidelity.map(|i| 1.0 - i))
        .collect();
    match fidelities {
        Some(f) if f.len() >= 2 => {
            let ib = bures_integrated_from_fidelities(&times, &f).ok();
            let span = times[times.len() - 1] - times[0];
            let mut integral = 0.0;
            for i in 0..f.len() - 1 {
                integral +=
                    0.5 * ((1.0 - f[i]) + (1.0 - f[i + 1])) * (times[i + 1] - times[i]);
            }
            let peak = f.iter().map(|x| 1.0 - x).fold(0.0f64, f64::max);
            (ib, Some(integral / span), Some(peak))
        }
        _ => (None, None, None),
    }
}

/// Run every sweep point, writing each under `<output>/<label>/` plus a
/// `summary.csv`. Per-point failures are recorded and the sweep continues.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    let sweep = cfg
        .sweep
        .clone()
        .ok_or_else(|| Error::Config("sweep descriptor missing".into()))?;
    let base = PathBuf::from(
        &cfg.output
            .as_ref()
            .ok_or_else(|| Error::Config("output.path is required".into()))?
            .path,
    );
    let points = sweep_points(cfg, &sweep)?;
    if !cfg.oracle.enabled {
        return Err(Error::Config(
            "sweep summaries compare against the oracle; oracle.enabled must be true".into(),
        ));
    }

    let mut rows = Vec::with_capacity(points.len());
    for (label, value, point_cfg) in points {
        let dir = base.join(&label);
        match run_experiment(&point_cfg, Some(&dir)) {
            Ok(artifacts) => {
                let (ib, int_inf, peak) = series_summary(&artifacts.output.series);
                rows.push(SweepRow {
                    label,
                    value,
                    bures_integrated: ib,
                    integrated_infidelity: int_inf,
                    peak_infidelity: peak,
                    completed: true,
                });
            }
            Err(e) => {
                eprintln!("sweep point {label} failed: {e}");
                rows.push(SweepRow {
                    label,
                    value,
                    bures_integrated: None,
                    integrated_infidelity: None,
                    peak_infidelity: None,
                    completed: false,
                });
            }
        }
    }

    fs::create_dir_all(&base)?;
    let mut summary = BufWriter::new(File::create(base.join("summary.csv"))?);
    writeln!(
        summary,
        "label,value,bures_integrated,integrated_infidelity,peak_infidelity,completed"
    )?;
    for row in &rows {
        writeln!(
            summary,
            "{},{},{},{},{},{}",
            row.label,
            row.value.map(fmt).unwrap_or_default(),
            fmt_opt(row.bures_integrated),
            fmt_opt(row.integrated_infidelity),
            fmt_opt(row.peak_infidelity),
            if row.completed { 1 } else { 0 }
        )?;
    }
    summary.flush()?;
    Ok(rows)
}

type SweepPoint = (String, Option<f64>, ExperimentConfig);

fn sweep_points(cfg: &ExperimentConfig, sweep: &SweepConfig) -> Result<Vec<SweepPoint>> {
    let axes = [
        sweep.rank.is_some(),
        sweep.layers.is_some(),
        sweep.basis.is_some(),
    ]
    .iter()
    .filter(|&&x| x)
    .count();
    if axes != 1 {
        return Err(Error::Config(
            "sweep must set exactly one of rank, layers, basis".into(),
        ));
    }
    let mut points = Vec::new();
    if let Some(ranks) = &sweep.rank {
        if ranks.is_empty() {
            return Err(Error::Config("sweep.rank must be non-empty".into()));
        }
        for &r in ranks {
            let mut point = cfg.clone();
            point.ansatz.rank = r;
            point.sweep = None;
            points.push((format!("rank={r}"), Some(r as f64), point));
        }
    } else if let Some(layer_counts) = &sweep.layers {
        if layer_counts.is_empty() {
            return Err(Error::Config("sweep.layers must be non-empty".into()));
        }
        for &l in layer_counts {
            let mut point = cfg.clone();
            point.ansatz.layers = l;
            point.sweep = None;
            points.push((format!("layers={l}"), Some(l as f64), point));
        }
    } else if let Some(bases) = &sweep.basis {
        if bases.is_empty() {
            return Err(Error::Config("sweep.basis must be non-empty".into()));
        }
        for (i, basis) in bases.iter().enumerate() {
            let label = sweep
                .labels
                .as_ref()
                .and_then(|ls| ls.get(i).cloned())
                .unwrap_or_else(|| format!("basis_{}", (b'A' + (i % 26) as u8) as char));
            let mut point = cfg.clone();
            point.ansatz.basis = crate::config::BasisField::Explicit(basis.clone());
            point.ansatz.rank = basis.len();
            point.sweep = None;
            points.push((label, None, point));
        }
    }
    Ok(points)
}

/// Formatted circuit-count table for the cost subcommand.
pub fn cost_table(kind: AnsatzKind, rank: u64, n_theta: u64, l: u64) -> String {
    let counts = count_circuits(kind, rank, n_theta, l);
    let mut out = String::new();
    out.push_str(&format!(
        "ansatz {:?}: rank={rank} n_theta={n_theta} channels={l}\n",
        kind
    ));
    let rows = [
        ("M_alpha_alpha", counts.m_alpha_alpha, "m_alpha_alpha"),
        ("M_alpha_theta", counts.m_alpha_theta, "m_alpha_theta"),
        ("M_theta_theta", counts.m_theta_theta, "m_theta_theta"),
        ("V_alpha", counts.v_alpha, "v_alpha"),
        ("V_theta", counts.v_theta, "v_theta"),
    ];
    for (name, count, key) in rows {
        out.push_str(&format!(
            "{name:<14} {count:>12}   {}\n",
            block_class(kind, key)
        ));
    }
    out.push_str(&format!(
        "M total        {:>12}   {}\n",
        counts.m_alpha_alpha + counts.m_alpha_theta + counts.m_theta_theta,
        block_class(kind, "m_total")
    ));
    out.push_str(&format!(
        "V total        {:>12}   {}\n",
        counts.v_alpha + counts.v_theta,
        block_class(kind, "v_total")
    ));
    out.push_str(&format!("total          {:>12}\n", counts.total()));
    out
}

/// Integrate the exact trajectory only and write its CSV + manifest.
pub fn run_oracle(cfg: &ExperimentConfig, dir_override: Option<&Path>) -> Result<PathBuf> {
    let run = cfg.resolve()?;
    let dir: PathBuf = match dir_override {
        Some(d) => d.to_path_buf(),
        None => PathBuf::from(
            &cfg.output
                .as_ref()
                .ok_or_else(|| Error::Config("output.path is required".into()))?
                .path,
        ),
    };
    fs::create_dir_all(&dir)?;
    let model = build_tfim(&run.lattice, run.jz, run.h, run.gamma)?;
    let rho0 = DensityMatrix::from_pure(&basis_ket(&run.initial))?;
    let started = Instant::now();
    let trajectory = integrate_exact(&model, &rho0, run.dt, run.t_final)?;
    let mut csv = BufWriter::new(File::create(dir.join("oracle.csv"))?);
    writeln!(csv, "t,s_x,s_z,trace,purity")?;
    for (i, rho) in trajectory.iter().enumerate() {
        if i % run.stride != 0 && i != trajectory.len() - 1 {
            continue;
        }
        let (sx, sz) = observables_dense(rho)?;
        writeln!(
            csv,
            "{},{},{},{},{}",
            fmt(i as f64 * run.dt),
            fmt(sx),
            fmt(sz),
            fmt(rho.trace()),
            fmt(purity_dense(rho)?)
        )?;
    }
    csv.flush()?;
    let basis = resolved_basis(&run)?;
    write_manifest(&dir, cfg, &basis, 0, started, None)?;
    Ok(dir)
}
