//! Experiment configuration: the JSON document schema, defaulting, and
//! resolution into validated run settings.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::ansatz::AnsatzKind;
use crate::circuit::CircuitSpec;
use crate::error::{Error, Result};
use crate::estimator::{EstimationMethod, ShotPlan};
use crate::lattice::Lattice;
use crate::regularize::RegScheme;
use crate::state::BitString;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LatticeConfig {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cols: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelConfig {
    pub jz: f64,
    pub h: f64,
    pub gamma: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EvolveConfig {
    pub dt: f64,
    pub t_final: f64,
}

/// Basis selection: the named scheme or an explicit bitstring list.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BasisField {
    Named(String),
    Explicit(Vec<String>),
}

impl Default for BasisField {
    fn default() -> Self {
        BasisField::Named("hamming".into())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AnsatzConfig {
    pub kind: String,
    pub rank: usize,
    pub layers: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub basis: BasisField,
    /// seed bitstring; defaults to all ones (the all-spin-down configuration)
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<String>,
}

fn default_epsilon() -> f64 {
    1e-4
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct RegularizationConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BackendConfig {
    #[serde(default = "default_mode")]
    pub mode: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(default = "default_shots")]
    pub shots: u64,
    #[serde(default)]
    pub seed: u64,
}

fn default_mode() -> String {
    "exact".into()
}

fn default_shots() -> u64 {
    20000
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            mode: default_mode(),
            method: None,
            shots: default_shots(),
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OracleConfig {
    #[serde(default)]
    pub enabled: bool,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { enabled: true }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OutputConfig {
    pub path: String,
    #[serde(default = "default_stride")]
    pub stride: usize,
}

fn default_stride() -> usize {
    1
}

/// Comparison-study descriptor; exactly one axis may be set.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct SweepConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layers: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

/// The experiment document as read from JSON.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub lattice: LatticeConfig,
    pub model: ModelConfig,
    pub evolve: EvolveConfig,
    pub ansatz: AnsatzConfig,
    #[serde(default)]
    pub regularization: RegularizationConfig,
    #[serde(default)]
    pub backend: BackendConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("{e}")))?;
        Ok(cfg)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Resolve and validate into concrete run settings.
    pub fn resolve(&self) -> Result<RunConfig> {
        RunConfig::from_experiment(self)
    }
}

/// Expectation-value backend selection.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BackendMode {
    Exact,
    Shots(ShotPlan),
}

/// Fully validated run settings.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub lattice: Lattice,
    pub jz: f64,
    pub h: f64,
    pub gamma: f64,
    pub dt: f64,
    pub t_final: f64,
    pub kind: AnsatzKind,
    pub rank: usize,
    pub layers: usize,
    pub epsilon: f64,
    pub basis: Option<Vec<BitString>>,
    pub initial: BitString,
    pub reg: RegScheme,
    pub backend: BackendMode,
    pub oracle_enabled: bool,
    pub stride: usize,
    /// keep full per-step solver records in memory (needed for the posterior
    /// bound recomputation; disable for long large runs)
    pub record_steps: bool,
}

impl RunConfig {
    pub fn from_experiment(cfg: &ExperimentConfig) -> Result<Self> {
        let lattice = match cfg.lattice.kind.as_str() {
            "chain" => {
                let len = cfg
                    .lattice
                    .length
                    .ok_or_else(|| Error::Config("lattice.length required for kind \"chain\"".into()))?;
                Lattice::chain(len)?
            }
            "grid" => {
                let rows = cfg
                    .lattice
                    .rows
                    .ok_or_else(|| Error::Config("lattice.rows required for kind \"grid\"".into()))?;
                let cols = cfg
                    .lattice
                    .cols
                    .ok_or_else(|| Error::Config("lattice.cols required for kind \"grid\"".into()))?;
                Lattice::grid(rows, cols)?
            }
            other => {
                return Err(Error::Config(format!(
                    "lattice.kind must be \"chain\" or \"grid\", got \"{other}\""
                )))
            }
        };
        let n = lattice.n();

        if cfg.model.gamma < 0.0 {
            return Err(Error::Config("model.gamma must be nonnegative".into()));
        }
        if cfg.evolve.dt <= 0.0 || cfg.evolve.dt.is_nan() {
            return Err(Error::Config("evolve.dt must be positive".into()));
        }
        if cfg.evolve.t_final < 0.0 {
            return Err(Error::Config("evolve.t_final must be nonnegative".into()));
        }

        let kind = match cfg.ansatz.kind.as_str() {
            "I" => AnsatzKind::I,
            "II" => AnsatzKind::II,
            other => {
                return Err(Error::Config(format!(
                    "ansatz.kind must be \"I\" or \"II\", got \"{other}\""
                )))
            }
        };
        if cfg.ansatz.rank == 0 || cfg.ansatz.rank > 1 << n {
            return Err(Error::Config(format!(
                "ansatz.rank must be in 1..=2^{n}, got {}",
                cfg.ansatz.rank
            )));
        }
        if cfg.ansatz.layers == 0 {
            return Err(Error::Config("ansatz.layers must be >= 1".into()));
        }

        let initial = match &cfg.ansatz.initial {
            Some(text) => {
                let b = BitString::parse(text)
                    .map_err(|e| Error::Config(format!("ansatz.initial: {e}")))?;
                if b.n() != n {
                    return Err(Error::Config(format!(
                        "ansatz.initial has {} sites, lattice has {n}",
                        b.n()
                    )));
                }
                b
            }
            None => BitString::ones(n),
        };

        let basis = match &cfg.ansatz.basis {
            BasisField::Named(name) if name == "hamming" => None,
            BasisField::Named(other) => {
                return Err(Error::Config(format!(
                    "ansatz.basis must be \"hamming\" or a bitstring list, got \"{other}\""
                )))
            }
            BasisField::Explicit(labels) => {
                let mut parsed = Vec::with_capacity(labels.len());
                for label in labels {
                    let b = BitString::parse(label)
                        .map_err(|e| Error::Config(format!("ansatz.basis entry \"{label}\": {e}")))?;
                    if b.n() != n {
                        return Err(Error::Config(format!(
                            "ansatz.basis entry \"{label}\" has {} sites, lattice has {n}",
                            b.n()
                        )));
                    }
                    parsed.push(b);
                }
                if parsed.len() != cfg.ansatz.rank {
                    return Err(Error::Config(format!(
                        "ansatz.basis lists {} states but ansatz.rank is {}",
                        parsed.len(),
                        cfg.ansatz.rank
                    )));
                }
                Some(parsed)
            }
        };

        let backend = match cfg.backend.mode.as_str() {
            "exact" => BackendMode::Exact,
            "shots" => {
                if cfg.backend.shots == 0 {
                    return Err(Error::Config("backend.shots must be positive".into()));
                }
                let method = match cfg.backend.method.as_deref() {
                    None | Some("hybrid") => EstimationMethod::Hybrid,
                    Some("hadamard") => EstimationMethod::Hadamard,
                    Some("ancilla_free") => EstimationMethod::AncillaFree,
                    Some(other) => {
                        return Err(Error::Config(format!(
                            "backend.method must be hadamard|ancilla_free|hybrid, got \"{other}\""
                        )))
                    }
                };
                BackendMode::Shots(ShotPlan {
                    method,
                    shots: cfg.backend.shots,
                    seed: cfg.backend.seed,
                })
            }
            other => {
                return Err(Error::Config(format!(
                    "backend.mode must be \"exact\" or \"shots\", got \"{other}\""
                )))
            }
        };

        let reg = resolve_regularization(&cfg.regularization, kind, &backend)?;
        reg.validate()?;

        let stride = cfg.output.as_ref().map(|o| o.stride).unwrap_or(1);
        if stride == 0 {
            return Err(Error::Config("output.stride must be >= 1".into()));
        }

        Ok(RunConfig {
            lattice,
            jz: cfg.model.jz,
            h: cfg.model.h,
            gamma: cfg.model.gamma,
            dt: cfg.evolve.dt,
            t_final: cfg.evolve.t_final,
            kind,
            rank: cfg.ansatz.rank,
            layers: cfg.ansatz.layers,
            epsilon: cfg.ansatz.epsilon,
            basis,
            initial,
            reg,
            backend,
            oracle_enabled: cfg.oracle.enabled,
            stride,
            record_steps: true,
        })
    }

    pub fn circuit(&self) -> Result<Arc<CircuitSpec>> {
        Ok(Arc::new(CircuitSpec::layered_tfim(&self.lattice, self.layers)?))
    }
}

/// Scheme defaults: eigenvalue rescaling for the shared-rotation ansatz,
/// truncation for per-component rotations, diagonal shift under shot noise.
fn resolve_regularization(
    raw: &RegularizationConfig,
    kind: AnsatzKind,
    backend: &BackendMode,
) -> Result<RegScheme> {
    let default_scheme = match backend {
        BackendMode::Shots(_) => "diagonal_shift",
        BackendMode::Exact => match kind {
            AnsatzKind::I => "eigen_rescale",
            AnsatzKind::II => "eigen_truncate",
        },
    };
    let scheme = raw.scheme.as_deref().unwrap_or(default_scheme);
    match scheme {
        "eigen_rescale" => Ok(RegScheme::EigenRescale {
            a_c: raw.a_c.unwrap_or(1e-4),
            r_c: raw.r_c.unwrap_or(1e-4),
        }),
        "eigen_truncate" => Ok(RegScheme::EigenTruncate {
            delta_c: raw.delta_c.unwrap_or(1e-9),
        }),
        "diagonal_shift" => Ok(RegScheme::DiagonalShift {
            lambda: raw.lambda.unwrap_or(0.04),
            order: raw.order.unwrap_or(2),
        }),
        other => Err(Error::Config(format!(
            "regularization.scheme must be eigen_rescale|eigen_truncate|diagonal_shift, got \"{other}\""
        ))),
    }
}

/// Copy of the document with every default filled in, for the run manifest.
pub fn resolved_document(cfg: &ExperimentConfig) -> Result<ExperimentConfig> {
    let run = cfg.resolve()?;
    let mut out = cfg.clone();
    out.ansatz.initial = Some(run.initial.to_string());
    out.regularization = match run.reg {
        RegScheme::EigenRescale { a_c, r_c } => RegularizationConfig {
            scheme: Some("eigen_rescale".into()),
            a_c: Some(a_c),
            r_c: Some(r_c),
            ..Default::default()
        },
        RegScheme::EigenTruncate { delta_c } => RegularizationConfig {
            scheme: Some("eigen_truncate".into()),
            delta_c: Some(delta_c),
            ..Default::default()
        },
        RegScheme::DiagonalShift { lambda, order } => RegularizationConfig {
            scheme: Some("diagonal_shift".into()),
            lambda: Some(lambda),
            order: Some(order),
            ..Default::default()
        },
    };
    if let BackendMode::Shots(plan) = run.backend {
        out.backend.method = Some(
            match plan.method {
                EstimationMethod::Hadamard => "hadamard",
                EstimationMethod::AncillaFree => "ancilla_free",
                EstimationMethod::Hybrid => "hybrid",
            }
            .into(),
        );
    }
    Ok(out)
}

/// Hash of the semantically meaningful resolved settings (the output path is
/// excluded; it does not affect results).
pub fn config_hash(cfg: &ExperimentConfig) -> Result<u64> {
    let mut resolved = resolved_document(cfg)?;
    if let Some(output) = &mut resolved.output {
        output.path = String::new();
    }
    let canonical = serde_json::to_string(&resolved)?;
    let mut h: u64 = 0xcbf29ce484222325;
    for b in canonical.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    Ok(h)
}
