//! Grids of estimates: depth, subsystem position, register size, and the
//! Gram-matrix concentration study.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ansatz::{AlaSpec, BlockKind, CircuitSpec};
use crate::kernels::{encode_dataset, gram_from_states, KernelKind};
use crate::qstate::{prepare_initial, InitialState};
use crate::rng::{self, tags};
use crate::{Error, Result};

use super::config::EstimateConfig;
use super::ensemble::{dataset, estimate_kernel_stats, parameters};
use super::report::{EstimateReport, ReportRow};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    /// Grid values are depths.
    Depth,
    /// Grid values are the (0-based) qubit of a single-qubit subsystem.
    Position,
    /// Grid values are register sizes; the subsystem is qubit `ceil(n/2) - 1`.
    Qubits,
    /// Gram-matrix concentration; see [`gram_study`].
    Gram,
}

impl SweepKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepKind::Depth => "depth",
            SweepKind::Position => "position",
            SweepKind::Qubits => "qubits",
            SweepKind::Gram => "gram",
        }
    }
}

impl FromStr for SweepKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "depth" => Ok(SweepKind::Depth),
            "position" => Ok(SweepKind::Position),
            "qubits" => Ok(SweepKind::Qubits),
            "gram" => Ok(SweepKind::Gram),
            other => Err(Error::InvalidConfig(format!("unknown sweep kind {other:?}"))),
        }
    }
}

/// One grid point: the report, or the reason it could not be produced.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub kind: SweepKind,
    pub value: usize,
    pub report: std::result::Result<EstimateReport, String>,
    pub row: ReportRow,
}

fn point_config(kind: SweepKind, value: usize, base: &EstimateConfig) -> Result<EstimateConfig> {
    let mut cfg = base.clone();
    match kind {
        SweepKind::Depth => match base.circuit {
            CircuitSpec::Ala(a) => cfg.circuit = a.with_layers(value)?.into(),
            CircuitSpec::Global { .. } => {
                return Err(Error::InvalidConfig("a global circuit has no depth to sweep".into()))
            }
        },
        SweepKind::Position => cfg.kappa = vec![value],
        SweepKind::Qubits => {
            if value == 0 {
                return Err(Error::InvalidQubitCount(0));
            }
            cfg.circuit = match base.circuit {
                CircuitSpec::Ala(a) => AlaSpec::new(value, a.m(), a.layers(), a.kind())?.into(),
                CircuitSpec::Global { .. } => CircuitSpec::Global { n: value },
            };
            cfg.kappa = vec![value.div_ceil(2) - 1];
        }
        SweepKind::Gram => return Err(Error::InvalidConfig("use gram_study for Gram sweeps".into())),
    }
    Ok(cfg)
}

/// Runs `base` at every grid value for every initial state. Invalid grid
/// points become error rows; the sweep itself fails only on an empty grid.
pub fn sweep(kind: SweepKind, values: &[usize], inits: &[InitialState], base: &EstimateConfig) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::InvalidConfig("empty sweep grid".into()));
    }
    if inits.is_empty() {
        return Err(Error::InvalidConfig("no initial states to sweep".into()));
    }
    if kind == SweepKind::Gram {
        return Err(Error::InvalidConfig("use gram_study for Gram sweeps".into()));
    }
    let mut rows = Vec::with_capacity(values.len() * inits.len());
    for init in inits {
        for &value in values {
            let base = base.clone().with_init(init.clone());
            let outcome = point_config(kind, value, &base).and_then(|cfg| estimate_kernel_stats(&cfg));
            let (report, row) = match outcome {
                Ok(r) => {
                    let row = r.row();
                    (Ok(r), row)
                }
                Err(e) => {
                    let mut row = ReportRow::from_config(&point_config(kind, value, &base).unwrap_or(base.clone()));
                    row.error = e.to_string();
                    (Err(e.to_string()), row)
                }
            };
            rows.push(SweepRow { kind, value, report, row });
        }
    }
    Ok(rows)
}

fn default_points() -> usize {
    100
}

fn default_replicates() -> usize {
    5
}

/// Gram matrices of the single-subsystem projected kernel over random data
/// for each register size and initial state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GramStudyConfig {
    pub qubits: Vec<usize>,
    pub layers: usize,
    #[serde(default = "default_points")]
    pub points: usize,
    pub inits: Vec<InitialState>,
    /// Subsystem qubit; defaults to `ceil(n/2) - 1`.
    #[serde(default)]
    pub kappa: Option<usize>,
    /// Haar-random initial states per register size.
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
}

/// Concentration summary of one Gram matrix.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GramRow {
    pub seed: u64,
    pub n: usize,
    #[serde(rename = "L")]
    pub layers: usize,
    pub kappa: usize,
    pub init: String,
    pub replicate: usize,
    pub points: usize,
    pub off_mean: Option<f64>,
    pub off_std: Option<f64>,
    pub off_std_se: Option<f64>,
    pub min_eig: Option<f64>,
    pub error: String,
}

fn gram_row(cfg: &GramStudyConfig, n: usize, init: &InitialState, replicate: usize) -> Result<GramRow> {
    let spec = AlaSpec::new(n, 2, cfg.layers, BlockKind::Reupload)?;
    let kappa = gram_row_base(cfg, n, init, replicate).kappa;
    let state = prepare_initial(init, n, rng::child_seed(cfg.seed, tags::REPLICATE, replicate as u64))?;
    let data = dataset(cfg.seed, 0, cfg.points, n);
    let theta = parameters(cfg.seed, 0, spec.parameter_count());
    let states = encode_dataset(spec, &data, &theta, &state)?;
    let g = gram_from_states(&states, &KernelKind::PerKappa { kappa: vec![kappa] })?;
    let off = g.off_diagonal_stats()?;
    Ok(GramRow {
        off_mean: Some(off.mean),
        off_std: Some(off.std.value),
        off_std_se: Some(off.std.se),
        min_eig: Some(g.min_eigenvalue()),
        ..gram_row_base(cfg, n, init, replicate)
    })
}

fn gram_row_base(cfg: &GramStudyConfig, n: usize, init: &InitialState, replicate: usize) -> GramRow {
    GramRow {
        seed: cfg.seed,
        n,
        layers: cfg.layers,
        kappa: cfg.kappa.unwrap_or(n.div_ceil(2).max(1) - 1),
        init: init.label().into(),
        replicate,
        points: cfg.points,
        ..GramRow::default()
    }
}

/// One row per (register size, initial state, replicate); Haar-random
/// initial states get `replicates` rows, the others one.
pub fn gram_study(cfg: &GramStudyConfig) -> Result<Vec<GramRow>> {
    if cfg.qubits.is_empty() || cfg.inits.is_empty() {
        return Err(Error::InvalidConfig("empty Gram study grid".into()));
    }
    if cfg.points < 4 {
        return Err(Error::InvalidConfig(format!("need at least 4 points, got {}", cfg.points)));
    }
    let mut rows = Vec::new();
    for &n in &cfg.qubits {
        for init in &cfg.inits {
            let reps = if matches!(init, InitialState::HaarRandom) { cfg.replicates.max(1) } else { 1 };
            for r in 0..reps {
                rows.push(gram_row(cfg, n, init, r).unwrap_or_else(|e| GramRow {
                    error: e.to_string(),
                    ..gram_row_base(cfg, n, init, r)
                }));
            }
        }
    }
    Ok(rows)
}
