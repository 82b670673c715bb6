use serde::{Deserialize, Serialize};

use crate::ansatz::{final_block, BlockKind, CircuitSpec};
use crate::qstate::{InitialState, SubsystemMask};
use crate::{Error, Result};

/// How kernel values are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum SamplingMode {
    /// Independent pairs of Haar-block circuits `(U, U')` applied to one
    /// initial state.
    HaarEnsemble { pairs: usize },
    /// Re-upload circuits: every unordered pair of distinct points in each
    /// (dataset, parameter set) cell.
    DataEnsemble {
        #[serde(default = "default_five")]
        datasets: usize,
        #[serde(default = "default_points")]
        points: usize,
        #[serde(default = "default_five")]
        parameter_sets: usize,
    },
}

/// How the cells of a data ensemble are combined.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    /// One mean and variance over every pair from every cell.
    #[default]
    Pooled,
    /// Mean over cells of the per-cell mean and variance.
    PerCellMean,
}

impl Pooling {
    pub fn as_str(&self) -> &'static str {
        match self {
            Pooling::Pooled => "pooled",
            Pooling::PerCellMean => "per_cell_mean",
        }
    }
}

fn default_five() -> usize {
    5
}

fn default_points() -> usize {
    50
}

fn default_init() -> InitialState {
    InitialState::AllZero
}

/// One kernel-statistics experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateConfig {
    pub circuit: CircuitSpec,
    #[serde(default = "default_init")]
    pub init: InitialState,
    /// Qubits of the reduced subsystem.
    pub kappa: Vec<usize>,
    pub sampling: SamplingMode,
    #[serde(default)]
    pub pooling: Pooling,
    /// Independent Haar-random initial states in a data ensemble.
    #[serde(default = "default_five")]
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
}

impl EstimateConfig {
    /// Haar-ensemble config with the default init and pooling.
    pub fn haar(circuit: CircuitSpec, kappa: Vec<usize>, pairs: usize, seed: u64) -> Self {
        Self {
            circuit,
            init: InitialState::AllZero,
            kappa,
            sampling: SamplingMode::HaarEnsemble { pairs },
            pooling: Pooling::Pooled,
            replicates: 5,
            seed,
        }
    }

    /// Data-ensemble config with five datasets and five parameter sets.
    pub fn data(circuit: CircuitSpec, kappa: Vec<usize>, points: usize, seed: u64) -> Self {
        Self {
            circuit,
            init: InitialState::AllZero,
            kappa,
            sampling: SamplingMode::DataEnsemble { datasets: 5, points, parameter_sets: 5 },
            pooling: Pooling::Pooled,
            replicates: 5,
            seed,
        }
    }

    pub fn with_init(mut self, init: InitialState) -> Self {
        self.init = init;
        self
    }

    pub fn with_kappa(mut self, kappa: Vec<usize>) -> Self {
        self.kappa = kappa;
        self
    }

    /// Checks counts, the mode/circuit pairing and the subsystem; returns
    /// the subsystem mask.
    pub fn validate(&self) -> Result<SubsystemMask> {
        self.circuit.validate()?;
        match (self.sampling, self.circuit.kind()) {
            (SamplingMode::HaarEnsemble { pairs }, BlockKind::Haar) => {
                if pairs < 2 {
                    return Err(Error::InvalidConfig(format!("need at least 2 pairs, got {pairs}")));
                }
            }
            (SamplingMode::DataEnsemble { datasets, points, parameter_sets }, BlockKind::Reupload) => {
                if datasets < 2 || points < 2 || parameter_sets < 2 {
                    return Err(Error::InvalidConfig(format!(
                        "data ensemble counts must be at least 2, got datasets={datasets}, points={points}, parameter_sets={parameter_sets}"
                    )));
                }
            }
            (SamplingMode::HaarEnsemble { .. }, BlockKind::Reupload) => {
                return Err(Error::InvalidConfig("Haar ensemble needs Haar-block circuits".into()))
            }
            (SamplingMode::DataEnsemble { .. }, BlockKind::Haar) => {
                return Err(Error::InvalidConfig("data ensemble needs re-upload circuits".into()))
            }
        }
        if self.replicates == 0 {
            return Err(Error::InvalidConfig("replicates must be at least 1".into()));
        }
        self.mask(&self.kappa)
    }

    /// Mask over this circuit's register; multi-qubit subsystems must lie in
    /// one final-layer block.
    pub fn mask(&self, kappa: &[usize]) -> Result<SubsystemMask> {
        let mask = SubsystemMask::new(self.circuit.n(), kappa)?;
        if mask.len() > 1 {
            final_block(&self.circuit, &mask)?;
        }
        Ok(mask)
    }

    /// Number of initial-state replicates actually used.
    pub fn effective_replicates(&self) -> usize {
        match (&self.init, self.sampling) {
            (InitialState::HaarRandom, SamplingMode::DataEnsemble { .. }) => self.replicates,
            _ => 1,
        }
    }
}
