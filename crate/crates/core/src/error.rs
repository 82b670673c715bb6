use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{n} qubits exceeds the configured maximum of {max}")]
    QubitLimit { n: usize, max: usize },

    #[error("invalid qubit count {0}")]
    InvalidQubitCount(usize),

    #[error("state is not normalized: |psi|^2 = {norm_sqr}")]
    NotNormalized { norm_sqr: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not unitary (max deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("invalid target qubits: {0}")]
    InvalidTargets(String),

    #[error("invalid subsystem mask: {0}")]
    InvalidMask(String),

    #[error("not a density matrix: {0}")]
    NotDensityMatrix(String),

    #[error("invalid dimension {0}; need d >= 2")]
    InvalidDimension(usize),

    #[error("missing operand {0}")]
    MissingOperand(&'static str),

    #[error("too few samples: {got} (minimum {min})")]
    TooFewSamples { got: usize, min: usize },

    #[error("invalid circuit spec: {0}")]
    InvalidSpec(String),

    #[error("layer {layer} out of range 1..={layers}")]
    InvalidLayer { layer: usize, layers: usize },

    #[error("light cone: {0}")]
    LightCone(String),

    #[error("invalid kernel task: {0}")]
    InvalidKernel(String),

    #[error("theory: {0}")]
    Theory(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("gram matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("dual objective is unbounded below along coordinate {index}")]
    Unbounded { index: usize },

    #[error("solver did not converge after {iterations} sweeps (KKT residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
