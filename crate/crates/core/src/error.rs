use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("qubit index {index} out of range for {n_qubits}-qubit register")]
    QubitOutOfRange { index: usize, n_qubits: usize },
    #[error("gate targets must be distinct, got {0:?}")]
    DuplicateTargets(Vec<usize>),
    #[error("gate {kind} expects {expected} target(s), got {got}")]
    TargetArity {
        kind: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("gate {0} is parameterized and needs an angle")]
    MissingAngle(&'static str),
    #[error("gate {0} takes no angle")]
    UnexpectedAngle(&'static str),
    #[error("parameter slot {slot} out of range ({n_parameters} parameters)")]
    ParameterSlot { slot: usize, n_parameters: usize },
    #[error("expected {expected} parameters, got {got}")]
    ParameterLength { expected: usize, got: usize },
    #[error("{0} qubits requested, supported range is 1..=16")]
    TooManyQubits(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("shot count must be at least {min}, got {got}")]
    TooFewShots { min: u64, got: u64 },
    #[error("empty distribution")]
    EmptyDistribution,
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),
    #[error("max-cut brute force is limited to {cap} nodes, got {got}")]
    GraphTooLarge { cap: usize, got: usize },
    #[error("hamiltonian line {line}: {message}")]
    HamiltonianParse { line: usize, message: String },
    #[error("invalid observable: {0}")]
    InvalidObservable(String),
    #[error("invalid noise model: {0}")]
    InvalidNoise(String),
    #[error("invalid shot policy: {0}")]
    InvalidPolicy(String),
    #[error("invalid optimizer options: {0}")]
    InvalidOptions(String),
    #[error("objective returned non-finite value {value} at evaluation {evaluation}")]
    NonFiniteObjective { evaluation: usize, value: f64 },
    #[error("ARG is undefined for a zero ideal energy")]
    ZeroIdealEnergy,
    #[error("Hellinger budget {budget} unreachable within {cap} shots")]
    BudgetUnreachable { budget: f64, cap: u64 },
    #[error("invalid calibration request: {0}")]
    InvalidCalibration(String),
    #[error("invalid summary input: {0}")]
    InvalidSummary(String),
}
