use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("qubit index {index} out of range for {n_qubits}-qubit register")]
    QubitOutOfRange { index: usize, n_qubits: usize },
    #[error("gate acts twice on qubit {0}")]
    DuplicateQubit(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("unsupported gate arity {0}: only 1- and 2-qubit generic unitaries can be transpiled")]
    UnsupportedArity(usize),
    #[error("matrix is not unitary (deviation {0:.3e})")]
    NotUnitary(f64),
    #[error("invalid density matrix: {0}")]
    InvalidState(String),
    #[error("noise level {level} outside the valid range {range} for {kind}")]
    NoiseLevelOutOfRange {
        kind: &'static str,
        level: f64,
        range: &'static str,
    },
    #[error("placement {placement} is incompatible with this circuit: {reason}")]
    IncompatiblePlacement { placement: String, reason: String },
    #[error("joint system-bath dimension {dim} exceeds the budget of {budget}")]
    DimensionBudget { dim: usize, budget: usize },
    #[error("integration became unstable: trace drift {drift:.3e} at t = {time:.4}")]
    Unstable { drift: f64, time: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("problem too large: {0}")]
    TooLarge(String),
}

pub type Result<T> = std::result::Result<T, SimError>;
