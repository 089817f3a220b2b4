use thiserror::Error;

/// Errors surfaced by circuit construction, Hamiltonian parsing, estimation
/// and the continuation driver.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("qubit {qubit} out of range 1..={n_qubits}")]
    QubitOutOfRange { qubit: usize, n_qubits: usize },

    #[error("{n_qubits} qubits exceeds the {max}-qubit dense simulation cap")]
    TooManyQubits { n_qubits: usize, max: usize },

    #[error("cnot control and target must be distinct qubits (both are {qubit})")]
    CnotSameQubit { qubit: usize },

    #[error("parameter index {index} out of range for {p} parameters")]
    ParamIndexOutOfRange { index: usize, p: usize },

    #[error("parameter indices must cover 0..{p}; index {missing} is never used")]
    UnusedParamIndex { p: usize, missing: usize },

    #[error("parameter vector has length {got}, circuit expects {expected}")]
    ParamVectorLength { got: usize, expected: usize },

    #[error("qubit count mismatch: {left} vs {right}")]
    QubitCountMismatch { left: usize, right: usize },

    #[error("hamiltonian line {line}: {msg}")]
    ParseHamiltonian { line: usize, msg: String },

    #[error("hamiltonian has no terms")]
    EmptyHamiltonian,

    #[error("expectation of a self-adjoint operator has imaginary residue {0:.3e}")]
    ComplexExpectation(f64),

    #[error("sample count m must be at least 1")]
    ZeroSamples,

    #[error("identity words carry no measurement statistics")]
    IdentityTermSampled,

    #[error("resampling tolerance must be positive (got {0})")]
    NonPositiveTolerance(f64),

    #[error("schedule step must lie in (0, 1) with integral 1/step (got {0})")]
    BadScheduleStep(f64),

    #[error("surface run needs at least one hamiltonian instance")]
    EmptySurface,

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
