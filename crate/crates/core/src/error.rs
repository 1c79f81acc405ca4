use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WitnessError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian (asymmetry {asymmetry:.3e}, norm {norm:.3e})")]
    NonHermitianInput { asymmetry: f64, norm: f64 },

    #[error(
        "Jacobi iteration did not converge after {sweeps} sweeps (off-diagonal mass {off:.3e})"
    )]
    NoConvergence { sweeps: usize, off: f64 },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("not an entanglement witness: {0}")]
    NotAWitness(String),

    #[error("map is not positive: t = {t} exceeds n/l(pi) = {threshold}")]
    NotPositive { t: f64, threshold: f64 },

    #[error("permutation has loop length {length}, expected {expected}")]
    WrongLoopStructure { length: usize, expected: usize },

    #[error("certificate parameters out of range: {0}")]
    OutOfCertificateRange(String),

    #[error("vector is not normalized (norm {0})")]
    NotUnitVector(f64),

    #[error("coefficient matrix is not contractive at x = {x:?} (max Gram eigenvalue {max_eig})")]
    ContractionViolated { x: Vec<[f64; 2]>, max_eig: f64 },

    #[error("degenerate point (1,1,1): the ratio is 0/0")]
    DegeneratePoint,

    #[error("not a density matrix: {0}")]
    NotAState(String),
}

pub type Result<T> = std::result::Result<T, WitnessError>;
