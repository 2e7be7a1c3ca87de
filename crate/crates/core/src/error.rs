use thiserror::Error;

/// Errors raised by the numerical kernel and the channel/target/solver layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian: |m - m^H|_F = {deviation:.3e} exceeds tolerance {tol:.3e}")]
    NotHermitian { deviation: f64, tol: f64 },

    #[error("Hermitian eigensolver did not converge after {sweeps} sweeps")]
    ConvergenceFailure { sweeps: usize },

    #[error("eigenvalue {value:.3e} is below -{clip_tol:.1e}")]
    NegativeEigenvalue { value: f64, clip_tol: f64 },

    #[error("matrix has no positive eigenvalue")]
    AllZero,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid Choi operator: {0}")]
    InvalidChoi(String),

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("invalid target operator: {0}")]
    InvalidTarget(String),

    #[error("Kraus trace condition violated: max |sum A^H A - 1| = {deviation:.3e}")]
    TraceConditionViolated { deviation: f64 },

    #[error("state evaluator returned a vector of norm {norm} at theta={theta}, phi={phi}")]
    NormViolation { norm: f64, theta: f64, phi: f64 },

    #[error("Tr_K[R chi R] vanished; Lagrange multiplier is singular")]
    SingularLambda,

    #[error("invalid model specification: {0}")]
    InvalidSpec(String),

    #[error("{name} = {value} is outside [{lo}, {hi}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("PPT criterion does not certify separability for {dim_a}x{dim_b} (min partial-transpose eigenvalue {min_pt_eigenvalue:.3e})")]
    UnsupportedDims {
        dim_a: usize,
        dim_b: usize,
        min_pt_eigenvalue: f64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed operator file: {0}")]
    Format(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
