use thiserror::Error;

/// Errors produced by the library.
#[derive(Error, Debug)]
pub enum Error {
    #[error("dimension must be at least 2, got {0}")]
    InvalidDimension(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("coefficient matrix is not Hermitian (defect {0:.3e}); map does not preserve Hermiticity")]
    NotHermiticityPreserving(f64),

    #[error("map is not completely positive (min eigenvalue {0:.3e})")]
    NotCompletelyPositive(f64),

    #[error("map is not completely copositive (min eigenvalue of transposed part {0:.3e})")]
    NotCompletelyCopositive(f64),

    #[error("decomposability certificate violated: {0}")]
    CertificateViolation(String),

    #[error("internal consistency check failed: {0}")]
    InternalConsistency(String),

    #[error("spectrum is not congruence free: {0}")]
    CongruenceViolation(String),

    #[error("congruence modulus must be nonzero")]
    ZeroCongruenceModulus,

    #[error("set of spectrum points must be nonempty")]
    EmptySpectrum,

    #[error("no covariance intertwiner found (residual {residual:.3e} exceeds tolerance {tol:.3e})")]
    NoIntertwiner { residual: f64, tol: f64 },

    #[error("quadrature projection limited to n <= {max}, got n = {n}; use closed-form mode")]
    QuadratureDimension { n: usize, max: usize },

    #[error("evolution map too ill-conditioned to invert (condition number {cond:.3e})")]
    IllConditioned { cond: f64 },

    #[error("integration became unstable at t = {t} (map norm {norm:.3e})")]
    IntegrationUnstable { t: f64, norm: f64 },

    #[error("time {0} is not a node of the evolution grid")]
    TimeNotOnGrid(f64),

    #[error("not a valid density matrix: {0}")]
    NotDensityMatrix(String),

    #[error("non-Hermitian Hamiltonian (defect {0:.3e})")]
    NonHermitianHamiltonian(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Linalg(#[from] ndarray_linalg::error::LinalgError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
