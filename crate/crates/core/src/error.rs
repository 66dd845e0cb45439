use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("matrix is not Hermitian (max asymmetry {asymmetry:.3e} > tol {tol:.3e})")]
    NotHermitian { asymmetry: f64, tol: f64 },

    /// Non-finite values appeared in the BCD iterates. The per-sweep objective
    /// history up to the failure is attached.
    #[error("solver failure after {sweeps} sweeps: {reason}")]
    SolverFailure {
        reason: String,
        sweeps: usize,
        objective_trace: Vec<f64>,
    },

    #[error("degenerate homogenization: |u_last| = {0:.3e}")]
    DegenerateHomogenization(f64),

    #[error("brute-force oracle refused: {0}")]
    OracleTooLarge(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
