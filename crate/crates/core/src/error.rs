use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("non-finite entry in a {dim}x{dim} matrix")]
    NonFinite { dim: usize },

    #[error("matrix is not Hermitian: max |M - M^H| = {deviation:e}")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not unitary: max |U^H U - I| = {deviation:e}")]
    NotUnitary { deviation: f64 },

    #[error("eigensolver did not converge on a {dim}x{dim} matrix")]
    NoConvergence { dim: usize },

    #[error("eigenpair residual {residual:e} exceeds {tolerance:e}")]
    Residual { residual: f64, tolerance: f64 },

    #[error("not a projector: max |P^2 - P| = {deviation:e}")]
    NotProjector { deviation: f64 },

    #[error("correlation eigenvalue {value} outside [0, 1]")]
    SpectrumOutOfRange { value: f64 },

    #[error("{count} correlation eigenvalue(s) tie with 1/2")]
    Tie { count: usize },

    #[error("gap closed at reference value {reference}")]
    GapClosed { reference: f64 },

    #[error("many-body oracle supports at most {cap} modes, got {dim}")]
    OracleTooLarge { dim: usize, cap: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("unknown sweep axis `{0}`")]
    InvalidAxis(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for violations of a numerical contract (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotHermitian { .. }
                | Error::NotUnitary { .. }
                | Error::NoConvergence { .. }
                | Error::Residual { .. }
                | Error::NotProjector { .. }
                | Error::SpectrumOutOfRange { .. }
                | Error::Tie { .. }
                | Error::GapClosed { .. }
                | Error::NonFinite { .. }
        )
    }
}
