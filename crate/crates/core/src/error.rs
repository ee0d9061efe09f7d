use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("expected {expected} samples, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("operation needs a {expected}-space function, got {found}-space")]
    WrongSpace {
        expected: &'static str,
        found: &'static str,
    },

    #[error("grids differ: {0}")]
    GridMismatch(String),

    #[error("region {0} contains no grid points")]
    EmptyRegion(String),

    #[error("exponent fit: {0}")]
    Fit(String),

    #[error("aliasing: Nyquist frequency {nyquist:.4} is below the required {required:.4}")]
    Aliasing { nyquist: f64, required: f64 },

    #[error("periodization: half-width {half_width:.4} is below the required {required:.4}")]
    Periodization { half_width: f64, required: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("insufficient resolution: {0}")]
    Resolution(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("symbol outside its declared class: {0}")]
    SymbolClass(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("sample file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
