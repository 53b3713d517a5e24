use thiserror::Error;

/// Errors raised by every module of the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("inconsistent optics: {0}")]
    InconsistentOptics(String),
    #[error("quadratic surface has no saddle (hessian is not indefinite)")]
    NotASaddle,
    #[error("stationary point ({x:.3}, {y:.3}) falls outside the fitting window")]
    Diverged { x: f64, y: f64 },
    #[error("phase decoding needs at least 3 shots, got {0}")]
    InsufficientShots(usize),
    #[error("highlight ({hx:.3}, {hy:.3}) lies outside the chrome ball")]
    OutOfBall { hx: f64, hy: f64 },
    #[error("light directions do not span 3D (rank {0})")]
    DegenerateLights(usize),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("image codec error: {0}")]
    Image(String),
}

impl Error {
    /// Stable machine-readable identifier, used by the CLI error JSON.
    pub fn code(&self) -> &'static str {
        match self {
            Error::EmptyInput(_) => "empty_input",
            Error::Shape(_) => "shape_error",
            Error::Domain(_) => "domain_error",
            Error::Parse { .. } => "parse_error",
            Error::DegenerateFit(_) => "degenerate_fit",
            Error::InconsistentOptics(_) => "inconsistent_optics",
            Error::NotASaddle => "not_a_saddle",
            Error::Diverged { .. } => "diverged",
            Error::InsufficientShots(_) => "insufficient_shots",
            Error::OutOfBall { .. } => "out_of_ball",
            Error::DegenerateLights(_) => "degenerate_lights",
            Error::Io(_) => "io_error",
            Error::Json(_) => "json_error",
            Error::Image(_) => "image_error",
        }
    }

    pub(crate) fn parse(offset: usize, message: impl Into<String>) -> Self {
        Error::Parse { offset, message: message.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
