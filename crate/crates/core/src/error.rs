use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("node ({i}, {j}) outside {nx}x{ny} grid")]
    IndexOutOfRange { i: usize, j: usize, nx: usize, ny: usize },

    #[error("node ({i}, {j}) too close to the boundary for this stencil")]
    NodeTooCloseToBoundary { i: usize, j: usize },

    #[error("surface is not symplectic: cos(alpha) = {cos_alpha:.6e} at node ({i}, {j})")]
    NonSymplectic { i: usize, j: usize, cos_alpha: f64 },

    #[error("step would push min cos(alpha) to {min_cos:.6e}, below floor {floor:.3e}")]
    CosFloorViolated { min_cos: f64, floor: f64 },

    #[error("Newton did not converge in {iters} iterations (residual {residual:.3e})")]
    MaxItersExceeded { iters: usize, residual: f64 },

    #[error("line search stalled at residual {residual:.3e}")]
    Stalled { residual: f64 },

    #[error("singular Jacobian (zero pivot in column {column})")]
    SingularJacobian { column: usize },

    #[error("continuation step underflow below {min_step:.3e}; last good beta = {last_beta}")]
    StepUnderflow { last_beta: f64, min_step: f64 },

    #[error("ball of radius {radius} meets the patch boundary")]
    BallEscapesPatch { radius: f64 },

    #[error("rescale window leaves the patch footprint")]
    WindowEscapesPatch,

    #[error("projection to the tangent plane is not injective over the window")]
    InterpolationDegenerate,

    #[error("rescaling undefined: {0}")]
    DegenerateRescale(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unknown key `{key}` at line {line}")]
    UnknownKey { line: usize, key: String },

    #[error("value out of range for `{key}`: {message}")]
    Range { key: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Contract violations map to CLI exit status 2, everything else to 1.
    pub fn is_contract(&self) -> bool {
        matches!(
            self,
            Error::NonSymplectic { .. }
                | Error::CosFloorViolated { .. }
                | Error::BallEscapesPatch { .. }
                | Error::StepUnderflow { .. }
                | Error::WindowEscapesPatch
                | Error::DegenerateRescale(_)
                | Error::InvalidGrid(_)
                | Error::Parse { .. }
                | Error::UnknownKey { .. }
                | Error::Range { .. }
                | Error::InvalidArgument(_)
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
