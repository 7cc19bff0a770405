use hybrid0d::calibrate::CalibrationError;
use hybrid0d::circuit::AssemblyError;
use hybrid0d::geometry::GeometryError;
use hybrid0d::nn::NnError;
use hybrid0d::solver::SolverError;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("geometry: {0}")]
    Geometry(#[from] GeometryError),
    #[error("network assembly: {0}")]
    Assembly(#[from] AssemblyError),
    #[error("solver: {0}")]
    Solver(#[from] SolverError),
    #[error("calibration: {0}")]
    Calibration(#[from] CalibrationError),
    #[error("network training: {0}")]
    Nn(#[from] NnError),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("time grids do not match: {0}")]
    GridMismatch(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

impl PipelineError {
    pub fn io(path: impl AsRef<std::path::Path>, err: impl std::fmt::Display) -> Self {
        PipelineError::Io { path: path.as_ref().display().to_string(), message: err.to_string() }
    }

    /// True when a forward simulation failed to converge.
    pub fn is_divergence(&self) -> bool {
        matches!(self, PipelineError::Solver(SolverError::Divergence { .. } | SolverError::Singular { .. }))
    }

    /// 3 for solver divergence, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        if self.is_divergence() {
            3
        } else {
            2
        }
    }
}
