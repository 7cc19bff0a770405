//! Levenberg-Marquardt fit of element parameters to reference time series.
//!
//! The objective is the element pressure equation evaluated at the observed
//! pressures and flows, so no forward simulation runs inside the fit and the
//! residual is linear in R_lin, R_quad and L.

mod lm;
mod problem;
mod reference;

pub use lm::{calibrate, CalibrationResult, CalibrationStatus, IterationRecord};
pub use problem::{assemble_fit_residual, fit_jacobian_fd_error, CalibrationProblem, FitJacobian, FreeParameter, LmSettings};
pub use reference::{area_average, area_flux, periodic_derivative, project_reference, ReferenceSeries};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CalibrationError {
    #[error("reference lacks {0}")]
    MissingSeries(String),
    #[error("reference needs at least 3 samples, got {0}")]
    TooFewSamples(usize),
    #[error("reference time grid is not uniform")]
    NonUniformGrid,
    #[error("total area weight is zero")]
    ZeroWeight,
    #[error("initial parameters are not finite")]
    NonFiniteInit,
    #[error("residual at the initial parameters is not finite")]
    NonFiniteResidual,
}
