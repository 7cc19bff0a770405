//! Hybrid lumped-parameter (0D) blood flow models.
//!
//! Element pressure-drop parameters come from Poiseuille formulas, from a
//! Levenberg-Marquardt fit to reference time series, or from small neural
//! networks fed with centerline features. Everything numeric is generic over
//! [`Real`]; the aliases below fix the scalar to `f64`.

pub mod calibrate;
pub mod circuit;
pub mod geometry;
pub mod nn;
mod scalar;
pub mod solver;

pub use scalar::{dot, max_abs, norm2, Real};

pub type Network = circuit::CircuitNetwork<f64>;
pub type Parameters = circuit::ElementParameters<f64>;
pub type Centerline = geometry::CenterlineTree<f64>;
pub type Disc = geometry::Discretization<f64>;
pub type Features = geometry::FeatureVector<f64>;
pub type Solution = solver::TimeSeriesSolution<f64>;
