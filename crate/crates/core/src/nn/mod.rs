//! Small multilayer perceptrons mapping element features to parameters.

mod mlp;
mod predict;
mod standardize;
mod train;

use serde::{Deserialize, Serialize};

pub use mlp::{Architecture, Layer, Mlp};
pub use predict::{predict_parameters, LearnedKinds, ModelTarget, ParameterModel, ParameterModels};
pub use standardize::Standardizer;
pub use train::{gradient_check, train, TrainConfig, TrainingSample};

use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    #[default]
    Mse,
    /// Squared error weighted by 2^−γ.
    Proximity,
}

impl LossKind {
    #[inline]
    pub fn weight<T: Real>(self, gamma: u32) -> T {
        match self {
            LossKind::Mse => T::one(),
            LossKind::Proximity => T::lit(0.5f64.powi(gamma as i32)),
        }
    }
}

impl std::fmt::Display for LossKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LossKind::Mse => "mse",
            LossKind::Proximity => "proximity",
        })
    }
}

impl std::str::FromStr for LossKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mse" => Ok(LossKind::Mse),
            "proximity" => Ok(LossKind::Proximity),
            other => Err(format!("unknown loss `{other}` (expected mse or proximity)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NnError {
    #[error("feature dimension mismatch: model expects {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error("batch lengths differ")]
    LengthMismatch,
    #[error("training diverged at epoch {epoch}: non-finite loss")]
    Divergence { epoch: usize },
    #[error("no model for target {0}")]
    MissingModel(String),
    #[error("missing features for element {0}")]
    MissingFeatures(usize),
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("{0}")]
    Io(String),
}

/// Mean of w(γ)·(pred − true)², w = 1 for MSE and 2^−γ for the proximity loss.
pub fn loss<T: Real>(predictions: &[T], targets: &[T], gammas: &[u32], kind: LossKind) -> Result<T, NnError> {
    if predictions.len() != targets.len() || predictions.len() != gammas.len() {
        return Err(NnError::LengthMismatch);
    }
    if predictions.is_empty() {
        return Err(NnError::EmptyBatch);
    }
    let total: T = predictions
        .iter()
        .zip(targets)
        .zip(gammas)
        .map(|((p, t), g)| kind.weight::<T>(*g) * (*p - *t) * (*p - *t))
        .sum();
    Ok(total / T::from_count(predictions.len()))
}
