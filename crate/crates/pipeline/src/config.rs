use serde::{Deserialize, Serialize};

use hybrid0d::calibrate::LmSettings;
use hybrid0d::circuit::{FluidProperties, ModelFlavor};
use hybrid0d::geometry::DEFAULT_ENTRANCE_LENGTH_FACTOR;
use hybrid0d::nn::{LossKind, TrainConfig};
use hybrid0d::solver::SimulationConfig;

/// Settings shared by every pipeline stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub flavor: ModelFlavor,
    pub loss: LossKind,
    /// Multiple of the outlet radius added to junctions; 0 disables the adjustment.
    pub entrance_length_factor: f64,
    pub seed: u64,
    pub fluid: FluidProperties<f64>,
    pub simulation: SimulationConfig<f64>,
    pub lm: LmSettings<f64>,
    pub train: TrainConfig,
    pub trials: usize,
    /// Fraction of the cohort held out per trial.
    pub holdout_fraction: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            flavor: ModelFlavor::Ri,
            loss: LossKind::Mse,
            entrance_length_factor: DEFAULT_ENTRANCE_LENGTH_FACTOR,
            seed: 0,
            fluid: FluidProperties::default(),
            simulation: SimulationConfig { max_cycles: 20, ..SimulationConfig::default() },
            lm: LmSettings::default(),
            train: TrainConfig::default(),
            trials: 5,
            holdout_fraction: 0.1,
        }
    }
}

impl PipelineConfig {
    /// Simulation settings with this config's flavor.
    pub fn sim(&self) -> SimulationConfig<f64> {
        SimulationConfig { flavor: self.flavor, ..self.simulation }
    }

    /// Training settings with this config's loss.
    pub fn training(&self, seed: u64) -> TrainConfig {
        TrainConfig { loss: self.loss, seed, ..self.train.clone() }
    }
}
