//! Study orchestration on top of `hybrid0d`: geometry preparation, modality
//! runs, MPE scoring, synthetic oracle cohorts and cross-validation.

pub mod cohort;
pub mod config;
pub mod crossval;
pub mod error;
pub mod evaluate;
pub mod prepare;
pub mod report;
pub mod synth;

pub use cohort::{CohortEntry, CohortSpec, ReferenceTopology};
pub use config::PipelineConfig;
pub use crossval::{collect_samples, crossval, history_csv, holdout_sets, load_geometries, train_models, LoadedGeometry};
pub use error::PipelineError;
pub use evaluate::{compute_mpe, run_modality, Modality, ModalityRun};
pub use prepare::{calibrate_geometry, prepare, PreparedGeometry};
pub use report::{emit_report, EvaluationReport, GeometryResult, ModalitySummary};
pub use synth::{generate_synthetic_cohort, GroundTruthMap, SyntheticOracle};
