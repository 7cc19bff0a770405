use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use hybrid0d::circuit::{BoundarySpec, ElementParameterMap, ModelFlavor};
use hybrid0d::geometry::CenterlineTree;
use hybrid0d::solver::TimeSeriesSolution;

use crate::{PipelineError, SyntheticOracle};

pub const COHORT_FILE: &str = "cohort.json";

/// Which discretization the reference series was produced on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReferenceTopology {
    /// Split and entrance-length adjusted; node ids match calibration.
    Processed,
    /// Plain discretization (identity oracle only).
    Raw,
}

/// File locations of one geometry, relative to the cohort directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortEntry {
    pub id: String,
    pub centerline: String,
    pub boundary: String,
    pub reference: String,
    /// Ground-truth parameters, when known.
    pub truth: Option<String>,
    pub reference_topology: ReferenceTopology,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortSpec {
    pub name: String,
    pub seed: u64,
    pub flavor: ModelFlavor,
    pub entrance_length_factor: f64,
    pub oracle: Option<SyntheticOracle>,
    /// Seeds rejected during generation, with the reason.
    pub regenerations: Vec<String>,
    pub geometries: Vec<CohortEntry>,
}

fn read(path: &Path) -> Result<String, PipelineError> {
    std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))
}

pub(crate) fn write(path: &Path, text: &str) -> Result<(), PipelineError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| PipelineError::io(parent, e))?;
    }
    std::fs::write(path, text).map_err(|e| PipelineError::io(path, e))
}

pub fn load_parameters(path: &Path) -> Result<ElementParameterMap<f64>, PipelineError> {
    serde_json::from_str(&read(path)?).map_err(|e| PipelineError::io(path, e))
}

pub fn parameters_json(params: &ElementParameterMap<f64>) -> String {
    serde_json::to_string_pretty(params).expect("parameters serialize")
}

pub fn load_solution(path: &Path) -> Result<TimeSeriesSolution<f64>, PipelineError> {
    let file = std::fs::File::open(path).map_err(|e| PipelineError::io(path, e))?;
    Ok(TimeSeriesSolution::read_csv(file)?)
}

pub fn write_solution(path: &Path, sol: &TimeSeriesSolution<f64>, with_rates: bool) -> Result<(), PipelineError> {
    write(path, &sol.to_csv_string(with_rates))
}

impl CohortSpec {
    pub fn load(dir: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = dir.as_ref().join(COHORT_FILE);
        let spec: Self = serde_json::from_str(&read(&path)?).map_err(|e| PipelineError::io(&path, e))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<(), PipelineError> {
        write(&dir.as_ref().join(COHORT_FILE), &(serde_json::to_string_pretty(self).expect("cohort serializes") + "\n"))
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let mut ids: Vec<&str> = self.geometries.iter().map(|g| g.id.as_str()).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(PipelineError::Invalid("duplicate geometry id in cohort".into()));
        }
        Ok(())
    }
}

impl CohortEntry {
    fn path(dir: &Path, rel: &str) -> PathBuf {
        dir.join(rel)
    }

    pub fn load_centerline(&self, dir: &Path) -> Result<CenterlineTree<f64>, PipelineError> {
        Ok(CenterlineTree::load(Self::path(dir, &self.centerline))?)
    }

    pub fn load_boundary(&self, dir: &Path) -> Result<BoundarySpec<f64>, PipelineError> {
        Ok(BoundarySpec::load(Self::path(dir, &self.boundary))?)
    }

    pub fn load_reference(&self, dir: &Path) -> Result<TimeSeriesSolution<f64>, PipelineError> {
        load_solution(&Self::path(dir, &self.reference))
    }

    pub fn load_truth(&self, dir: &Path) -> Result<Option<ElementParameterMap<f64>>, PipelineError> {
        self.truth.as_ref().map(|t| load_parameters(&Self::path(dir, t))).transpose()
    }
}
