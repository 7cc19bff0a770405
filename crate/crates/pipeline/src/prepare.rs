use std::collections::BTreeMap;

use hybrid0d::calibrate::{calibrate, CalibrationProblem, CalibrationResult, ReferenceSeries};
use hybrid0d::circuit::{
    assemble_network, baseline_parameters, BoundarySpec, CircuitNetwork, ElementId, ElementParameterMap,
};
use hybrid0d::geometry::{
    discretize, entrance_length_adjust, extract_all_features, generation_numbers, split_multi_outlet_junctions,
    BaselineFlows, CenterlineTree, Discretization, FeatureVector, GenerationMap,
};
use hybrid0d::solver::simulate;

use crate::{PipelineConfig, PipelineError};

/// One geometry after discretization, preprocessing and featurization.
#[derive(Debug, Clone)]
pub struct PreparedGeometry {
    pub id: String,
    pub tree: CenterlineTree<f64>,
    pub boundary: BoundarySpec<f64>,
    /// Plain discretization, used by the baseline modality.
    pub raw: Discretization<f64>,
    /// Split and entrance-length adjusted discretization.
    pub processed: Discretization<f64>,
    /// Baseline parameters on `raw` (constant-pressure junctions).
    pub raw_baseline: ElementParameterMap<f64>,
    /// Baseline parameters on `processed`; also the calibration starting point.
    pub baseline: ElementParameterMap<f64>,
    pub baseline_flows: BaselineFlows<f64>,
    pub features: BTreeMap<ElementId, FeatureVector<f64>>,
    pub generations: GenerationMap,
}

impl PreparedGeometry {
    pub fn raw_network(&self, params: &ElementParameterMap<f64>, cfg: &PipelineConfig) -> Result<CircuitNetwork<f64>, PipelineError> {
        network(&self.raw, &self.boundary, params, cfg)
    }

    pub fn processed_network(
        &self,
        params: &ElementParameterMap<f64>,
        cfg: &PipelineConfig,
    ) -> Result<CircuitNetwork<f64>, PipelineError> {
        network(&self.processed, &self.boundary, params, cfg)
    }
}

fn network(
    disc: &Discretization<f64>,
    boundary: &BoundarySpec<f64>,
    params: &ElementParameterMap<f64>,
    cfg: &PipelineConfig,
) -> Result<CircuitNetwork<f64>, PipelineError> {
    let bcs = boundary.bind(disc)?;
    Ok(assemble_network(disc, params, &bcs, cfg.fluid, boundary.cycle_period)?)
}

/// Discretizes, splits multi-outlet junctions, applies the entrance-length
/// adjustment and extracts features. Junction flow ratios come from a
/// baseline simulation of the processed network.
pub fn prepare(
    id: &str,
    tree: CenterlineTree<f64>,
    boundary: BoundarySpec<f64>,
    cfg: &PipelineConfig,
) -> Result<PreparedGeometry, PipelineError> {
    let raw = discretize(&tree)?;
    let processed = entrance_length_adjust(&split_multi_outlet_junctions(&raw), &tree, cfg.entrance_length_factor);
    let raw_baseline = baseline_parameters(&raw, &cfg.fluid, cfg.flavor)?;
    let baseline = baseline_parameters(&processed, &cfg.fluid, cfg.flavor)?;
    let net = network(&processed, &boundary, &baseline, cfg)?;
    let baseline_flows = simulate(&net, &cfg.sim())?.last_cycle.mean_flows();
    let features = extract_all_features(&processed, &tree, &cfg.fluid, Some(&baseline_flows))?
        .into_iter()
        .map(|f| (f.element, f))
        .collect();
    let generations = generation_numbers(&processed);
    Ok(PreparedGeometry {
        id: id.to_string(),
        tree,
        boundary,
        raw,
        processed,
        raw_baseline,
        baseline,
        baseline_flows,
        features,
        generations,
    })
}

/// Fits the processed network to `reference`, starting from baseline values.
pub fn calibrate_geometry(
    prep: &PreparedGeometry,
    reference: &ReferenceSeries<f64>,
    cfg: &PipelineConfig,
) -> Result<CalibrationResult<f64>, PipelineError> {
    let net = prep.processed_network(&prep.baseline, cfg)?;
    let problem = CalibrationProblem::new(&net, cfg.flavor, cfg.lm);
    Ok(calibrate(&problem, reference, &prep.baseline)?)
}
