use std::fmt;

use serde::{Deserialize, Serialize};

use hybrid0d::circuit::{ElementParameterMap, NodeId, Waveform};
use hybrid0d::nn::{predict_parameters, LearnedKinds, ParameterModels};
use hybrid0d::solver::{simulate, TimeSeriesSolution};

use crate::{PipelineConfig, PipelineError, PreparedGeometry};

/// How element parameters are assigned for a forward run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Modality {
    /// Unprocessed geometry, Poiseuille vessels, constant-pressure junctions.
    Baseline,
    LearnedVessels,
    LearnedJunctions,
    LearnedBoth,
    /// Calibrated parameters.
    Optimal,
}

impl Modality {
    pub const ALL: [Modality; 5] =
        [Modality::Baseline, Modality::LearnedVessels, Modality::LearnedJunctions, Modality::LearnedBoth, Modality::Optimal];

    pub fn as_str(self) -> &'static str {
        match self {
            Modality::Baseline => "baseline",
            Modality::LearnedVessels => "learned-vessels",
            Modality::LearnedJunctions => "learned-junctions",
            Modality::LearnedBoth => "learned-both",
            Modality::Optimal => "optimal",
        }
    }

    fn learned(self) -> Option<LearnedKinds> {
        match self {
            Modality::LearnedVessels => Some(LearnedKinds::VESSELS),
            Modality::LearnedJunctions => Some(LearnedKinds::JUNCTIONS),
            Modality::LearnedBoth => Some(LearnedKinds::BOTH),
            _ => None,
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Modality {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Modality::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown modality `{s}`"))
    }
}

#[derive(Debug, Clone)]
pub struct ModalityRun {
    pub modality: Modality,
    pub parameters: ElementParameterMap<f64>,
    pub solution: TimeSeriesSolution<f64>,
    pub mpe: f64,
}

fn uniform_period(times: &[f64]) -> Option<f64> {
    match times {
        [] => None,
        [_] => None,
        [first, .., last] => Some((last - first) * times.len() as f64 / (times.len() - 1) as f64),
    }
}

/// Maximum percent error of the inlet pressure.
///
/// t* is the sample with the largest |P_sol − P_ref|; the error there is
/// divided by |P_ref(t*)|. When the grids differ the reference is
/// interpolated periodically onto the solution times.
pub fn compute_mpe(
    sol: &TimeSeriesSolution<f64>,
    sol_node: NodeId,
    reference: &TimeSeriesSolution<f64>,
    ref_node: NodeId,
) -> Result<f64, PipelineError> {
    let p = sol.pressure(sol_node).ok_or_else(|| PipelineError::Invalid(format!("solution has no node {sol_node}")))?;
    let r = reference
        .pressure(ref_node)
        .ok_or_else(|| PipelineError::Invalid(format!("reference has no node {ref_node}")))?;
    if p.is_empty() || r.is_empty() {
        return Err(PipelineError::GridMismatch("empty series".into()));
    }
    let span = uniform_period(&reference.times).unwrap_or(1.0);
    let tol = 1e-9 * span.abs().max(1.0);
    let aligned = sol.times.len() == reference.times.len()
        && sol.times.iter().zip(&reference.times).all(|(a, b)| (a - b).abs() <= tol);
    let r: Vec<f64> = if aligned {
        r.to_vec()
    } else {
        let (Some(ps), Some(pr)) = (uniform_period(&sol.times), uniform_period(&reference.times)) else {
            return Err(PipelineError::GridMismatch("need at least two samples per series".into()));
        };
        if (ps - pr).abs() > 1e-6 * pr.abs() {
            return Err(PipelineError::GridMismatch(format!("solution spans {ps}, reference spans {pr}")));
        }
        let t0 = reference.times[0];
        let wave = Waveform::new(reference.times.iter().map(|t| t - t0).collect(), r.to_vec());
        sol.times.iter().map(|t| wave.eval(t - t0, pr)).collect()
    };
    let mut worst = (0usize, -1.0f64);
    for (k, (a, b)) in p.iter().zip(&r).enumerate() {
        let d = (a - b).abs();
        if d > worst.1 {
            worst = (k, d);
        }
    }
    if !worst.1.is_finite() {
        return Err(PipelineError::Invalid("non-finite pressure".into()));
    }
    let scale = r[worst.0].abs();
    if scale == 0.0 {
        return Err(PipelineError::Invalid("reference pressure is zero at the time of maximum error".into()));
    }
    Ok(100.0 * worst.1 / scale)
}

/// Assembles the modality's parameter set, simulates and scores it against
/// the reference inlet pressure.
pub fn run_modality(
    prep: &PreparedGeometry,
    modality: Modality,
    models: Option<&ParameterModels<f64>>,
    optimal: Option<&ElementParameterMap<f64>>,
    reference: &TimeSeriesSolution<f64>,
    reference_inlet: NodeId,
    cfg: &PipelineConfig,
) -> Result<ModalityRun, PipelineError> {
    let (net, parameters, inlet) = match modality {
        Modality::Baseline => (prep.raw_network(&prep.raw_baseline, cfg)?, prep.raw_baseline.clone(), prep.raw.root),
        Modality::Optimal => {
            let p = optimal.ok_or_else(|| PipelineError::Invalid("optimal modality needs calibrated parameters".into()))?;
            (prep.processed_network(p, cfg)?, p.clone(), prep.processed.root)
        }
        learned => {
            let models = models.ok_or_else(|| PipelineError::Invalid(format!("{learned} needs trained models")))?;
            let kinds = learned.learned().expect("learned modality");
            let p = predict_parameters(models, &prep.processed, &prep.features, cfg.flavor, &prep.baseline, kinds)?;
            (prep.processed_network(&p, cfg)?, p, prep.processed.root)
        }
    };
    let solution = simulate(&net, &cfg.sim())?.last_cycle;
    let mpe = compute_mpe(&solution, inlet, reference, reference_inlet)?;
    Ok(ModalityRun { modality, parameters, solution, mpe })
}
