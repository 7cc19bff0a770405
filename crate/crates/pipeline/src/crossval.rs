use std::collections::BTreeMap;
use std::path::Path;

use rand::{seq::SliceRandom, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hybrid0d::calibrate::{CalibrationResult, ReferenceSeries};
use hybrid0d::circuit::{ElementKind, NodeId};
use hybrid0d::nn::{ModelTarget, ParameterModel, ParameterModels, TrainingSample};
use hybrid0d::solver::TimeSeriesSolution;

use crate::cohort::write;
use crate::report::{summarize, TrialInfo};
use crate::{
    calibrate_geometry, prepare, run_modality, CohortSpec, EvaluationReport, GeometryResult, Modality, PipelineConfig,
    PipelineError, PreparedGeometry, ReferenceTopology,
};

/// A cohort geometry ready for evaluation.
#[derive(Debug, Clone)]
pub struct LoadedGeometry {
    pub prep: PreparedGeometry,
    pub reference: TimeSeriesSolution<f64>,
    pub reference_inlet: NodeId,
    /// Calibrated parameters, or why calibration was not possible.
    pub calibration: Result<CalibrationResult<f64>, String>,
}

/// Prepares and calibrates every geometry of a cohort.
pub fn load_geometries(dir: &Path, spec: &CohortSpec, cfg: &PipelineConfig) -> Result<Vec<LoadedGeometry>, PipelineError> {
    let mut out = Vec::with_capacity(spec.geometries.len());
    for entry in &spec.geometries {
        let prep = prepare(&entry.id, entry.load_centerline(dir)?, entry.load_boundary(dir)?, cfg)?;
        let reference = entry.load_reference(dir)?;
        let (reference_inlet, calibration) = match entry.reference_topology {
            ReferenceTopology::Processed => {
                let calibration = ReferenceSeries::from_solution(reference.clone())
                    .map_err(PipelineError::from)
                    .and_then(|r| calibrate_geometry(&prep, &r, cfg))
                    .map_err(|e| e.to_string());
                (prep.processed.root, calibration)
            }
            ReferenceTopology::Raw => (prep.raw.root, Err("reference is not on the processed topology".to_string())),
        };
        out.push(LoadedGeometry { prep, reference, reference_inlet, calibration });
    }
    Ok(out)
}

/// Held-out index sets: `trials` sets of max(1, round(fraction·n)) indices,
/// taken consecutively from a seeded permutation so they are disjoint
/// whenever trials·size ≤ n.
pub fn holdout_sets(n: usize, trials: usize, fraction: f64, seed: u64) -> Result<Vec<Vec<usize>>, PipelineError> {
    if n < 5 {
        return Err(PipelineError::Invalid(format!("cross-validation needs at least 5 geometries (got {n})")));
    }
    if trials == 0 {
        return Err(PipelineError::Invalid("at least one trial is required".into()));
    }
    let size = ((fraction * n as f64).round() as usize).max(1);
    if size >= n {
        return Err(PipelineError::Invalid(format!("holdout of {size} leaves no training geometries")));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok((0..trials)
        .map(|t| {
            let mut set: Vec<usize> = (0..size).map(|j| perm[(t * size + j) % n]).collect();
            set.sort_unstable();
            set
        })
        .collect())
}

/// Rows for one network: every element of the target kind (junction pairs
/// leading into connectors excluded) with its calibrated value.
pub fn collect_samples(geoms: &[&LoadedGeometry], target: ModelTarget) -> Vec<TrainingSample<f64>> {
    let mut out = Vec::new();
    for g in geoms {
        let Ok(cal) = &g.calibration else { continue };
        let disc = &g.prep.processed;
        for e in disc.elements().into_iter().filter(|e| e.kind == target.kind) {
            if e.kind == ElementKind::Junction && disc.junction_outlet(e.id).is_some_and(|(_, o)| o.leads_to_connector()) {
                continue;
            }
            let (Some(f), Some(p)) = (g.prep.features.get(&e.id), cal.parameters.get(&e.id)) else { continue };
            out.push(TrainingSample {
                features: f.to_input(),
                target: p.get(target.param),
                gamma: g.prep.generations.get(&e.id).copied().unwrap_or(0),
                geometry: g.prep.id.clone(),
                element: e.id,
            });
        }
    }
    out
}

/// Trains every network the flavor needs. Targets without rows are skipped.
pub fn train_models(
    geoms: &[&LoadedGeometry],
    cfg: &PipelineConfig,
    seed: u64,
) -> Result<(ParameterModels<f64>, BTreeMap<String, Vec<f64>>), PipelineError> {
    let mut models = ParameterModels::default();
    let mut histories = BTreeMap::new();
    for (k, target) in ModelTarget::active(cfg.flavor).enumerate() {
        let samples = collect_samples(geoms, target);
        if samples.is_empty() {
            continue;
        }
        let tc = cfg.training(seed.wrapping_mul(31).wrapping_add(k as u64));
        let (model, history) = ParameterModel::fit(target, &samples, &tc)?;
        models.insert(model);
        histories.insert(target.file_stem(), history);
    }
    Ok((models, histories))
}

pub fn history_csv(history: &[f64]) -> String {
    let mut s = String::from("epoch,loss\n");
    for (e, l) in history.iter().enumerate() {
        s.push_str(&format!("{e},{l}\n"));
    }
    s
}

/// Repeated hold-out evaluation of all five modalities.
///
/// Per trial the held-out geometries are excluded from sample collection,
/// standardization and training. When `artifacts` is given, each trial's
/// models and loss histories are written under `trial_<k>/`.
pub fn crossval(
    name: &str,
    geoms: &[LoadedGeometry],
    cfg: &PipelineConfig,
    artifacts: Option<&Path>,
) -> Result<EvaluationReport, PipelineError> {
    let sets = holdout_sets(geoms.len(), cfg.trials, cfg.holdout_fraction, cfg.seed)?;
    let mut rows = Vec::new();
    let mut trials = Vec::new();
    for (t, held) in sets.iter().enumerate() {
        let training: Vec<&LoadedGeometry> =
            geoms.iter().enumerate().filter(|(i, _)| !held.contains(i)).map(|(_, g)| g).collect();
        let (models, histories) = train_models(&training, cfg, cfg.seed ^ ((t as u64 + 1) << 32))?;
        if let Some(dir) = artifacts {
            let trial_dir = dir.join(format!("trial_{t}"));
            models.save_dir(trial_dir.join("models"))?;
            for (name, h) in &histories {
                write(&trial_dir.join(format!("training_{name}.csv")), &history_csv(h))?;
            }
        }
        for &i in held {
            let g = &geoms[i];
            let optimal = g.calibration.as_ref().ok().map(|c| &c.parameters);
            for m in Modality::ALL {
                let run = if m == Modality::Optimal && optimal.is_none() {
                    Err(PipelineError::Invalid(g.calibration.as_ref().err().cloned().unwrap_or_default()))
                } else {
                    run_modality(&g.prep, m, Some(&models), optimal, &g.reference, g.reference_inlet, cfg)
                };
                rows.push(GeometryResult::from_run(t, &g.prep.id, m, run.map(|r| r.mpe)));
            }
        }
        trials.push(TrialInfo {
            trial: t,
            held_out: held.iter().map(|&i| geoms[i].prep.id.clone()).collect(),
            training: training.iter().map(|g| g.prep.id.clone()).collect(),
        });
    }
    let summary = summarize(&rows, sets.len());
    Ok(EvaluationReport {
        cohort: name.to_string(),
        flavor: cfg.flavor,
        loss: cfg.loss,
        seed: cfg.seed,
        trials,
        rows,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_geometries_give_five_distinct_singletons() {
        let sets = holdout_sets(10, 5, 0.1, 7).unwrap();
        assert!(sets.iter().all(|s| s.len() == 1));
        let mut all: Vec<usize> = sets.concat();
        all.sort_unstable();
        all.dedup();
        assert_eq!(all.len(), 5);
        assert_eq!(sets, holdout_sets(10, 5, 0.1, 7).unwrap());
    }

    #[test]
    fn fifteen_geometries_hold_out_two_disjoint() {
        let sets = holdout_sets(15, 5, 0.1, 1).unwrap();
        let mut all: Vec<usize> = sets.concat();
        assert_eq!(all.len(), 10);
        all.sort_unstable();
        all.dedup();
        assert_eq!(all.len(), 10);
    }

    #[test]
    fn rejects_small_cohorts() {
        assert!(holdout_sets(4, 5, 0.1, 0).is_err());
        assert!(holdout_sets(6, 5, 1.0, 0).is_err());
    }
}
