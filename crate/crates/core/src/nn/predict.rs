use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{train, Architecture, Mlp, NnError, Standardizer, TrainConfig, TrainingSample};
use crate::circuit::{ElementKind, ElementParameterMap, ElementParameters, ModelFlavor, ParamKind};
use crate::geometry::{Discretization, FeatureVector};
use crate::Real;

/// Which parameter of which element kind a network predicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelTarget {
    pub kind: ElementKind,
    pub param: ParamKind,
}

impl ModelTarget {
    pub const ALL: [ModelTarget; 6] = [
        ModelTarget { kind: ElementKind::Vessel, param: ParamKind::RLin },
        ModelTarget { kind: ElementKind::Vessel, param: ParamKind::RQuad },
        ModelTarget { kind: ElementKind::Vessel, param: ParamKind::Inductance },
        ModelTarget { kind: ElementKind::Junction, param: ParamKind::RLin },
        ModelTarget { kind: ElementKind::Junction, param: ParamKind::RQuad },
        ModelTarget { kind: ElementKind::Junction, param: ParamKind::Inductance },
    ];

    pub fn new(kind: ElementKind, param: ParamKind) -> Self {
        Self { kind, param }
    }

    /// Junction inductance: 4 layers of 20; everything else: 2 layers of 10.
    pub fn architecture(self) -> Architecture {
        match (self.kind, self.param) {
            (ElementKind::Junction, ParamKind::Inductance) => Architecture::uniform(20, 4),
            _ => Architecture::uniform(10, 2),
        }
    }

    pub fn input_dim(self) -> usize {
        match self.kind {
            ElementKind::Junction => crate::geometry::JUNCTION_FEATURES,
            _ => crate::geometry::VESSEL_FEATURES,
        }
    }

    /// Targets needed under `flavor`.
    pub fn active(flavor: ModelFlavor) -> impl Iterator<Item = ModelTarget> {
        Self::ALL.into_iter().filter(move |t| flavor.has_quadratic() || t.param != ParamKind::RQuad)
    }

    /// File stem such as `vessel_R_lin`.
    pub fn file_stem(self) -> String {
        let kind = match self.kind {
            ElementKind::Vessel => "vessel",
            ElementKind::Junction => "junction",
            ElementKind::Connector => "connector",
        };
        format!("{kind}_{}", self.param.as_str())
    }
}

impl fmt::Display for ModelTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.file_stem())
    }
}

/// A trained network with the statistics needed to apply it to raw features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ParameterModel<T: Real> {
    pub target: ModelTarget,
    pub network: Mlp<T>,
    pub standardizer: Standardizer<T>,
    pub config: TrainConfig,
    /// Geometries whose rows were used for fitting.
    pub training_geometries: Vec<String>,
}

impl<T: Real> ParameterModel<T> {
    /// Fits the standardizer on `samples` and trains the target's network.
    pub fn fit(target: ModelTarget, samples: &[TrainingSample<T>], cfg: &TrainConfig) -> Result<(Self, Vec<T>), NnError> {
        Self::fit_with(target, samples, &target.architecture(), cfg)
    }

    pub fn fit_with(
        target: ModelTarget,
        samples: &[TrainingSample<T>],
        arch: &Architecture,
        cfg: &TrainConfig,
    ) -> Result<(Self, Vec<T>), NnError> {
        if samples.is_empty() {
            return Err(NnError::EmptyBatch);
        }
        let raw: Vec<Vec<T>> = samples.iter().map(|s| s.features.clone()).collect();
        let ys: Vec<T> = samples.iter().map(|s| s.target).collect();
        let gammas: Vec<u32> = samples.iter().map(|s| s.gamma).collect();
        let standardizer = Standardizer::fit(&raw, &ys);
        let xs: Vec<Vec<T>> = raw.iter().map(|x| standardizer.features(x)).collect();
        let zs: Vec<T> = ys.iter().map(|y| standardizer.target(*y)).collect();
        let (network, history) = train(&xs, &zs, &gammas, arch, cfg)?;
        let mut training_geometries: Vec<String> = samples.iter().map(|s| s.geometry.clone()).collect();
        training_geometries.sort();
        training_geometries.dedup();
        Ok((Self { target, network, standardizer, config: cfg.clone(), training_geometries }, history))
    }

    /// De-standardized prediction for raw features.
    pub fn predict(&self, features: &[T]) -> Result<T, NnError> {
        let z = self.network.forward(&self.standardizer.features(features))?;
        Ok(self.standardizer.inverse_target(z))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, NnError> {
        serde_json::from_str(text).map_err(|e| NnError::Io(format!("model file: {e}")))
    }
}

/// Which element kinds take network predictions instead of baseline values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LearnedKinds {
    pub vessels: bool,
    pub junctions: bool,
}

impl LearnedKinds {
    pub const BOTH: LearnedKinds = LearnedKinds { vessels: true, junctions: true };
    pub const VESSELS: LearnedKinds = LearnedKinds { vessels: true, junctions: false };
    pub const JUNCTIONS: LearnedKinds = LearnedKinds { vessels: false, junctions: true };
}

/// Up to six networks keyed by target.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ParameterModels<T: Real> {
    pub models: Vec<ParameterModel<T>>,
}

impl<T: Real> ParameterModels<T> {
    pub fn get(&self, target: ModelTarget) -> Option<&ParameterModel<T>> {
        self.models.iter().find(|m| m.target == target)
    }

    pub fn insert(&mut self, model: ParameterModel<T>) {
        self.models.retain(|m| m.target != model.target);
        self.models.push(model);
        self.models.sort_by_key(|m| ModelTarget::ALL.iter().position(|t| *t == m.target));
    }

    /// One `<target>.json` file per model.
    pub fn save_dir(&self, dir: impl AsRef<Path>) -> Result<(), NnError> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| NnError::Io(format!("{}: {e}", dir.display())))?;
        for m in &self.models {
            let path = dir.join(format!("{}.json", m.target.file_stem()));
            std::fs::write(&path, m.to_json()).map_err(|e| NnError::Io(format!("{}: {e}", path.display())))?;
        }
        Ok(())
    }

    /// Loads whichever of the six model files exist in `dir`.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self, NnError> {
        let dir = dir.as_ref();
        let mut out = Self::default();
        for t in ModelTarget::ALL {
            let path = dir.join(format!("{}.json", t.file_stem()));
            if !path.exists() {
                continue;
            }
            let text = std::fs::read_to_string(&path).map_err(|e| NnError::Io(format!("{}: {e}", path.display())))?;
            out.insert(ParameterModel::from_json(&text)?);
        }
        Ok(out)
    }
}

/// Starts from `baseline` and overwrites the learned element kinds with network
/// predictions.
///
/// Connectors stay frozen at zero. Junction pairs that lead into a connector
/// keep their baseline values, as their zero-length geometry carries no
/// features worth learning from. The RI flavor forces every R_quad to zero.
pub fn predict_parameters<T: Real>(
    models: &ParameterModels<T>,
    disc: &Discretization<T>,
    features: &BTreeMap<crate::circuit::ElementId, FeatureVector<T>>,
    flavor: ModelFlavor,
    baseline: &ElementParameterMap<T>,
    learned: LearnedKinds,
) -> Result<ElementParameterMap<T>, NnError> {
    let mut out = baseline.clone();
    for e in disc.elements() {
        let learn = match e.kind {
            ElementKind::Connector => {
                out.insert(e.id, ElementParameters::frozen_zero());
                continue;
            }
            ElementKind::Vessel => learned.vessels,
            ElementKind::Junction => {
                learned.junctions && !disc.junction_outlet(e.id).is_some_and(|(_, o)| o.leads_to_connector())
            }
        };
        let entry = out.entry(e.id).or_insert_with(|| ElementParameters::new(T::zero(), T::zero(), T::zero()));
        if learn {
            let fv = features.get(&e.id).ok_or(NnError::MissingFeatures(e.id.0))?;
            let x = fv.to_input();
            for t in ModelTarget::active(flavor).filter(|t| t.kind == e.kind) {
                let model = models.get(t).ok_or_else(|| NnError::MissingModel(t.to_string()))?;
                entry.set(t.param, model.predict(&x)?);
            }
        }
        if !flavor.has_quadratic() {
            entry.r_quad = T::zero();
        }
    }
    Ok(out)
}
