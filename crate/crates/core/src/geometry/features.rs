use serde::{Deserialize, Serialize};

use super::centerline::{dist, CenterlineTree, PointId};
use super::discretization::{BaselineFlows, Discretization};
use super::GeometryError;
use crate::circuit::{poiseuille_parameters, ElementId, ElementKind, FluidProperties, VesselGeometry};
use crate::Real;

/// Column names in dataset order. `phi` is absent from vessel vectors.
pub const FEATURE_NAMES: [&str; 18] = [
    "r_in",
    "r_out",
    "r_min",
    "r_max",
    "r_out_star",
    "r_min_star",
    "r_max_star",
    "l",
    "l_star",
    "tau",
    "theta",
    "phi",
    "R_poiseuille_absorbed",
    "R_stenosis_absorbed",
    "L_absorbed",
    "R_poiseuille_calculated",
    "R_stenosis_calculated",
    "L_calculated",
];

pub const VESSEL_FEATURES: usize = 17;
pub const JUNCTION_FEATURES: usize = 18;
const PHI_COLUMN: usize = 11;

/// Geometric description of one vessel or junction-pair element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct FeatureVector<T: Real> {
    pub element: ElementId,
    pub kind: ElementKind,
    pub r_in: T,
    pub r_out: T,
    pub r_min: T,
    pub r_max: T,
    /// r_out / r_in
    pub r_out_ratio: T,
    /// r_min / r_out
    pub r_min_ratio: T,
    /// r_max / r_out
    pub r_max_ratio: T,
    pub length: T,
    /// l / r_in
    pub length_ratio: T,
    pub tortuosity: T,
    pub angle: T,
    /// Q_inlet / Q_outlet from a baseline simulation; junction pairs only.
    pub flow_ratio: Option<T>,
    pub absorbed_r_poiseuille: T,
    pub absorbed_r_stenosis: T,
    pub absorbed_inductance: T,
    pub calculated_r_poiseuille: T,
    pub calculated_r_stenosis: T,
    pub calculated_inductance: T,
}

impl<T: Real> FeatureVector<T> {
    /// All 18 columns in dataset order; `phi` is `None` for vessels.
    pub fn columns(&self) -> [Option<T>; 18] {
        [
            Some(self.r_in),
            Some(self.r_out),
            Some(self.r_min),
            Some(self.r_max),
            Some(self.r_out_ratio),
            Some(self.r_min_ratio),
            Some(self.r_max_ratio),
            Some(self.length),
            Some(self.length_ratio),
            Some(self.tortuosity),
            Some(self.angle),
            self.flow_ratio,
            Some(self.absorbed_r_poiseuille),
            Some(self.absorbed_r_stenosis),
            Some(self.absorbed_inductance),
            Some(self.calculated_r_poiseuille),
            Some(self.calculated_r_stenosis),
            Some(self.calculated_inductance),
        ]
    }

    /// Network input: 17 values for vessels, 18 (with `phi`) for junction pairs.
    pub fn to_input(&self) -> Vec<T> {
        let cols = self.columns();
        match self.kind {
            ElementKind::Junction => cols.iter().map(|c| c.unwrap_or_else(T::zero)).collect(),
            _ => cols.iter().enumerate().filter(|(i, _)| *i != PHI_COLUMN).map(|(_, c)| c.unwrap()).collect(),
        }
    }

    /// Checks τ ≥ 1, θ ∈ [0, π], the radius orderings and φ ≥ 1.
    pub fn invariant_violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.tortuosity >= T::one()) {
            v.push(format!("tortuosity {} < 1", self.tortuosity));
        }
        if !(self.angle >= T::zero() && self.angle <= T::PI()) {
            v.push(format!("angle {} outside [0, pi]", self.angle));
        }
        if !(self.r_min <= self.r_in.min(self.r_out)) {
            v.push(format!("r_min {} exceeds min(r_in, r_out)", self.r_min));
        }
        if !(self.r_max >= self.r_in.max(self.r_out)) {
            v.push(format!("r_max {} below max(r_in, r_out)", self.r_max));
        }
        if let Some(phi) = self.flow_ratio {
            if !(phi >= T::one() - T::lit(1e-9)) {
                v.push(format!("flow ratio {phi} < 1"));
            }
        }
        v
    }
}

fn absorbed_parameters<T: Real>(fluid: &FluidProperties<T>, geometry: Option<&VesselGeometry<T>>) -> [T; 3] {
    match geometry.and_then(|g| poiseuille_parameters(fluid, g).ok()) {
        Some(p) => [p.r_lin, p.r_quad, p.inductance],
        None => [T::zero(); 3],
    }
}

fn path_features<T: Real>(
    tree: &CenterlineTree<T>,
    fluid: &FluidProperties<T>,
    element: ElementId,
    kind: ElementKind,
    path: &[PointId],
) -> Result<FeatureVector<T>, GeometryError> {
    let first = tree.point(path[0]);
    let last = tree.point(*path.last().unwrap());
    let (r_in, r_out) = (first.misr, last.misr);
    let mut r_min = r_in;
    let mut r_max = r_in;
    for p in path {
        let r = tree.point(*p).misr;
        r_min = r_min.min(r);
        r_max = r_max.max(r);
    }
    let length = tree.path_length(path);
    let straight = dist(&first.xyz, &last.xyz);
    let tortuosity = if straight > T::zero() {
        (length / straight).max(T::one())
    } else if length > T::zero() {
        return Err(GeometryError::TortuosityUndefined(element));
    } else {
        T::one()
    };
    let cos = crate::scalar::dot(&first.tangent, &last.tangent).max(-T::one()).min(T::one());
    let pi = T::PI();
    let calculated = poiseuille_parameters(
        fluid,
        &VesselGeometry { length, area: pi * r_out * r_out, stenosis_area: pi * r_min * r_min },
    )
    .expect("centerline radii are positive");
    Ok(FeatureVector {
        element,
        kind,
        r_in,
        r_out,
        r_min,
        r_max,
        r_out_ratio: r_out / r_in,
        r_min_ratio: r_min / r_out,
        r_max_ratio: r_max / r_out,
        length,
        length_ratio: length / r_in,
        tortuosity,
        angle: cos.acos(),
        flow_ratio: None,
        absorbed_r_poiseuille: T::zero(),
        absorbed_r_stenosis: T::zero(),
        absorbed_inductance: T::zero(),
        calculated_r_poiseuille: calculated.r_lin,
        calculated_r_stenosis: calculated.r_quad,
        calculated_inductance: calculated.inductance,
    })
}

/// Table of geometric features for one element, measured along its
/// inlet→outlet centerline path (junction pairs include absorbed segments).
///
/// Junction pairs need `baseline_flows` for the flow ratio.
pub fn extract_features<T: Real>(
    disc: &Discretization<T>,
    tree: &CenterlineTree<T>,
    fluid: &FluidProperties<T>,
    element: ElementId,
    baseline_flows: Option<&BaselineFlows<T>>,
) -> Result<FeatureVector<T>, GeometryError> {
    if let Some(v) = disc.vessel(element) {
        return path_features(tree, fluid, element, ElementKind::Vessel, &v.path);
    }
    if let Some((junction, outlet)) = disc.junction_outlet(element) {
        let mut f = path_features(tree, fluid, element, ElementKind::Junction, &outlet.path)?;
        [f.absorbed_r_poiseuille, f.absorbed_r_stenosis, f.absorbed_inductance] =
            absorbed_parameters(fluid, outlet.absorbed_geometry.as_ref());
        let flows = baseline_flows.ok_or(GeometryError::MissingBaselineFlow(element))?;
        let flow_of = |e: ElementId| flows.get(&e).copied().ok_or(GeometryError::MissingBaselineFlow(e));
        let q_out = flow_of(element)?;
        let mut q_in = T::zero();
        for o in &junction.outlets {
            q_in += flow_of(o.element)?;
        }
        for (e, q) in [(element, q_out), (element, q_in)] {
            if !(q > T::zero()) {
                return Err(GeometryError::NonPositiveFlow { element: e, flow: q.as_f64() });
            }
        }
        f.flow_ratio = Some(q_in / q_out);
        return Ok(f);
    }
    if let Some(c) = disc.connector(element) {
        return path_features(tree, fluid, element, ElementKind::Connector, &[c.point]);
    }
    Err(GeometryError::UnknownElement(element))
}

/// Features of every vessel and junction pair, ordered by element id.
pub fn extract_all_features<T: Real>(
    disc: &Discretization<T>,
    tree: &CenterlineTree<T>,
    fluid: &FluidProperties<T>,
    baseline_flows: Option<&BaselineFlows<T>>,
) -> Result<Vec<FeatureVector<T>>, GeometryError> {
    disc.elements()
        .into_iter()
        .filter(|e| e.kind != ElementKind::Connector)
        .map(|e| extract_features(disc, tree, fluid, e.id, baseline_flows))
        .collect()
}
