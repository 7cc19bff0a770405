use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::network::Diagnostic;
use super::{
    poiseuille_parameters, BoundaryCondition, CircuitNetwork, Element, ElementId, ElementKind, ElementParameters,
    FluidProperties, ModelFlavor, NodeId, ParamKind, Waveform,
};
use crate::geometry::{Discretization, PointId};
use crate::Real;

/// Θ (plus capacitance) for every element of a network.
pub type ElementParameterMap<T> = BTreeMap<ElementId, ElementParameters<T>>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AssemblyError {
    #[error("no parameters supplied for element {0}")]
    MissingParameters(ElementId),
    #[error("no boundary condition for boundary node {0}")]
    MissingBoundary(NodeId),
    #[error("no outlet boundary condition for centerline outlet point {0}")]
    MissingOutletBoundary(PointId),
    #[error("node id {0} appears more than once in the discretization")]
    DuplicateNode(NodeId),
    #[error("invalid vessel geometry on element {element}: {reason}")]
    InvalidGeometry { element: ElementId, reason: String },
    #[error("assembled network is invalid: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Diagnostic>),
    #[error("{0}")]
    Io(String),
}

/// Boundary conditions of one geometry, independent of its discretization.
///
/// Outlet conditions are keyed by the centerline leaf point they belong to so
/// they survive splitting and entrance-length adjustment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct BoundarySpec<T: Real> {
    pub cycle_period: T,
    pub inflow: Waveform<T>,
    pub outlets: BTreeMap<PointId, BoundaryCondition<T>>,
}

impl<T: Real> BoundarySpec<T> {
    /// Attaches the inflow to the root node and each outlet condition to the
    /// leaf node sitting on its point.
    pub fn bind(&self, disc: &Discretization<T>) -> Result<BTreeMap<NodeId, BoundaryCondition<T>>, AssemblyError> {
        let mut out = BTreeMap::from([(disc.root, BoundaryCondition::Flow(self.inflow.clone()))]);
        for leaf in disc.leaf_nodes() {
            let point = disc.node_point(leaf);
            let bc = self.outlets.get(&point).ok_or(AssemblyError::MissingOutletBoundary(point))?;
            out.insert(leaf, bc.clone());
        }
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("boundary spec serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, AssemblyError> {
        serde_json::from_str(text).map_err(|e| AssemblyError::Io(format!("malformed boundary file: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, AssemblyError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| AssemblyError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), AssemblyError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| AssemblyError::Io(format!("{}: {e}", path.display())))
    }
}

/// Builds and validates a network from a discretization.
///
/// Connectors always receive frozen zero parameters. Junction pairs leading to
/// a connector get R_quad and L frozen at zero; their R_lin stays as given.
pub fn assemble_network<T: Real>(
    disc: &Discretization<T>,
    params: &ElementParameterMap<T>,
    bcs: &BTreeMap<NodeId, BoundaryCondition<T>>,
    fluid: FluidProperties<T>,
    cycle_period: T,
) -> Result<CircuitNetwork<T>, AssemblyError> {
    let mut ids = BTreeSet::new();
    for n in &disc.nodes {
        if !ids.insert(n.id) {
            return Err(AssemblyError::DuplicateNode(n.id));
        }
    }
    let mut elements = Vec::new();
    for e in disc.elements() {
        let p = match e.kind {
            ElementKind::Connector => {
                let c = params.get(&e.id).map(|p| p.capacitance).unwrap_or_else(|| ElementParameters::<T>::frozen_zero().capacitance);
                ElementParameters::frozen_zero().with_capacitance(c)
            }
            _ => {
                let mut p = *params.get(&e.id).ok_or(AssemblyError::MissingParameters(e.id))?;
                if disc.junction_outlet(e.id).is_some_and(|(_, o)| o.leads_to_connector()) {
                    for k in [ParamKind::RQuad, ParamKind::Inductance] {
                        p.set(k, T::zero());
                        p.frozen.insert(k);
                    }
                }
                p
            }
        };
        let geometry = disc.vessel(e.id).map(|v| v.geometry);
        elements.push(Element { id: e.id, kind: e.kind, inlet: e.inlet, outlet: e.outlet, params: p, geometry });
    }
    let mut boundary = vec![disc.root];
    boundary.extend(disc.leaf_nodes());
    for n in boundary {
        if !bcs.contains_key(&n) {
            return Err(AssemblyError::MissingBoundary(n));
        }
    }
    let net = CircuitNetwork { fluid, cycle_period, elements, boundary_conditions: bcs.clone() };
    let diagnostics = net.validate();
    if diagnostics.is_empty() {
        Ok(net)
    } else {
        Err(AssemblyError::Invalid(diagnostics))
    }
}

/// Uncalibrated parameters: Poiseuille for vessels, Poiseuille of the absorbed
/// outlet segment (or zero) for junction pairs, frozen zero for connectors.
/// The RI flavor zeroes every R_quad.
pub fn baseline_parameters<T: Real>(
    disc: &Discretization<T>,
    fluid: &FluidProperties<T>,
    flavor: ModelFlavor,
) -> Result<ElementParameterMap<T>, AssemblyError> {
    let mut map = ElementParameterMap::new();
    for e in disc.elements() {
        let geometry = match e.kind {
            ElementKind::Vessel => disc.vessel(e.id).map(|v| v.geometry),
            ElementKind::Junction => disc.junction_outlet(e.id).and_then(|(_, o)| o.absorbed_geometry),
            ElementKind::Connector => {
                map.insert(e.id, ElementParameters::frozen_zero());
                continue;
            }
        };
        let mut p = match geometry {
            Some(g) => poiseuille_parameters(fluid, &g)
                .map_err(|err| AssemblyError::InvalidGeometry { element: e.id, reason: err.0 })?,
            None => ElementParameters::new(T::zero(), T::zero(), T::zero()),
        };
        if !flavor.has_quadratic() {
            p.r_quad = T::zero();
        }
        map.insert(e.id, p);
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{discretize, entrance_length_adjust, fixtures, split_multi_outlet_junctions};

    fn spec_for(disc: &Discretization<f64>) -> BoundarySpec<f64> {
        let outlets = disc
            .leaf_nodes()
            .into_iter()
            .map(|n| (disc.node_point(n), BoundaryCondition::Resistance { resistance: 1000.0, distal_pressure: 0.0 }))
            .collect();
        BoundarySpec { cycle_period: 1.0, inflow: Waveform::constant(1.0, 1.0), outlets }
    }

    #[test]
    fn single_vessel_network() {
        let tree = fixtures::straight(10.0, 0.5, 1.0);
        let d = discretize::<f64>(&tree).unwrap();
        let fluid = FluidProperties::default();
        let params = baseline_parameters(&d, &fluid, ModelFlavor::Rri).unwrap();
        let bcs = spec_for(&d).bind(&d).unwrap();
        let net = assemble_network(&d, &params, &bcs, fluid, 1.0).unwrap();
        assert_eq!(net.nodes().len(), 2);
        assert_eq!(net.elements.len(), 1);
        assert!(net.validate().is_empty());
    }

    #[test]
    fn split_four_outlet_junction_has_two_frozen_connectors() {
        let tree = fixtures::multi_outlet(&[1.0, 2.0, 3.0, 4.0], &[6.0; 4], 0.5);
        let raw = discretize::<f64>(&tree).unwrap();
        let d = split_multi_outlet_junctions(&raw);
        let fluid = FluidProperties::default();
        let params = baseline_parameters(&d, &fluid, ModelFlavor::Rri).unwrap();
        let net = assemble_network(&d, &params, &spec_for(&raw).bind(&d).unwrap(), fluid, 1.0).unwrap();
        let connectors: Vec<_> = net.elements.iter().filter(|e| e.kind == ElementKind::Connector).collect();
        assert_eq!(connectors.len(), 2);
        for c in connectors {
            assert!(c.params.frozen.is_all());
            assert_eq!((c.params.r_lin, c.params.r_quad, c.params.inductance), (0.0, 0.0, 0.0));
        }
        for j in &d.junctions {
            for o in j.outlets.iter().filter(|o| o.leads_to_connector()) {
                let f = net.element(o.element).unwrap().params.frozen;
                assert!(f.contains(ParamKind::RQuad) && f.contains(ParamKind::Inductance));
                assert!(!f.contains(ParamKind::RLin));
            }
        }
    }

    #[test]
    fn missing_parameters_are_reported() {
        let tree = fixtures::y_shape(1.0, 0.7);
        let d = discretize::<f64>(&tree).unwrap();
        let fluid = FluidProperties::default();
        let mut params = baseline_parameters(&d, &fluid, ModelFlavor::Ri).unwrap();
        let removed = d.vessels[1].element;
        params.remove(&removed);
        let err = assemble_network(&d, &params, &spec_for(&d).bind(&d).unwrap(), fluid, 1.0).unwrap_err();
        assert_eq!(err, AssemblyError::MissingParameters(removed));
    }

    #[test]
    fn outlet_conditions_follow_absorbed_vessels() {
        let tree = fixtures::multi_outlet(&[1.0, 1.0, 1.0], &[2.0, 20.0, 4.0], 0.5);
        let raw = discretize::<f64>(&tree).unwrap();
        let spec = spec_for(&raw);
        let d = entrance_length_adjust(&split_multi_outlet_junctions(&raw), &tree, 10.0);
        let fluid = FluidProperties::default();
        let params = baseline_parameters(&d, &fluid, ModelFlavor::Ri).unwrap();
        let net = assemble_network(&d, &params, &spec.bind(&d).unwrap(), fluid, 1.0).unwrap();
        assert!(net.validate().is_empty());
        assert!(net.elements.iter().all(|e| e.params.r_quad == 0.0));
    }

    #[test]
    fn spec_json_round_trip() {
        let d = discretize::<f64>(&fixtures::y_shape(1.0, 0.7)).unwrap();
        let spec = spec_for(&d);
        assert_eq!(BoundarySpec::from_json(&spec.to_json()).unwrap(), spec);
    }
}
