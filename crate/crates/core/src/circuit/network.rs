use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BoundaryCondition, Element, ElementId, ElementKind, FluidProperties, NodeId};
use crate::Real;

/// A runnable 0D model: elements, boundary conditions and fluid.
///
/// Nodes are implied by the element endpoints. The element graph, directed
/// from inlet to outlet, must form a tree rooted at the single inflow node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct CircuitNetwork<T: Real> {
    pub fluid: FluidProperties<T>,
    /// Cardiac cycle length in seconds.
    pub cycle_period: T,
    pub elements: Vec<Element<T>>,
    pub boundary_conditions: BTreeMap<NodeId, BoundaryCondition<T>>,
}

/// One violated network invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Diagnostic {
    InvalidFluid,
    InvalidCyclePeriod,
    DuplicateElement(ElementId),
    SelfLoop(ElementId),
    NoInflow,
    MultipleInflow(Vec<NodeId>),
    InflowHasUpstream(NodeId),
    MultipleUpstream { node: NodeId, elements: Vec<ElementId> },
    Unreachable(Vec<NodeId>),
    LeafWithoutBoundary(NodeId),
    LeafWithInflow(NodeId),
    BoundaryOnInteriorNode(NodeId),
    BoundaryOnUnknownNode(NodeId),
    InvalidBoundary { node: NodeId, reason: String },
    NonFiniteParameters(ElementId),
    NonPositiveCapacitance(ElementId),
    ConnectorNotZero(ElementId),
    MissingGeometry(ElementId),
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Diagnostic::*;
        match self {
            InvalidFluid => write!(f, "fluid properties must have density > 0, viscosity > 0, K_t >= 0"),
            InvalidCyclePeriod => write!(f, "cycle period must be positive and finite"),
            DuplicateElement(e) => write!(f, "element id {e} appears more than once"),
            SelfLoop(e) => write!(f, "element {e} has identical inlet and outlet node"),
            NoInflow => write!(f, "network has no prescribed-inflow node"),
            MultipleInflow(nodes) => write!(f, "network has {} prescribed-inflow nodes: {}", nodes.len(), join(nodes)),
            InflowHasUpstream(n) => write!(f, "inflow node {n} is the outlet of an element"),
            MultipleUpstream { node, elements } => {
                write!(f, "node {node} is the outlet of several elements: {}", join(elements))
            }
            Unreachable(nodes) => write!(f, "nodes not connected to the inflow: {}", join(nodes)),
            LeafWithoutBoundary(n) => write!(f, "leaf node {n} has no outlet boundary condition"),
            LeafWithInflow(n) => write!(f, "leaf node {n} carries an inflow condition"),
            BoundaryOnInteriorNode(n) => write!(f, "interior node {n} carries an outlet boundary condition"),
            BoundaryOnUnknownNode(n) => write!(f, "boundary condition refers to unknown node {n}"),
            InvalidBoundary { node, reason } => write!(f, "boundary condition at node {node}: {reason}"),
            NonFiniteParameters(e) => write!(f, "element {e} has non-finite parameters"),
            NonPositiveCapacitance(e) => write!(f, "element {e} has non-positive capacitance"),
            ConnectorNotZero(e) => write!(f, "connector {e} must have zero, fully frozen parameters"),
            MissingGeometry(e) => write!(f, "vessel element {e} geometry must have l >= 0 and positive areas"),
        }
    }
}

fn join<D: fmt::Display>(items: &[D]) -> String {
    items.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(", ")
}

#[derive(Debug, thiserror::Error)]
pub enum NetworkIoError {
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed network file {path}: {source}")]
    Json { path: String, source: serde_json::Error },
}

impl<T: Real> CircuitNetwork<T> {
    /// Sorted node ids referenced by any element.
    pub fn nodes(&self) -> Vec<NodeId> {
        let set: BTreeSet<NodeId> = self.elements.iter().flat_map(|e| [e.inlet, e.outlet]).collect();
        set.into_iter().collect()
    }

    pub fn element(&self, id: ElementId) -> Option<&Element<T>> {
        self.elements.iter().find(|e| e.id == id)
    }

    pub fn element_mut(&mut self, id: ElementId) -> Option<&mut Element<T>> {
        self.elements.iter_mut().find(|e| e.id == id)
    }

    pub fn inflow_node(&self) -> Option<NodeId> {
        self.boundary_conditions.iter().find(|(_, bc)| bc.is_inflow()).map(|(n, _)| *n)
    }

    /// Lists every violated invariant; an empty list means the network is runnable.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        if !self.fluid.is_valid() {
            out.push(Diagnostic::InvalidFluid);
        }
        if !(self.cycle_period > T::zero()) || !self.cycle_period.is_finite() {
            out.push(Diagnostic::InvalidCyclePeriod);
        }

        let mut seen = BTreeSet::new();
        for e in &self.elements {
            if !seen.insert(e.id) {
                out.push(Diagnostic::DuplicateElement(e.id));
            }
            if e.inlet == e.outlet {
                out.push(Diagnostic::SelfLoop(e.id));
            }
            if !e.params.is_finite() {
                out.push(Diagnostic::NonFiniteParameters(e.id));
            }
            if !(e.params.capacitance > T::zero()) {
                out.push(Diagnostic::NonPositiveCapacitance(e.id));
            }
            if e.kind == ElementKind::Connector {
                let p = &e.params;
                if p.r_lin != T::zero() || p.r_quad != T::zero() || p.inductance != T::zero() || !p.frozen.is_all() {
                    out.push(Diagnostic::ConnectorNotZero(e.id));
                }
            }
            if let Some(g) = &e.geometry {
                if !(g.length >= T::zero() && g.area > T::zero() && g.stenosis_area > T::zero()) {
                    out.push(Diagnostic::MissingGeometry(e.id));
                }
            }
        }

        let nodes = self.nodes();
        let node_set: BTreeSet<NodeId> = nodes.iter().copied().collect();
        let mut upstream: BTreeMap<NodeId, Vec<ElementId>> = BTreeMap::new();
        let mut downstream: BTreeMap<NodeId, Vec<&Element<T>>> = BTreeMap::new();
        for e in &self.elements {
            upstream.entry(e.outlet).or_default().push(e.id);
            downstream.entry(e.inlet).or_default().push(e);
        }

        for (node, bc) in &self.boundary_conditions {
            if !node_set.contains(node) {
                out.push(Diagnostic::BoundaryOnUnknownNode(*node));
            }
            if let Err(reason) = bc.validate(self.cycle_period) {
                out.push(Diagnostic::InvalidBoundary { node: *node, reason });
            }
        }

        let inflows: Vec<NodeId> =
            self.boundary_conditions.iter().filter(|(_, bc)| bc.is_inflow()).map(|(n, _)| *n).collect();
        match inflows.len() {
            0 => out.push(Diagnostic::NoInflow),
            1 => {}
            _ => out.push(Diagnostic::MultipleInflow(inflows.clone())),
        }

        for (node, ups) in &upstream {
            if ups.len() > 1 {
                out.push(Diagnostic::MultipleUpstream { node: *node, elements: ups.clone() });
            }
        }

        for node in &nodes {
            let has_down = downstream.contains_key(node);
            let has_up = upstream.contains_key(node);
            match self.boundary_conditions.get(node) {
                Some(bc) if bc.is_inflow() => {
                    if has_up {
                        out.push(Diagnostic::InflowHasUpstream(*node));
                    }
                    if !has_down {
                        out.push(Diagnostic::LeafWithInflow(*node));
                    }
                }
                Some(_) => {
                    if has_down {
                        out.push(Diagnostic::BoundaryOnInteriorNode(*node));
                    }
                }
                None => {
                    if !has_down {
                        out.push(Diagnostic::LeafWithoutBoundary(*node));
                    }
                }
            }
        }

        // Reachability from the inflow node along element directions.
        if let Some(root) = inflows.first() {
            let mut reached = BTreeSet::new();
            let mut stack = vec![*root];
            while let Some(n) = stack.pop() {
                if !reached.insert(n) {
                    continue;
                }
                if let Some(children) = downstream.get(&n) {
                    stack.extend(children.iter().map(|e| e.outlet));
                }
            }
            let missing: Vec<NodeId> = nodes.iter().filter(|n| !reached.contains(n)).copied().collect();
            if !missing.is_empty() {
                out.push(Diagnostic::Unreachable(missing));
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("network serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, NetworkIoError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| NetworkIoError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text).map_err(|source| NetworkIoError::Json { path: path.display().to_string(), source })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), NetworkIoError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json())
            .map_err(|source| NetworkIoError::Io { path: path.display().to_string(), source })
    }
}
