//! Labelled centerline trees and their vessel/junction discretization.

mod centerline;
mod discretization;
mod entrance;
mod features;
pub mod fixtures;
mod generation;
mod split;

pub use centerline::{CenterlineBuilder, CenterlinePoint, CenterlineTree, PointId, TANGENT_TOLERANCE};
pub use discretization::{
    discretize, path_geometry, BaselineFlows, Connector, ConnectorOrigin, DiscNode, Discretization, ElementRef,
    Junction, JunctionId, JunctionOutlet, OutletTarget, VesselSegment,
};
pub use entrance::{entrance_length_adjust, DEFAULT_ENTRANCE_LENGTH_FACTOR};
pub use features::{
    extract_all_features, extract_features, FeatureVector, FEATURE_NAMES, JUNCTION_FEATURES, VESSEL_FEATURES,
};
pub use generation::{generation_numbers, node_generations, GenerationMap};
pub use split::split_multi_outlet_junctions;

use crate::circuit::ElementId;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("centerline schema violation: {0}")]
    Schema(String),
    #[error("centerline connectivity is not a tree: {0}")]
    NotATree(String),
    #[error("tangent at point {point} has norm {norm}, expected 1")]
    NonUnitTangent { point: PointId, norm: f64 },
    #[error("{0}")]
    Io(String),
    #[error("junction region at point {0} has no inlet")]
    JunctionWithoutInlet(PointId),
    #[error("point {0} branches outside a junction region")]
    BranchingOutsideJunction(PointId),
    #[error("junction region ends at point {0} without an outlet")]
    JunctionWithoutOutlet(PointId),
    #[error("junction at point {inlet} has {outlets} outlet(s), expected at least 2")]
    TooFewOutlets { inlet: PointId, outlets: usize },
    #[error("element {0} has zero straight-line length but non-zero path length")]
    TortuosityUndefined(ElementId),
    #[error("flow ratio of junction element {0} needs a baseline flow")]
    MissingBaselineFlow(ElementId),
    #[error("junction element {element} has non-positive cycle-averaged flow {flow}")]
    NonPositiveFlow { element: ElementId, flow: f64 },
    #[error("unknown element {0}")]
    UnknownElement(ElementId),
}
