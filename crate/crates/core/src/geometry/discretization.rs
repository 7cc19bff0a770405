use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::centerline::{dist, CenterlineTree, PointId};
use super::GeometryError;
use crate::circuit::{ElementId, ElementKind, NodeId, VesselGeometry};
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JunctionId(pub usize);

/// A 0D node and the centerline point it sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscNode {
    pub id: NodeId,
    pub point: PointId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct VesselSegment<T: Real> {
    pub element: ElementId,
    pub inlet: NodeId,
    pub outlet: NodeId,
    pub branch_id: usize,
    /// Centerline points from inlet to outlet.
    pub path: Vec<PointId>,
    pub geometry: VesselGeometry<T>,
}

/// Where a junction outlet leads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutletTarget {
    /// An outlet of the original junction, identified by its original outlet point.
    Original(PointId),
    /// An artificial connector created by bifurcation splitting.
    Connector(ElementId),
}

/// One (inlet, outlet) pair of a junction; a circuit element of its own.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct JunctionOutlet<T: Real> {
    pub element: ElementId,
    pub node: NodeId,
    /// Centerline points from the junction inlet to this outlet.
    pub path: Vec<PointId>,
    /// In-junction centerline path length, l_j.
    pub length: T,
    pub target: OutletTarget,
    /// Outlet-vessel points absorbed by entrance-length adjustment (empty if none).
    #[serde(default)]
    pub absorbed: Vec<PointId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub absorbed_geometry: Option<VesselGeometry<T>>,
}

impl<T: Real> JunctionOutlet<T> {
    pub fn leads_to_connector(&self) -> bool {
        matches!(self.target, OutletTarget::Connector(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Junction<T: Real> {
    pub id: JunctionId,
    /// The junction this one was split from (itself if never split).
    pub origin: JunctionId,
    pub inlet: NodeId,
    pub outlets: Vec<JunctionOutlet<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConnectorOrigin {
    /// Chains the bifurcations produced by splitting a multi-outlet junction.
    Split(JunctionId),
    /// Replaces an outlet vessel absorbed completely into a junction.
    Absorbed(JunctionId),
}

/// Zero-length element; inlet and outlet sit on the same centerline point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Connector {
    pub element: ElementId,
    pub inlet: NodeId,
    pub outlet: NodeId,
    pub point: PointId,
    pub origin: ConnectorOrigin,
}

/// Lightweight view of one circuit element of a discretization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ElementRef {
    pub id: ElementId,
    pub kind: ElementKind,
    pub inlet: NodeId,
    pub outlet: NodeId,
}

/// Vessel/junction element graph derived from a labelled centerline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Discretization<T: Real> {
    pub root: NodeId,
    pub nodes: Vec<DiscNode>,
    pub vessels: Vec<VesselSegment<T>>,
    pub junctions: Vec<Junction<T>>,
    pub connectors: Vec<Connector>,
}

/// Length, mean-radius area and minimum-radius area of a centerline path.
///
/// The mean radius is the path-length weighted average of the MISR samples.
pub fn path_geometry<T: Real>(tree: &CenterlineTree<T>, path: &[PointId]) -> VesselGeometry<T> {
    let pi = T::PI();
    let first = tree.point(path[0]).misr;
    let mut length = T::zero();
    let mut weighted = T::zero();
    let mut r_min = first;
    for w in path.windows(2) {
        let (a, b) = (tree.point(w[0]), tree.point(w[1]));
        let ds = dist(&a.xyz, &b.xyz);
        length += ds;
        weighted += ds * (a.misr + b.misr) * T::lit(0.5);
        r_min = r_min.min(b.misr);
    }
    let r_mean = if length > T::zero() { weighted / length } else { first };
    VesselGeometry { length, area: pi * r_mean * r_mean, stenosis_area: pi * r_min * r_min }
}

impl<T: Real> Discretization<T> {
    pub fn node(&self, id: NodeId) -> Option<&DiscNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn node_point(&self, id: NodeId) -> PointId {
        self.node(id).unwrap_or_else(|| panic!("unknown node {id}")).point
    }

    pub fn elements(&self) -> Vec<ElementRef> {
        let mut out = Vec::new();
        for v in &self.vessels {
            out.push(ElementRef { id: v.element, kind: ElementKind::Vessel, inlet: v.inlet, outlet: v.outlet });
        }
        for j in &self.junctions {
            for o in &j.outlets {
                out.push(ElementRef { id: o.element, kind: ElementKind::Junction, inlet: j.inlet, outlet: o.node });
            }
        }
        for c in &self.connectors {
            out.push(ElementRef { id: c.element, kind: ElementKind::Connector, inlet: c.inlet, outlet: c.outlet });
        }
        out.sort_by_key(|e| e.id);
        out
    }

    pub fn element(&self, id: ElementId) -> Option<ElementRef> {
        self.elements().into_iter().find(|e| e.id == id)
    }

    pub fn vessel(&self, id: ElementId) -> Option<&VesselSegment<T>> {
        self.vessels.iter().find(|v| v.element == id)
    }

    /// The junction and outlet index owning a junction-pair element.
    pub fn junction_outlet(&self, id: ElementId) -> Option<(&Junction<T>, &JunctionOutlet<T>)> {
        self.junctions
            .iter()
            .find_map(|j| j.outlets.iter().find(|o| o.element == id).map(|o| (j, o)))
    }

    pub fn connector(&self, id: ElementId) -> Option<&Connector> {
        self.connectors.iter().find(|c| c.element == id)
    }

    /// Element leaving `node` downstream, if unique.
    pub fn downstream_of(&self, node: NodeId) -> Vec<ElementRef> {
        self.elements().into_iter().filter(|e| e.inlet == node).collect()
    }

    pub fn leaf_nodes(&self) -> Vec<NodeId> {
        let elements = self.elements();
        let mut leaves: Vec<NodeId> = self
            .nodes
            .iter()
            .map(|n| n.id)
            .filter(|n| *n != self.root && !elements.iter().any(|e| e.inlet == *n))
            .collect();
        leaves.sort();
        leaves
    }

    pub(crate) fn next_node_id(&self) -> usize {
        self.nodes.iter().map(|n| n.id.0 + 1).max().unwrap_or(0)
    }

    pub(crate) fn next_element_id(&self) -> usize {
        self.elements().iter().map(|e| e.id.0 + 1).max().unwrap_or(0)
    }

    pub(crate) fn next_junction_id(&self) -> usize {
        self.junctions.iter().map(|j| j.id.0 + 1).max().unwrap_or(0)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("discretization serializes")
    }
}

struct Builder<'a, T: Real> {
    tree: &'a CenterlineTree<T>,
    disc: Discretization<T>,
    next_node: usize,
    next_element: usize,
}

impl<T: Real> Builder<'_, T> {
    fn node(&mut self, point: PointId) -> NodeId {
        let id = NodeId(self.next_node);
        self.next_node += 1;
        self.disc.nodes.push(DiscNode { id, point });
        id
    }

    fn element(&mut self) -> ElementId {
        let id = ElementId(self.next_element);
        self.next_element += 1;
        id
    }

    /// Walks one vessel starting at `start`, then the junction it ends in.
    fn vessel(&mut self, start: PointId, inlet: NodeId) -> Result<(), GeometryError> {
        let tree = self.tree;
        let element = self.element();
        let mut path = vec![start];
        let mut cur = start;
        loop {
            let children = tree.children(cur);
            match children.as_slice() {
                [] => break,
                [only] if !tree.point(*only).in_junction => {
                    path.push(*only);
                    cur = *only;
                }
                many => {
                    if many.iter().all(|c| tree.point(*c).in_junction) {
                        break;
                    }
                    return Err(GeometryError::BranchingOutsideJunction(cur));
                }
            }
        }
        let outlet = self.node(cur);
        let geometry = path_geometry(tree, &path);
        let branch_id = tree.point(start).branch_id;
        self.disc.vessels.push(VesselSegment { element, inlet, outlet, branch_id, path, geometry });
        if tree.is_leaf(cur) {
            return Ok(());
        }
        self.junction(cur, outlet)
    }

    fn junction(&mut self, entry: PointId, inlet: NodeId) -> Result<(), GeometryError> {
        let tree = self.tree;
        let mut outlet_points = Vec::new();
        let mut stack: Vec<PointId> = tree.children(entry);
        stack.reverse();
        while let Some(p) = stack.pop() {
            if !tree.point(p).in_junction {
                outlet_points.push(p);
                continue;
            }
            let children = tree.children(p);
            if children.is_empty() {
                return Err(GeometryError::JunctionWithoutOutlet(p));
            }
            stack.extend(children.into_iter().rev());
        }
        if outlet_points.len() < 2 {
            return Err(GeometryError::TooFewOutlets { inlet: entry, outlets: outlet_points.len() });
        }
        outlet_points.sort();
        let id = JunctionId(self.disc.junctions.len());
        let mut outlets = Vec::new();
        let mut downstream = Vec::new();
        for o in outlet_points {
            let element = self.element();
            let node = self.node(o);
            let path = tree.path(entry, o).expect("outlet descends from junction inlet");
            let length = tree.path_length(&path);
            outlets.push(JunctionOutlet {
                element,
                node,
                path,
                length,
                target: OutletTarget::Original(o),
                absorbed: Vec::new(),
                absorbed_geometry: None,
            });
            downstream.push((o, node));
        }
        self.disc.junctions.push(Junction { id, origin: id, inlet, outlets });
        for (o, node) in downstream {
            self.vessel(o, node)?;
        }
        Ok(())
    }
}

/// Turns labelled centerlines into vessels and junctions.
///
/// Maximal runs of non-junction points become vessels; each junction region
/// (junction-flagged points hanging below one non-junction point) becomes a
/// junction whose inlet is that point and whose outlets are the first
/// non-junction points below the region.
pub fn discretize<T: Real>(tree: &CenterlineTree<T>) -> Result<Discretization<T>, GeometryError> {
    let root = tree.root();
    if tree.point(root).in_junction {
        return Err(GeometryError::JunctionWithoutInlet(root));
    }
    let mut b = Builder {
        tree,
        disc: Discretization { root: NodeId(0), nodes: Vec::new(), vessels: Vec::new(), junctions: Vec::new(), connectors: Vec::new() },
        next_node: 0,
        next_element: 0,
    };
    let inlet = b.node(root);
    b.disc.root = inlet;
    b.vessel(root, inlet)?;
    Ok(b.disc)
}

/// Cycle-averaged flow per element, keyed by element id.
pub type BaselineFlows<T> = BTreeMap<ElementId, T>;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::fixtures::{chain_with_two_junctions, y_shape};

    #[test]
    fn y_shape_has_three_vessels_and_one_junction() {
        let tree = y_shape(1.0, 1.0);
        let d = discretize::<f64>(&tree).unwrap();
        assert_eq!(d.vessels.len(), 3);
        assert_eq!(d.junctions.len(), 1);
        assert_eq!(d.junctions[0].outlets.len(), 2);
        assert!(d.connectors.is_empty());
        assert_eq!(d.elements().len(), 5);
    }

    #[test]
    fn symmetric_y_has_equal_junction_lengths() {
        let d = discretize::<f64>(&y_shape(1.0, 1.0)).unwrap();
        let o = &d.junctions[0].outlets;
        assert!((o[0].length - o[1].length).abs() < 1e-12);
        assert!(o[0].length > 0.0);
    }

    #[test]
    fn chain_with_two_junctions_counts() {
        let d = discretize::<f64>(&chain_with_two_junctions()).unwrap();
        assert_eq!(d.vessels.len(), 5);
        assert_eq!(d.junctions.len(), 2);
    }

    #[test]
    fn root_inside_junction_has_no_inlet() {
        let mut b = crate::geometry::CenterlineBuilder::<f64>::new();
        let r = b.add(None, [0.0, 0.0, 0.0], 1.0, 0, true);
        b.add(Some(r), [0.0, 0.0, 1.0], 1.0, 0, false);
        let tree = b.build().unwrap();
        assert!(matches!(discretize::<f64>(&tree), Err(GeometryError::JunctionWithoutInlet(_))));
    }

    #[test]
    fn unlabelled_branching_is_rejected() {
        let mut b = crate::geometry::CenterlineBuilder::<f64>::new();
        let r = b.add(None, [0.0, 0.0, 0.0], 1.0, 0, false);
        b.add(Some(r), [0.0, 1.0, 1.0], 1.0, 0, false);
        b.add(Some(r), [0.0, -1.0, 1.0], 1.0, 0, false);
        let tree = b.build().unwrap();
        assert!(matches!(discretize::<f64>(&tree), Err(GeometryError::BranchingOutsideJunction(_))));
    }
}
