use super::discretization::{Connector, ConnectorOrigin, DiscNode, Discretization, Junction, JunctionId, JunctionOutlet, OutletTarget};
use crate::circuit::{ElementId, NodeId};
use crate::Real;

/// Replaces every junction with three or more outlets by a chain of bifurcations.
///
/// Outlets are sorted by in-junction length l_j (ties by original outlet point
/// id). Bifurcation 0 takes the original inlet, the shortest outlet and
/// connector 0; bifurcation i takes connector i−1, outlet i and connector i;
/// the last bifurcation takes the last connector and the two longest outlets.
/// Connectors and the bifurcation outlets feeding them sit on the junction
/// inlet point and have zero length. Every bifurcation keeps the original
/// junction as its `origin`.
pub fn split_multi_outlet_junctions<T: Real>(disc: &Discretization<T>) -> Discretization<T> {
    let mut out = disc.clone();
    let mut next_node = disc.next_node_id();
    let mut next_element = disc.next_element_id();
    let mut next_junction = disc.next_junction_id();
    let mut junctions = Vec::with_capacity(disc.junctions.len());

    for junction in &disc.junctions {
        let n = junction.outlets.len();
        if n < 3 {
            junctions.push(junction.clone());
            continue;
        }
        let inlet_point = disc.node_point(junction.inlet);
        let mut sorted = junction.outlets.clone();
        sorted.sort_by(|a, b| a.length.partial_cmp(&b.length).unwrap().then_with(|| tie_key(a).cmp(&tie_key(b))));

        let mut bifurcation_inlet = junction.inlet;
        for (i, outlet) in sorted.iter().take(n - 2).enumerate() {
            let id = if i == 0 {
                junction.id
            } else {
                next_junction += 1;
                JunctionId(next_junction - 1)
            };
            let pair = ElementId(next_element);
            let connector = ElementId(next_element + 1);
            next_element += 2;
            let c_in = NodeId(next_node);
            let c_out = NodeId(next_node + 1);
            next_node += 2;
            out.nodes.push(DiscNode { id: c_in, point: inlet_point });
            out.nodes.push(DiscNode { id: c_out, point: inlet_point });
            out.connectors.push(Connector {
                element: connector,
                inlet: c_in,
                outlet: c_out,
                point: inlet_point,
                origin: ConnectorOrigin::Split(junction.origin),
            });
            let to_connector = JunctionOutlet {
                element: pair,
                node: c_in,
                path: vec![inlet_point],
                length: T::zero(),
                target: OutletTarget::Connector(connector),
                absorbed: Vec::new(),
                absorbed_geometry: None,
            };
            junctions.push(Junction {
                id,
                origin: junction.origin,
                inlet: bifurcation_inlet,
                outlets: vec![outlet.clone(), to_connector],
            });
            bifurcation_inlet = c_out;
        }
        next_junction += 1;
        junctions.push(Junction {
            id: JunctionId(next_junction - 1),
            origin: junction.origin,
            inlet: bifurcation_inlet,
            outlets: vec![sorted[n - 2].clone(), sorted[n - 1].clone()],
        });
    }
    out.junctions = junctions;
    out
}

fn tie_key<T: Real>(o: &JunctionOutlet<T>) -> usize {
    match o.target {
        OutletTarget::Original(p) => p.0,
        OutletTarget::Connector(e) => e.0,
    }
}
