use super::centerline::{CenterlineTree, PointId};
use super::discretization::{path_geometry, Connector, ConnectorOrigin, Discretization, OutletTarget};
use crate::circuit::ElementId;
use crate::Real;

pub const DEFAULT_ENTRANCE_LENGTH_FACTOR: f64 = 10.0;

/// Moves every original junction outlet downstream by L_e = factor·r_outlet.
///
/// The new boundary snaps to the first outlet-vessel point whose path
/// distance from the old boundary is at least L_e. When no such interior
/// point exists the whole vessel is absorbed: its element becomes a connector
/// (same id) sitting on the vessel's outlet point, and the junction outlet
/// node moves there. Absorbed points and their Poiseuille geometry are
/// recorded on the junction outlet.
pub fn entrance_length_adjust<T: Real>(
    disc: &Discretization<T>,
    tree: &CenterlineTree<T>,
    factor: T,
) -> Discretization<T> {
    let mut out = disc.clone();
    if !(factor > T::zero()) {
        return out;
    }
    let mut absorbed_vessels: Vec<ElementId> = Vec::new();
    let mut moved_nodes = Vec::new();
    for ji in 0..out.junctions.len() {
        let junction_id = out.junctions[ji].id;
        for oi in 0..out.junctions[ji].outlets.len() {
            let outlet = &out.junctions[ji].outlets[oi];
            if !matches!(outlet.target, OutletTarget::Original(_)) {
                continue;
            }
            let Some(vi) = out.vessels.iter().position(|v| v.inlet == outlet.node) else {
                continue;
            };
            let vessel = &out.vessels[vi];
            let path = vessel.path.clone();
            let entrance = factor * tree.point(path[0]).misr;
            let last = path.len() - 1;
            let mut travelled = T::zero();
            let mut snap = None;
            for k in 1..=last {
                travelled += tree.path_length(&path[k - 1..=k]);
                if travelled >= entrance {
                    snap = Some(k);
                    break;
                }
            }
            let k = match snap {
                Some(k) if k < last => k,
                _ => last,
            };
            let absorbed: Vec<PointId> = path[1..=k].to_vec();
            let absorbed_geometry = path_geometry(tree, &path[..=k]);
            let outlet = &mut out.junctions[ji].outlets[oi];
            outlet.path.extend_from_slice(&absorbed);
            outlet.length += absorbed_geometry.length;
            outlet.absorbed = absorbed;
            outlet.absorbed_geometry = Some(absorbed_geometry);
            moved_nodes.push((outlet.node, path[k]));

            if k == last {
                let v = &out.vessels[vi];
                out.connectors.push(Connector {
                    element: v.element,
                    inlet: v.inlet,
                    outlet: v.outlet,
                    point: path[k],
                    origin: ConnectorOrigin::Absorbed(junction_id),
                });
                absorbed_vessels.push(v.element);
            } else {
                let v = &mut out.vessels[vi];
                v.path = path[k..].to_vec();
                v.geometry = path_geometry(tree, &v.path);
            }
        }
    }
    for (node, point) in moved_nodes {
        if let Some(n) = out.nodes.iter_mut().find(|n| n.id == node) {
            n.point = point;
        }
    }
    out.vessels.retain(|v| !absorbed_vessels.contains(&v.element));
    out.connectors.sort_by_key(|c| c.element);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::ElementKind;
    use crate::geometry::{discretize, fixtures, split_multi_outlet_junctions};

    fn outlet_vessel_length(d: &Discretization<f64>, oi: usize) -> Option<f64> {
        let node = d.junctions[0].outlets[oi].node;
        d.vessels.iter().find(|v| v.inlet == node).map(|v| v.geometry.length)
    }

    #[test]
    fn short_vessel_is_absorbed() {
        let tree = fixtures::multi_outlet(&[1.0, 1.0], &[5.0, 25.0], 1.0);
        let d = discretize::<f64>(&tree).unwrap();
        let e = entrance_length_adjust(&d, &tree, 10.0);
        assert_eq!(e.connectors.len(), 1);
        assert_eq!(e.vessels.len(), d.vessels.len() - 1);
        let c = e.connectors[0];
        assert_eq!(e.node_point(c.inlet), e.node_point(c.outlet));
        assert_eq!(e.element(c.element).unwrap().kind, ElementKind::Connector);
        let o = &e.junctions[0].outlets[0];
        assert!((o.absorbed_geometry.unwrap().length - 5.0).abs() < 1e-9);
        assert!(e.leaf_nodes().contains(&c.outlet));
    }

    #[test]
    fn long_vessel_keeps_remainder() {
        let tree = fixtures::multi_outlet(&[1.0, 1.0], &[5.0, 25.0], 1.0);
        let d = discretize::<f64>(&tree).unwrap();
        let e = entrance_length_adjust(&d, &tree, 10.0);
        let o = &e.junctions[0].outlets[1];
        let absorbed = o.absorbed_geometry.unwrap().length;
        assert!((absorbed - 10.0).abs() < 1e-9, "absorbed {absorbed}");
        let remaining = outlet_vessel_length(&e, 1).unwrap();
        assert!((remaining - 15.0).abs() < 1e-9);
        assert!((o.length - d.junctions[0].outlets[1].length - absorbed).abs() < 1e-12);
    }

    #[test]
    fn bookkeeping_is_exact_up_to_spacing() {
        // 0.25 spacing: L_e = 10·0.8 = 8 is reached between points
        let tree = fixtures::multi_outlet(&[0.5, 1.5, 0.7], &[20.1, 3.0, 9.0], 0.8);
        let d = discretize::<f64>(&tree).unwrap();
        let e = entrance_length_adjust(&d, &tree, 10.0);
        for (oi, before) in d.junctions[0].outlets.iter().enumerate() {
            let original = outlet_vessel_length(&d, oi).unwrap();
            let after = &e.junctions[0].outlets[oi];
            let absorbed = after.absorbed_geometry.unwrap().length;
            let remaining = outlet_vessel_length(&e, oi).unwrap_or(0.0);
            assert!((absorbed + remaining - original).abs() < 1e-9);
            assert!(absorbed >= 8.0 - 1e-12 || remaining == 0.0);
            assert!(absorbed < 8.0 + 0.25 + 1e-9);
            assert!((after.length - before.length - absorbed).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_factor_is_identity() {
        let tree = fixtures::chain_with_two_junctions();
        let d = discretize::<f64>(&tree).unwrap();
        let e = entrance_length_adjust(&d, &tree, 0.0);
        assert_eq!(e, d);
        assert!(e.junctions.iter().flat_map(|j| &j.outlets).all(|o| o.absorbed_geometry.is_none()));
    }

    #[test]
    fn split_connectors_are_left_alone() {
        let tree = fixtures::multi_outlet(&[1.0, 2.0, 3.0, 4.0], &[30.0; 4], 0.5);
        let s = split_multi_outlet_junctions(&discretize::<f64>(&tree).unwrap());
        let e = entrance_length_adjust(&s, &tree, 10.0);
        assert_eq!(e.connectors, s.connectors);
        for j in &e.junctions {
            for o in &j.outlets {
                assert_eq!(o.absorbed_geometry.is_some(), !o.leads_to_connector());
            }
        }
    }
}
