use std::collections::{BTreeMap, VecDeque};

use super::discretization::{Discretization, OutletTarget};
use crate::circuit::{ElementId, NodeId};
use crate::Real;

/// Element id → number of bifurcations between the element and the inlet.
pub type GenerationMap = BTreeMap<ElementId, u32>;

/// Breadth-first generation numbers.
///
/// An element inherits the generation of its inlet node. Only junction pairs
/// that lead to an original outlet raise the generation of their outlet node,
/// so the bifurcation chain produced by splitting one junction, and its
/// connectors, all share that junction's generation.
pub fn generation_numbers<T: Real>(disc: &Discretization<T>) -> GenerationMap {
    let elements = disc.elements();
    let mut map = GenerationMap::new();
    let mut queue = VecDeque::from([(disc.root, 0u32)]);
    while let Some((node, gamma)) = queue.pop_front() {
        for e in elements.iter().filter(|e| e.inlet == node) {
            map.insert(e.id, gamma);
            let step = match disc.junction_outlet(e.id) {
                Some((_, o)) if matches!(o.target, OutletTarget::Original(_)) => 1,
                _ => 0,
            };
            queue.push_back((e.outlet, gamma + step));
        }
    }
    map
}

/// Generation of every node, derived from the element map.
pub fn node_generations<T: Real>(disc: &Discretization<T>) -> BTreeMap<NodeId, u32> {
    let gens = generation_numbers(disc);
    let mut out = BTreeMap::from([(disc.root, 0)]);
    for e in disc.elements() {
        if let Some(g) = gens.get(&e.id) {
            out.entry(e.inlet).or_insert(*g);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::ElementKind;
    use crate::geometry::{discretize, entrance_length_adjust, fixtures, split_multi_outlet_junctions};

    #[test]
    fn y_shape_generations() {
        let d = discretize::<f64>(&fixtures::y_shape(1.0, 0.7)).unwrap();
        let g = generation_numbers(&d);
        assert_eq!(g[&d.vessels[0].element], 0);
        for o in &d.junctions[0].outlets {
            assert_eq!(g[&o.element], 0);
        }
        assert_eq!(g[&d.vessels[1].element], 1);
        assert_eq!(g[&d.vessels[2].element], 1);
    }

    #[test]
    fn chain_reaches_generation_two() {
        let d = discretize::<f64>(&fixtures::chain_with_two_junctions()).unwrap();
        let g = generation_numbers(&d);
        assert_eq!(g.len(), d.elements().len());
        assert_eq!(*g.values().max().unwrap(), 2);
    }

    #[test]
    fn splitting_does_not_inflate_generation() {
        let tree = fixtures::multi_outlet(&[1.0, 2.0, 3.0, 4.0], &[8.0; 4], 0.5);
        let d = discretize::<f64>(&tree).unwrap();
        let before = generation_numbers(&d);
        let s = entrance_length_adjust(&split_multi_outlet_junctions(&d), &tree, 10.0);
        let after = generation_numbers(&s);
        let original = before[&d.junctions[0].outlets[0].element];
        for j in &s.junctions {
            for o in &j.outlets {
                assert_eq!(after[&o.element], original);
            }
        }
        for e in s.elements() {
            match e.kind {
                ElementKind::Vessel if e.inlet != s.root => assert_eq!(after[&e.id], original + 1),
                ElementKind::Connector => assert!(after[&e.id] == original || after[&e.id] == original + 1),
                _ => {}
            }
        }
        for v in &d.vessels {
            if let Some(g) = after.get(&v.element) {
                assert_eq!(*g, before[&v.element]);
            }
        }
    }
}
