//! Seeded random tree networks for solver checks and benchmarks.

use std::collections::BTreeMap;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::System;
use crate::circuit::{
    BoundaryCondition, CircuitNetwork, Element, ElementId, ElementKind, ElementParameters, FluidProperties, NodeId,
    Waveform,
};

/// Random tree of `elements` elements below a pulsatile inflow.
///
/// Every fifth element leaving an interior node is a zero connector; leaves
/// alternate randomly between resistance and RCR outlets.
pub fn random_tree_network(seed: u64, elements: usize) -> CircuitNetwork<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut list = Vec::with_capacity(elements);
    let mut has_child = vec![false; elements + 1];
    for k in 0..elements {
        let inlet = if k == 0 { 0 } else { rng.random_range(1..=k) };
        has_child[inlet] = true;
        let connector = k > 0 && k % 5 == 0;
        let (kind, params) = if connector {
            (ElementKind::Connector, ElementParameters::frozen_zero())
        } else {
            let p = ElementParameters::new(
                rng.random_range(10.0..200.0),
                rng.random_range(0.1..5.0),
                rng.random_range(0.5..5.0),
            );
            (ElementKind::Vessel, p)
        };
        list.push(Element { id: ElementId(k), kind, inlet: NodeId(inlet), outlet: NodeId(k + 1), params, geometry: None });
    }
    let inflow = Waveform::sampled(1.0, 100, |t: f64| 5.0 + 4.0 * (2.0 * std::f64::consts::PI * t).sin());
    let mut bcs = BTreeMap::from([(NodeId(0), BoundaryCondition::Flow(inflow))]);
    for (n, has) in has_child.iter().enumerate().skip(1) {
        if *has {
            continue;
        }
        let total = rng.random_range(500.0..5000.0);
        let bc = if rng.random::<bool>() {
            BoundaryCondition::Resistance { resistance: total, distal_pressure: 100.0 }
        } else {
            BoundaryCondition::Rcr {
                proximal: 0.1 * total,
                capacitance: rng.random_range(1e-5..1e-4),
                distal: 0.9 * total,
                distal_pressure: 100.0,
            }
        };
        bcs.insert(NodeId(n), bc);
    }
    CircuitNetwork { fluid: FluidProperties::default(), cycle_period: 1.0, elements: list, boundary_conditions: bcs }
}

/// Random state vector: pressures of order 10³–10⁴, flows of either sign.
pub fn random_state(system: &System<f64>, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layout = system.layout();
    let nn = layout.nodes.len();
    let ne = layout.elements.len();
    (0..layout.dim())
        .map(|i| {
            if i >= nn && i < nn + ne {
                let q: f64 = rng.random_range(0.5..5.0);
                if rng.random::<bool>() { q } else { -q }
            } else {
                rng.random_range(1e3..1e4)
            }
        })
        .collect()
}

/// Largest entrywise relative error between the analytic Jacobian and central
/// differences of the residual, `|a − n| / max(|a|, |n|, 1e-8)`.
///
/// The residual is piecewise quadratic in the state, so a relatively large
/// step keeps rounding error negligible without truncation error.
pub fn jacobian_fd_error(system: &System<f64>, x: &[f64], prev: &[f64], dt: f64, t: f64) -> f64 {
    let (_, jac) = system.residual_and_jacobian(x, prev, dt, t);
    let mut worst = 0.0f64;
    let mut xp = x.to_vec();
    for j in 0..x.len() {
        let h = 1e-3 * x[j].abs().max(1.0);
        xp[j] = x[j] + h;
        let rp = system.residual(&xp, prev, dt, t);
        xp[j] = x[j] - h;
        let rm = system.residual(&xp, prev, dt, t);
        xp[j] = x[j];
        for i in 0..x.len() {
            let fd = (rp[i] - rm[i]) / (2.0 * h);
            let a = jac.get(i, j);
            worst = worst.max((a - fd).abs() / a.abs().max(fd.abs()).max(1e-8));
        }
    }
    worst
}
