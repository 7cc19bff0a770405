use std::collections::BTreeMap;
use std::f64::consts::PI;

use hybrid0d::circuit::{
    BoundaryCondition, CircuitNetwork, Element, ElementId, ElementKind, ElementParameters, FluidProperties,
    ModelFlavor, NodeId, Waveform,
};
use hybrid0d::solver::{
    jacobian_fd_error, random_state, random_tree_network, simulate, SimulationConfig, SolverError, System,
};

fn single(params: ElementParameters<f64>, inflow: Waveform<f64>, outlet: BoundaryCondition<f64>) -> CircuitNetwork<f64> {
    CircuitNetwork {
        fluid: FluidProperties::default(),
        cycle_period: 1.0,
        elements: vec![Element {
            id: ElementId(0),
            kind: ElementKind::Vessel,
            inlet: NodeId(0),
            outlet: NodeId(1),
            params,
            geometry: None,
        }],
        boundary_conditions: BTreeMap::from([(NodeId(0), BoundaryCondition::Flow(inflow)), (NodeId(1), outlet)]),
    }
}

fn rl_error(steps: usize) -> f64 {
    let inflow = Waveform::sampled(1.0, steps, |t: f64| (2.0 * PI * t).sin());
    let net = single(
        ElementParameters::new(2.0, 0.0, 3.0),
        inflow,
        BoundaryCondition::Resistance { resistance: 10.0, distal_pressure: 0.0 },
    );
    let cfg = SimulationConfig { steps_per_cycle: steps, max_cycles: 3, ..Default::default() };
    let sol = simulate(&net, &cfg).unwrap().last_cycle;
    let (p0, p1) = (sol.pressure(NodeId(0)).unwrap(), sol.pressure(NodeId(1)).unwrap());
    sol.times
        .iter()
        .enumerate()
        .map(|(k, t)| {
            let exact = 2.0 * (2.0 * PI * t).sin() + 6.0 * PI * (2.0 * PI * t).cos();
            (p0[k] - p1[k] - exact).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn rl_element_under_prescribed_sine() {
    let amplitude = (4.0 + 36.0 * PI * PI).sqrt();
    assert!(rl_error(1000) < 0.01 * amplitude);
}

#[test]
fn first_order_time_convergence() {
    let (coarse, fine) = (rl_error(500), rl_error(1000));
    assert!(coarse / fine >= 1.8, "ratio {}", coarse / fine);
}

#[test]
fn windkessel_steady_state_and_time_constant() {
    let (rp, c, rd) = (100.0, 1e-4, 1000.0);
    let tau = rd * c;
    let net = single(
        ElementParameters::new(0.0, 0.0, 0.0),
        Waveform::constant(2.0, 1.0),
        BoundaryCondition::Rcr { proximal: rp, capacitance: c, distal: rd, distal_pressure: 0.0 },
    );
    let cfg = SimulationConfig { steps_per_cycle: 2000, max_cycles: 2, keep_history: true, ..Default::default() };
    let out = simulate(&net, &cfg).unwrap();
    let h = out.history.unwrap();
    let p = h.pressure(NodeId(0)).unwrap();
    let steady = 2.0 * (rp + rd);
    assert!((p.last().unwrap() - steady).abs() < 0.005 * steady);
    // log-linear fit of the gap over one decade of decay
    let gap: Vec<(f64, f64)> = h
        .times
        .iter()
        .zip(p)
        .map(|(t, p)| (*t, steady - p))
        .filter(|(t, g)| *t > 0.0 && *g > 0.0)
        .collect();
    let g0 = gap[0].1;
    let pts: Vec<(f64, f64)> = gap.into_iter().take_while(|(_, g)| *g > g0 / 10.0).map(|(t, g)| (t, g.ln())).collect();
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    let fitted = -1.0 / slope;
    assert!((fitted - tau).abs() < 0.05 * tau, "fitted {fitted} vs {tau}");
}

#[test]
fn jacobian_matches_finite_differences() {
    for seed in 0..10 {
        let net = random_tree_network(seed, 20);
        let sys = System::new(&net, ModelFlavor::Rri);
        let x = random_state(&sys, 1000 + seed);
        let prev = random_state(&sys, 2000 + seed);
        let err = jacobian_fd_error(&sys, &x, &prev, 1e-3, 0.37);
        assert!(err < 1e-5, "seed {seed}: {err}");
    }
}

#[test]
fn mass_is_conserved_at_every_step() {
    let net = random_tree_network(11, 30);
    let cfg = SimulationConfig { steps_per_cycle: 200, max_cycles: 2, keep_history: true, flavor: ModelFlavor::Rri, ..Default::default() };
    let sol = simulate(&net, &cfg).unwrap().history.unwrap();
    for k in 0..sol.len() {
        let qmax = sol.flow.iter().map(|q| q[k].abs()).fold(0.0, f64::max);
        for node in &sol.nodes {
            let inflow: f64 = net.elements.iter().filter(|e| e.outlet == *node).map(|e| sol.flow(e.id).unwrap()[k]).sum();
            let outflow: f64 = net.elements.iter().filter(|e| e.inlet == *node).map(|e| sol.flow(e.id).unwrap()[k]).sum();
            let interior = net.elements.iter().any(|e| e.outlet == *node) && net.elements.iter().any(|e| e.inlet == *node);
            if interior {
                assert!((inflow - outflow).abs() <= 1e-9 * qmax, "node {node} step {k}");
            }
        }
    }
}

#[test]
fn ri_pressures_scale_with_inflow() {
    let mut net = random_tree_network(5, 15);
    for bc in net.boundary_conditions.values_mut() {
        match bc {
            BoundaryCondition::Resistance { distal_pressure, .. } | BoundaryCondition::Rcr { distal_pressure, .. } => {
                *distal_pressure = 0.0
            }
            _ => {}
        }
    }
    let cfg = SimulationConfig { steps_per_cycle: 100, max_cycles: 3, cycle_tolerance: 1e-12, ..Default::default() };
    let base = simulate(&net, &cfg).unwrap().last_cycle;
    let alpha = 3.7;
    let mut scaled_net = net.clone();
    let root = scaled_net.inflow_node().unwrap();
    if let Some(BoundaryCondition::Flow(w)) = scaled_net.boundary_conditions.get_mut(&root) {
        *w = w.scaled(alpha);
    }
    let scaled = simulate(&scaled_net, &cfg).unwrap().last_cycle;
    for (a, b) in base.pressure.iter().zip(&scaled.pressure) {
        for (x, y) in a.iter().zip(b) {
            assert!((alpha * x - y).abs() <= 1e-8 * y.abs().max(1e-12));
        }
    }
}

#[test]
fn divergence_is_reported() {
    let net = random_tree_network(2, 10);
    let cfg = SimulationConfig { steps_per_cycle: 50, max_newton_iterations: 1, newton_tolerance: 1e-300, flavor: ModelFlavor::Rri, ..Default::default() };
    match simulate(&net, &cfg) {
        Err(SolverError::Divergence { step, .. }) => assert_eq!(step, 1),
        other => panic!("expected divergence, got {other:?}"),
    }
}

#[test]
fn invalid_network_is_rejected() {
    let mut net = random_tree_network(2, 4);
    net.boundary_conditions.clear();
    assert!(matches!(simulate(&net, &SimulationConfig::default()), Err(SolverError::InvalidNetwork(_))));
}

#[test]
fn three_hundred_elements_run_quickly() {
    let net = random_tree_network(42, 300);
    let cfg = SimulationConfig { steps_per_cycle: 1000, max_cycles: 5, cycle_tolerance: 1e-300, flavor: ModelFlavor::Rri, ..Default::default() };
    let start = std::time::Instant::now();
    let out = simulate(&net, &cfg).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    assert_eq!(out.cycles, 5);
    println!("300 elements, 5 x 1000 steps: {elapsed:.3} s");
    assert!(elapsed < 2.0);
}
