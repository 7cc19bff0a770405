//! Implicit time integration of a circuit network.
//!
//! Each time step solves the backward-Euler discretization of the element,
//! mass-conservation and boundary equations with Newton's method. The
//! Newton linear system is solved by eliminating the element tree from the
//! leaves towards the inlet, with a dense LU fallback when an elimination
//! pivot vanishes.

mod linalg;
mod random;
mod simulate;
mod system;

pub use linalg::DenseMatrix;
pub use random::{jacobian_fd_error, random_state, random_tree_network};
pub use simulate::{cycle_convergence, simulate, SimulationConfig, SimulationOutput, TimeSeriesSolution, CSV_HEADER};
pub use system::{residual_and_jacobian, StateLayout, System};

use crate::circuit::Diagnostic;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolverError {
    #[error("network is invalid: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidNetwork(Vec<Diagnostic>),
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("Newton iteration diverged at step {step} (t = {time}): residual norm {residual:e}")]
    Divergence { step: usize, time: f64, residual: f64 },
    #[error("singular Jacobian at step {step} (t = {time})")]
    Singular { step: usize, time: f64 },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("solution csv: {0}")]
    Csv(String),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{
        BoundaryCondition, CircuitNetwork, Element, ElementId, ElementKind, ElementParameters, FluidProperties,
        ModelFlavor, NodeId, Waveform,
    };
    use std::collections::BTreeMap;

    fn vessel(id: usize, a: usize, b: usize, p: ElementParameters<f64>) -> Element<f64> {
        Element { id: ElementId(id), kind: ElementKind::Vessel, inlet: NodeId(a), outlet: NodeId(b), params: p, geometry: None }
    }

    fn single(r: f64, l: f64, inflow: Waveform<f64>, outlet: BoundaryCondition<f64>) -> CircuitNetwork<f64> {
        CircuitNetwork {
            fluid: FluidProperties::default(),
            cycle_period: 1.0,
            elements: vec![vessel(0, 0, 1, ElementParameters::new(r, 0.0, l))],
            boundary_conditions: BTreeMap::from([(NodeId(0), BoundaryCondition::Flow(inflow)), (NodeId(1), outlet)]),
        }
    }

    #[test]
    fn series_resistance() {
        let net = single(
            100.0,
            0.0,
            Waveform::constant(1.0, 1.0),
            BoundaryCondition::Resistance { resistance: 1000.0, distal_pressure: 0.0 },
        );
        let out = simulate(&net, &SimulationConfig { steps_per_cycle: 50, ..Default::default() }).unwrap();
        let p0 = out.last_cycle.pressure(NodeId(0)).unwrap();
        let p1 = out.last_cycle.pressure(NodeId(1)).unwrap();
        assert!(p0.iter().all(|p| (p - 1100.0).abs() < 1e-9 * 1100.0));
        assert!(p1.iter().all(|p| (p - 1000.0).abs() < 1e-9 * 1000.0));
        assert!(out.converged);
    }

    #[test]
    fn rejects_coarse_grids() {
        let cfg = SimulationConfig::<f64> { steps_per_cycle: 8, ..Default::default() };
        assert!(matches!(cfg.validate(), Err(SolverError::InvalidConfig(_))));
    }

    #[test]
    fn connector_row_is_pressure_equality() {
        let mut net = single(
            0.0,
            0.0,
            Waveform::constant(2.0, 1.0),
            BoundaryCondition::Resistance { resistance: 10.0, distal_pressure: 0.0 },
        );
        net.elements[0].kind = ElementKind::Connector;
        net.elements[0].params = ElementParameters::frozen_zero();
        let sys = System::new(&net, ModelFlavor::Rri);
        let x = vec![3.0, 5.0, 7.0];
        let (r, j) = sys.residual_and_jacobian(&x, &x, 0.01, 0.0);
        let row = sys.layout().flow(ElementId(0)).unwrap();
        assert_eq!(r[row], 3.0 - 5.0);
        assert_eq!(j.row(row), &[1.0, -1.0, 0.0]);
    }

    #[test]
    fn cycle_convergence_needs_two_cycles() {
        let sol = TimeSeriesSolution::<f64> {
            times: (0..10).map(|k| k as f64 * 0.1).collect(),
            nodes: vec![NodeId(0)],
            elements: vec![],
            pressure: vec![vec![1.0; 10]],
            flow: vec![],
            pressure_rate: None,
            flow_rate: None,
        };
        assert!(matches!(cycle_convergence(&sol, 1.0), Err(SolverError::InsufficientData(_))));
        let mut two = sol.clone();
        two.times = (0..20).map(|k| k as f64 * 0.1).collect();
        two.pressure = vec![vec![1.0; 20]];
        assert_eq!(cycle_convergence(&two, 1.0).unwrap(), vec![0.0]);
    }

    #[test]
    fn decaying_transient_change() {
        let dt = 0.001;
        let times: Vec<f64> = (0..7000).map(|k| k as f64 * dt).collect();
        let p: Vec<f64> = times.iter().map(|t| 1.0 + (-t).exp()).collect();
        let sol = TimeSeriesSolution {
            times,
            nodes: vec![NodeId(0)],
            elements: vec![],
            pressure: vec![p],
            flow: vec![],
            pressure_rate: None,
            flow_rate: None,
        };
        let changes = cycle_convergence(&sol, 1.0).unwrap();
        assert_eq!(changes.len(), 6);
        for (c, change) in changes.iter().enumerate() {
            // cycles c and c+1 differ most at t0 = c; normalized by max P of cycle c+1
            let t0 = c as f64;
            let expected = (-t0).exp() * (1.0 - (-1f64).exp()) / (1.0 + (-(t0 + 1.0)).exp());
            assert!((change - expected).abs() < 1e-12, "{change} vs {expected}");
        }
    }

    #[test]
    fn csv_round_trip() {
        let net = single(
            2.0,
            3.0,
            Waveform::sampled(1.0, 64, |t: f64| 1.0 + (2.0 * std::f64::consts::PI * t).sin()),
            BoundaryCondition::Rcr { proximal: 10.0, capacitance: 1e-3, distal: 100.0, distal_pressure: 5.0 },
        );
        let out = simulate(&net, &SimulationConfig { steps_per_cycle: 32, max_cycles: 2, ..Default::default() }).unwrap();
        let text = out.last_cycle.to_csv_string(true);
        assert!(text.starts_with("time,entity_kind,entity_id,quantity,value\n"));
        let back = TimeSeriesSolution::<f64>::read_csv(text.as_bytes()).unwrap();
        assert_eq!(back, out.last_cycle);
        let plain = TimeSeriesSolution::<f64>::read_csv(out.last_cycle.to_csv_string(false).as_bytes()).unwrap();
        assert!(plain.flow_rate.is_none());
    }
}
