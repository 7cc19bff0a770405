use std::collections::BTreeMap;

use hybrid0d::calibrate::{
    assemble_fit_residual, calibrate, fit_jacobian_fd_error, CalibrationProblem, CalibrationStatus, LmSettings, ReferenceSeries,
};
use hybrid0d::circuit::{
    assemble_network, baseline_parameters, BoundaryCondition, BoundarySpec, CircuitNetwork, ElementKind,
    ElementParameterMap, FluidProperties, ModelFlavor, ParamKind, Waveform,
};
use hybrid0d::geometry::{discretize, entrance_length_adjust, fixtures, split_multi_outlet_junctions};
use hybrid0d::solver::{simulate, SimulationConfig};

struct Case {
    net: CircuitNetwork<f64>,
    baseline: ElementParameterMap<f64>,
    truth: ElementParameterMap<f64>,
}

/// Four-outlet junction (split, entrance-length adjusted) with truth Θ*
/// scaled up from Poiseuille and a strong quadratic term.
fn case(flavor: ModelFlavor) -> Case {
    let tree = fixtures::multi_outlet(&[1.0, 1.5, 2.0, 2.5], &[4.0, 9.0, 12.0, 15.0], 0.35);
    let raw = discretize(&tree).unwrap();
    let d = entrance_length_adjust(&split_multi_outlet_junctions(&raw), &tree, 10.0);
    let fluid = FluidProperties::default();
    let baseline = baseline_parameters(&d, &fluid, flavor).unwrap();
    let mut truth = baseline.clone();
    for (k, (id, p)) in truth.iter_mut().enumerate() {
        let f = 1.3 + 0.1 * (k % 7) as f64;
        let is_pair = d.junction_outlet(*id).is_some();
        p.r_lin = if is_pair { p.r_lin * f + 5.0 } else { p.r_lin * f };
        p.inductance *= f;
        p.r_quad = if flavor.has_quadratic() { 2.0 + 0.5 * (k % 3) as f64 } else { 0.0 };
    }
    let outlets = raw
        .leaf_nodes()
        .into_iter()
        .map(|n| {
            (
                raw.node_point(n),
                BoundaryCondition::Rcr { proximal: 300.0, capacitance: 1e-4, distal: 3000.0, distal_pressure: 1000.0 },
            )
        })
        .collect();
    let inflow = Waveform::sampled(1.0, 1000, |t: f64| {
        let w = 2.0 * std::f64::consts::PI * t;
        10.0 * (1.0 + 0.6 * w.sin() + 0.25 * (2.0 * w - 0.5).sin())
    });
    let spec = BoundarySpec { cycle_period: 1.0, inflow, outlets };
    let bcs = spec.bind(&d).unwrap();
    let net = assemble_network(&d, &truth, &bcs, fluid, 1.0).unwrap();
    let truth = net.elements.iter().map(|e| (e.id, e.params)).collect();
    Case { net, baseline, truth }
}

fn reference(net: &CircuitNetwork<f64>, flavor: ModelFlavor) -> ReferenceSeries<f64> {
    let cfg = SimulationConfig { flavor, max_cycles: 6, ..Default::default() };
    ReferenceSeries::from_solution(simulate(net, &cfg).unwrap().last_cycle).unwrap()
}

fn problem(c: &Case, flavor: ModelFlavor) -> CalibrationProblem<f64> {
    CalibrationProblem::new(&c.net, flavor, LmSettings::default())
}

#[test]
fn residual_vanishes_at_truth_and_r_lin_column_is_flow() {
    let flavor = ModelFlavor::Rri;
    let c = case(flavor);
    let reference = reference(&c.net, flavor);
    let p = problem(&c, flavor);
    let theta = p.pack(&c.truth);
    let (r, jac) = assemble_fit_residual(&p, &reference, &theta).unwrap();
    let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!(norm < 1e-8, "residual at truth {norm}");
    for (j, f) in p.free_parameters().iter().enumerate() {
        if f.kind == ParamKind::RLin {
            assert_eq!(
                jac.column(j).into_iter().filter(|v| *v != 0.0).collect::<Vec<_>>(),
                reference.flow(f.element).unwrap().iter().copied().filter(|v| *v != 0.0).collect::<Vec<_>>()
            );
        }
    }
}

#[test]
fn fit_jacobian_matches_finite_differences() {
    let flavor = ModelFlavor::Rri;
    let c = case(flavor);
    let reference = reference(&c.net, flavor);
    let p = problem(&c, flavor);
    let theta = p.pack(&c.baseline);
    let worst = fit_jacobian_fd_error(&p, &reference, &theta).unwrap();
    assert!(worst < 1e-7, "{worst}");
}

#[test]
fn recovers_truth_from_poiseuille_start() {
    for flavor in [ModelFlavor::Ri, ModelFlavor::Rri] {
        let c = case(flavor);
        let reference = reference(&c.net, flavor);
        let p = problem(&c, flavor);
        let res = calibrate(&p, &reference, &c.baseline).unwrap();
        assert!(res.residual_norm <= res.initial_residual_norm);
        for f in p.free_parameters() {
            let got = res.parameters[&f.element].get(f.kind);
            let want = c.truth[&f.element].get(f.kind);
            assert!((got / want - 1.0).abs() < 0.01, "{flavor} {f:?}: {got} vs {want}");
        }
        // accepted residual norms never increase
        let accepted: Vec<f64> = res.trace.iter().filter(|t| t.accepted).map(|t| t.residual_norm).collect();
        assert!(accepted.windows(2).all(|w| w[1] <= w[0]));
        // connectors and frozen slots untouched
        for e in &c.net.elements {
            let got = res.parameters[&e.id];
            if e.kind == ElementKind::Connector {
                assert_eq!((got.r_lin, got.r_quad, got.inductance), (0.0, 0.0, 0.0));
            }
            for k in ParamKind::ALL {
                if e.params.frozen.contains(k) {
                    assert_eq!(got.get(k).to_bits(), e.params.get(k).to_bits());
                }
            }
            if !flavor.has_quadratic() {
                assert_eq!(got.r_quad, 0.0);
            }
        }
    }
}

#[test]
fn starting_at_the_optimum_stops_immediately() {
    let flavor = ModelFlavor::Rri;
    let c = case(flavor);
    let reference = reference(&c.net, flavor);
    let p = problem(&c, flavor);
    let res = calibrate(&p, &reference, &c.truth).unwrap();
    assert!(res.trace.len() <= 2, "{:?}", res.trace);
    let tol = p.settings.step_tolerance;
    let scale = p.pack(&c.truth).iter().map(|v| v * v).sum::<f64>().sqrt();
    for (a, b) in res.theta.iter().zip(p.pack(&c.truth)) {
        assert!((a - b).abs() <= tol * (scale + tol));
    }
    // idempotence from the optimum found from a cold start
    let cold = calibrate(&p, &reference, &c.baseline).unwrap();
    let again = calibrate(&p, &reference, &cold.parameters).unwrap();
    let scale = cold.theta.iter().map(|v| v * v).sum::<f64>().sqrt();
    for (a, b) in again.theta.iter().zip(&cold.theta) {
        assert!((a - b).abs() <= tol * (scale + tol));
    }
}

#[test]
fn ri_agrees_with_normal_equations() {
    let flavor = ModelFlavor::Ri;
    let c = case(flavor);
    // perturb the reference so the optimum has a non-zero residual
    let mut sol = reference(&c.net, flavor).into_series();
    for (i, p) in sol.pressure.iter_mut().enumerate() {
        for (k, v) in p.iter_mut().enumerate() {
            *v += 3.0 * ((i * 31 + k * 17) % 11) as f64;
        }
    }
    let reference = ReferenceSeries::from_solution(sol).unwrap();
    let p = problem(&c, flavor);
    let zero = vec![0.0; p.dim()];
    let (r0, jac) = assemble_fit_residual(&p, &reference, &zero).unwrap();
    let (a, g) = jac.normal_equations(&r0);
    let neg: Vec<f64> = g.iter().map(|v| -v).collect();
    let direct = a.solve(&neg).unwrap();
    let res = calibrate(&p, &reference, &c.baseline).unwrap();
    for (x, y) in res.theta.iter().zip(&direct) {
        assert!((x - y).abs() <= 1e-6 * y.abs().max(1e-12), "{x} vs {y}");
    }
}

#[test]
fn quadratic_model_fits_quadratic_truth_better() {
    let c = case(ModelFlavor::Rri);
    let reference = reference(&c.net, ModelFlavor::Rri);
    let rri = calibrate(&problem(&c, ModelFlavor::Rri), &reference, &c.baseline).unwrap();
    let ri = calibrate(&problem(&c, ModelFlavor::Ri), &reference, &c.baseline).unwrap();
    assert!(rri.residual_norm < ri.residual_norm, "{} vs {}", rri.residual_norm, ri.residual_norm);
    assert!(ri.parameters.values().all(|p| p.r_quad == 0.0));
}

#[test]
fn report_lists_every_element() {
    let c = case(ModelFlavor::Ri);
    let reference = reference(&c.net, ModelFlavor::Ri);
    let res = calibrate(&problem(&c, ModelFlavor::Ri), &reference, &c.baseline).unwrap();
    assert!(matches!(res.status, CalibrationStatus::StepTolerance | CalibrationStatus::ResidualTolerance));
    let v: serde_json::Value = serde_json::from_str(&res.report_json()).unwrap();
    assert_eq!(v["elements"].as_array().unwrap().len(), c.net.elements.len());
    let _: BTreeMap<String, serde_json::Value> = serde_json::from_value(v).unwrap();
}
