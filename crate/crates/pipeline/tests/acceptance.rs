//! Acceptance suite. Run with
//! `cargo test -p hybrid0d-pipeline --test acceptance -- --nocapture`
//! to see one pass/fail line per criterion.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use hybrid0d::calibrate::{calibrate, fit_jacobian_fd_error, CalibrationProblem, ReferenceSeries};
use hybrid0d::circuit::{
    assemble_network, baseline_parameters, BoundaryCondition, BoundarySpec, CircuitNetwork, Element, ElementId,
    ElementKind, ElementParameters, FluidProperties, ModelFlavor, NodeId, ParamKind, Waveform,
};
use hybrid0d::geometry::{
    discretize, entrance_length_adjust, extract_all_features, fixtures, split_multi_outlet_junctions, CenterlineTree,
};
use hybrid0d::nn::{gradient_check, predict_parameters, LearnedKinds, LossKind, Mlp, ModelTarget};
use hybrid0d::solver::{jacobian_fd_error, random_state, random_tree_network, simulate, SimulationConfig, System};
use hybrid0d_pipeline::*;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn series(params: &[ElementParameters<f64>], inflow: Waveform<f64>, outlet: BoundaryCondition<f64>) -> CircuitNetwork<f64> {
    let elements = params
        .iter()
        .enumerate()
        .map(|(i, p)| Element {
            id: ElementId(i),
            kind: ElementKind::Vessel,
            inlet: NodeId(i),
            outlet: NodeId(i + 1),
            params: p.clone(),
            geometry: None,
        })
        .collect();
    CircuitNetwork {
        fluid: FluidProperties::default(),
        cycle_period: 1.0,
        elements,
        boundary_conditions: BTreeMap::from([
            (NodeId(0), BoundaryCondition::Flow(inflow)),
            (NodeId(params.len()), outlet),
        ]),
    }
}

fn analytic_solver() -> Outcome {
    let start = Instant::now();

    // steady resistor chain
    let rs = [120.0, 45.5, 310.25, 7.0];
    let (q, r_out, pd) = (3.5, 800.0, 1000.0);
    let params: Vec<_> = rs.iter().map(|r| ElementParameters::new(*r, 0.0, 2.0)).collect();
    let net = series(&params, Waveform::constant(q, 1.0), BoundaryCondition::Resistance { resistance: r_out, distal_pressure: pd });
    let sol = simulate(&net, &SimulationConfig { steps_per_cycle: 100, max_cycles: 3, ..Default::default() }).unwrap().last_cycle;
    let mut chain_err: f64 = 0.0;
    for node in 0..=rs.len() {
        let exact = pd + q * (r_out + rs[node..].iter().sum::<f64>());
        for p in sol.pressure(NodeId(node)).unwrap() {
            chain_err = chain_err.max((p - exact).abs() / exact);
        }
    }

    // R-L element under a prescribed sine
    let steps = 1000;
    let (r, l) = (2.0, 3.0);
    let net = series(
        &[ElementParameters::new(r, 0.0, l)],
        Waveform::sampled(1.0, steps, |t: f64| (2.0 * PI * t).sin()),
        BoundaryCondition::Resistance { resistance: 10.0, distal_pressure: 0.0 },
    );
    let sol = simulate(&net, &SimulationConfig { steps_per_cycle: steps, max_cycles: 3, ..Default::default() }).unwrap().last_cycle;
    let (p0, p1) = (sol.pressure(NodeId(0)).unwrap(), sol.pressure(NodeId(1)).unwrap());
    let amplitude = (r * r + (2.0 * PI * l).powi(2)).sqrt();
    let rl_err = sol
        .times
        .iter()
        .enumerate()
        .map(|(k, t)| (p0[k] - p1[k] - (r * (2.0 * PI * t).sin() + 2.0 * PI * l * (2.0 * PI * t).cos())).abs())
        .fold(0.0, f64::max)
        / amplitude;

    // Windkessel step response
    let (rp, c, rd, q) = (100.0, 1e-4, 1000.0, 2.0);
    let tau = rd * c;
    let net = series(
        &[ElementParameters::new(0.0, 0.0, 0.0)],
        Waveform::constant(q, 1.0),
        BoundaryCondition::Rcr { proximal: rp, capacitance: c, distal: rd, distal_pressure: 0.0 },
    );
    let out = simulate(&net, &SimulationConfig { steps_per_cycle: 2000, max_cycles: 2, keep_history: true, ..Default::default() })
        .unwrap();
    let h = out.history.unwrap();
    let p = h.pressure(NodeId(0)).unwrap();
    let steady = q * (rp + rd);
    let steady_err = (p.last().unwrap() - steady).abs() / steady;
    let gap: Vec<(f64, f64)> =
        h.times.iter().zip(p).map(|(t, p)| (*t, steady - p)).filter(|(t, g)| *t > 0.0 && *g > 0.0).collect();
    let g0 = gap[0].1;
    let pts: Vec<(f64, f64)> = gap.into_iter().take_while(|(_, g)| *g > g0 / 10.0).map(|(t, g)| (t, g.ln())).collect();
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let slope =
        pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    let tau_err = (-1.0 / slope - tau).abs() / tau;

    let elapsed = start.elapsed().as_secs_f64();
    outcome(
        chain_err < 1e-9 && rl_err < 0.01 && steady_err < 0.005 && tau_err < 0.05 && elapsed < 5.0,
        format!(
            "chain {chain_err:.1e} (<1e-9), R-L {:.3}% (<1%), RCR steady {:.3}% (<0.5%), tau {:.2}% (<5%), {elapsed:.2} s (<5 s)",
            rl_err * 100.0,
            steady_err * 100.0,
            tau_err * 100.0
        ),
    )
}

fn jacobians() -> Outcome {
    let mut solver_err: f64 = 0.0;
    for seed in 0..10 {
        let net = random_tree_network(seed, 20);
        let sys = System::new(&net, ModelFlavor::Rri);
        let x = random_state(&sys, 1000 + seed);
        let prev = random_state(&sys, 2000 + seed);
        solver_err = solver_err.max(jacobian_fd_error(&sys, &x, &prev, 1e-3, 0.37));
    }

    let mut mlp_err: f64 = 0.0;
    for (k, t) in ModelTarget::ALL.into_iter().enumerate() {
        let m = Mlp::<f64>::init(t.input_dim(), &t.architecture(), 7 + k as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(k as u64);
        let xs: Vec<Vec<f64>> = (0..8).map(|_| (0..t.input_dim()).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let ys: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
        let gs: Vec<u32> = (0..8).map(|_| rng.random_range(0..6u32)).collect();
        for kind in [LossKind::Mse, LossKind::Proximity] {
            mlp_err = mlp_err.max(gradient_check(&m, &xs, &ys, &gs, kind).unwrap());
        }
    }

    // calibration Jacobian on a four-outlet junction with an RRI reference
    let tree = fixtures::multi_outlet(&[1.0, 1.5, 2.0, 2.5], &[4.0, 9.0, 12.0, 15.0], 0.35);
    let boundary = four_outlet_boundary(&tree);
    let raw = discretize(&tree).unwrap();
    let d = entrance_length_adjust(&split_multi_outlet_junctions(&raw), &tree, 10.0);
    let fluid = FluidProperties::default();
    let baseline = baseline_parameters(&d, &fluid, ModelFlavor::Rri).unwrap();
    let mut truth = baseline.clone();
    for (k, p) in truth.values_mut().enumerate() {
        p.r_lin *= 1.4 + 0.05 * (k % 4) as f64;
        p.inductance *= 1.2;
        p.r_quad = 3.0;
    }
    let bcs = boundary.bind(&d).unwrap();
    let truth_net = assemble_network(&d, &truth, &bcs, fluid, 1.0).unwrap();
    let sim = SimulationConfig { flavor: ModelFlavor::Rri, max_cycles: 6, ..Default::default() };
    let reference = ReferenceSeries::from_solution(simulate(&truth_net, &sim).unwrap().last_cycle).unwrap();
    let net = assemble_network(&d, &baseline, &bcs, fluid, 1.0).unwrap();
    let problem = CalibrationProblem::new(&net, ModelFlavor::Rri, Default::default());
    let fit_err = fit_jacobian_fd_error(&problem, &reference, &problem.pack(&baseline)).unwrap();

    outcome(
        solver_err < 1e-5 && mlp_err < 1e-5 && fit_err < 1e-7,
        format!("solver {solver_err:.1e} (<1e-5), networks {mlp_err:.1e} (<1e-5), calibration {fit_err:.1e} (<1e-7)"),
    )
}

fn four_outlet_boundary(tree: &CenterlineTree<f64>) -> BoundarySpec<f64> {
    let raw = discretize(tree).unwrap();
    let outlets = raw
        .leaf_nodes()
        .into_iter()
        .map(|n| (raw.node_point(n), BoundaryCondition::Rcr { proximal: 300.0, capacitance: 1e-4, distal: 3000.0, distal_pressure: 1000.0 }))
        .collect();
    let inflow = Waveform::sampled(1.0, 1000, |t: f64| 10.0 * (1.0 + 0.6 * (2.0 * PI * t).sin()));
    BoundarySpec { cycle_period: 1.0, inflow, outlets }
}

fn calibration_recovery() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let cfg = PipelineConfig { flavor: ModelFlavor::Rri, ..PipelineConfig::default() };
    let oracle = SyntheticOracle { seed: 303, ..SyntheticOracle::default() };
    let spec = generate_synthetic_cohort(&oracle, 10, &cfg, dir.path()).unwrap();
    let geoms = load_geometries(dir.path(), &spec, &cfg).unwrap();
    let (mut worst_rel, mut worst_abs, mut worst_mpe, mut free, mut failures) = (0.0f64, 0.0f64, 0.0f64, 0, 0);
    for (g, entry) in geoms.iter().zip(&spec.geometries) {
        let truth = entry.load_truth(dir.path()).unwrap().unwrap();
        let Ok(res) = &g.calibration else {
            failures += 1;
            continue;
        };
        for f in &res.free {
            let (got, want) = (res.parameters[&f.element].get(f.kind), truth[&f.element].get(f.kind));
            free += 1;
            if want == 0.0 {
                worst_abs = worst_abs.max(got.abs());
            } else {
                worst_rel = worst_rel.max((got / want - 1.0).abs());
            }
        }
        match run_modality(&g.prep, Modality::Optimal, None, Some(&res.parameters), &g.reference, g.reference_inlet, &cfg) {
            Ok(run) => worst_mpe = worst_mpe.max(run.mpe),
            Err(_) => failures += 1,
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    outcome(
        failures == 0 && worst_rel < 0.01 && worst_abs < 1e-6 && worst_mpe < 1.0 && elapsed < 60.0,
        format!(
            "{free} free parameters, worst |cal/true - 1| {worst_rel:.1e} (<0.01), worst |cal| where true = 0 {worst_abs:.1e} (<1e-6), worst optimal MPE {worst_mpe:.2e}% (<1%), {failures} failures, {elapsed:.1} s (<60 s)"
        ),
    )
}

fn preprocessing() -> Outcome {
    let mut problems = Vec::new();

    let tree = fixtures::multi_outlet(&[1.0, 2.0, 3.0, 4.0], &[5.0, 8.0, 11.0, 14.0], 0.4);
    let raw = discretize(&tree).unwrap();
    let split = split_multi_outlet_junctions(&raw);
    if split.junctions.len() != 3 || split.connectors.len() != 2 || split.junctions.iter().any(|j| j.outlets.len() != 2) {
        problems.push(format!("split gave {} junctions, {} connectors", split.junctions.len(), split.connectors.len()));
    }

    // zero-parameter junctions: split and unsplit networks agree
    let fluid = FluidProperties::default();
    let boundary = four_outlet_boundary(&tree);
    let sim = SimulationConfig { max_cycles: 3, ..Default::default() };
    let solve = |d: &hybrid0d::geometry::Discretization<f64>| {
        let params = baseline_parameters(d, &fluid, ModelFlavor::Ri).unwrap();
        let net = assemble_network(d, &params, &boundary.bind(d).unwrap(), fluid, 1.0).unwrap();
        simulate(&net, &sim).unwrap().last_cycle
    };
    let (a, b) = (solve(&raw), solve(&split));
    let mut split_err: f64 = 0.0;
    for va in &raw.vessels {
        let key = (raw.node_point(va.inlet), raw.node_point(va.outlet));
        let Some(vb) = split.vessels.iter().find(|v| (split.node_point(v.inlet), split.node_point(v.outlet)) == key) else {
            problems.push(format!("vessel {} missing after split", va.element));
            continue;
        };
        let pairs = [
            (a.flow(va.element).unwrap(), b.flow(vb.element).unwrap()),
            (a.pressure(va.inlet).unwrap(), b.pressure(vb.inlet).unwrap()),
            (a.pressure(va.outlet).unwrap(), b.pressure(vb.outlet).unwrap()),
        ];
        for (x, y) in pairs {
            for (u, v) in x.iter().zip(y) {
                split_err = split_err.max((u - v).abs() / u.abs().max(1.0));
            }
        }
    }
    if split_err >= 1e-9 {
        problems.push(format!("split vs unsplit {split_err:.1e}"));
    }

    // entrance-length bookkeeping
    let spacing = 0.25;
    let tree = fixtures::multi_outlet(&[0.5, 1.5, 0.7], &[20.1, 3.0, 9.0], 0.8);
    let d = discretize(&tree).unwrap();
    let e = entrance_length_adjust(&d, &tree, 10.0);
    let le = 10.0 * 0.8;
    let vessel_after = |disc: &hybrid0d::geometry::Discretization<f64>, node: NodeId| {
        disc.vessels.iter().find(|v| v.inlet == node).map(|v| v.geometry.length)
    };
    for (before, after) in d.junctions[0].outlets.iter().zip(&e.junctions[0].outlets) {
        let original = vessel_after(&d, before.node).unwrap();
        let absorbed = after.absorbed_geometry.map(|g| g.length).unwrap_or(0.0);
        let remaining = vessel_after(&e, after.node).unwrap_or(0.0);
        let expected = if original <= le { original } else { le };
        if (absorbed + remaining - original).abs() > 1e-9
            || (absorbed - expected).abs() > spacing + 1e-9
            || (after.length - before.length - absorbed).abs() > 1e-9
        {
            problems.push(format!("entrance bookkeeping: original {original}, absorbed {absorbed}, remaining {remaining}"));
        }
    }

    // feature invariants on fixtures and on a synthetic cohort
    let mut trees = vec![
        fixtures::y_shape(1.0, 0.6),
        fixtures::chain_with_two_junctions(),
        fixtures::multi_outlet(&[1.0, 0.5, 2.0, 1.5], &[3.0, 12.0, 20.0, 6.0], 0.4),
        fixtures::quarter_arc(3.0, 0.4, 50),
        fixtures::straight(7.0, 0.2, 0.3),
    ];
    let mut checked = 0;
    for t in &trees {
        let raw = discretize(t).unwrap();
        let d = entrance_length_adjust(&split_multi_outlet_junctions(&raw), t, 10.0);
        let mut flows: BTreeMap<ElementId, f64> = d.elements().iter().map(|e| (e.id, 1.0)).collect();
        for j in &d.junctions {
            for o in &j.outlets {
                flows.insert(o.element, 1.0 / j.outlets.len() as f64);
            }
        }
        for f in extract_all_features(&d, t, &fluid, Some(&flows)).unwrap() {
            checked += 1;
            problems.extend(f.invariant_violations());
        }
    }
    let dir = tempfile::tempdir().unwrap();
    let cfg = PipelineConfig::default();
    let oracle = SyntheticOracle { seed: 404, trifurcation_probability: 0.4, ..SyntheticOracle::default() };
    let spec = generate_synthetic_cohort(&oracle, 15, &cfg, dir.path()).unwrap();
    for entry in &spec.geometries {
        let t = entry.load_centerline(dir.path()).unwrap();
        let prep = prepare(&entry.id, t.clone(), entry.load_boundary(dir.path()).unwrap(), &cfg).unwrap();
        for f in prep.features.values() {
            checked += 1;
            problems.extend(f.invariant_violations().into_iter().map(|v| format!("{}: {v}", entry.id)));
        }
        trees.push(t);
    }

    outcome(
        problems.is_empty(),
        format!(
            "4-outlet split {}+{}, split vs unsplit {split_err:.1e} (<1e-9), {checked} feature vectors on {} trees, {} problems{}",
            split.junctions.len(),
            split.connectors.len(),
            trees.len(),
            problems.len(),
            problems.first().map(|p| format!(" (first: {p})")).unwrap_or_default()
        ),
    )
}

fn oracle_study() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let cfg = PipelineConfig { seed: 42, ..PipelineConfig::default() };
    let oracle = SyntheticOracle { seed: 42, ..SyntheticOracle::default() };
    let spec = generate_synthetic_cohort(&oracle, 15, &cfg, dir.path()).unwrap();
    let geoms = load_geometries(dir.path(), &spec, &cfg).unwrap();
    let report = crossval(&spec.name, &geoms, &cfg, None).unwrap();
    let base = report.summary_for(Modality::Baseline).unwrap();
    let both = report.summary_for(Modality::LearnedBoth).unwrap();
    let wins = base.trial_means.iter().zip(&both.trial_means).filter(|(b, l)| matches!((b, l), (Some(b), Some(l)) if l < b)).count();
    let (bm, lm) = (base.mean.unwrap_or(f64::NAN), both.mean.unwrap_or(f64::NAN));
    let reduction = 100.0 * (1.0 - lm / bm);
    let elapsed = start.elapsed().as_secs_f64();
    outcome(
        wins >= 4 && reduction >= 50.0 && elapsed < 600.0,
        format!(
            "learned-both beats baseline in {wins}/5 trials (>=4), mean MPE {bm:.2}% -> {lm:.2}%, reduction {reduction:.1}% (>=50%), {elapsed:.1} s (<600 s)"
        ),
    )
}

fn performance() -> Outcome {
    let net = random_tree_network(42, 300);
    let cfg = SimulationConfig {
        steps_per_cycle: 1000,
        max_cycles: 5,
        cycle_tolerance: 1e-300,
        flavor: ModelFlavor::Rri,
        ..Default::default()
    };
    let start = Instant::now();
    let out = simulate(&net, &cfg).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    outcome(out.cycles == 5 && elapsed < 2.0, format!("{} elements, {} cycles x 1000 steps in {elapsed:.3} s (<2 s)", net.elements.len(), out.cycles))
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().display().to_string(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let run = |root: &Path| {
        let bin = env!("CARGO_BIN_EXE_hybrid0d");
        let cohort = root.join("cohort");
        let report = root.join("report");
        let common = ["--seed", "11", "--steps-per-cycle", "300", "--epochs", "300"];
        let synth = Command::new(bin).args(common).args(["--out", cohort.to_str().unwrap(), "synth", "--count", "6"]).output().unwrap();
        let cv = Command::new(bin)
            .args(common)
            .args(["--out", report.to_str().unwrap(), "crossval", "--cohort", cohort.to_str().unwrap()])
            .output()
            .unwrap();
        synth.status.success() && cv.status.success()
    };
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    if !run(&a) || !run(&b) {
        return outcome(false, "synth or crossval failed");
    }
    let (fa, fb) = (files(&a), files(&b));
    let differing: Vec<&String> = fa.iter().zip(&fb).filter(|(x, y)| x != y).map(|(x, _)| &x.0).collect();
    outcome(
        fa.len() == fb.len() && differing.is_empty() && !fa.is_empty(),
        format!("{} files compared, {} differ{}", fa.len(), differing.len(), differing.first().map(|d| format!(" (first: {d})")).unwrap_or_default()),
    )
}

fn flavors() -> Outcome {
    // RI: nothing stored or predicted carries a quadratic term
    let dir = tempfile::tempdir().unwrap();
    let ri = PipelineConfig { flavor: ModelFlavor::Ri, ..PipelineConfig::default() };
    let oracle = SyntheticOracle { seed: 808, map: GroundTruthMap::Perturbed { strength: 1.0, quadratic_gain: 50.0 }, ..SyntheticOracle::default() };
    let spec = generate_synthetic_cohort(&oracle, 6, &ri, dir.path()).unwrap();
    let geoms = load_geometries(dir.path(), &spec, &ri).unwrap();
    let refs: Vec<_> = geoms.iter().collect();
    let (models, _) = train_models(&refs, &PipelineConfig { train: hybrid0d::nn::TrainConfig { epochs: 300, ..ri.train }, ..ri.clone() }, 1).unwrap();
    let mut nonzero = 0;
    for (g, entry) in geoms.iter().zip(&spec.geometries) {
        let truth = entry.load_truth(dir.path()).unwrap().unwrap();
        let cal = g.calibration.as_ref().unwrap();
        let pred = predict_parameters(&models, &g.prep.processed, &g.prep.features, ModelFlavor::Ri, &g.prep.baseline, LearnedKinds::BOTH).unwrap();
        for m in [&truth, &cal.parameters, &pred, &g.prep.baseline] {
            nonzero += m.values().filter(|p| p.get(ParamKind::RQuad) != 0.0).count();
        }
    }

    // RRI fits strong quadratic truth better than RI on the same references
    let dir = tempfile::tempdir().unwrap();
    let rri = PipelineConfig { flavor: ModelFlavor::Rri, ..PipelineConfig::default() };
    let spec = generate_synthetic_cohort(&oracle, 6, &rri, dir.path()).unwrap();
    let mut better = 0;
    let mut ratios = Vec::new();
    for entry in &spec.geometries {
        let reference = ReferenceSeries::from_solution(entry.load_reference(dir.path()).unwrap()).unwrap();
        let residual = |cfg: &PipelineConfig| {
            let prep = prepare(&entry.id, entry.load_centerline(dir.path()).unwrap(), entry.load_boundary(dir.path()).unwrap(), cfg).unwrap();
            let net = prep.processed_network(&prep.baseline, cfg).unwrap();
            calibrate(&CalibrationProblem::new(&net, cfg.flavor, cfg.lm), &reference, &prep.baseline).unwrap().residual_norm
        };
        let (r_rri, r_ri) = (residual(&rri), residual(&ri));
        if r_rri < r_ri {
            better += 1;
        }
        ratios.push(r_rri / r_ri);
    }
    let worst = ratios.iter().copied().fold(0.0, f64::max);
    outcome(
        nonzero == 0 && better == spec.geometries.len(),
        format!(
            "RI non-zero R_quad entries {nonzero} (=0), RRI residual below RI on {better}/{} geometries (worst RRI/RI ratio {worst:.1e})",
            spec.geometries.len()
        ),
    )
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("analytic solver", analytic_solver),
        ("jacobians and gradients", jacobians),
        ("calibration recovery", calibration_recovery),
        ("preprocessing", preprocessing),
        ("oracle cross-validation", oracle_study),
        ("performance", performance),
        ("determinism", determinism),
        ("flavors", flavors),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        println!("criterion {}: {} {name}: {}", i + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
