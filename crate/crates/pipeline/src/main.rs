use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hybrid0d::calibrate::ReferenceSeries;
use hybrid0d::circuit::{BoundarySpec, ModelFlavor, NodeId};
use hybrid0d::geometry::{CenterlineTree, FEATURE_NAMES};
use hybrid0d::nn::{LossKind, ParameterModels};
use hybrid0d::solver::simulate;
use hybrid0d_pipeline::cohort::{load_parameters, load_solution, parameters_json, write_solution};
use hybrid0d_pipeline::{
    calibrate_geometry, compute_mpe, crossval, emit_report, generate_synthetic_cohort, history_csv, load_geometries,
    prepare, train_models, CohortSpec, GroundTruthMap, Modality, PipelineConfig, PipelineError, PreparedGeometry,
    SyntheticOracle,
};

#[derive(Parser)]
#[command(name = "hybrid0d", version, about = "Lumped-parameter blood flow models with learned element parameters")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Pressure-drop law: ri or rri.
    #[arg(long, global = true)]
    flavor: Option<ModelFlavor>,
    /// Training loss: mse or proximity.
    #[arg(long, global = true)]
    loss: Option<LossKind>,
    /// Entrance length as a multiple of the outlet radius (0 disables).
    #[arg(long, global = true)]
    entrance_length_factor: Option<f64>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Training epochs per network.
    #[arg(long, global = true)]
    epochs: Option<usize>,
    /// Time steps per cardiac cycle.
    #[arg(long, global = true)]
    steps_per_cycle: Option<usize>,
}

#[derive(Args)]
struct GeometryArgs {
    /// Labelled centerline (JSON).
    #[arg(long)]
    centerline: PathBuf,
    /// Inflow and outlet boundary conditions (JSON).
    #[arg(long)]
    boundary: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Discretize and preprocess a centerline; write both discretizations and features.
    Prep(GeometryArgs),
    /// Write the feature table of a geometry.
    Featurize(GeometryArgs),
    /// Forward-simulate a geometry.
    Simulate {
        #[command(flatten)]
        geometry: GeometryArgs,
        /// Element parameters (JSON); baseline values when omitted.
        #[arg(long)]
        parameters: Option<PathBuf>,
        /// Use the plain discretization (no splitting or entrance-length adjustment).
        #[arg(long)]
        unprocessed: bool,
        /// Also write every simulated cycle.
        #[arg(long)]
        all_cycles: bool,
        /// Newton residual tolerance.
        #[arg(long)]
        newton_tolerance: Option<f64>,
        /// Newton iterations allowed per time step.
        #[arg(long)]
        max_newton_iterations: Option<usize>,
    },
    /// Fit element parameters to a reference series.
    Calibrate {
        #[command(flatten)]
        geometry: GeometryArgs,
        #[arg(long)]
        reference: PathBuf,
    },
    /// Calibrate a cohort and train the parameter networks on all of it.
    Train {
        #[arg(long)]
        cohort: PathBuf,
    },
    /// Predict element parameters with trained networks.
    Predict {
        #[command(flatten)]
        geometry: GeometryArgs,
        #[arg(long)]
        models: PathBuf,
        /// learned-vessels, learned-junctions or learned-both.
        #[arg(long, default_value = "learned-both")]
        modality: Modality,
    },
    /// Maximum percent error of the inlet pressure of a solution against a reference.
    Evaluate {
        #[arg(long)]
        solution: PathBuf,
        #[arg(long)]
        reference: PathBuf,
        /// Inlet node of the solution.
        #[arg(long, default_value_t = 0)]
        node: usize,
        /// Inlet node of the reference (defaults to --node).
        #[arg(long)]
        reference_node: Option<usize>,
    },
    /// Repeated hold-out evaluation of every modality on a cohort.
    Crossval {
        #[arg(long)]
        cohort: PathBuf,
        #[arg(long, default_value_t = 5)]
        trials: usize,
        /// Fraction of geometries held out per trial.
        #[arg(long, default_value_t = 0.1)]
        holdout: f64,
    },
    /// Generate a synthetic oracle cohort.
    Synth {
        #[arg(long, default_value_t = 15)]
        count: usize,
        /// Ground truth equal to the baseline model.
        #[arg(long)]
        identity: bool,
        /// Multiply the quadratic resistance of the ground truth by this gain.
        #[arg(long, default_value_t = 1.0)]
        quadratic_gain: f64,
        #[arg(long)]
        min_depth: Option<usize>,
        #[arg(long)]
        max_depth: Option<usize>,
    },
}

impl Global {
    /// Flags override the cohort's settings, which override the defaults.
    fn config(&self, cohort: Option<&CohortSpec>) -> PipelineConfig {
        let mut cfg = PipelineConfig { seed: self.seed, ..PipelineConfig::default() };
        if let Some(c) = cohort {
            cfg.flavor = c.flavor;
            cfg.entrance_length_factor = c.entrance_length_factor;
        }
        if let Some(f) = self.flavor {
            cfg.flavor = f;
        }
        if let Some(l) = self.loss {
            cfg.loss = l;
        }
        if let Some(f) = self.entrance_length_factor {
            cfg.entrance_length_factor = f;
        }
        if let Some(e) = self.epochs {
            cfg.train.epochs = e;
        }
        if let Some(n) = self.steps_per_cycle {
            cfg.simulation.steps_per_cycle = n;
        }
        cfg
    }
}

fn write(path: &Path, text: &str) -> Result<(), PipelineError> {
    if let Some(p) = path.parent() {
        std::fs::create_dir_all(p).map_err(|e| PipelineError::io(p, e))?;
    }
    std::fs::write(path, text).map_err(|e| PipelineError::io(path, e))
}

fn load_geometry(g: &GeometryArgs, cfg: &PipelineConfig) -> Result<PreparedGeometry, PipelineError> {
    let tree = CenterlineTree::load(&g.centerline)?;
    let boundary = BoundarySpec::load(&g.boundary)?;
    let id = g.centerline.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    prepare(&id, tree, boundary, cfg)
}

fn features_csv(prep: &PreparedGeometry) -> String {
    let mut s = String::from("element_id,kind,generation");
    for n in FEATURE_NAMES {
        s.push(',');
        s.push_str(n);
    }
    s.push('\n');
    for (id, f) in &prep.features {
        let kind = match f.kind {
            hybrid0d::circuit::ElementKind::Vessel => "vessel",
            hybrid0d::circuit::ElementKind::Junction => "junction",
            hybrid0d::circuit::ElementKind::Connector => "connector",
        };
        s.push_str(&format!("{id},{kind},{}", prep.generations.get(id).copied().unwrap_or(0)));
        for c in f.columns() {
            s.push(',');
            if let Some(v) = c {
                s.push_str(&v.to_string());
            }
        }
        s.push('\n');
    }
    s
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    let g = &cli.global;
    let out = &g.out;
    match &cli.command {
        Command::Prep(geo) => {
            let cfg = g.config(None);
            let prep = load_geometry(geo, &cfg)?;
            write(&out.join("discretization.json"), &prep.processed.to_json())?;
            write(&out.join("discretization_unprocessed.json"), &prep.raw.to_json())?;
            write(&out.join("features.csv"), &features_csv(&prep))?;
            write(&out.join("baseline_parameters.json"), &parameters_json(&prep.baseline))?;
            println!(
                "{} elements ({} unprocessed), {} feature rows",
                prep.processed.elements().len(),
                prep.raw.elements().len(),
                prep.features.len()
            );
        }
        Command::Featurize(geo) => {
            let prep = load_geometry(geo, &g.config(None))?;
            write(&out.join("features.csv"), &features_csv(&prep))?;
            println!("{} feature rows", prep.features.len());
        }
        Command::Simulate { geometry, parameters, unprocessed, all_cycles, newton_tolerance, max_newton_iterations } => {
            let mut cfg = g.config(None);
            let prep = load_geometry(geometry, &cfg)?;
            cfg.simulation.keep_history = *all_cycles;
            if let Some(t) = newton_tolerance {
                cfg.simulation.newton_tolerance = *t;
            }
            if let Some(n) = max_newton_iterations {
                cfg.simulation.max_newton_iterations = *n;
            }
            let net = match (parameters, unprocessed) {
                (Some(p), false) => prep.processed_network(&load_parameters(p)?, &cfg)?,
                (Some(p), true) => prep.raw_network(&load_parameters(p)?, &cfg)?,
                (None, false) => prep.processed_network(&prep.baseline, &cfg)?,
                (None, true) => prep.raw_network(&prep.raw_baseline, &cfg)?,
            };
            let result = simulate(&net, &cfg.sim())?;
            write_solution(&out.join("solution.csv"), &result.last_cycle, true)?;
            if let Some(h) = &result.history {
                write_solution(&out.join("solution_all_cycles.csv"), h, false)?;
            }
            println!("{} cycles, converged: {}", result.cycles, result.converged);
        }
        Command::Calibrate { geometry, reference } => {
            let cfg = g.config(None);
            let prep = load_geometry(geometry, &cfg)?;
            let reference = ReferenceSeries::from_solution(load_solution(reference)?)?;
            let result = calibrate_geometry(&prep, &reference, &cfg)?;
            write(&out.join("parameters.json"), &parameters_json(&result.parameters))?;
            write(&out.join("calibration.json"), &result.report_json())?;
            println!("residual {:e} -> {:e} ({:?})", result.initial_residual_norm, result.residual_norm, result.status);
        }
        Command::Train { cohort } => {
            let spec = CohortSpec::load(cohort)?;
            let cfg = g.config(Some(&spec));
            let geoms = load_geometries(cohort, &spec, &cfg)?;
            let refs: Vec<_> = geoms.iter().collect();
            let (models, histories) = train_models(&refs, &cfg, cfg.seed)?;
            models.save_dir(out.join("models"))?;
            for (name, h) in &histories {
                write(&out.join(format!("training_{name}.csv")), &history_csv(h))?;
                println!("{name}: final loss {:e}", h.last().copied().unwrap_or(f64::NAN));
            }
        }
        Command::Predict { geometry, models, modality } => {
            let cfg = g.config(None);
            let prep = load_geometry(geometry, &cfg)?;
            let models = ParameterModels::load_dir(models)?;
            let kinds = match modality {
                Modality::LearnedVessels => hybrid0d::nn::LearnedKinds::VESSELS,
                Modality::LearnedJunctions => hybrid0d::nn::LearnedKinds::JUNCTIONS,
                Modality::LearnedBoth => hybrid0d::nn::LearnedKinds::BOTH,
                other => return Err(PipelineError::Invalid(format!("predict needs a learned modality, got {other}"))),
            };
            let params =
                hybrid0d::nn::predict_parameters(&models, &prep.processed, &prep.features, cfg.flavor, &prep.baseline, kinds)?;
            write(&out.join("parameters.json"), &parameters_json(&params))?;
            println!("{} elements", params.len());
        }
        Command::Evaluate { solution, reference, node, reference_node } => {
            let sol = load_solution(solution)?;
            let reference = load_solution(reference)?;
            let mpe = compute_mpe(&sol, NodeId(*node), &reference, NodeId(reference_node.unwrap_or(*node)))?;
            write(&out.join("mpe.json"), &format!("{{\n  \"mpe_percent\": {mpe}\n}}\n"))?;
            println!("MPE {mpe:.4}%");
        }
        Command::Crossval { cohort, trials, holdout } => {
            let spec = CohortSpec::load(cohort)?;
            let mut cfg = g.config(Some(&spec));
            cfg.trials = *trials;
            cfg.holdout_fraction = *holdout;
            let geoms = load_geometries(cohort, &spec, &cfg)?;
            let report = crossval(&spec.name, &geoms, &cfg, Some(out))?;
            emit_report(&report, out)?;
            for s in &report.summary {
                match s.mean {
                    Some(m) => println!("{:<18} mean MPE {m:.3}% (excluded {})", s.modality.as_str(), s.excluded),
                    None => println!("{:<18} no successful runs (excluded {})", s.modality.as_str(), s.excluded),
                }
            }
        }
        Command::Synth { count, identity, quadratic_gain, min_depth, max_depth } => {
            let cfg = g.config(None);
            let mut oracle = SyntheticOracle { seed: g.seed, ..SyntheticOracle::default() };
            oracle.map = if *identity {
                GroundTruthMap::Identity
            } else {
                GroundTruthMap::Perturbed { strength: 1.0, quadratic_gain: *quadratic_gain }
            };
            if let Some(d) = min_depth {
                oracle.min_depth = *d;
                oracle.max_depth = oracle.max_depth.max(*d);
            }
            if let Some(d) = max_depth {
                oracle.max_depth = *d;
                oracle.min_depth = oracle.min_depth.min(*d);
            }
            let spec = generate_synthetic_cohort(&oracle, *count, &cfg, out)?;
            for r in &spec.regenerations {
                eprintln!("regenerated {r}");
            }
            println!("{} geometries written to {}", spec.geometries.len(), out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
