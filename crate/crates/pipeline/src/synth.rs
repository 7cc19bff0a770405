use std::collections::BTreeMap;
use std::path::Path;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use hybrid0d::circuit::{
    poiseuille_parameters, BoundaryCondition, BoundarySpec, ElementKind, ElementParameterMap, ElementParameters,
    ParamKind, Waveform,
};
use hybrid0d::geometry::{path_geometry, CenterlineBuilder, CenterlineTree, FeatureVector, PointId};
use hybrid0d::solver::simulate;

use crate::cohort::{parameters_json, write, write_solution};
use crate::{CohortEntry, CohortSpec, PipelineConfig, PipelineError, PreparedGeometry, ReferenceTopology};

/// Ground-truth parameter rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GroundTruthMap {
    /// Θ* is the baseline model itself; references come from the baseline modality.
    Identity,
    /// Poiseuille values scaled by smooth feature-dependent factors in
    /// [1, 1 + 1.5·strength]; R_quad is multiplied by `quadratic_gain`.
    Perturbed { strength: f64, quadratic_gain: f64 },
}

/// Random tree generator plus the feature → Θ* map used to label it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticOracle {
    pub seed: u64,
    pub min_depth: usize,
    pub max_depth: usize,
    pub root_radius: (f64, f64),
    /// Child radius = parent radius · decay · (1 ± asymmetry).
    pub radius_decay: f64,
    pub asymmetry: f64,
    /// Vessel length / radius.
    pub length_ratio: (f64, f64),
    /// Largest lateral excursion of a vessel, in radii.
    pub max_wiggle: f64,
    /// Largest fractional radius reduction of a focal narrowing.
    pub max_stenosis: f64,
    /// Distal radius / proximal radius range.
    pub taper: (f64, f64),
    /// Chance that a junction gets three outlets.
    pub trifurcation_probability: f64,
    /// Trees with any radius below this are regenerated.
    pub min_radius: f64,
    /// Mean inflow velocity at the root, cm/s.
    pub inflow_velocity: f64,
    /// Parallel outlet resistance / mean root-to-outlet Poiseuille resistance.
    pub outlet_resistance_ratio: f64,
    /// Windkessel time constant R_d·C, s.
    pub windkessel_time: f64,
    pub distal_pressure: f64,
    pub cycle_period: f64,
    pub map: GroundTruthMap,
}

impl Default for SyntheticOracle {
    fn default() -> Self {
        Self {
            seed: 0,
            min_depth: 2,
            max_depth: 3,
            root_radius: (0.45, 0.6),
            radius_decay: 0.82,
            asymmetry: 0.15,
            length_ratio: (14.0, 24.0),
            max_wiggle: 2.0,
            max_stenosis: 0.35,
            taper: (0.85, 1.0),
            trifurcation_probability: 0.15,
            min_radius: 0.05,
            inflow_velocity: 15.0,
            outlet_resistance_ratio: 1.0,
            windkessel_time: 0.1,
            distal_pressure: 0.0,
            cycle_period: 1.0,
            map: GroundTruthMap::Perturbed { strength: 1.0, quadratic_gain: 1.0 },
        }
    }
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Scaling factors (R_lin, L) for one element.
pub fn truth_factors(f: &FeatureVector<f64>, strength: f64) -> (f64, f64) {
    let (u_r, u_l) = match f.kind {
        ElementKind::Junction => {
            let phi = f.flow_ratio.unwrap_or(2.0);
            (
                2.5 * (f.angle - 0.6) / 0.3 + 1.5 * (phi - 2.0),
                1.5 * (f.angle - 0.6) / 0.3 - 2.0 * (f.r_out_ratio - 0.85) / 0.1,
            )
        }
        _ => (
            3.0 * (f.tortuosity - 1.0) / 0.1 + 6.0 * (1.0 - f.r_min_ratio) - 2.0,
            2.0 * (1.0 - f.r_out_ratio) / 0.1 + (f.length_ratio - 16.0) / 6.0 - 1.0,
        ),
    };
    (1.0 + 1.5 * strength * logistic(u_r), 1.0 + 1.5 * strength * logistic(u_l))
}

fn perp_basis(d: [f64; 3]) -> ([f64; 3], [f64; 3]) {
    let a = if d[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let dot = a[0] * d[0] + a[1] * d[1] + a[2] * d[2];
    let u = [a[0] - dot * d[0], a[1] - dot * d[1], a[2] - dot * d[2]];
    let n = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
    let u = [u[0] / n, u[1] / n, u[2] / n];
    let v = [d[1] * u[2] - d[2] * u[1], d[2] * u[0] - d[0] * u[2], d[0] * u[1] - d[1] * u[0]];
    (u, v)
}

struct Grower<'a> {
    b: CenterlineBuilder<f64>,
    rng: ChaCha8Rng,
    oracle: &'a SyntheticOracle,
    next_branch: usize,
    smallest: f64,
}

impl Grower<'_> {
    fn range(&mut self, (lo, hi): (f64, f64)) -> f64 {
        if hi > lo {
            self.rng.random_range(lo..hi)
        } else {
            lo
        }
    }

    /// Wiggly, tapered vessel with an optional focal narrowing.
    fn vessel(&mut self, start: PointId, dir: [f64; 3], r_in: f64, branch: usize) -> (PointId, f64) {
        let o = self.oracle;
        let r_out = r_in * self.range(o.taper);
        let length = r_in * self.range(o.length_ratio);
        let amp = r_in * self.range((0.0, o.max_wiggle));
        let waves = if self.rng.random::<bool>() { 1.0 } else { 2.0 };
        let az = self.range((0.0, std::f64::consts::TAU));
        let sten = self.range((0.0, o.max_stenosis));
        let centre = self.range((0.35, 0.65));
        let (u, v) = perp_basis(dir);
        let e = [u[0] * az.cos() + v[0] * az.sin(), u[1] * az.cos() + v[1] * az.sin(), u[2] * az.cos() + v[2] * az.sin()];
        let spacing = 0.25 * r_out.min(r_in);
        let n = (length / spacing).ceil() as usize;
        let p0 = self.b.position(start);
        let mut last = start;
        for k in 1..=n {
            let s = length * k as f64 / n as f64;
            let x = s / length;
            let off = amp * (std::f64::consts::PI * waves * x).sin();
            let p = [p0[0] + dir[0] * s + e[0] * off, p0[1] + dir[1] * s + e[1] * off, p0[2] + dir[2] * s + e[2] * off];
            let r = (r_in + (r_out - r_in) * x) * (1.0 - sten * (-((x - centre) / 0.12).powi(2)).exp());
            self.smallest = self.smallest.min(r);
            last = self.b.add(Some(last), p, r, branch, false);
        }
        (last, r_out)
    }

    fn subtree(&mut self, start: PointId, dir: [f64; 3], r: f64, depth: usize, branch: usize) {
        let (end, r_end) = self.vessel(start, dir, r, branch);
        if depth == 0 {
            return;
        }
        let o = self.oracle;
        let outlets = if self.rng.random::<f64>() < o.trifurcation_probability { 3 } else { 2 };
        let az0 = self.range((0.0, std::f64::consts::TAU));
        let (u, v) = perp_basis(dir);
        for k in 0..outlets {
            let angle = self.range((0.35, 0.9));
            let az = az0 + std::f64::consts::TAU * k as f64 / outlets as f64;
            let side = [u[0] * az.cos() + v[0] * az.sin(), u[1] * az.cos() + v[1] * az.sin(), u[2] * az.cos() + v[2] * az.sin()];
            let d = [
                dir[0] * angle.cos() + side[0] * angle.sin(),
                dir[1] * angle.cos() + side[1] * angle.sin(),
                dir[2] * angle.cos() + side[2] * angle.sin(),
            ];
            let asym = self.range((-o.asymmetry, o.asymmetry));
            let rc = r_end * o.radius_decay * (1.0 + asym);
            self.smallest = self.smallest.min(rc);
            // junction region: a short straight run labelled with the parent branch
            let jlen = r_end * self.range((0.8, 1.2));
            let spacing = 0.25 * rc;
            let steps = (jlen / spacing).ceil() as usize;
            let p0 = self.b.position(end);
            let mut last = end;
            for s in 1..=steps {
                let t = jlen * s as f64 / steps as f64;
                last = self.b.add(Some(last), [p0[0] + d[0] * t, p0[1] + d[1] * t, p0[2] + d[2] * t], rc, branch, true);
            }
            self.next_branch += 1;
            let child = self.next_branch;
            // first vessel point one spacing past the junction region
            let start = self.b.add(
                Some(last),
                {
                    let q = self.b.position(last);
                    [q[0] + d[0] * spacing, q[1] + d[1] * spacing, q[2] + d[2] * spacing]
                },
                rc,
                child,
                false,
            );
            self.subtree(start, d, rc, depth - 1, child);
        }
    }
}

/// Builds one random tree; `Err` carries the reason for rejecting it.
pub fn generate_tree(oracle: &SyntheticOracle, seed: u64) -> Result<CenterlineTree<f64>, String> {
    let mut g = Grower { b: CenterlineBuilder::new(), rng: ChaCha8Rng::seed_from_u64(seed), oracle, next_branch: 0, smallest: f64::INFINITY };
    let depth = if oracle.max_depth > oracle.min_depth {
        g.rng.random_range(oracle.min_depth..=oracle.max_depth)
    } else {
        oracle.min_depth
    };
    let r0 = g.range(oracle.root_radius);
    let root = g.b.add(None, [0.0; 3], r0, 0, false);
    g.subtree(root, [0.0, 0.0, 1.0], r0, depth, 0);
    if !(g.smallest >= oracle.min_radius) {
        return Err(format!("radius {:.4} below the minimum {}", g.smallest, oracle.min_radius));
    }
    g.b.build().map_err(|e| e.to_string())
}

/// Pulsatile inflow sized to the root and RCR outlets sized to the tree.
pub fn boundary_for(oracle: &SyntheticOracle, tree: &CenterlineTree<f64>, cfg: &PipelineConfig) -> Result<BoundarySpec<f64>, PipelineError> {
    let disc = hybrid0d::geometry::discretize(tree)?;
    let root_r = tree.point(tree.root()).misr;
    let q_mean = oracle.inflow_velocity * std::f64::consts::PI * root_r * root_r;
    let period = oracle.cycle_period;
    let inflow = Waveform::sampled(period, 200, |t| {
        let w = std::f64::consts::TAU * t / period;
        q_mean * (1.0 + 0.6 * w.sin() + 0.2 * (2.0 * w + 0.5).sin())
    });
    // mean Poiseuille resistance from the root to each outlet
    let mut upstream: BTreeMap<_, f64> = BTreeMap::from([(disc.root, 0.0)]);
    let elements = disc.elements();
    let mut frontier = vec![disc.root];
    while let Some(n) = frontier.pop() {
        for e in elements.iter().filter(|e| e.inlet == n) {
            let r = match disc.vessel(e.id) {
                Some(v) => poiseuille_parameters(&cfg.fluid, &v.geometry).map(|p| p.r_lin).unwrap_or(0.0),
                None => 0.0,
            };
            upstream.insert(e.outlet, upstream[&n] + r);
            frontier.push(e.outlet);
        }
    }
    let leaves = disc.leaf_nodes();
    let path_r = leaves.iter().map(|l| upstream[l]).sum::<f64>() / leaves.len() as f64;
    let total = oracle.outlet_resistance_ratio * path_r;
    let areas: Vec<f64> = leaves.iter().map(|l| tree.point(disc.node_point(*l)).misr.powi(2)).collect();
    let area_sum: f64 = areas.iter().sum();
    let mut outlets = BTreeMap::new();
    for (leaf, a) in leaves.iter().zip(&areas) {
        let r = total * area_sum / a;
        let (rp, rd) = (0.1 * r, 0.9 * r);
        outlets.insert(
            disc.node_point(*leaf),
            BoundaryCondition::Rcr { proximal: rp, capacitance: oracle.windkessel_time / rd, distal: rd, distal_pressure: oracle.distal_pressure },
        );
    }
    Ok(BoundarySpec { cycle_period: period, inflow, outlets })
}

/// Θ* on the processed discretization.
///
/// Vessels scale their own Poiseuille values; junction pairs scale the
/// Poiseuille values of their whole inlet→outlet path. Connectors and pairs
/// leading into connectors keep baseline values.
pub fn truth_parameters(prep: &PreparedGeometry, oracle: &SyntheticOracle, cfg: &PipelineConfig) -> Result<ElementParameterMap<f64>, PipelineError> {
    let GroundTruthMap::Perturbed { strength, quadratic_gain } = oracle.map else {
        return Ok(prep.baseline.clone());
    };
    let mut out = prep.baseline.clone();
    for e in prep.processed.elements() {
        let geometry = match e.kind {
            ElementKind::Connector => continue,
            ElementKind::Vessel => prep.processed.vessel(e.id).map(|v| v.geometry),
            ElementKind::Junction => {
                let (_, o) = prep.processed.junction_outlet(e.id).expect("junction pair");
                if o.leads_to_connector() {
                    continue;
                }
                Some(path_geometry(&prep.tree, &o.path))
            }
        };
        let Some(geometry) = geometry else { continue };
        let base = poiseuille_parameters(&cfg.fluid, &geometry).map_err(|err| PipelineError::Invalid(format!("element {}: {}", e.id, err.0)))?;
        let fv = &prep.features[&e.id];
        let (fr, fl) = truth_factors(fv, strength);
        let mut p = ElementParameters::new(base.r_lin * fr, base.r_quad * quadratic_gain, base.inductance * fl);
        if !cfg.flavor.has_quadratic() {
            p.set(ParamKind::RQuad, 0.0);
        }
        out.insert(e.id, p);
    }
    Ok(out)
}

fn tree_seed(cohort_seed: u64, index: usize, attempt: u64) -> u64 {
    cohort_seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ ((index as u64) << 20) ^ attempt
}

/// Writes `count` oracle geometries (centerline, boundary conditions,
/// ground truth and reference series) plus `cohort.json` under `out`.
pub fn generate_synthetic_cohort(
    oracle: &SyntheticOracle,
    count: usize,
    cfg: &PipelineConfig,
    out: &Path,
) -> Result<CohortSpec, PipelineError> {
    if count < 5 {
        return Err(PipelineError::Invalid(format!("a cohort needs at least 5 geometries (got {count})")));
    }
    let mut spec = CohortSpec {
        name: format!("oracle-{}", oracle.seed),
        seed: oracle.seed,
        flavor: cfg.flavor,
        entrance_length_factor: cfg.entrance_length_factor,
        oracle: Some(oracle.clone()),
        regenerations: Vec::new(),
        geometries: Vec::new(),
    };
    for index in 0..count {
        let id = format!("g{index:03}");
        let mut attempt = 0u64;
        let (tree, prep, truth) = loop {
            let seed = tree_seed(oracle.seed, index, attempt);
            attempt += 1;
            if attempt > 1000 {
                return Err(PipelineError::Invalid(format!("{id}: no acceptable tree after 1000 seeds")));
            }
            let tree = match generate_tree(oracle, seed) {
                Ok(t) => t,
                Err(reason) => {
                    spec.regenerations.push(format!("{id} seed {seed}: {reason}"));
                    continue;
                }
            };
            let boundary = boundary_for(oracle, &tree, cfg)?;
            let prep = match crate::prepare(&id, tree.clone(), boundary, cfg) {
                Ok(p) => p,
                Err(e) if e.is_divergence() || matches!(e, PipelineError::Geometry(_)) => {
                    spec.regenerations.push(format!("{id} seed {seed}: {e}"));
                    continue;
                }
                Err(e) => return Err(e),
            };
            let truth = truth_parameters(&prep, oracle, cfg)?;
            break (tree, prep, truth);
        };
        let (net, topology) = match oracle.map {
            GroundTruthMap::Identity => (prep.raw_network(&prep.raw_baseline, cfg)?, ReferenceTopology::Raw),
            GroundTruthMap::Perturbed { .. } => (prep.processed_network(&truth, cfg)?, ReferenceTopology::Processed),
        };
        let reference = simulate(&net, &cfg.sim())?.last_cycle;
        let entry = CohortEntry {
            id: id.clone(),
            centerline: format!("{id}/centerline.json"),
            boundary: format!("{id}/boundary.json"),
            reference: format!("{id}/reference.csv"),
            truth: Some(format!("{id}/truth.json")),
            reference_topology: topology,
        };
        write(&out.join(&entry.centerline), &tree.to_json())?;
        write(&out.join(&entry.boundary), &prep.boundary.to_json())?;
        write_solution(&out.join(&entry.reference), &reference, true)?;
        let truth = if topology == ReferenceTopology::Raw { &prep.raw_baseline } else { &truth };
        write(&out.join(entry.truth.as_ref().unwrap()), &parameters_json(truth))?;
        spec.geometries.push(entry);
    }
    spec.save(out)?;
    Ok(spec)
}
