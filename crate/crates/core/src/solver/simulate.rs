use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::system::{SweepBuffers, System};
use super::SolverError;
use crate::circuit::{CircuitNetwork, ElementId, ModelFlavor, NodeId};
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SimulationConfig<T: Real> {
    pub steps_per_cycle: usize,
    /// Upper bound on simulated cycles.
    pub max_cycles: usize,
    /// Stop once the relative cycle-to-cycle change of every pressure is below this.
    pub cycle_tolerance: T,
    /// Absolute residual norm accepted by Newton.
    pub newton_tolerance: T,
    pub max_newton_iterations: usize,
    pub flavor: ModelFlavor,
    /// Keep every simulated cycle, not only the last.
    pub keep_history: bool,
}

impl<T: Real> Default for SimulationConfig<T> {
    fn default() -> Self {
        Self {
            steps_per_cycle: 1000,
            max_cycles: 10,
            cycle_tolerance: T::lit(1e-4),
            newton_tolerance: T::lit(1e-9),
            max_newton_iterations: 30,
            flavor: ModelFlavor::Ri,
            keep_history: false,
        }
    }
}

impl<T: Real> SimulationConfig<T> {
    pub fn validate(&self) -> Result<(), SolverError> {
        if self.steps_per_cycle < 16 {
            return Err(SolverError::InvalidConfig(format!(
                "steps per cycle must be at least 16 (got {})",
                self.steps_per_cycle
            )));
        }
        if self.max_cycles == 0 {
            return Err(SolverError::InvalidConfig("at least one cycle is required".into()));
        }
        if !(self.cycle_tolerance > T::zero()) || !(self.newton_tolerance > T::zero()) {
            return Err(SolverError::InvalidConfig("tolerances must be positive".into()));
        }
        if self.max_newton_iterations == 0 {
            return Err(SolverError::InvalidConfig("at least one Newton iteration is required".into()));
        }
        Ok(())
    }
}

/// Node pressures and element flows on a shared time grid.
///
/// Derivative series, when present, are the backward differences the
/// integrator used at each sample.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesSolution<T: Real> {
    pub times: Vec<T>,
    pub nodes: Vec<NodeId>,
    pub elements: Vec<ElementId>,
    /// `pressure[i][k]`: node `nodes[i]` at `times[k]`.
    pub pressure: Vec<Vec<T>>,
    pub flow: Vec<Vec<T>>,
    pub pressure_rate: Option<Vec<Vec<T>>>,
    pub flow_rate: Option<Vec<Vec<T>>>,
}

/// Result of [`simulate`].
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutput<T: Real> {
    /// Final cycle, times rebased to `[0, T)`.
    pub last_cycle: TimeSeriesSolution<T>,
    /// Every cycle, absolute times; present when requested.
    pub history: Option<TimeSeriesSolution<T>>,
    pub cycles: usize,
    pub converged: bool,
    /// Relative change of each cycle against the previous one.
    pub cycle_changes: Vec<T>,
}

pub const CSV_HEADER: [&str; 5] = ["time", "entity_kind", "entity_id", "quantity", "value"];

impl<T: Real> TimeSeriesSolution<T> {
    fn empty(nodes: Vec<NodeId>, elements: Vec<ElementId>, with_rates: bool) -> Self {
        let (nn, ne) = (nodes.len(), elements.len());
        Self {
            times: Vec::new(),
            nodes,
            elements,
            pressure: vec![Vec::new(); nn],
            flow: vec![Vec::new(); ne],
            pressure_rate: with_rates.then(|| vec![Vec::new(); nn]),
            flow_rate: with_rates.then(|| vec![Vec::new(); ne]),
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn pressure(&self, node: NodeId) -> Option<&[T]> {
        self.nodes.iter().position(|n| *n == node).map(|i| self.pressure[i].as_slice())
    }

    pub fn flow(&self, element: ElementId) -> Option<&[T]> {
        self.elements.iter().position(|e| *e == element).map(|i| self.flow[i].as_slice())
    }

    pub fn pressure_rate(&self, node: NodeId) -> Option<&[T]> {
        let i = self.nodes.iter().position(|n| *n == node)?;
        self.pressure_rate.as_ref().map(|r| r[i].as_slice())
    }

    pub fn flow_rate(&self, element: ElementId) -> Option<&[T]> {
        let i = self.elements.iter().position(|e| *e == element)?;
        self.flow_rate.as_ref().map(|r| r[i].as_slice())
    }

    /// Cycle average of each element flow (rectangle rule on the uniform grid).
    pub fn mean_flows(&self) -> std::collections::BTreeMap<ElementId, T> {
        self.elements
            .iter()
            .zip(&self.flow)
            .map(|(e, q)| (*e, q.iter().copied().sum::<T>() / T::from_count(q.len().max(1))))
            .collect()
    }

    /// Writes `time,entity_kind,entity_id,quantity,value` rows: node `P`,
    /// element `Q`, then `dPdt`/`dQdt` when present and `with_rates` is set.
    pub fn write_csv<W: Write>(&self, w: W, with_rates: bool) -> Result<(), SolverError> {
        let mut out = csv::Writer::from_writer(w);
        let csv_err = |e: csv::Error| SolverError::Csv(e.to_string());
        out.write_record(CSV_HEADER).map_err(csv_err)?;
        for (k, t) in self.times.iter().enumerate() {
            let t = t.as_f64().to_string();
            let mut row = |kind: &str, id: usize, q: &str, v: T| {
                out.write_record([t.as_str(), kind, &id.to_string(), q, &v.as_f64().to_string()])
            };
            for (i, n) in self.nodes.iter().enumerate() {
                row("node", n.0, "P", self.pressure[i][k]).map_err(csv_err)?;
            }
            for (i, e) in self.elements.iter().enumerate() {
                row("element", e.0, "Q", self.flow[i][k]).map_err(csv_err)?;
            }
            if with_rates {
                if let Some(rates) = &self.pressure_rate {
                    for (i, n) in self.nodes.iter().enumerate() {
                        row("node", n.0, "dPdt", rates[i][k]).map_err(csv_err)?;
                    }
                }
                if let Some(rates) = &self.flow_rate {
                    for (i, e) in self.elements.iter().enumerate() {
                        row("element", e.0, "dQdt", rates[i][k]).map_err(csv_err)?;
                    }
                }
            }
        }
        out.flush().map_err(|e| SolverError::Csv(e.to_string()))
    }

    pub fn to_csv_string(&self, with_rates: bool) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf, with_rates).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    /// Reads the CSV schema of [`write_csv`](Self::write_csv). Rate series are
    /// kept only if every entity has them.
    pub fn read_csv<R: Read>(r: R) -> Result<Self, SolverError> {
        use std::collections::BTreeMap;
        let mut reader = csv::Reader::from_reader(r);
        let headers = reader.headers().map_err(|e| SolverError::Csv(e.to_string()))?.clone();
        if headers.iter().collect::<Vec<_>>() != CSV_HEADER {
            return Err(SolverError::Csv(format!("unexpected header {headers:?}")));
        }
        let mut times: Vec<f64> = Vec::new();
        type Series = BTreeMap<usize, Vec<f64>>;
        let (mut p, mut q, mut dp, mut dq): (Series, Series, Series, Series) = Default::default();
        for rec in reader.records() {
            let rec = rec.map_err(|e| SolverError::Csv(e.to_string()))?;
            let parse = |i: usize| -> Result<f64, SolverError> {
                rec[i].parse::<f64>().map_err(|_| SolverError::Csv(format!("bad number `{}`", &rec[i])))
            };
            let t = parse(0)?;
            if times.last() != Some(&t) {
                times.push(t);
            }
            let id: usize = rec[2].parse().map_err(|_| SolverError::Csv(format!("bad id `{}`", &rec[2])))?;
            let v = parse(4)?;
            let target = match (&rec[1], &rec[3]) {
                ("node", "P") => &mut p,
                ("element", "Q") => &mut q,
                ("node", "dPdt") => &mut dp,
                ("element", "dQdt") => &mut dq,
                (k, n) => return Err(SolverError::Csv(format!("unknown quantity {k}/{n}"))),
            };
            target.entry(id).or_default().push(v);
        }
        let n = times.len();
        for s in [&p, &q, &dp, &dq] {
            if s.values().any(|v| v.len() != n) {
                return Err(SolverError::Csv("series lengths differ from the time grid".into()));
            }
        }
        let conv = |s: Series| -> Vec<Vec<T>> { s.into_values().map(|v| v.into_iter().map(T::lit).collect()).collect() };
        let nodes: Vec<NodeId> = p.keys().map(|i| NodeId(*i)).collect();
        let elements: Vec<ElementId> = q.keys().map(|i| ElementId(*i)).collect();
        let rates = dp.keys().eq(p.keys()) && dq.keys().eq(q.keys()) && (!dp.is_empty() || !dq.is_empty());
        Ok(Self {
            times: times.into_iter().map(T::lit).collect(),
            nodes,
            elements,
            pressure: conv(p),
            flow: conv(q),
            pressure_rate: rates.then(|| conv(dp.clone())),
            flow_rate: rates.then(|| conv(dq.clone())),
        })
    }

    /// Multiplies every pressure (and pressure rate) by `factor`.
    pub fn scale_pressures(&mut self, factor: T) {
        for s in self.pressure.iter_mut().chain(self.pressure_rate.iter_mut().flatten()) {
            for v in s.iter_mut() {
                *v *= factor;
            }
        }
    }
}

/// Relative L∞ change of node pressures between consecutive cycles.
///
/// Entry `c` compares cycle `c + 1` with cycle `c`; it is the largest, over
/// nodes, of `max|P_{c+1} − P_c| / max|P_{c+1}|`.
pub fn cycle_convergence<T: Real>(sol: &TimeSeriesSolution<T>, period: T) -> Result<Vec<T>, SolverError> {
    if sol.times.len() < 2 {
        return Err(SolverError::InsufficientData("need at least two samples".into()));
    }
    let dt = sol.times[1] - sol.times[0];
    let per_cycle = (period / dt).round().to_usize().unwrap_or(0);
    if per_cycle == 0 || sol.times.len() < 2 * per_cycle {
        return Err(SolverError::InsufficientData(format!(
            "need two full cycles of {per_cycle} samples, have {}",
            sol.times.len()
        )));
    }
    let cycles = sol.times.len() / per_cycle;
    let mut out = Vec::with_capacity(cycles - 1);
    for c in 1..cycles {
        let mut worst = T::zero();
        for p in &sol.pressure {
            let (prev, cur) = (&p[(c - 1) * per_cycle..c * per_cycle], &p[c * per_cycle..(c + 1) * per_cycle]);
            worst = worst.max(relative_change(prev, cur));
        }
        out.push(worst);
    }
    Ok(out)
}

fn relative_change<T: Real>(prev: &[T], cur: &[T]) -> T {
    let diff = prev.iter().zip(cur).fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs()));
    let scale = crate::scalar::max_abs(cur);
    if scale > T::zero() {
        diff / scale
    } else {
        diff
    }
}

/// Runs the network to periodicity with backward Euler and Newton iteration.
pub fn simulate<T: Real>(net: &CircuitNetwork<T>, cfg: &SimulationConfig<T>) -> Result<SimulationOutput<T>, SolverError> {
    cfg.validate()?;
    let diagnostics = net.validate();
    if !diagnostics.is_empty() {
        return Err(SolverError::InvalidNetwork(diagnostics));
    }
    let sys = System::new(net, cfg.flavor);
    let layout = sys.layout().clone();
    let (nn, ne) = (layout.nodes.len(), layout.elements.len());
    let n = cfg.steps_per_cycle;
    let dt = net.cycle_period / T::from_count(n);
    let mut x = sys.initial_state();
    let mut rate = vec![T::zero(); x.len()];
    let mut buf = SweepBuffers::default();
    let mut r = vec![T::zero(); x.len()];

    let mut history = cfg
        .keep_history
        .then(|| TimeSeriesSolution::empty(layout.nodes.clone(), layout.elements.clone(), true));
    let mut prev_cycle: Option<Vec<Vec<T>>> = None;
    let mut changes = Vec::new();
    let mut converged = false;
    let mut cycle_states: Vec<(Vec<T>, Vec<T>)> = Vec::with_capacity(n);
    let mut cycles = 0;
    let mut step = 0usize;

    for c in 0..cfg.max_cycles {
        cycle_states.clear();
        for k in 0..n {
            cycle_states.push((x.clone(), rate.clone()));
            step += 1;
            let t = T::from_count(c * n + k + 1) * dt;
            let prev = x.clone();
            let mut iter = 0;
            loop {
                sys.residual_into(&x, &prev, dt, t, &mut r);
                let norm = crate::scalar::max_abs(&r);
                if !norm.is_finite() {
                    return Err(SolverError::Divergence { step, time: t.as_f64(), residual: norm.as_f64() });
                }
                if norm <= cfg.newton_tolerance {
                    break;
                }
                if iter == cfg.max_newton_iterations {
                    return Err(SolverError::Divergence { step, time: t.as_f64(), residual: norm.as_f64() });
                }
                let delta = match sys.tree_step(&x, &r, dt, &mut buf) {
                    Some(d) => d,
                    None => {
                        let (_, jac) = sys.residual_and_jacobian(&x, &prev, dt, t);
                        let neg: Vec<T> = r.iter().map(|v| -*v).collect();
                        jac.solve(&neg).ok_or(SolverError::Singular { step, time: t.as_f64() })?
                    }
                };
                let mut step_size = T::zero();
                let mut scale = T::one();
                for (xi, di) in x.iter_mut().zip(&delta) {
                    *xi += *di;
                    step_size = step_size.max(di.abs());
                    scale = scale.max(xi.abs());
                }
                iter += 1;
                // Converged to rounding: the residual floor sits above the
                // absolute tolerance for large pressures.
                if step_size <= T::lit(64.0) * T::epsilon() * scale {
                    sys.residual_into(&x, &prev, dt, t, &mut r);
                    break;
                }
            }
            for ((ri, xi), pi) in rate.iter_mut().zip(&x).zip(&prev) {
                *ri = (*xi - *pi) / dt;
            }
        }
        cycles = c + 1;
        if let Some(h) = history.as_mut() {
            append(h, &cycle_states, nn, ne, T::from_count(c * n) * dt, dt);
        }
        let pressures: Vec<Vec<T>> = (0..nn).map(|i| cycle_states.iter().map(|(s, _)| s[i]).collect()).collect();
        if let Some(prev) = &prev_cycle {
            let change = prev
                .iter()
                .zip(&pressures)
                .fold(T::zero(), |m, (a, b)| m.max(relative_change(a, b)));
            changes.push(change);
            if change < cfg.cycle_tolerance {
                converged = true;
                break;
            }
        }
        prev_cycle = Some(pressures);
    }

    let mut last = TimeSeriesSolution::empty(layout.nodes.clone(), layout.elements.clone(), true);
    append(&mut last, &cycle_states, nn, ne, T::zero(), dt);
    Ok(SimulationOutput { last_cycle: last, history, cycles, converged, cycle_changes: changes })
}

fn append<T: Real>(sol: &mut TimeSeriesSolution<T>, states: &[(Vec<T>, Vec<T>)], nn: usize, ne: usize, t0: T, dt: T) {
    for (k, (x, rate)) in states.iter().enumerate() {
        sol.times.push(t0 + T::from_count(k) * dt);
        for i in 0..nn {
            sol.pressure[i].push(x[i]);
            sol.pressure_rate.as_mut().unwrap()[i].push(rate[i]);
        }
        for i in 0..ne {
            sol.flow[i].push(x[nn + i]);
            sol.flow_rate.as_mut().unwrap()[i].push(rate[nn + i]);
        }
    }
}
