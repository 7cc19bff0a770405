//! Unknown layout, residual, analytic Jacobian and the tree-structured
//! Newton solve of the implicit time step.

use std::collections::{BTreeMap, VecDeque};

use super::linalg::DenseMatrix;
use crate::circuit::{BoundaryCondition, CircuitNetwork, ElementId, ElementParameters, ModelFlavor, NodeId, Waveform};
use crate::Real;

/// Position of every unknown in the stacked state vector.
///
/// The state is `[P of each node (sorted ids), Q of each element (network
/// order), capacitor pressure of each RCR outlet (sorted node ids)]`. Residual
/// rows use the same blocks: one row per node, one per element, one per RCR.
#[derive(Debug, Clone, PartialEq)]
pub struct StateLayout {
    pub nodes: Vec<NodeId>,
    pub elements: Vec<ElementId>,
    pub rcr_nodes: Vec<NodeId>,
}

impl StateLayout {
    pub fn dim(&self) -> usize {
        self.nodes.len() + self.elements.len() + self.rcr_nodes.len()
    }

    pub fn pressure(&self, node: NodeId) -> Option<usize> {
        self.nodes.binary_search(&node).ok()
    }

    pub fn flow(&self, element: ElementId) -> Option<usize> {
        self.elements.iter().position(|e| *e == element).map(|i| self.nodes.len() + i)
    }

    pub fn capacitor(&self, node: NodeId) -> Option<usize> {
        self.rcr_nodes.binary_search(&node).ok().map(|i| self.nodes.len() + self.elements.len() + i)
    }
}

#[derive(Debug, Clone)]
enum NodeRole<T: Real> {
    Inflow(Waveform<T>),
    Interior,
    Resistance { resistance: T, distal_pressure: T },
    Rcr { proximal: T, capacitance: T, distal: T, distal_pressure: T, slot: usize },
}

#[derive(Debug, Clone)]
struct Branch<T: Real> {
    inlet: usize,
    outlet: usize,
    params: ElementParameters<T>,
}

/// Pre-indexed network ready for repeated residual evaluations.
#[derive(Debug, Clone)]
pub struct System<T: Real> {
    layout: StateLayout,
    flavor: ModelFlavor,
    period: T,
    branches: Vec<Branch<T>>,
    roles: Vec<NodeRole<T>>,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    /// Nodes in breadth-first order from the inflow node.
    order: Vec<usize>,
    root: usize,
}

/// Scratch space of the tree sweep.
#[derive(Debug, Clone, Default)]
pub(crate) struct SweepBuffers<T: Real> {
    z: Vec<T>,
    e: Vec<T>,
    y: Vec<T>,
    f: Vec<T>,
    k: Vec<T>,
}

impl<T: Real> System<T> {
    /// Indexes a network. The network must satisfy `validate()`.
    pub fn new(net: &CircuitNetwork<T>, flavor: ModelFlavor) -> Self {
        let nodes = net.nodes();
        let index: BTreeMap<NodeId, usize> = nodes.iter().enumerate().map(|(i, n)| (*n, i)).collect();
        let elements: Vec<ElementId> = net.elements.iter().map(|e| e.id).collect();
        let mut parent = vec![None; nodes.len()];
        let mut children = vec![Vec::new(); nodes.len()];
        let branches: Vec<Branch<T>> = net
            .elements
            .iter()
            .enumerate()
            .map(|(k, e)| {
                let (a, b) = (index[&e.inlet], index[&e.outlet]);
                parent[b] = Some(k);
                children[a].push(k);
                Branch { inlet: a, outlet: b, params: e.params }
            })
            .collect();
        let mut rcr_nodes = Vec::new();
        let mut root = 0;
        let roles = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| match net.boundary_conditions.get(n) {
                Some(BoundaryCondition::Flow(w)) => {
                    root = i;
                    NodeRole::Inflow(w.clone())
                }
                Some(BoundaryCondition::Resistance { resistance, distal_pressure }) => {
                    NodeRole::Resistance { resistance: *resistance, distal_pressure: *distal_pressure }
                }
                Some(BoundaryCondition::Rcr { proximal, capacitance, distal, distal_pressure }) => {
                    rcr_nodes.push(*n);
                    NodeRole::Rcr {
                        proximal: *proximal,
                        capacitance: *capacitance,
                        distal: *distal,
                        distal_pressure: *distal_pressure,
                        slot: rcr_nodes.len() - 1,
                    }
                }
                None => NodeRole::Interior,
            })
            .collect();
        let mut order = Vec::with_capacity(nodes.len());
        let mut queue = VecDeque::from([root]);
        while let Some(n) = queue.pop_front() {
            order.push(n);
            queue.extend(children[n].iter().map(|k| branches[*k].outlet));
        }
        Self {
            layout: StateLayout { nodes, elements, rcr_nodes },
            flavor,
            period: net.cycle_period,
            branches,
            roles,
            parent,
            children,
            order,
            root,
        }
    }

    pub fn layout(&self) -> &StateLayout {
        &self.layout
    }

    pub fn flavor(&self) -> ModelFlavor {
        self.flavor
    }

    fn nn(&self) -> usize {
        self.layout.nodes.len()
    }

    fn ne(&self) -> usize {
        self.branches.len()
    }

    /// Deterministic starting state: zero flow, every pressure at the distal
    /// pressure of the first outlet condition.
    pub fn initial_state(&self) -> Vec<T> {
        let p0 = self
            .roles
            .iter()
            .find_map(|r| match r {
                NodeRole::Resistance { distal_pressure, .. } | NodeRole::Rcr { distal_pressure, .. } => {
                    Some(*distal_pressure)
                }
                _ => None,
            })
            .unwrap_or_else(T::zero);
        let mut x = vec![T::zero(); self.layout.dim()];
        for v in x[..self.nn()].iter_mut() {
            *v = p0;
        }
        let off = self.nn() + self.ne();
        for v in x[off..].iter_mut() {
            *v = p0;
        }
        x
    }

    /// Residual of the backward-Euler step ending at time `t`.
    pub fn residual(&self, x: &[T], prev: &[T], dt: T, t: T) -> Vec<T> {
        let mut r = vec![T::zero(); x.len()];
        self.residual_into(x, prev, dt, t, &mut r);
        r
    }

    pub(crate) fn residual_into(&self, x: &[T], prev: &[T], dt: T, t: T, r: &mut [T]) {
        let (nn, ne) = (self.nn(), self.ne());
        for (k, b) in self.branches.iter().enumerate() {
            let q = x[nn + k];
            let rate = (q - prev[nn + k]) / dt;
            r[nn + k] = x[b.inlet] - x[b.outlet] - b.params.pressure_drop(q, rate, self.flavor);
        }
        for (n, role) in self.roles.iter().enumerate() {
            let outflow: T = self.children[n].iter().map(|k| x[nn + k]).sum();
            let inflow = self.parent[n].map(|k| x[nn + k]).unwrap_or_else(T::zero);
            r[n] = match role {
                NodeRole::Inflow(w) => outflow - w.eval(t, self.period),
                NodeRole::Interior => inflow - outflow,
                NodeRole::Resistance { resistance, distal_pressure } => x[n] - *resistance * inflow - *distal_pressure,
                NodeRole::Rcr { proximal, capacitance, distal, distal_pressure, slot } => {
                    let c = nn + ne + slot;
                    r[c] = *distal * *capacitance * (x[c] - prev[c]) / dt - *distal * inflow + x[c] - *distal_pressure;
                    x[n] - *proximal * inflow - x[c]
                }
            };
        }
    }

    /// Residual and its exact Jacobian with respect to `x`.
    pub fn residual_and_jacobian(&self, x: &[T], prev: &[T], dt: T, t: T) -> (Vec<T>, DenseMatrix<T>) {
        let r = self.residual(x, prev, dt, t);
        let (nn, ne) = (self.nn(), self.ne());
        let mut j = DenseMatrix::zeros(x.len(), x.len());
        for (k, b) in self.branches.iter().enumerate() {
            let row = nn + k;
            j.add(row, b.inlet, T::one());
            j.add(row, b.outlet, -T::one());
            let g = b.params.resistance_slope(x[nn + k], self.flavor) + b.params.inductance / dt;
            j.add(row, nn + k, -g);
        }
        for (n, role) in self.roles.iter().enumerate() {
            let parent = self.parent[n].map(|k| nn + k);
            match role {
                NodeRole::Inflow(_) => {
                    for k in &self.children[n] {
                        j.add(n, nn + k, T::one());
                    }
                }
                NodeRole::Interior => {
                    if let Some(p) = parent {
                        j.add(n, p, T::one());
                    }
                    for k in &self.children[n] {
                        j.add(n, nn + k, -T::one());
                    }
                }
                NodeRole::Resistance { resistance, .. } => {
                    j.add(n, n, T::one());
                    if let Some(p) = parent {
                        j.add(n, p, -*resistance);
                    }
                }
                NodeRole::Rcr { proximal, capacitance, distal, slot, .. } => {
                    let c = nn + ne + slot;
                    j.add(n, n, T::one());
                    j.add(n, c, -T::one());
                    j.add(c, c, *distal * *capacitance / dt + T::one());
                    if let Some(p) = parent {
                        j.add(n, p, -*proximal);
                        j.add(c, p, -*distal);
                    }
                }
            }
        }
        (r, j)
    }

    /// Newton update `δ` solving `J δ = −r` in O(n) by eliminating the tree
    /// from the leaves up. `None` when an elimination pivot vanishes.
    pub(crate) fn tree_step(&self, x: &[T], r: &[T], dt: T, buf: &mut SweepBuffers<T>) -> Option<Vec<T>> {
        let (nn, ne) = (self.nn(), self.ne());
        buf.z.resize(nn, T::zero());
        buf.e.resize(nn, T::zero());
        buf.y.resize(ne, T::zero());
        buf.f.resize(ne, T::zero());
        buf.k.resize(nn, T::zero());
        let tiny = T::lit(1e-13);
        let mut root_p = T::zero();
        for &n in self.order.iter().rev() {
            match &self.roles[n] {
                NodeRole::Resistance { resistance, .. } => {
                    buf.z[n] = *resistance;
                    buf.e[n] = -r[n];
                }
                NodeRole::Rcr { proximal, capacitance, distal, slot, .. } => {
                    let k = T::one() + *distal * *capacitance / dt;
                    buf.k[n] = k;
                    buf.z[n] = *proximal + *distal / k;
                    buf.e[n] = -r[n] - r[nn + ne + slot] / k;
                }
                role => {
                    let mut s = T::zero();
                    let mut s_abs = T::zero();
                    let mut g_sum = T::zero();
                    for &c in &self.children[n] {
                        let b = &self.branches[c];
                        let g = b.params.resistance_slope(x[nn + c], self.flavor) + b.params.inductance / dt;
                        let y = buf.z[b.outlet] + g;
                        if !(y.abs() > tiny * (buf.z[b.outlet].abs() + g.abs())) || !y.is_finite() {
                            return None;
                        }
                        let f = buf.e[b.outlet] - r[nn + c];
                        buf.y[c] = y;
                        buf.f[c] = f;
                        s += y.recip();
                        s_abs += y.recip().abs();
                        g_sum += f / y;
                    }
                    if !(s.abs() > tiny * s_abs) || !s.is_finite() {
                        return None;
                    }
                    match role {
                        NodeRole::Inflow(_) => root_p = (g_sum - r[n]) / s,
                        _ => {
                            buf.z[n] = s.recip();
                            buf.e[n] = (r[n] + g_sum) / s;
                        }
                    }
                }
            }
        }
        let mut d = vec![T::zero(); x.len()];
        d[self.root] = root_p;
        for &n in &self.order {
            let dp = d[n];
            for &c in &self.children[n] {
                let b = &self.branches[c];
                let dq = (dp - buf.f[c]) / buf.y[c];
                d[nn + c] = dq;
                d[b.outlet] = buf.z[b.outlet] * dq + buf.e[b.outlet];
                if let NodeRole::Rcr { distal, slot, .. } = &self.roles[b.outlet] {
                    let i = nn + ne + slot;
                    d[i] = (*distal * dq - r[i]) / buf.k[b.outlet];
                }
            }
        }
        d.iter().all(|v| v.is_finite()).then_some(d)
    }
}

/// Residual and Jacobian of one backward-Euler step for a network.
///
/// `state` and `prev` follow [`StateLayout`]; see [`System::new`].
pub fn residual_and_jacobian<T: Real>(
    net: &CircuitNetwork<T>,
    flavor: ModelFlavor,
    state: &[T],
    prev: &[T],
    dt: T,
    t: T,
) -> (Vec<T>, DenseMatrix<T>) {
    System::new(net, flavor).residual_and_jacobian(state, prev, dt, t)
}
