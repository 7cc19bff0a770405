use serde::{Deserialize, Serialize};

use super::{CalibrationError, ReferenceSeries};
use crate::circuit::{CircuitNetwork, ElementId, ElementKind, ElementParameterMap, ModelFlavor, NodeId, ParamKind};
use crate::solver::DenseMatrix;
use crate::Real;

/// Levenberg-Marquardt settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct LmSettings<T: Real> {
    pub initial_damping: T,
    pub damping_up: T,
    pub damping_down: T,
    pub max_iterations: usize,
    /// Stop when ‖r‖₂ falls below this.
    pub residual_tolerance: T,
    /// Stop when ‖δ‖₂ ≤ tol·(‖Θ‖₂ + tol).
    pub step_tolerance: T,
}

impl<T: Real> Default for LmSettings<T> {
    fn default() -> Self {
        Self {
            initial_damping: T::lit(1e-3),
            damping_up: T::lit(10.0),
            damping_down: T::lit(10.0),
            max_iterations: 100,
            residual_tolerance: T::lit(1e-10),
            step_tolerance: T::lit(1e-10),
        }
    }
}

/// One optimization variable: a parameter of an element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FreeParameter {
    pub element: ElementId,
    pub kind: ParamKind,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct FitElement<T: Real> {
    pub id: ElementId,
    pub inlet: NodeId,
    pub outlet: NodeId,
    /// Column of R_lin, R_quad, L in Θ, or the fixed value.
    pub slots: [Result<usize, T>; 3],
}

/// Which element parameters are fitted and which stay fixed.
///
/// Connectors and frozen parameters contribute no variables; capacitance is
/// never a variable; the RI flavor fixes every R_quad at zero.
#[derive(Debug, Clone)]
pub struct CalibrationProblem<T: Real> {
    pub flavor: ModelFlavor,
    pub settings: LmSettings<T>,
    free: Vec<FreeParameter>,
    pub(crate) rows: Vec<FitElement<T>>,
    template: ElementParameterMap<T>,
}

impl<T: Real> CalibrationProblem<T> {
    /// Free set from the network's frozen flags; fixed values come from the
    /// network parameters.
    pub fn new(net: &CircuitNetwork<T>, flavor: ModelFlavor, settings: LmSettings<T>) -> Self {
        let mut free = Vec::new();
        let mut rows = Vec::new();
        let mut template = ElementParameterMap::new();
        for e in &net.elements {
            let mut p = e.params;
            if !flavor.has_quadratic() {
                p.r_quad = T::zero();
            }
            template.insert(e.id, p);
            if e.kind == ElementKind::Connector {
                continue;
            }
            let mut slots = [Err(T::zero()); 3];
            let mut any = false;
            for (i, kind) in ParamKind::ALL.into_iter().enumerate() {
                let fixed = p.frozen.contains(kind) || (kind == ParamKind::RQuad && !flavor.has_quadratic());
                slots[i] = if fixed {
                    Err(p.get(kind))
                } else {
                    any = true;
                    free.push(FreeParameter { element: e.id, kind });
                    Ok(free.len() - 1)
                };
            }
            if any {
                rows.push(FitElement { id: e.id, inlet: e.inlet, outlet: e.outlet, slots });
            }
        }
        Self { flavor, settings, free, rows, template }
    }

    pub fn free_parameters(&self) -> &[FreeParameter] {
        &self.free
    }

    pub fn dim(&self) -> usize {
        self.free.len()
    }

    /// Elements that receive residual rows (those with at least one free parameter).
    pub fn fitted_elements(&self) -> Vec<ElementId> {
        self.rows.iter().map(|r| r.id).collect()
    }

    /// Θ vector from a parameter map (missing entries fall back to the network values).
    pub fn pack(&self, params: &ElementParameterMap<T>) -> Vec<T> {
        self.free
            .iter()
            .map(|f| params.get(&f.element).unwrap_or(&self.template[&f.element]).get(f.kind))
            .collect()
    }

    /// Full parameter map with Θ written into the free slots.
    pub fn unpack(&self, theta: &[T]) -> ElementParameterMap<T> {
        let mut out = self.template.clone();
        for (f, v) in self.free.iter().zip(theta) {
            out.get_mut(&f.element).expect("free element in template").set(f.kind, *v);
        }
        out
    }
}

/// Jacobian of the fit residual in compressed-row form (≤ 3 entries per row).
#[derive(Debug, Clone, PartialEq)]
pub struct FitJacobian<T: Real> {
    pub cols: usize,
    row_start: Vec<usize>,
    col_index: Vec<usize>,
    values: Vec<T>,
}

impl<T: Real> FitJacobian<T> {
    pub fn rows(&self) -> usize {
        self.row_start.len() - 1
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let range = self.row_start[i]..self.row_start[i + 1];
        self.col_index[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        let mut m = DenseMatrix::zeros(self.rows(), self.cols);
        for i in 0..self.rows() {
            for (j, v) in self.row(i) {
                m.add(i, j, v);
            }
        }
        m
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows()).map(|i| self.row(i).filter(|(c, _)| *c == j).map(|(_, v)| v).sum()).collect()
    }

    /// JᵀJ and Jᵀr.
    pub fn normal_equations(&self, r: &[T]) -> (DenseMatrix<T>, Vec<T>) {
        let mut a = DenseMatrix::zeros(self.cols, self.cols);
        let mut g = vec![T::zero(); self.cols];
        for (i, ri) in r.iter().enumerate() {
            let range = self.row_start[i]..self.row_start[i + 1];
            let (cols, vals) = (&self.col_index[range.clone()], &self.values[range]);
            for (a_idx, (ca, va)) in cols.iter().zip(vals).enumerate() {
                g[*ca] += *va * *ri;
                for (cb, vb) in cols[a_idx..].iter().zip(&vals[a_idx..]) {
                    let v = *va * *vb;
                    a.add(*ca, *cb, v);
                    if ca != cb {
                        a.add(*cb, *ca, v);
                    }
                }
            }
        }
        (a, g)
    }
}

/// Governing-equation residual at the observed states and its Jacobian in Θ.
///
/// One row per fitted element per sample:
/// `R_lin·Q + R_quad·Q|Q| + L·dQ/dt − (P_in − P_out)`, i.e. model minus
/// observation, so the R_lin column is the stacked flow samples.
pub fn assemble_fit_residual<T: Real>(
    problem: &CalibrationProblem<T>,
    reference: &ReferenceSeries<T>,
    theta: &[T],
) -> Result<(Vec<T>, FitJacobian<T>), CalibrationError> {
    assert_eq!(theta.len(), problem.dim(), "Θ length must match the free set");
    let n = reference.len();
    let rows = problem.rows.len() * n;
    let mut r = Vec::with_capacity(rows);
    let mut jac = FitJacobian {
        cols: problem.dim(),
        row_start: Vec::with_capacity(rows + 1),
        col_index: Vec::with_capacity(rows * 3),
        values: Vec::with_capacity(rows * 3),
    };
    jac.row_start.push(0);
    let quad = problem.flavor.has_quadratic();
    for fe in &problem.rows {
        let missing = |what: String| CalibrationError::MissingSeries(what);
        let p_in = reference.pressure(fe.inlet).ok_or_else(|| missing(format!("pressure of node {}", fe.inlet)))?;
        let p_out = reference.pressure(fe.outlet).ok_or_else(|| missing(format!("pressure of node {}", fe.outlet)))?;
        let q = reference.flow(fe.id).ok_or_else(|| missing(format!("flow of element {}", fe.id)))?;
        let dq = reference.flow_rate(fe.id).ok_or_else(|| missing(format!("flow rate of element {}", fe.id)))?;
        let value = |slot: &Result<usize, T>| match slot {
            Ok(i) => theta[*i],
            Err(v) => *v,
        };
        let (r_lin, r_quad, ind) = (value(&fe.slots[0]), value(&fe.slots[1]), value(&fe.slots[2]));
        for k in 0..n {
            let qq = q[k] * q[k].abs();
            let mut model = r_lin * q[k] + ind * dq[k];
            if quad {
                model += r_quad * qq;
            }
            r.push(model - (p_in[k] - p_out[k]));
            for (slot, d) in fe.slots.iter().zip([q[k], qq, dq[k]]) {
                if let Ok(c) = slot {
                    jac.col_index.push(*c);
                    jac.values.push(d);
                }
            }
            jac.row_start.push(jac.col_index.len());
        }
    }
    Ok((r, jac))
}

/// Largest relative gap between the assembled fit Jacobian and central
/// differences of the residual (step 1e-3·max(1, |θ_j|), floor 1e-8).
pub fn fit_jacobian_fd_error<T: Real>(
    problem: &CalibrationProblem<T>,
    reference: &ReferenceSeries<T>,
    theta: &[T],
) -> Result<T, CalibrationError> {
    let (_, jac) = assemble_fit_residual(problem, reference, theta)?;
    let mut worst = T::zero();
    let mut tp = theta.to_vec();
    for j in 0..problem.dim() {
        let h = T::lit(1e-3) * theta[j].abs().max(T::one());
        tp[j] = theta[j] + h;
        let (rp, _) = assemble_fit_residual(problem, reference, &tp)?;
        tp[j] = theta[j] - h;
        let (rm, _) = assemble_fit_residual(problem, reference, &tp)?;
        tp[j] = theta[j];
        let column = jac.column(j);
        for i in 0..rp.len() {
            let fd = (rp[i] - rm[i]) / (h + h);
            let a = column[i];
            worst = worst.max((a - fd).abs() / a.abs().max(fd.abs()).max(T::lit(1e-8)));
        }
    }
    Ok(worst)
}
