use serde::{Deserialize, Serialize};

use super::problem::{assemble_fit_residual, CalibrationProblem, FreeParameter};
use super::{CalibrationError, ReferenceSeries};
use crate::circuit::{ElementParameterMap, ParamKind};
use crate::solver::DenseMatrix;
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationStatus {
    ResidualTolerance,
    StepTolerance,
    MaxIterations,
    /// Damping grew without bound and no decrease was found.
    Stagnation,
    /// Nothing to optimize.
    NoFreeParameters,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct IterationRecord<T: Real> {
    pub iteration: usize,
    pub residual_norm: T,
    pub damping: T,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult<T: Real> {
    pub parameters: ElementParameterMap<T>,
    pub theta: Vec<T>,
    pub free: Vec<FreeParameter>,
    pub residual_norm: T,
    pub initial_residual_norm: T,
    pub trace: Vec<IterationRecord<T>>,
    pub status: CalibrationStatus,
}

const MAX_DAMPING: f64 = 1e16;

fn norm<T: Real>(r: &[T]) -> T {
    crate::scalar::norm2(r)
}

/// Levenberg-Marquardt on the free parameters, starting from `init`.
///
/// Each iteration solves (JᵀJ + λ·diag(JᵀJ)) δ = −Jᵀr. A step is taken only
/// if it lowers ‖r‖, after which λ shrinks; otherwise λ grows.
pub fn calibrate<T: Real>(
    problem: &CalibrationProblem<T>,
    reference: &ReferenceSeries<T>,
    init: &ElementParameterMap<T>,
) -> Result<CalibrationResult<T>, CalibrationError> {
    let s = problem.settings;
    let mut theta = problem.pack(init);
    if theta.iter().any(|v| !v.is_finite()) {
        return Err(CalibrationError::NonFiniteInit);
    }
    let (mut r, mut jac) = assemble_fit_residual(problem, reference, &theta)?;
    let mut cost = norm(&r);
    if !cost.is_finite() {
        return Err(CalibrationError::NonFiniteResidual);
    }
    let initial = cost;
    let mut lambda = s.initial_damping;
    let mut trace = vec![IterationRecord { iteration: 0, residual_norm: cost, damping: lambda, accepted: true }];
    let finish = |theta: Vec<T>, cost: T, trace, status| CalibrationResult {
        parameters: problem.unpack(&theta),
        theta,
        free: problem.free_parameters().to_vec(),
        residual_norm: cost,
        initial_residual_norm: initial,
        trace,
        status,
    };
    if problem.dim() == 0 {
        return Ok(finish(theta, cost, trace, CalibrationStatus::NoFreeParameters));
    }
    let (mut a, mut g) = jac.normal_equations(&r);
    for it in 1..=s.max_iterations {
        if cost <= s.residual_tolerance {
            return Ok(finish(theta, cost, trace, CalibrationStatus::ResidualTolerance));
        }
        let n = problem.dim();
        let max_diag = (0..n).fold(T::zero(), |m, i| m.max(a.get(i, i)));
        let floor = max_diag * T::lit(1e-12) + T::min_positive_value();
        let mut step_system: DenseMatrix<T> = a.clone();
        for i in 0..n {
            step_system.add(i, i, lambda * a.get(i, i).max(floor));
        }
        let neg: Vec<T> = g.iter().map(|v| -*v).collect();
        let delta = step_system.solve(&neg);
        let Some(delta) = delta else {
            lambda *= s.damping_up;
            trace.push(IterationRecord { iteration: it, residual_norm: cost, damping: lambda, accepted: false });
            if lambda > T::lit(MAX_DAMPING) {
                return Ok(finish(theta, cost, trace, CalibrationStatus::Stagnation));
            }
            continue;
        };
        let step = norm(&delta);
        let small = step <= s.step_tolerance * (norm(&theta) + s.step_tolerance);
        let candidate: Vec<T> = theta.iter().zip(&delta).map(|(t, d)| *t + *d).collect();
        let (r_new, jac_new) = assemble_fit_residual(problem, reference, &candidate)?;
        let cost_new = norm(&r_new);
        if cost_new.is_finite() && cost_new < cost {
            theta = candidate;
            r = r_new;
            jac = jac_new;
            cost = cost_new;
            lambda = (lambda / s.damping_down).max(T::lit(1e-300));
            (a, g) = jac.normal_equations(&r);
            trace.push(IterationRecord { iteration: it, residual_norm: cost, damping: lambda, accepted: true });
        } else {
            lambda *= s.damping_up;
            trace.push(IterationRecord { iteration: it, residual_norm: cost, damping: lambda, accepted: false });
            if !small && lambda > T::lit(MAX_DAMPING) {
                return Ok(finish(theta, cost, trace, CalibrationStatus::Stagnation));
            }
        }
        if small {
            return Ok(finish(theta, cost, trace, CalibrationStatus::StepTolerance));
        }
    }
    let status =
        if cost <= s.residual_tolerance { CalibrationStatus::ResidualTolerance } else { CalibrationStatus::MaxIterations };
    Ok(finish(theta, cost, trace, status))
}

#[derive(Serialize)]
struct ElementReport {
    element: usize,
    #[serde(rename = "R_lin")]
    r_lin: f64,
    #[serde(rename = "R_quad")]
    r_quad: f64,
    #[serde(rename = "L")]
    inductance: f64,
    frozen: Vec<ParamKind>,
}

#[derive(Serialize)]
struct Report<'a> {
    status: CalibrationStatus,
    residual_norm: f64,
    initial_residual_norm: f64,
    free_parameters: usize,
    elements: Vec<ElementReport>,
    trace: &'a [IterationRecord<f64>],
}

impl<T: Real> CalibrationResult<T> {
    /// Per-element Θ_opt, iteration trace and status as JSON.
    pub fn report_json(&self) -> String {
        let trace: Vec<IterationRecord<f64>> = self
            .trace
            .iter()
            .map(|t| IterationRecord {
                iteration: t.iteration,
                residual_norm: t.residual_norm.as_f64(),
                damping: t.damping.as_f64(),
                accepted: t.accepted,
            })
            .collect();
        let report = Report {
            status: self.status,
            residual_norm: self.residual_norm.as_f64(),
            initial_residual_norm: self.initial_residual_norm.as_f64(),
            free_parameters: self.free.len(),
            elements: self
                .parameters
                .iter()
                .map(|(id, p)| ElementReport {
                    element: id.0,
                    r_lin: p.r_lin.as_f64(),
                    r_quad: p.r_quad.as_f64(),
                    inductance: p.inductance.as_f64(),
                    frozen: p.frozen.into(),
                })
                .collect(),
            trace: &trace,
        };
        serde_json::to_string_pretty(&report).expect("report serializes")
    }
}
