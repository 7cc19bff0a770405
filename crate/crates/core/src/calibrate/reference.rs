use super::CalibrationError;
use crate::circuit::{ElementId, NodeId};
use crate::solver::TimeSeriesSolution;
use crate::Real;

/// Observed node pressures and element flows with their time derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSeries<T: Real> {
    series: TimeSeriesSolution<T>,
}

impl<T: Real> ReferenceSeries<T> {
    /// Wraps a series that already carries derivatives (for example solver
    /// output, whose derivatives are the integrator's own differences).
    pub fn from_solution(series: TimeSeriesSolution<T>) -> Result<Self, CalibrationError> {
        if series.pressure_rate.is_none() || series.flow_rate.is_none() {
            return Err(CalibrationError::MissingSeries("derivative series".into()));
        }
        Ok(Self { series })
    }

    pub fn series(&self) -> &TimeSeriesSolution<T> {
        &self.series
    }

    pub fn into_series(self) -> TimeSeriesSolution<T> {
        self.series
    }

    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    pub fn pressure(&self, node: NodeId) -> Option<&[T]> {
        self.series.pressure(node)
    }

    pub fn pressure_rate(&self, node: NodeId) -> Option<&[T]> {
        self.series.pressure_rate(node)
    }

    pub fn flow(&self, element: ElementId) -> Option<&[T]> {
        self.series.flow(element)
    }

    pub fn flow_rate(&self, element: ElementId) -> Option<&[T]> {
        self.series.flow_rate(element)
    }
}

/// Periodic central difference of one uniformly sampled cycle.
pub fn periodic_derivative<T: Real>(values: &[T], dt: T) -> Vec<T> {
    let n = values.len();
    (0..n)
        .map(|k| (values[(k + 1) % n] - values[(k + n - 1) % n]) / (dt + dt))
        .collect()
}

/// Finalizes sampled node series of one cycle: checks the grid and fills in
/// dP/dt and dQ/dt by central differences wrapped over the cycle.
pub fn project_reference<T: Real>(raw: TimeSeriesSolution<T>) -> Result<ReferenceSeries<T>, CalibrationError> {
    let n = raw.times.len();
    if n < 3 {
        return Err(CalibrationError::TooFewSamples(n));
    }
    let dt = raw.times[1] - raw.times[0];
    let tol = T::lit(1e-9) * dt.abs().max(raw.times[n - 1].abs());
    if !(dt > T::zero()) || raw.times.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > tol) {
        return Err(CalibrationError::NonUniformGrid);
    }
    let mut series = raw;
    series.pressure_rate = Some(series.pressure.iter().map(|p| periodic_derivative(p, dt)).collect());
    series.flow_rate = Some(series.flow.iter().map(|q| periodic_derivative(q, dt)).collect());
    Ok(ReferenceSeries { series })
}

/// Weighted cross-section average Σ pᵢwᵢ / Σ wᵢ.
pub fn area_average<T: Real>(samples: &[(T, T)]) -> Result<T, CalibrationError> {
    let total: T = samples.iter().map(|(_, w)| *w).sum();
    if !(total > T::zero()) {
        return Err(CalibrationError::ZeroWeight);
    }
    Ok(samples.iter().map(|(p, w)| *p * *w).sum::<T>() / total)
}

/// Volumetric flux Σ (u·n)ᵢ wᵢ through a cross-section.
pub fn area_flux<T: Real>(samples: &[(T, T)]) -> Result<T, CalibrationError> {
    let total: T = samples.iter().map(|(_, w)| *w).sum();
    if !(total > T::zero()) {
        return Err(CalibrationError::ZeroWeight);
    }
    Ok(samples.iter().map(|(u, w)| *u * *w).sum())
}
