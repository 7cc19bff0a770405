use serde::{Deserialize, Serialize};

use crate::Real;

/// One period of a prescribed signal, evaluated by periodic linear interpolation.
///
/// `times` start at 0 and increase strictly; the last sample may sit at the
/// period itself or before it, in which case the final interval wraps back to
/// the first sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Waveform<T: Real> {
    #[serde(rename = "t")]
    pub times: Vec<T>,
    #[serde(rename = "Q")]
    pub values: Vec<T>,
}

impl<T: Real> Waveform<T> {
    pub fn new(times: Vec<T>, values: Vec<T>) -> Self {
        Self { times, values }
    }

    pub fn constant(value: T, period: T) -> Self {
        Self { times: vec![T::zero(), period], values: vec![value, value] }
    }

    /// Samples `f` on `n` uniform points of `[0, period)`.
    pub fn sampled(period: T, n: usize, f: impl Fn(T) -> T) -> Self {
        let dt = period / T::from_count(n);
        let times: Vec<T> = (0..n).map(|i| T::from_count(i) * dt).collect();
        let values = times.iter().map(|t| f(*t)).collect();
        Self { times, values }
    }

    pub fn validate(&self, period: T) -> Result<(), String> {
        if self.times.is_empty() || self.times.len() != self.values.len() {
            return Err(format!(
                "waveform needs matching non-empty t/Q tables (got {} and {})",
                self.times.len(),
                self.values.len()
            ));
        }
        if self.times[0] != T::zero() {
            return Err(format!("waveform must start at t = 0 (starts at {})", self.times[0]));
        }
        if self.times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err("waveform times must be strictly increasing".into());
        }
        let last = *self.times.last().unwrap();
        let slack = period * T::lit(1e-9);
        if last > period + slack {
            return Err(format!("waveform extends past the cycle period ({last} > {period})"));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err("waveform contains non-finite values".into());
        }
        Ok(())
    }

    pub fn eval(&self, t: T, period: T) -> T {
        let n = self.times.len();
        if n == 1 {
            return self.values[0];
        }
        let mut tau = t % period;
        if tau < T::zero() {
            tau += period;
        }
        // index of the last sample at or before tau
        let idx = match self.times.binary_search_by(|s| s.partial_cmp(&tau).unwrap()) {
            Ok(i) => return self.values[i],
            Err(0) => return self.values[0],
            Err(i) => i - 1,
        };
        let (t0, v0) = (self.times[idx], self.values[idx]);
        let (t1, v1) = if idx + 1 < n {
            (self.times[idx + 1], self.values[idx + 1])
        } else {
            (period, self.values[0])
        };
        if t1 <= t0 {
            return v0;
        }
        v0 + (v1 - v0) * (tau - t0) / (t1 - t0)
    }

    /// Cycle average of the interpolant.
    pub fn mean(&self, period: T) -> T {
        let n = self.times.len();
        if n == 1 {
            return self.values[0];
        }
        let half = T::lit(0.5);
        let mut area = T::zero();
        for i in 0..n {
            let (t0, v0) = (self.times[i], self.values[i]);
            let (t1, v1) = if i + 1 < n { (self.times[i + 1], self.values[i + 1]) } else { (period, self.values[0]) };
            area += half * (v0 + v1) * (t1 - t0);
        }
        area / period
    }

    pub fn scaled(&self, factor: T) -> Self {
        Self { times: self.times.clone(), values: self.values.iter().map(|v| *v * factor).collect() }
    }
}

/// Inflow or outlet condition attached to a boundary node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", bound = "")]
pub enum BoundaryCondition<T: Real> {
    /// Prescribed periodic inflow Q(t).
    #[serde(rename = "FLOW")]
    Flow(Waveform<T>),
    /// P = Q·R + P_d
    #[serde(rename = "RESISTANCE")]
    Resistance {
        #[serde(rename = "R")]
        resistance: T,
        #[serde(rename = "Pd")]
        distal_pressure: T,
    },
    /// Three-element Windkessel: proximal resistance, compliance, distal resistance.
    #[serde(rename = "RCR")]
    Rcr {
        #[serde(rename = "Rp")]
        proximal: T,
        #[serde(rename = "C")]
        capacitance: T,
        #[serde(rename = "Rd")]
        distal: T,
        #[serde(rename = "Pd")]
        distal_pressure: T,
    },
}

impl<T: Real> BoundaryCondition<T> {
    pub fn is_inflow(&self) -> bool {
        matches!(self, BoundaryCondition::Flow(_))
    }

    pub fn distal_pressure(&self) -> Option<T> {
        match self {
            BoundaryCondition::Flow(_) => None,
            BoundaryCondition::Resistance { distal_pressure, .. } | BoundaryCondition::Rcr { distal_pressure, .. } => {
                Some(*distal_pressure)
            }
        }
    }

    pub fn validate(&self, period: T) -> Result<(), String> {
        match self {
            BoundaryCondition::Flow(w) => w.validate(period),
            BoundaryCondition::Resistance { resistance, distal_pressure } => {
                if !(*resistance >= T::zero()) || !distal_pressure.is_finite() {
                    return Err(format!("resistance BC needs R >= 0 and finite Pd (R = {resistance})"));
                }
                Ok(())
            }
            BoundaryCondition::Rcr { proximal, capacitance, distal, distal_pressure } => {
                if !(*proximal >= T::zero()) || !(*distal >= T::zero()) {
                    return Err(format!("RCR BC needs Rp, Rd >= 0 (Rp = {proximal}, Rd = {distal})"));
                }
                if !(*capacitance > T::zero()) {
                    return Err(format!("RCR BC needs C > 0 (C = {capacitance})"));
                }
                if !distal_pressure.is_finite() {
                    return Err("RCR BC needs a finite Pd".into());
                }
                Ok(())
            }
        }
    }
}
