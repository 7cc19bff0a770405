use std::fmt;

use serde::{Deserialize, Serialize};

use super::{FluidProperties, ModelFlavor};
use crate::Real;

/// Fixed element capacitance (cm³/dyn), representative of rigid walls.
pub const DEFAULT_CAPACITANCE: f64 = 1e-10;

/// The three tunable element parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ParamKind {
    #[serde(rename = "R_lin")]
    RLin,
    #[serde(rename = "R_quad")]
    RQuad,
    #[serde(rename = "L")]
    Inductance,
}

impl ParamKind {
    pub const ALL: [ParamKind; 3] = [ParamKind::RLin, ParamKind::RQuad, ParamKind::Inductance];

    pub fn as_str(self) -> &'static str {
        match self {
            ParamKind::RLin => "R_lin",
            ParamKind::RQuad => "R_quad",
            ParamKind::Inductance => "L",
        }
    }

    /// Parameters that exist under `flavor`.
    pub fn active(flavor: ModelFlavor) -> &'static [ParamKind] {
        match flavor {
            ModelFlavor::Rri => &Self::ALL,
            ModelFlavor::Ri => &[ParamKind::RLin, ParamKind::Inductance],
        }
    }
}

impl fmt::Display for ParamKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ParamKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "R_lin" | "r_lin" => Ok(ParamKind::RLin),
            "R_quad" | "r_quad" => Ok(ParamKind::RQuad),
            "L" | "l" => Ok(ParamKind::Inductance),
            other => Err(format!("unknown parameter `{other}`")),
        }
    }
}

/// Which parameters calibration must leave untouched. Serialized as a list of names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(from = "Vec<ParamKind>", into = "Vec<ParamKind>")]
pub struct Frozen {
    pub r_lin: bool,
    pub r_quad: bool,
    pub inductance: bool,
}

impl Frozen {
    pub const NONE: Frozen = Frozen { r_lin: false, r_quad: false, inductance: false };
    pub const ALL: Frozen = Frozen { r_lin: true, r_quad: true, inductance: true };

    pub fn contains(&self, kind: ParamKind) -> bool {
        match kind {
            ParamKind::RLin => self.r_lin,
            ParamKind::RQuad => self.r_quad,
            ParamKind::Inductance => self.inductance,
        }
    }

    pub fn insert(&mut self, kind: ParamKind) {
        match kind {
            ParamKind::RLin => self.r_lin = true,
            ParamKind::RQuad => self.r_quad = true,
            ParamKind::Inductance => self.inductance = true,
        }
    }

    pub fn is_all(&self) -> bool {
        self.r_lin && self.r_quad && self.inductance
    }
}

impl From<Vec<ParamKind>> for Frozen {
    fn from(kinds: Vec<ParamKind>) -> Self {
        let mut f = Frozen::NONE;
        for k in kinds {
            f.insert(k);
        }
        f
    }
}

impl From<Frozen> for Vec<ParamKind> {
    fn from(f: Frozen) -> Self {
        ParamKind::ALL.into_iter().filter(|k| f.contains(*k)).collect()
    }
}

/// Θ for one element plus its fixed capacitance.
///
/// No sign constraint is placed on the resistances or the inductance:
/// calibrated values can legitimately be negative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ElementParameters<T: Real> {
    #[serde(rename = "R_lin")]
    pub r_lin: T,
    #[serde(rename = "R_quad")]
    pub r_quad: T,
    #[serde(rename = "L")]
    pub inductance: T,
    #[serde(rename = "C")]
    pub capacitance: T,
    #[serde(default)]
    pub frozen: Frozen,
}

impl<T: Real> ElementParameters<T> {
    pub fn new(r_lin: T, r_quad: T, inductance: T) -> Self {
        Self {
            r_lin,
            r_quad,
            inductance,
            capacitance: T::lit(DEFAULT_CAPACITANCE),
            frozen: Frozen::NONE,
        }
    }

    /// All-zero parameters, frozen. Used for connector elements.
    pub fn frozen_zero() -> Self {
        Self { frozen: Frozen::ALL, ..Self::new(T::zero(), T::zero(), T::zero()) }
    }

    pub fn with_capacitance(mut self, capacitance: T) -> Self {
        self.capacitance = capacitance;
        self
    }

    pub fn get(&self, kind: ParamKind) -> T {
        match kind {
            ParamKind::RLin => self.r_lin,
            ParamKind::RQuad => self.r_quad,
            ParamKind::Inductance => self.inductance,
        }
    }

    pub fn set(&mut self, kind: ParamKind, value: T) {
        match kind {
            ParamKind::RLin => self.r_lin = value,
            ParamKind::RQuad => self.r_quad = value,
            ParamKind::Inductance => self.inductance = value,
        }
    }

    /// ΔP = R_lin·Q + R_quad·Q·|Q| + L·dQ/dt (quadratic term dropped for `Ri`).
    #[inline]
    pub fn pressure_drop(&self, flow: T, flow_rate: T, flavor: ModelFlavor) -> T {
        let mut dp = self.r_lin * flow + self.inductance * flow_rate;
        if flavor.has_quadratic() {
            dp += self.r_quad * flow * flow.abs();
        }
        dp
    }

    /// ∂ΔP/∂Q at fixed dQ/dt.
    #[inline]
    pub fn resistance_slope(&self, flow: T, flavor: ModelFlavor) -> T {
        if flavor.has_quadratic() {
            self.r_lin + (self.r_quad + self.r_quad) * flow.abs()
        } else {
            self.r_lin
        }
    }

    pub fn is_finite(&self) -> bool {
        self.r_lin.is_finite() && self.r_quad.is_finite() && self.inductance.is_finite() && self.capacitance.is_finite()
    }
}

/// Free-function form of [`ElementParameters::pressure_drop`].
pub fn element_pressure_drop<T: Real>(
    params: &ElementParameters<T>,
    flow: T,
    flow_rate: T,
    flavor: ModelFlavor,
) -> T {
    params.pressure_drop(flow, flow_rate, flavor)
}

/// Length, lumen area and minimum (stenosis) area of a vessel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct VesselGeometry<T: Real> {
    #[serde(rename = "l")]
    pub length: T,
    #[serde(rename = "A")]
    pub area: T,
    #[serde(rename = "A_stenosis")]
    pub stenosis_area: T,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid vessel geometry: {0}")]
pub struct InvalidGeometry(pub String);

/// Poiseuille resistance and inductance plus the stenosis quadratic resistor:
///
/// R_lin = 8πμl/A², R_quad = K_t ρ/(2A²)·(A/A_s − 1)², L = ρl/A.
pub fn poiseuille_parameters<T: Real>(
    fluid: &FluidProperties<T>,
    geometry: &VesselGeometry<T>,
) -> Result<ElementParameters<T>, InvalidGeometry> {
    let VesselGeometry { length, area, stenosis_area } = *geometry;
    if !(area > T::zero()) || !(stenosis_area > T::zero()) {
        return Err(InvalidGeometry(format!(
            "areas must be positive (A = {area}, A_stenosis = {stenosis_area})"
        )));
    }
    if !(length >= T::zero()) {
        return Err(InvalidGeometry(format!("length must be non-negative (l = {length})")));
    }
    let a2 = area * area;
    let r_lin = T::lit(8.0) * T::PI() * fluid.viscosity * length / a2;
    let contraction = area / stenosis_area - T::one();
    let r_quad = fluid.stenosis_coefficient * fluid.density / (T::lit(2.0) * a2) * contraction * contraction;
    let inductance = fluid.density * length / area;
    Ok(ElementParameters::new(r_lin, r_quad, inductance))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn fluid() -> FluidProperties<f64> {
        FluidProperties { density: 1.06, viscosity: 0.04, stenosis_coefficient: 1.52 }
    }

    #[test]
    fn unit_radius_vessel() {
        let g = VesselGeometry { length: 10.0, area: PI, stenosis_area: PI };
        let p = poiseuille_parameters(&fluid(), &g).unwrap();
        // 8π·0.04·10/π² = 3.2/π, 1.06·10/π
        assert!((p.r_lin - 1.018_591_635_788_130_1).abs() < 1e-12);
        assert!((p.r_lin - 3.2 / PI).abs() < 1e-14);
        assert_eq!(p.r_quad, 0.0);
        assert!((p.inductance - 10.6 / PI).abs() < 1e-14);
        assert!((p.inductance - 3.374_084_793_548_181).abs() < 1e-12);
        assert_eq!(p.capacitance, DEFAULT_CAPACITANCE);
    }

    #[test]
    fn zero_length_has_no_resistance_or_inductance() {
        for area in [0.1, 1.0, PI, 17.0] {
            let g = VesselGeometry { length: 0.0, area, stenosis_area: area };
            let p = poiseuille_parameters(&fluid(), &g).unwrap();
            assert_eq!(p.r_lin, 0.0);
            assert_eq!(p.inductance, 0.0);
        }
    }

    #[test]
    fn halved_stenosis_area() {
        let g = VesselGeometry { length: 3.0, area: PI, stenosis_area: PI / 2.0 };
        let p = poiseuille_parameters(&fluid(), &g).unwrap();
        let expected = 1.52 * 1.06 / (2.0 * PI * PI);
        assert!((p.r_quad - expected).abs() < 1e-15);
        assert!((p.r_quad - 0.081_624_345_542_267).abs() < 1e-12);
    }

    #[test]
    fn non_positive_area_is_rejected() {
        let g = VesselGeometry { length: 1.0, area: 0.0, stenosis_area: 1.0 };
        assert!(poiseuille_parameters(&fluid(), &g).is_err());
        let g = VesselGeometry { length: 1.0, area: 1.0, stenosis_area: -1.0 };
        assert!(poiseuille_parameters(&fluid(), &g).is_err());
    }

    #[test]
    fn pressure_drop_examples() {
        let p = ElementParameters::new(2.0, 3.0, 4.0);
        assert_eq!(p.pressure_drop(5.0, 1.0, ModelFlavor::Rri), 89.0);
        assert_eq!(p.pressure_drop(0.0, 0.0, ModelFlavor::Rri), 0.0);
        assert_eq!(p.pressure_drop(5.0, 1.0, ModelFlavor::Ri), 14.0);
        // the quadratic term follows the flow direction
        assert_eq!(p.pressure_drop(-5.0, 0.0, ModelFlavor::Rri), -85.0);
    }

    #[test]
    fn single_precision_matches() {
        let f = FluidProperties::<f32>::default();
        let g = VesselGeometry { length: 10.0f32, area: std::f32::consts::PI, stenosis_area: std::f32::consts::PI };
        let p = poiseuille_parameters(&f, &g).unwrap();
        assert!((p.r_lin - 1.018_591_6).abs() < 1e-5);
    }

    #[test]
    fn frozen_serializes_as_names() {
        let mut p = ElementParameters::<f64>::new(1.0, 0.0, 2.0);
        p.frozen.insert(ParamKind::RQuad);
        p.frozen.insert(ParamKind::Inductance);
        let s = serde_json::to_string(&p).unwrap();
        assert!(s.contains(r#""frozen":["R_quad","L"]"#), "{s}");
        let back: ElementParameters<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn poiseuille_homogeneity(l in 0.01f64..50.0, a in 0.01f64..20.0, s in 0.1f64..1.0) {
                let f = fluid();
                let base = poiseuille_parameters(&f, &VesselGeometry { length: l, area: a, stenosis_area: a * s }).unwrap();
                let long = poiseuille_parameters(&f, &VesselGeometry { length: 2.0 * l, area: a, stenosis_area: a * s }).unwrap();
                let wide = poiseuille_parameters(&f, &VesselGeometry { length: l, area: 2.0 * a, stenosis_area: 2.0 * a * s }).unwrap();
                prop_assert!((long.r_lin - 2.0 * base.r_lin).abs() <= 4.0 * f64::EPSILON * long.r_lin);
                prop_assert!((long.inductance - 2.0 * base.inductance).abs() <= 4.0 * f64::EPSILON * long.inductance);
                prop_assert!((wide.r_lin - base.r_lin / 4.0).abs() <= 4.0 * f64::EPSILON * base.r_lin);
                prop_assert!((wide.inductance - base.inductance / 2.0).abs() <= 4.0 * f64::EPSILON * base.inductance);
            }

            #[test]
            fn odd_in_flow(rl in -50.0f64..50.0, rq in -50.0f64..50.0, ind in -5.0f64..5.0, q in -100.0f64..100.0) {
                let p = ElementParameters::new(rl, rq, ind);
                prop_assert_eq!(p.pressure_drop(-q, 0.0, ModelFlavor::Rri), -p.pressure_drop(q, 0.0, ModelFlavor::Rri));
            }

            #[test]
            fn ri_is_rri_without_quadratic(rl in -50.0f64..50.0, rq in -50.0f64..50.0, ind in -5.0f64..5.0,
                                           q in -100.0f64..100.0, dq in -1e3f64..1e3) {
                let p = ElementParameters::new(rl, rq, ind);
                let z = ElementParameters::new(rl, 0.0, ind);
                prop_assert_eq!(p.pressure_drop(q, dq, ModelFlavor::Ri), z.pressure_drop(q, dq, ModelFlavor::Rri));
            }
        }
    }
}
