//! Element and network types of the lumped-parameter circuit.
//!
//! Units are CGS throughout: cm, s, g, dyn. Pressures are dyn/cm², flows cm³/s.

mod assemble;
mod boundary;
mod network;
mod params;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use assemble::{assemble_network, baseline_parameters, AssemblyError, BoundarySpec, ElementParameterMap};
pub use boundary::{BoundaryCondition, Waveform};
pub use network::{CircuitNetwork, Diagnostic, NetworkIoError};
pub use params::{
    element_pressure_drop, poiseuille_parameters, ElementParameters, Frozen, ParamKind,
    VesselGeometry, DEFAULT_CAPACITANCE,
};

use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ElementId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for ElementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Pressure-drop law used for every element.
///
/// `Rri` is linear resistor + quadratic resistor + inductor; `Ri` drops the
/// quadratic resistor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelFlavor {
    #[default]
    Ri,
    Rri,
}

impl ModelFlavor {
    pub fn has_quadratic(self) -> bool {
        matches!(self, ModelFlavor::Rri)
    }
}

impl fmt::Display for ModelFlavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelFlavor::Ri => "ri",
            ModelFlavor::Rri => "rri",
        })
    }
}

impl std::str::FromStr for ModelFlavor {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ri" => Ok(ModelFlavor::Ri),
            "rri" => Ok(ModelFlavor::Rri),
            other => Err(format!("unknown model flavor `{other}` (expected ri or rri)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElementKind {
    Vessel,
    /// One (inlet, outlet) pair of a junction.
    Junction,
    /// Zero-length artificial element created by preprocessing.
    Connector,
}

/// Blood density, viscosity and the empirical stenosis coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct FluidProperties<T: Real> {
    /// g/cm³
    pub density: T,
    /// g/(cm·s)
    pub viscosity: T,
    #[serde(rename = "K_t")]
    pub stenosis_coefficient: T,
}

impl<T: Real> Default for FluidProperties<T> {
    fn default() -> Self {
        Self {
            density: T::lit(1.06),
            viscosity: T::lit(0.04),
            stenosis_coefficient: T::lit(1.52),
        }
    }
}

impl<T: Real> FluidProperties<T> {
    pub fn is_valid(&self) -> bool {
        self.density > T::zero() && self.viscosity > T::zero() && self.stenosis_coefficient >= T::zero()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Element<T: Real> {
    pub id: ElementId,
    pub kind: ElementKind,
    pub inlet: NodeId,
    pub outlet: NodeId,
    pub params: ElementParameters<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<VesselGeometry<T>>,
}
