//! Concrete systems and the name-based catalog used by the CLI.

pub mod free_mass;
pub mod ode;
pub mod oscillator;
pub mod pendulum;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::PhaseState;
use crate::system::SystemRef;
use crate::transforms::{canonical_forward, canonical_inverse, CartesianToPolar, TransformRef};

pub use free_mass::{free_mass_cartesian, free_mass_polar, ArtificialPolar, FreeMassPolar, FREE_MASS_POLAR};
pub use ode::{cooling, gompertz, OdeModel, ScalarOde};
pub use oscillator::{harmonic_oscillator, harmonic_oscillator_compensated, oscillator_default_ic};
pub use pendulum::{
    elastic_pendulum_cartesian, elastic_pendulum_polar, ElasticPendulumPolar, ElasticPotential, PendulumParams,
    PENDULUM_POLAR,
};

/// Coordinate chart selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Coords {
    Cartesian,
    Polar,
    /// Order-compensating chart (harmonic oscillator).
    Compensated,
}

impl FromStr for Coords {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cartesian" | "original" => Ok(Coords::Cartesian),
            "polar" => Ok(Coords::Polar),
            "compensated" => Ok(Coords::Compensated),
            _ => Err(Error::Configuration(format!("unknown coords '{s}' (expected cartesian, polar or compensated)"))),
        }
    }
}

impl fmt::Display for Coords {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Coords::Cartesian => "cartesian",
            Coords::Polar => "polar",
            Coords::Compensated => "compensated",
        })
    }
}

/// Catalog names.
pub const MODEL_NAMES: [&str; 6] =
    ["cooling", "gompertz", "elastic-pendulum", "free-mass", "harmonic-oscillator", "artificial-polar"];

#[derive(Clone)]
pub enum ModelSystem {
    Hamiltonian(SystemRef),
    Ode(OdeModel),
}

/// A resolved catalog model.
#[derive(Clone)]
pub struct ModelEntry {
    pub name: String,
    pub coords: Option<Coords>,
    pub params: BTreeMap<String, f64>,
    pub system: ModelSystem,
    /// `(q, p)` concatenated for Hamiltonians, `[y0]` for ODEs, in the
    /// model's own chart.
    pub default_ic: Vec<f64>,
    /// Point transform from the original (Cartesian) chart into this one.
    pub chart_map: Option<TransformRef>,
}

impl fmt::Debug for ModelEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelEntry")
            .field("name", &self.name)
            .field("coords", &self.coords)
            .field("params", &self.params)
            .field("default_ic", &self.default_ic)
            .field("chart_map", &self.chart_map.as_ref().map(|t| t.name()))
            .finish()
    }
}

impl ModelEntry {
    pub fn hamiltonian(&self) -> Result<SystemRef> {
        match &self.system {
            ModelSystem::Hamiltonian(h) => Ok(h.clone()),
            ModelSystem::Ode(_) => Err(Error::Configuration(format!("model '{}' is not Hamiltonian", self.name))),
        }
    }

    /// Original-chart state expressed in this chart.
    pub fn to_chart(&self, s: &PhaseState) -> Result<PhaseState> {
        match &self.chart_map {
            Some(pt) => canonical_forward(pt.as_ref(), s),
            None => Ok(s.clone()),
        }
    }

    /// This chart's state expressed in the original chart.
    pub fn to_original(&self, s: &PhaseState) -> Result<PhaseState> {
        match &self.chart_map {
            Some(pt) => canonical_inverse(pt.as_ref(), s),
            None => Ok(s.clone()),
        }
    }

    pub fn default_state(&self) -> Result<PhaseState> {
        PhaseState::from_z(&self.default_ic)
    }

    pub fn ode(&self) -> Result<&OdeModel> {
        match &self.system {
            ModelSystem::Ode(o) => Ok(o),
            ModelSystem::Hamiltonian(_) => Err(Error::Configuration(format!("model '{}' is not a scalar ODE", self.name))),
        }
    }
}

/// Parameter names and defaults of a catalog model.
pub fn default_params(name: &str) -> Result<Vec<(&'static str, f64)>> {
    Ok(match name {
        "cooling" => vec![("alpha", 1.0), ("y0", 1.0)],
        "gompertz" => vec![("a", 2.0), ("b", 0.5), ("y0", 3.0)],
        "elastic-pendulum" => vec![("l", 1.0), ("m", 1.0), ("k", 1.0), ("g", 0.2)],
        "free-mass" => vec![("m", 1.0)],
        "harmonic-oscillator" => vec![("k", 2.0)],
        "artificial-polar" => vec![],
        _ => {
            return Err(Error::Configuration(format!("unknown model '{name}' (available: {})", MODEL_NAMES.join(", "))))
        }
    })
}

fn resolve_params(name: &str, overrides: &BTreeMap<String, f64>) -> Result<BTreeMap<String, f64>> {
    let defaults = default_params(name)?;
    let mut out: BTreeMap<String, f64> = defaults.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    for (k, v) in overrides {
        if !out.contains_key(k) {
            let keys: Vec<&str> = defaults.iter().map(|(k, _)| *k).collect();
            return Err(Error::Configuration(format!(
                "model '{name}' has no parameter '{k}' (available: {})",
                if keys.is_empty() { "none".to_string() } else { keys.join(", ") }
            )));
        }
        out.insert(k.clone(), *v);
    }
    Ok(out)
}

fn reject_coords(name: &str, coords: Option<Coords>, allowed: &[Coords]) -> Result<()> {
    match coords {
        Some(c) if !allowed.contains(&c) => {
            Err(Error::Configuration(format!("model '{name}' does not support coords '{c}'")))
        }
        _ => Ok(()),
    }
}

/// Builds catalog model `name` in chart `coords` with parameter overrides.
/// The compensated oscillator chart depends on the step size `h`.
pub fn build_model(
    name: &str,
    coords: Option<Coords>,
    overrides: &BTreeMap<String, f64>,
    h: Option<f64>,
) -> Result<ModelEntry> {
    let params = resolve_params(name, overrides)?;
    let p = |k: &str| params[k];
    let (system, default_ic, coords, chart_map): (_, _, _, Option<TransformRef>) = match name {
        "cooling" | "gompertz" => {
            reject_coords(name, coords, &[])?;
            let m = if name == "cooling" { cooling(p("alpha"), p("y0"))? } else { gompertz(p("a"), p("b"), p("y0"))? };
            let y0 = m.y0;
            (ModelSystem::Ode(m), vec![y0], None, None)
        }
        "elastic-pendulum" => {
            let pp = PendulumParams { l: p("l"), m: p("m"), k: p("k"), g: p("g") };
            let cart_ic = PhaseState::from_slices(&[0.8, 0.6], &[0.0, 0.0])?;
            match coords.unwrap_or(Coords::Cartesian) {
                Coords::Cartesian => (
                    ModelSystem::Hamiltonian(Arc::new(elastic_pendulum_cartesian(pp)?)),
                    cart_ic.z().as_slice().to_vec(),
                    Some(Coords::Cartesian),
                    None,
                ),
                Coords::Polar => {
                    let pt: TransformRef = Arc::new(CartesianToPolar::new(PENDULUM_POLAR));
                    let ic = canonical_forward(pt.as_ref(), &cart_ic)?;
                    (
                        ModelSystem::Hamiltonian(Arc::new(elastic_pendulum_polar(pp)?)),
                        ic.z().as_slice().to_vec(),
                        Some(Coords::Polar),
                        Some(pt),
                    )
                }
                c => return Err(Error::Configuration(format!("model '{name}' does not support coords '{c}'"))),
            }
        }
        "free-mass" => {
            let cart_ic = PhaseState::from_slices(&[1.0, 1.0], &[1.0, 0.0])?;
            match coords.unwrap_or(Coords::Cartesian) {
                Coords::Cartesian => (
                    ModelSystem::Hamiltonian(Arc::new(free_mass_cartesian(p("m"))?)),
                    cart_ic.z().as_slice().to_vec(),
                    Some(Coords::Cartesian),
                    None,
                ),
                Coords::Polar => {
                    let pt: TransformRef = Arc::new(CartesianToPolar::new(FREE_MASS_POLAR));
                    let ic = canonical_forward(pt.as_ref(), &cart_ic)?;
                    (
                        ModelSystem::Hamiltonian(Arc::new(free_mass_polar(p("m"))?)),
                        ic.z().as_slice().to_vec(),
                        Some(Coords::Polar),
                        Some(pt),
                    )
                }
                c => return Err(Error::Configuration(format!("model '{name}' does not support coords '{c}'"))),
            }
        }
        "harmonic-oscillator" => {
            let ic = oscillator_default_ic();
            match coords.unwrap_or(Coords::Cartesian) {
                Coords::Cartesian => (
                    ModelSystem::Hamiltonian(Arc::new(harmonic_oscillator())),
                    ic.z().as_slice().to_vec(),
                    Some(Coords::Cartesian),
                    None,
                ),
                Coords::Compensated => {
                    let h = h.ok_or_else(|| {
                        Error::Configuration("the compensated oscillator chart needs a step size".into())
                    })?;
                    let sys = harmonic_oscillator_compensated(h, p("k"))?;
                    let ic = sys.from_original(&ic)?;
                    let pt = sys.transform().clone();
                    (
                        ModelSystem::Hamiltonian(Arc::new(sys)),
                        ic.z().as_slice().to_vec(),
                        Some(Coords::Compensated),
                        Some(pt),
                    )
                }
                c => return Err(Error::Configuration(format!("model '{name}' does not support coords '{c}'"))),
            }
        }
        "artificial-polar" => {
            reject_coords(name, coords, &[Coords::Polar])?;
            (ModelSystem::Hamiltonian(Arc::new(ArtificialPolar)), vec![1.0, 0.0, 1.0, 1.0], Some(Coords::Polar), None)
        }
        _ => unreachable!("names validated by default_params"),
    };
    Ok(ModelEntry { name: name.to_string(), coords, params, system, default_ic, chart_map })
}
