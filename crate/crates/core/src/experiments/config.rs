//! Experiment configuration, TOML loading and named presets.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrators::Method;
use crate::models::Coords;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Convergence,
    EnergyMap,
    InvariantDrift,
    CompensateDemo,
    DeltaProbe,
    Trajectory,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::Convergence,
        ExperimentKind::EnergyMap,
        ExperimentKind::InvariantDrift,
        ExperimentKind::CompensateDemo,
        ExperimentKind::DeltaProbe,
        ExperimentKind::Trajectory,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ExperimentKind::Convergence => "convergence",
            ExperimentKind::EnergyMap => "energy-map",
            ExperimentKind::InvariantDrift => "invariant-drift",
            ExperimentKind::CompensateDemo => "compensate-demo",
            ExperimentKind::DeltaProbe => "delta-probe",
            ExperimentKind::Trajectory => "trajectory",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL.iter().copied().find(|k| k.label() == s).ok_or_else(|| {
            let names: Vec<&str> = ExperimentKind::ALL.iter().map(|k| k.label()).collect();
            Error::Configuration(format!("unknown experiment '{s}' (available: {})", names.join(", ")))
        })
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// `n` equally spaced points on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Axis {
    pub fn points(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.lo];
        }
        (0..self.n).map(|i| self.lo + (self.hi - self.lo) * i as f64 / (self.n - 1) as f64).collect()
    }
}

/// Grid of initial positions, `x` varying fastest in output order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x: Axis,
    pub y: Axis,
}

impl FromStr for GridSpec {
    type Err = Error;
    /// `x:<lo>:<hi>:<n>,y:<lo>:<hi>:<n>`
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Configuration(format!("bad grid '{s}' (expected x:<lo>:<hi>:<n>,y:<lo>:<hi>:<n>)"));
        let mut x = None;
        let mut y = None;
        for part in s.split(',') {
            let f: Vec<&str> = part.trim().split(':').collect();
            if f.len() != 4 {
                return Err(bad());
            }
            let axis = Axis {
                lo: f[1].parse().map_err(|_| bad())?,
                hi: f[2].parse().map_err(|_| bad())?,
                n: f[3].parse().map_err(|_| bad())?,
            };
            match f[0] {
                "x" => x = Some(axis),
                "y" => y = Some(axis),
                _ => return Err(bad()),
            }
        }
        Ok(GridSpec { x: x.ok_or_else(bad)?, y: y.ok_or_else(bad)? })
    }
}

/// Worker thread count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Threads {
    #[default]
    Auto,
    Count(usize),
}

impl FromStr for Threads {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(Threads::Auto);
        }
        match s.parse::<usize>() {
            Ok(n) if n > 0 => Ok(Threads::Count(n)),
            _ => Err(Error::Configuration(format!("threads must be a positive integer or 'auto', got '{s}'"))),
        }
    }
}

impl Serialize for Threads {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Threads::Auto => s.serialize_str("auto"),
            Threads::Count(n) => s.serialize_u64(*n as u64),
        }
    }
}

impl<'de> Deserialize<'de> for Threads {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Count(usize),
            Word(String),
        }
        match Repr::deserialize(d)? {
            Repr::Count(n) => Threads::from_str(&n.to_string()).map_err(serde::de::Error::custom),
            Repr::Word(w) => Threads::from_str(&w).map_err(serde::de::Error::custom),
        }
    }
}

/// A fully resolved experiment. Every field except `threads` and `out` is
/// echoed into the CSV provenance line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub model: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default)]
    pub methods: Vec<Method>,
    /// Charts to run in; empty means the model's default chart.
    #[serde(default)]
    pub coords: Vec<Coords>,
    #[serde(default)]
    pub h: Option<f64>,
    #[serde(default)]
    pub h_max: Option<f64>,
    #[serde(default)]
    pub h_min: Option<f64>,
    #[serde(default)]
    pub n_h: Option<usize>,
    pub t_max: f64,
    /// Initial state in the original (Cartesian) chart.
    #[serde(default)]
    pub ic: Option<Vec<f64>>,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub seed: u64,
    /// First-integral labels for `invariant-drift`; empty means all.
    #[serde(default)]
    pub integrals: Vec<String>,
    /// `cartesian-to-polar`, `polar-to-cartesian` or `affine` for `delta-probe`.
    #[serde(default)]
    pub transform: Option<String>,
    #[serde(default)]
    pub samples: Option<usize>,
    /// Relative halving tolerance of the reference solver.
    #[serde(default)]
    pub reference_tol: Option<f64>,
    #[serde(default, skip_serializing)]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing)]
    pub threads: Threads,
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind, model: &str, t_max: f64) -> Self {
        Self {
            experiment,
            model: model.to_string(),
            params: BTreeMap::new(),
            methods: Vec::new(),
            coords: Vec::new(),
            h: None,
            h_max: None,
            h_min: None,
            n_h: None,
            t_max,
            ic: None,
            grid: None,
            seed: 0,
            integrals: Vec::new(),
            transform: None,
            samples: None,
            reference_tol: None,
            out: None,
            threads: Threads::Auto,
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Configuration(format!("config file: {e}")))
    }

    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Configuration(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// One-line JSON of the provenance fields.
    pub fn provenance(&self) -> String {
        serde_json::to_string(self).expect("config serialises")
    }

    pub fn method_list(&self, default: Method) -> Vec<Method> {
        if self.methods.is_empty() {
            vec![default]
        } else {
            self.methods.clone()
        }
    }

    pub fn step(&self) -> Result<f64> {
        let h = self.h.ok_or_else(|| Error::Configuration(format!("{} needs a step size h", self.experiment)))?;
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::Configuration(format!("h must be positive, got {h}")));
        }
        Ok(h)
    }

    /// Geometric step sequence from `h_max` down to `h_min`.
    pub fn h_range(&self) -> Result<Vec<f64>> {
        let (hi, lo, n) = match (self.h_max, self.h_min, self.n_h) {
            (Some(a), Some(b), Some(n)) => (a, b, n),
            _ => return Err(Error::Configuration("convergence needs h-max, h-min and n-h".into())),
        };
        if !(lo > 0.0) || !(hi > lo) || !hi.is_finite() || n < 2 {
            return Err(Error::Configuration(format!(
                "h-range must satisfy h-max > h-min > 0 and n-h >= 2 (got {hi}, {lo}, {n})"
            )));
        }
        Ok((0..n).map(|k| hi * (lo / hi).powf(k as f64 / (n - 1) as f64)).collect())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_max > 0.0) || !self.t_max.is_finite() {
            return Err(Error::Configuration(format!("t-max must be positive, got {}", self.t_max)));
        }
        if let Some(g) = &self.grid {
            for a in [g.x, g.y] {
                if !a.lo.is_finite() || !a.hi.is_finite() || a.n == 0 || a.hi < a.lo {
                    return Err(Error::Configuration(format!("grid axis {a:?} must be finite with lo <= hi and n >= 1")));
                }
            }
        }
        if let Some(t) = self.reference_tol {
            if !(t > 0.0) {
                return Err(Error::Configuration(format!("reference-tol must be positive, got {t}")));
            }
        }
        Ok(())
    }
}

pub const PRESET_NAMES: [&str; 10] =
    ["fig1", "fig2", "fig3", "fig3-desk", "fig4", "fig4-desk", "fig4-full", "fig6", "fig7", "fig5-delta"];

/// Named figure presets.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    use ExperimentKind::*;
    let mut c = match name {
        "fig1" => {
            let mut c = ExperimentConfig::new(CompensateDemo, "cooling", 3.0);
            c.h = Some(0.3);
            c
        }
        "fig2" => {
            let mut c = ExperimentConfig::new(CompensateDemo, "gompertz", 4.5);
            c.h = Some(0.9);
            c
        }
        "fig3" | "fig3-desk" => {
            let mut c = ExperimentConfig::new(Convergence, "elastic-pendulum", 4.0);
            c.coords = vec![Coords::Cartesian];
            c.reference_tol = Some(1e-13);
            if name == "fig3" {
                c.methods = vec![Method::StoermerVerlet, Method::RowlandsCheap, Method::RowlandsExact];
                (c.h_max, c.h_min, c.n_h) = (Some(0.08), Some(0.005), Some(9));
            } else {
                c.methods = vec![Method::StoermerVerlet, Method::RowlandsCheap];
                (c.h_max, c.h_min, c.n_h) = (Some(0.04), Some(0.005), Some(4));
            }
            c
        }
        "fig4" | "fig4-desk" | "fig4-full" => {
            let t_max = if name == "fig4-full" { 50000.0 } else { 500.0 };
            let mut c = ExperimentConfig::new(EnergyMap, "elastic-pendulum", t_max);
            c.params.insert("g".into(), 0.02);
            c.methods = vec![Method::SymplecticEuler];
            c.h = Some(0.2);
            let axis = Axis { lo: -1.5, hi: 1.5, n: 31 };
            c.grid = Some(GridSpec { x: axis, y: axis });
            c
        }
        "fig6" => {
            let mut c = ExperimentConfig::new(Trajectory, "harmonic-oscillator", 300.0);
            c.methods = vec![Method::SymplecticEuler];
            c.coords = vec![Coords::Cartesian, Coords::Compensated];
            c.h = Some(0.3);
            c
        }
        "fig7" => {
            let mut c = ExperimentConfig::new(Convergence, "harmonic-oscillator", 10.0);
            c.methods = vec![Method::SymplecticEuler];
            c.coords = vec![Coords::Cartesian, Coords::Compensated];
            (c.h_max, c.h_min, c.n_h) = (Some(0.1), Some(0.00625), Some(5));
            c
        }
        "fig5-delta" => {
            let mut c = ExperimentConfig::new(DeltaProbe, "elastic-pendulum", 1.0);
            c.transform = Some("cartesian-to-polar".into());
            c.samples = Some(20);
            c
        }
        _ => {
            return Err(Error::Configuration(format!("unknown preset '{name}' (available: {})", PRESET_NAMES.join(", "))))
        }
    };
    c.seed = 0;
    Ok(c)
}
