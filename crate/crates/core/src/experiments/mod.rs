//! Experiment drivers producing figure-like CSV artifacts.

pub mod compensate;
pub mod config;
pub mod convergence;
pub mod delta;
pub mod drift;
pub mod energy_map;
pub mod table;
pub mod trajectory;

use std::path::Path;

use crate::error::{Error, Result};
use crate::integrators::{solve_with, Method, StepperConfig};
use crate::models::{build_model, Coords, ModelEntry};
use crate::state::PhaseState;
use crate::system::Hamiltonian;

pub use compensate::run_compensate_demo;
pub use config::{preset, Axis, ExperimentConfig, ExperimentKind, GridSpec, Threads, PRESET_NAMES};
pub use convergence::{run_convergence, ConvergenceReport, ConvergenceRow, SlopeSummary};
pub use delta::{named_transform, run_delta_probe};
pub use drift::run_invariant_drift;
pub use energy_map::{run_energy_map, EnergyCell};
pub use table::{fmt_f64, write_outputs, Table};
pub use trajectory::run_trajectory;

/// A finished experiment: its table and a plot script for it.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub table: Table,
    pub plot: String,
}

impl ExperimentOutput {
    pub fn csv(&self, cfg: &ExperimentConfig) -> String {
        self.table.to_csv(&cfg.provenance())
    }

    pub fn write(&self, cfg: &ExperimentConfig, path: &Path) -> Result<()> {
        write_outputs(path, &self.table, &cfg.provenance(), &self.plot)
    }
}

/// Runs `cfg` on its configured thread pool.
pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    with_threads(cfg.threads, || match cfg.experiment {
        ExperimentKind::Convergence => run_convergence(cfg).map(|r| r.output),
        ExperimentKind::EnergyMap => run_energy_map(cfg).map(|(o, _)| o),
        ExperimentKind::InvariantDrift => run_invariant_drift(cfg),
        ExperimentKind::CompensateDemo => run_compensate_demo(cfg),
        ExperimentKind::DeltaProbe => run_delta_probe(cfg),
        ExperimentKind::Trajectory => run_trajectory(cfg),
    })
}

pub(crate) fn with_threads<T: Send>(threads: Threads, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match threads {
        Threads::Auto => f(),
        Threads::Count(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Configuration(format!("thread pool: {e}")))?
            .install(f),
    }
}

pub(crate) fn charts(cfg: &ExperimentConfig) -> Vec<Option<Coords>> {
    if cfg.coords.is_empty() {
        vec![None]
    } else {
        cfg.coords.iter().copied().map(Some).collect()
    }
}

pub(crate) fn chart_label(entry: &ModelEntry) -> String {
    entry.coords.map(|c| c.to_string()).unwrap_or_else(|| "native".into())
}

pub(crate) fn build(cfg: &ExperimentConfig, coords: Option<Coords>, h: Option<f64>) -> Result<ModelEntry> {
    build_model(&cfg.model, coords, &cfg.params, h)
}

/// The configured initial state (original chart) mapped into `entry`'s chart,
/// or the model default.
pub(crate) fn initial_state(cfg: &ExperimentConfig, entry: &ModelEntry) -> Result<PhaseState> {
    match &cfg.ic {
        Some(z) => {
            let s = PhaseState::from_z(z)
                .map_err(|_| Error::Configuration(format!("ic must list q then p, got {} values", z.len())))?;
            entry.to_chart(&s)
        }
        None => entry.default_state(),
    }
}

/// `n` steps with `h·n = t_max`, the step closest to `h`.
pub(crate) fn snap_step(h: f64, t_max: f64) -> (f64, usize) {
    let n = ((t_max / h).round() as usize).max(1);
    (t_max / n as f64, n)
}

/// Energy error statistics of a streamed run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyRun {
    /// RMS of `H(z_j) − H(z_0)` over stored states.
    pub rms: f64,
    pub max_abs: f64,
    pub diverged_at: Option<usize>,
}

/// Runs a method and accumulates energy errors, also returning the last state.
pub(crate) fn energy_run(
    method: Method,
    sys: &dyn Hamiltonian,
    s0: &PhaseState,
    h: f64,
    n_steps: usize,
) -> Result<(EnergyRun, Option<PhaseState>)> {
    let h0 = match sys.check_regular(s0).and_then(|_| sys.energy(s0)) {
        Ok(e) => e,
        Err(e) if e.is_divergence() => {
            return Ok((EnergyRun { rms: f64::NAN, max_abs: f64::NAN, diverged_at: Some(0) }, None));
        }
        Err(e) => return Err(e),
    };
    let (mut sum, mut max, mut count) = (0.0, 0.0f64, 0usize);
    let mut last = None;
    let mut err = None;
    let summary = solve_with(method, sys, s0, &StepperConfig::new(h)?, n_steps, &mut |_, s| {
        match sys.energy(s) {
            Ok(e) => {
                let d = e - h0;
                sum += d * d;
                max = max.max(d.abs());
                count += 1;
            }
            Err(e) => err = Some(e),
        }
        last = Some(s.clone());
    })?;
    if let Some(e) = err {
        if !e.is_divergence() {
            return Err(e);
        }
    }
    let rms = if count > 0 { (sum / count as f64).sqrt() } else { f64::NAN };
    Ok((EnergyRun { rms, max_abs: max, diverged_at: summary.diverged_at }, last))
}

pub(crate) fn bool_cell(b: bool) -> String {
    if b { "true" } else { "false" }.into()
}
