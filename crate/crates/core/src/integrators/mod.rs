//! Fixed-step integrators, the uniform driver and the reference oracle.

pub mod reference;
pub mod rowlands;
pub mod steppers;

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fd::fd_jacobian;
use crate::state::{PhaseState, Trajectory};
use crate::system::Hamiltonian;

pub use reference::{
    reference_endpoint, reference_solve, reference_solve_ode, rk4_halving, rk4_run, ReferenceEndpoint,
    ReferenceSource, DEFAULT_REFERENCE_TOL,
};
pub use rowlands::{rowlands_kernel_step, rowlands_solve, rowlands_stream, Corrector, RowlandsConfig, RunSummary};
pub use steppers::{
    explicit_euler_canonical_step, explicit_euler_step, stormer_verlet_step, symplectic_euler_adjoint_step,
    symplectic_euler_step, StepperConfig,
};

/// Integrator selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ExplicitEuler,
    SymplecticEuler,
    SymplecticEulerAdjoint,
    StoermerVerlet,
    RowlandsExact,
    #[serde(alias = "rowlands")]
    RowlandsCheap,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::ExplicitEuler,
        Method::SymplecticEuler,
        Method::SymplecticEulerAdjoint,
        Method::StoermerVerlet,
        Method::RowlandsExact,
        Method::RowlandsCheap,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Method::ExplicitEuler => "explicit-euler",
            Method::SymplecticEuler => "symplectic-euler",
            Method::SymplecticEulerAdjoint => "symplectic-euler-adjoint",
            Method::StoermerVerlet => "stoermer-verlet",
            Method::RowlandsExact => "rowlands-exact",
            Method::RowlandsCheap => "rowlands-cheap",
        }
    }

    /// Whether the method needs `H = ½ pᵀM⁻¹p + U(q)`.
    pub fn needs_separable(self) -> bool {
        matches!(self, Method::StoermerVerlet | Method::RowlandsExact | Method::RowlandsCheap)
    }

    pub fn corrector(self) -> Option<Corrector> {
        match self {
            Method::RowlandsExact => Some(Corrector::Exact),
            Method::RowlandsCheap => Some(Corrector::Cheap),
            _ => None,
        }
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rowlands" => Ok(Method::RowlandsCheap),
            "stormer-verlet" | "verlet" => Ok(Method::StoermerVerlet),
            _ => Method::ALL.iter().copied().find(|m| m.label() == s).ok_or_else(|| {
                let names: Vec<&str> = Method::ALL.iter().map(|m| m.label()).collect();
                Error::Configuration(format!("unknown method '{s}' (available: {})", names.join(", ")))
            }),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

fn stops_run(e: &Error) -> bool {
    e.is_divergence() || matches!(e, Error::ImplicitSolve { .. })
}

/// One step of a non-processed method.
pub fn step_once(method: Method, sys: &dyn Hamiltonian, s: &PhaseState, cfg: &StepperConfig) -> Result<PhaseState> {
    match method {
        Method::ExplicitEuler => explicit_euler_canonical_step(sys, s, cfg.h),
        Method::SymplecticEuler => symplectic_euler_step(sys, s, cfg),
        Method::SymplecticEulerAdjoint => symplectic_euler_adjoint_step(sys, s, cfg),
        Method::StoermerVerlet => stormer_verlet_step(separable(method, sys)?, s, cfg.h),
        Method::RowlandsExact | Method::RowlandsCheap => {
            let rc = RowlandsConfig::new(method.corrector().expect("rowlands"), separable(method, sys)?.clone());
            rowlands_kernel_step(&rc, s, cfg.h)
        }
    }
}

fn separable(method: Method, sys: &dyn Hamiltonian) -> Result<&crate::system::SeparableHamiltonian> {
    sys.as_separable().ok_or_else(|| {
        Error::Configuration(format!("{method} needs a separable Hamiltonian, '{}' is not", sys.name()))
    })
}

/// Runs `n_steps` steps, streaming each stored state to `visit(index, state)`.
/// Divergence, a singular state or an implicit-solve failure ends the run
/// early with `diverged_at` set and a `stop_reason` note.
pub fn solve_with(
    method: Method,
    sys: &dyn Hamiltonian,
    s0: &PhaseState,
    cfg: &StepperConfig,
    n_steps: usize,
    visit: &mut dyn FnMut(usize, &PhaseState),
) -> Result<RunSummary> {
    if s0.dof() != sys.dof() {
        return Err(Error::Dimension { expected: sys.dof(), got: s0.dof() });
    }
    if method.needs_separable() {
        separable(method, sys)?;
    }
    let stop = |e: Error, at: usize, mut notes: Vec<(String, String)>| -> Result<RunSummary> {
        if stops_run(&e) {
            notes.push(("stop_reason".into(), e.to_string()));
            Ok(RunSummary { n_states: at, diverged_at: Some(at), notes })
        } else {
            Err(e)
        }
    };
    if s0.is_diverged() {
        return stop(Error::Diverged, 0, Vec::new());
    }
    if let Err(e) = sys.check_regular(s0) {
        return stop(e, 0, Vec::new());
    }
    if n_steps == 0 {
        visit(0, s0);
        return Ok(RunSummary { n_states: 1, diverged_at: None, notes: Vec::new() });
    }
    if let Some(c) = method.corrector() {
        let rc = RowlandsConfig::new(c, separable(method, sys)?.clone());
        return rowlands_stream(&rc, s0, cfg.h, n_steps, visit);
    }
    visit(0, s0);
    let mut cur = s0.clone();
    for j in 0..n_steps {
        let next = match step_once(method, sys, &cur, cfg).and_then(|n| sys.check_regular(&n).map(|_| n)) {
            Ok(n) => n,
            Err(e) => return stop(e, j + 1, Vec::new()),
        };
        visit(j + 1, &next);
        cur = next;
    }
    Ok(RunSummary { n_states: n_steps + 1, diverged_at: None, notes: Vec::new() })
}

/// Stores every state of a [`solve_with`] run.
pub fn solve_cfg(method: Method, sys: &dyn Hamiltonian, s0: &PhaseState, cfg: &StepperConfig, n_steps: usize) -> Result<Trajectory> {
    let mut tr = Trajectory::new(0.0, cfg.h, method.label());
    let mut states = Vec::with_capacity(n_steps + 1);
    let summary = solve_with(method, sys, s0, cfg, n_steps, &mut |_, s| states.push(s.clone()))?;
    tr.states = states;
    tr.diverged_at = summary.diverged_at;
    tr.notes = summary.notes;
    Ok(tr)
}

/// [`solve_cfg`] with default implicit-solve controls.
pub fn solve(method: Method, sys: &dyn Hamiltonian, s0: &PhaseState, h: f64, n_steps: usize) -> Result<Trajectory> {
    solve_cfg(method, sys, s0, &StepperConfig::new(h)?, n_steps)
}

/// `‖DΦᵀ J⁻¹ DΦ − J⁻¹‖_F` for a one-step map `Φ`, with `DΦ` by central
/// differences.
pub fn symplecticity_defect<F>(step: F, s: &PhaseState) -> Result<f64>
where
    F: Fn(&PhaseState) -> Result<PhaseState>,
{
    if s.is_diverged() {
        return Err(Error::Precondition("symplecticity defect needs a finite state".into()));
    }
    let d = s.dof();
    let dphi = fd_jacobian(|z| Ok(step(&PhaseState::from_z(z.as_slice())?)?.z()), &s.z())?;
    let mut jinv = DMatrix::zeros(2 * d, 2 * d);
    for i in 0..d {
        jinv[(i, d + i)] = -1.0;
        jinv[(d + i, i)] = 1.0;
    }
    Ok((dphi.transpose() * &jinv * &dphi - jinv).norm())
}
