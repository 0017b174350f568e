//! Rowlands' processed Störmer–Verlet method.
//!
//! The kernel is Störmer–Verlet on the effective potential
//! `Ũ = U − (h²/24) U_qᵀ M⁻¹ U_q`. Conjugating it with a near-identity
//! corrector raises the effective order to four:
//!
//! * exact corrector: `q̄ = q + (h²/12) M⁻¹ U_q(q)`, `p̄ = p − (h²/12) U_qq(q) M⁻¹ p`,
//!   inverted to fourth order by flipping the signs at `(q̄, p̄)`;
//! * cheap corrector: the same map with `U_qq M⁻¹ p` replaced by a central
//!   difference of `U_q` along the drift, and the inverse replaced by
//!   second differences of neighbouring kernel states.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fd::{fd_gradient, fd_jacobian};
use crate::integrators::steppers::verlet_with;
use crate::state::{PhaseState, Trajectory};
use crate::system::SeparableHamiltonian;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Corrector {
    Exact,
    Cheap,
}

#[derive(Debug, Clone)]
pub struct RowlandsConfig {
    pub corrector: Corrector,
    pub base: SeparableHamiltonian,
}

const C: f64 = 1.0 / 12.0;

impl RowlandsConfig {
    pub fn new(corrector: Corrector, base: SeparableHamiltonian) -> Self {
        Self { corrector, base }
    }

    fn grad(&self, q: &DVector<f64>) -> Result<DVector<f64>> {
        self.base.potential().gradient(q)
    }

    fn hessian(&self, q: &DVector<f64>) -> Result<DMatrix<f64>> {
        match self.base.potential().hessian(q) {
            Some(h) => h,
            None => fd_jacobian(|x| self.grad(x), q),
        }
    }

    /// Whether the potential supplies `U_qq` at `q`.
    pub fn has_analytic_hessian(&self, q: &DVector<f64>) -> bool {
        self.base.potential().hessian(q).is_some()
    }

    /// `Ũ(q)`.
    pub fn effective_potential(&self, q: &DVector<f64>, h: f64) -> Result<f64> {
        let g = self.grad(q)?;
        Ok(self.base.potential().value(q)? - h * h / 24.0 * g.dot(&(self.base.m_inv() * &g)))
    }

    /// `Ũ_q(q) = U_q − (h²/12) U_qq M⁻¹ U_q`, or central differences of `Ũ`
    /// when `U_qq` is unavailable.
    pub fn effective_gradient(&self, q: &DVector<f64>, h: f64) -> Result<DVector<f64>> {
        match self.base.potential().hessian(q) {
            Some(hs) => {
                let g = self.grad(q)?;
                Ok(&g - hs? * (self.base.m_inv() * &g) * (h * h / 12.0))
            }
            None => {
                self.base.potential().check_regular(q)?;
                fd_gradient(|x| self.effective_potential(x, h).unwrap_or(f64::NAN), q)
            }
        }
    }

    pub fn preprocess(&self, s: &PhaseState, h: f64) -> Result<PhaseState> {
        let m_inv = self.base.m_inv();
        match self.corrector {
            Corrector::Exact => {
                let g = self.grad(&s.q)?;
                let hs = self.exact_hessian(&s.q)?;
                Ok(PhaseState { q: &s.q + m_inv * g * (C * h * h), p: &s.p - hs * (m_inv * &s.p) * (C * h * h) })
            }
            Corrector::Cheap => {
                let v = m_inv * &s.p * (0.5 * h);
                let up = self.grad(&(&s.q + &v))?;
                let um = self.grad(&(&s.q - &v))?;
                Ok(PhaseState { q: &s.q + m_inv * (&up + &um) * (h * h / 24.0), p: &s.p - (up - um) * (h / 12.0) })
            }
        }
    }

    fn exact_hessian(&self, q: &DVector<f64>) -> Result<DMatrix<f64>> {
        match self.base.potential().hessian(q) {
            Some(h) => h,
            None => Err(Error::Capability("exact Rowlands corrector needs an analytic U_qq".into())),
        }
    }

    /// Fourth-order inverse of the exact corrector.
    pub fn postprocess_exact(&self, s: &PhaseState, h: f64) -> Result<PhaseState> {
        let m_inv = self.base.m_inv();
        let g = self.grad(&s.q)?;
        let hs = match self.corrector {
            Corrector::Exact => self.exact_hessian(&s.q)?,
            Corrector::Cheap => self.hessian(&s.q)?,
        };
        Ok(PhaseState { q: &s.q - m_inv * g * (C * h * h), p: &s.p + hs * (m_inv * &s.p) * (C * h * h) })
    }

    /// Three-point post map of the cheap corrector.
    pub fn postprocess_cheap(prev: &PhaseState, cur: &PhaseState, next: &PhaseState) -> PhaseState {
        let d2q = &next.q - &cur.q * 2.0 + &prev.q;
        let d2p = &next.p - &cur.p * 2.0 + &prev.p;
        PhaseState { q: &cur.q + d2q * C, p: &cur.p - d2p * C }
    }
}

/// One Störmer–Verlet step on `Ũ`.
pub fn rowlands_kernel_step(cfg: &RowlandsConfig, s: &PhaseState, h: f64) -> Result<PhaseState> {
    verlet_with(&cfg.base, |q| cfg.effective_gradient(q, h), s, h)
}

/// Outcome of a streamed run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub n_states: usize,
    pub diverged_at: Option<usize>,
    pub notes: Vec<(String, String)>,
}

/// Streams post-processed Rowlands states to `visit(index, state)`.
pub fn rowlands_stream(
    cfg: &RowlandsConfig,
    s0: &PhaseState,
    h: f64,
    n_steps: usize,
    visit: &mut dyn FnMut(usize, &PhaseState),
) -> Result<RunSummary> {
    if n_steps < 1 {
        return Err(Error::Argument("Rowlands needs at least one step".into()));
    }
    let mut notes = vec![
        (
            "effective_gradient".to_string(),
            if cfg.has_analytic_hessian(&s0.q) { "analytic U_qq" } else { "finite differences of U_eff" }.to_string(),
        ),
        ("corrector".to_string(), format!("{:?}", cfg.corrector).to_lowercase()),
    ];
    let stop = |e: Error, at: usize, notes: &mut Vec<(String, String)>| -> Result<RunSummary> {
        if e.is_divergence() || matches!(e, Error::ImplicitSolve { .. }) {
            notes.push(("stop_reason".into(), e.to_string()));
            Ok(RunSummary { n_states: at, diverged_at: Some(at), notes: notes.clone() })
        } else {
            Err(e)
        }
    };
    let mut cur = match cfg.preprocess(s0, h) {
        Ok(s) if !s.is_diverged() => s,
        Ok(_) => return stop(Error::Diverged, 0, &mut notes),
        Err(e) => return stop(e, 0, &mut notes),
    };
    let mut prev: Option<PhaseState> = None;
    for j in 0..n_steps {
        let next = match rowlands_kernel_step(cfg, &cur, h) {
            Ok(n) => n,
            Err(e) => {
                // cur becomes the last stored state, processed as an endpoint
                match cfg.postprocess_exact(&cur, h) {
                    Ok(out) if !out.is_diverged() => {
                        visit(j, &out);
                        return stop(e, j + 1, &mut notes);
                    }
                    _ => return stop(e, j, &mut notes),
                }
            }
        };
        let out = match (cfg.corrector, &prev) {
            (Corrector::Cheap, Some(pv)) => Ok(RowlandsConfig::postprocess_cheap(pv, &cur, &next)),
            _ => cfg.postprocess_exact(&cur, h),
        };
        match out {
            Ok(o) if !o.is_diverged() => visit(j, &o),
            Ok(_) => return stop(Error::Diverged, j, &mut notes),
            Err(e) => return stop(e, j, &mut notes),
        }
        prev = Some(std::mem::replace(&mut cur, next));
    }
    match cfg.postprocess_exact(&cur, h) {
        Ok(o) if !o.is_diverged() => visit(n_steps, &o),
        Ok(_) => return stop(Error::Diverged, n_steps, &mut notes),
        Err(e) => return stop(e, n_steps, &mut notes),
    }
    Ok(RunSummary { n_states: n_steps + 1, diverged_at: None, notes })
}

/// Full Rowlands trajectory of `n_steps` steps from `s0`.
pub fn rowlands_solve(cfg: &RowlandsConfig, s0: &PhaseState, h: f64, n_steps: usize) -> Result<Trajectory> {
    let mut tr = Trajectory::new(0.0, h, format!("rowlands-{}", format!("{:?}", cfg.corrector).to_lowercase()));
    let mut states = Vec::with_capacity(n_steps + 1);
    let summary = rowlands_stream(cfg, s0, h, n_steps, &mut |_, s| states.push(s.clone()))?;
    tr.states = states;
    tr.diverged_at = summary.diverged_at;
    tr.notes = summary.notes;
    Ok(tr)
}
