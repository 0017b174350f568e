//! One-step maps.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::fd::fd_jacobian;
use crate::state::{OdeState, PhaseState};
use crate::system::{Hamiltonian, SeparableHamiltonian, VectorField};

/// Step size and implicit-solve controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepperConfig {
    pub h: f64,
    pub implicit_tol: f64,
    pub implicit_max_iter: usize,
}

impl StepperConfig {
    pub const DEFAULT_TOL: f64 = 1e-13;
    pub const DEFAULT_MAX_ITER: usize = 50;

    pub fn new(h: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::Argument(format!("step size must be positive and finite, got {h}")));
        }
        Ok(Self { h, implicit_tol: Self::DEFAULT_TOL, implicit_max_iter: Self::DEFAULT_MAX_ITER })
    }

    pub fn with_implicit(mut self, tol: f64, max_iter: usize) -> Result<Self> {
        if !(tol > 0.0) || max_iter == 0 {
            return Err(Error::Argument(format!("implicit tolerance {tol} and iteration cap {max_iter} must be positive")));
        }
        self.implicit_tol = tol;
        self.implicit_max_iter = max_iter;
        Ok(self)
    }

    /// Same controls with step `−h`, for running a map backwards in time.
    pub fn reversed(self) -> Self {
        Self { h: -self.h, ..self }
    }
}

fn finite_or_diverged(s: PhaseState) -> Result<PhaseState> {
    if s.is_diverged() {
        Err(Error::Diverged)
    } else {
        Ok(s)
    }
}

fn finite_vec(v: DVector<f64>) -> Result<DVector<f64>> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(v)
    } else {
        Err(Error::Diverged)
    }
}

/// `y ← y + h f(y)` with a single evaluation of `f`.
pub fn explicit_euler_step(f: &dyn VectorField, s: &OdeState, h: f64) -> Result<OdeState> {
    let fy = finite_vec(f.eval(&s.y)?)?;
    let next = OdeState::new(&s.y + fy * h, s.t + h);
    if next.is_diverged() {
        return Err(Error::Diverged);
    }
    Ok(next)
}

/// Explicit Euler on the canonical equations.
pub fn explicit_euler_canonical_step(sys: &dyn Hamiltonian, s: &PhaseState, h: f64) -> Result<PhaseState> {
    let hp = finite_vec(sys.grad_p(s)?)?;
    let hq = finite_vec(sys.grad_q(s)?)?;
    finite_or_diverged(PhaseState { q: &s.q + hp * h, p: &s.p - hq * h })
}

/// Solves `x = g(x)` by fixed-point iteration, falling back to Newton with
/// a finite-difference Jacobian when the iteration contracts too slowly.
fn fixed_point<G>(x0: &DVector<f64>, scale: f64, cfg: &StepperConfig, g: G) -> Result<DVector<f64>>
where
    G: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    let thresh = cfg.implicit_tol * scale.max(1.0);
    let mut x = x0.clone();
    let mut residual = f64::INFINITY;
    for _ in 0..cfg.implicit_max_iter {
        let next = finite_vec(g(&x)?)?;
        residual = (&next - &x).amax();
        x = next;
        if residual <= thresh {
            return Ok(x);
        }
    }
    let f = |y: &DVector<f64>| -> Result<DVector<f64>> { Ok(y - finite_vec(g(y)?)?) };
    let mut y = x0.clone();
    for _ in 0..cfg.implicit_max_iter {
        let jac = fd_jacobian(f, &y)?;
        let step = jac.lu().solve(&f(&y)?).ok_or_else(|| Error::ImplicitSolve {
            iterations: cfg.implicit_max_iter,
            residual,
        })?;
        y -= &step;
        let r = step.amax();
        if !r.is_finite() {
            break;
        }
        if r <= thresh {
            return finite_vec(y);
        }
    }
    Err(Error::ImplicitSolve { iterations: cfg.implicit_max_iter, residual })
}

/// `p' = p − h H_q(q, p')`, `q' = q + h H_p(q, p')`.
pub fn symplectic_euler_step(sys: &dyn Hamiltonian, s: &PhaseState, cfg: &StepperConfig) -> Result<PhaseState> {
    let h = cfg.h;
    let p_new = if sys.grad_q_depends_on_p() {
        fixed_point(&s.p, s.p.amax(), cfg, |p| {
            let st = PhaseState { q: s.q.clone(), p: p.clone() };
            Ok(&s.p - sys.grad_q(&st)? * h)
        })?
    } else {
        &s.p - finite_vec(sys.grad_q(s)?)? * h
    };
    let mid = PhaseState { q: s.q.clone(), p: p_new };
    let hp = finite_vec(sys.grad_p(&mid)?)?;
    finite_or_diverged(PhaseState { q: &s.q + hp * h, p: mid.p })
}

/// `q' = q + h H_p(q', p)`, `p' = p − h H_q(q', p)`.
pub fn symplectic_euler_adjoint_step(sys: &dyn Hamiltonian, s: &PhaseState, cfg: &StepperConfig) -> Result<PhaseState> {
    let h = cfg.h;
    let q_new = if sys.grad_p_depends_on_q() {
        fixed_point(&s.q, s.q.amax(), cfg, |q| {
            let st = PhaseState { q: q.clone(), p: s.p.clone() };
            Ok(&s.q + sys.grad_p(&st)? * h)
        })?
    } else {
        &s.q + finite_vec(sys.grad_p(s)?)? * h
    };
    let mid = PhaseState { q: q_new, p: s.p.clone() };
    let hq = finite_vec(sys.grad_q(&mid)?)?;
    finite_or_diverged(PhaseState { p: &s.p - hq * h, q: mid.q })
}

/// Half kick, drift, half kick with force `grad`.
pub(crate) fn verlet_with<G>(sep: &SeparableHamiltonian, grad: G, s: &PhaseState, h: f64) -> Result<PhaseState>
where
    G: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    let p_half = &s.p - finite_vec(grad(&s.q)?)? * (0.5 * h);
    let q1 = &s.q + sep.m_inv() * &p_half * h;
    let p1 = &p_half - finite_vec(grad(&q1)?)? * (0.5 * h);
    finite_or_diverged(PhaseState { q: q1, p: p1 })
}

/// Störmer–Verlet for `H = ½ pᵀM⁻¹p + U(q)`.
pub fn stormer_verlet_step(sep: &SeparableHamiltonian, s: &PhaseState, h: f64) -> Result<PhaseState> {
    verlet_with(sep, |q| sep.potential().gradient(q), s, h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{free_mass_cartesian, free_mass_polar, harmonic_oscillator};
    use crate::system::FnField;
    use approx::assert_abs_diff_eq;

    fn ho_state(q: f64, p: f64) -> PhaseState {
        PhaseState::from_slices(&[q], &[p]).unwrap()
    }

    #[test]
    fn explicit_euler_examples() {
        let f = FnField::scalar(|y| -y);
        let s = explicit_euler_step(&f, &OdeState::scalar(1.0, 0.0), 0.3).unwrap();
        assert_abs_diff_eq!(s.y[0], 0.7, epsilon = 1e-15);
        assert_eq!(s.t, 0.3);
        let zero = FnField::scalar(|_| 0.0);
        assert_eq!(explicit_euler_step(&zero, &OdeState::scalar(4.2, 0.0), 0.7).unwrap().y[0], 4.2);
        let c = FnField::scalar(|_| -1.0);
        assert_abs_diff_eq!(explicit_euler_step(&c, &OdeState::scalar(0.0, 0.0), 0.3).unwrap().y[0], -0.3);
        let nan = FnField::scalar(|_| f64::NAN);
        assert_eq!(explicit_euler_step(&nan, &OdeState::scalar(0.0, 0.0), 0.3), Err(Error::Diverged));
    }

    #[test]
    fn symplectic_euler_oscillator() {
        let sys = harmonic_oscillator();
        let cfg = StepperConfig::new(0.1).unwrap();
        let s = symplectic_euler_step(&sys, &ho_state(1.0, 0.0), &cfg).unwrap();
        assert_abs_diff_eq!(s.q[0], 0.99, epsilon = 1e-15);
        assert_abs_diff_eq!(s.p[0], -0.1, epsilon = 1e-15);
        let a = symplectic_euler_adjoint_step(&sys, &ho_state(1.0, 0.0), &cfg).unwrap();
        assert_eq!(a.q[0], 1.0);
        assert_abs_diff_eq!(a.p[0], -0.1, epsilon = 1e-15);
    }

    #[test]
    fn adjoint_inverts_primary() {
        let sys = free_mass_polar(1.0).unwrap();
        let cfg = StepperConfig::new(0.05).unwrap();
        let s0 = PhaseState::from_slices(&[1.2, 0.3], &[0.1, 0.4]).unwrap();
        let s1 = symplectic_euler_step(&sys, &s0, &cfg).unwrap();
        let back = symplectic_euler_adjoint_step(&sys, &s1, &cfg.reversed()).unwrap();
        assert!((back.z() - s0.z()).amax() < 1e-12);
    }

    #[test]
    fn free_mass_drift() {
        let sys = free_mass_cartesian(2.0).unwrap();
        let cfg = StepperConfig::new(0.25).unwrap();
        let s0 = PhaseState::from_slices(&[1.0, 2.0], &[0.5, -1.0]).unwrap();
        for s in [symplectic_euler_step(&sys, &s0, &cfg).unwrap(), symplectic_euler_adjoint_step(&sys, &s0, &cfg).unwrap()]
        {
            assert_eq!(s.p, s0.p);
            assert_eq!(s.q.as_slice(), &[1.0625, 1.875]);
        }
    }

    #[test]
    fn polar_free_mass_radial_kick() {
        let sys = free_mass_polar(1.0).unwrap();
        let cfg = StepperConfig::new(0.1).unwrap();
        let s = symplectic_euler_step(&sys, &PhaseState::from_slices(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), &cfg).unwrap();
        assert_abs_diff_eq!(s.p[0], 0.1, epsilon = 1e-15);
        assert_eq!(s.p[1], 1.0);
        assert_abs_diff_eq!(s.q[0], 1.01, epsilon = 1e-15);
        assert_abs_diff_eq!(s.q[1], 0.1, epsilon = 1e-15);
    }

    #[test]
    fn verlet_oscillator_stages() {
        let sys = harmonic_oscillator();
        let s = stormer_verlet_step(&sys, &ho_state(1.0, 0.0), 0.1).unwrap();
        assert_abs_diff_eq!(s.q[0], 0.995, epsilon = 1e-15);
        assert_abs_diff_eq!(s.p[0], -0.09975, epsilon = 1e-15);
    }

    #[test]
    fn implicit_solve_failure_is_reported() {
        let sys = free_mass_polar(1.0).unwrap();
        let cfg = StepperConfig::new(0.1).unwrap().with_implicit(1e-13, 1).unwrap();
        let err = symplectic_euler_step(&sys, &PhaseState::from_slices(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), &cfg);
        assert!(matches!(err, Err(Error::ImplicitSolve { iterations: 1, .. })));
        assert!(StepperConfig::new(0.0).is_err());
    }
}
