//! Planar elastic pendulum: a spring of rest length `l` and stiffness `k`
//! carrying a mass `m` under gravity `g`. The potential contains `−m g y`, so
//! the mass hangs towards `+y` and polar angles are measured from that axis.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::state::PhaseState;
use crate::system::{Hamiltonian, Potential, SeparableHamiltonian};
use crate::transforms::{PolarConvention, R_MIN};

/// Polar convention of the pendulum charts: `x = r sin θ`, `y = r cos θ`.
pub const PENDULUM_POLAR: PolarConvention = PolarConvention::FromYAxis;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PendulumParams {
    pub l: f64,
    pub m: f64,
    pub k: f64,
    pub g: f64,
}

impl Default for PendulumParams {
    fn default() -> Self {
        Self { l: 1.0, m: 1.0, k: 1.0, g: 0.2 }
    }
}

impl PendulumParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("l", self.l), ("m", self.m), ("k", self.k)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Parameter(format!("elastic pendulum: {name} must be positive, got {v}")));
            }
        }
        if !(self.g >= 0.0) || !self.g.is_finite() {
            return Err(Error::Parameter(format!("elastic pendulum: g must be non-negative, got {}", self.g)));
        }
        Ok(())
    }

    /// Rest position `(0, l + m g / k)`.
    pub fn equilibrium(&self) -> (f64, f64) {
        (0.0, self.l + self.m * self.g / self.k)
    }

    /// `r₀ − 2l − (2mg/k) cos φ₀` for a Cartesian start at rest; non-negative
    /// values lie on the side where polar runs pass through the origin.
    pub fn divergence_margin(&self, x0: f64, y0: f64) -> f64 {
        let r = x0.hypot(y0);
        let cos_phi = if r > 0.0 { y0 / r } else { 1.0 };
        r - 2.0 * self.l - 2.0 * self.m * self.g / self.k * cos_phi
    }
}

/// `U(x, y) = ½ k (√(x²+y²) − l)² − m g y`.
#[derive(Debug, Clone, Copy)]
pub struct ElasticPotential {
    pub params: PendulumParams,
}

fn singular_origin(r: f64) -> Error {
    Error::Singular(format!("spring force undefined at the pivot (r = {r:e})"))
}

impl Potential for ElasticPotential {
    fn dim(&self) -> usize {
        2
    }

    fn value(&self, q: &DVector<f64>) -> Result<f64> {
        let PendulumParams { l, m, k, g } = self.params;
        let r = q[0].hypot(q[1]);
        Ok(0.5 * k * (r - l).powi(2) - m * g * q[1])
    }

    fn gradient(&self, q: &DVector<f64>) -> Result<DVector<f64>> {
        let PendulumParams { l, m, k, g } = self.params;
        let r = q[0].hypot(q[1]);
        if !(r > R_MIN) {
            return Err(singular_origin(r));
        }
        let c = k * (r - l) / r;
        Ok(DVector::from_vec(vec![c * q[0], c * q[1] - m * g]))
    }

    fn hessian(&self, q: &DVector<f64>) -> Option<Result<DMatrix<f64>>> {
        let PendulumParams { l, k, .. } = self.params;
        let r = q[0].hypot(q[1]);
        if !(r > R_MIN) {
            return Some(Err(singular_origin(r)));
        }
        let n = q / r;
        Some(Ok(DMatrix::identity(2, 2) * (k * (1.0 - l / r)) + (&n * n.transpose()) * (k * l / r)))
    }

    fn check_regular(&self, q: &DVector<f64>) -> Result<()> {
        let r = q[0].hypot(q[1]);
        if !(r > R_MIN) {
            return Err(singular_origin(r));
        }
        Ok(())
    }
}

/// `H = (p_x² + p_y²)/(2m) + ½ k (√(x²+y²) − l)² − m g y`.
pub fn elastic_pendulum_cartesian(params: PendulumParams) -> Result<SeparableHamiltonian> {
    params.validate()?;
    SeparableHamiltonian::with_mass("elastic-pendulum-cartesian", params.m, Arc::new(ElasticPotential { params }))
}

/// `H = (p_r² + p_θ²/r²)/(2m) + ½ k (r − l)² − m g r cos θ`, singular for
/// `r ≤ r_min`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElasticPendulumPolar {
    pub params: PendulumParams,
    pub r_min: f64,
}

pub fn elastic_pendulum_polar(params: PendulumParams) -> Result<ElasticPendulumPolar> {
    params.validate()?;
    Ok(ElasticPendulumPolar { params, r_min: R_MIN })
}

impl ElasticPendulumPolar {
    fn radius(&self, s: &PhaseState) -> Result<f64> {
        let r = s.q[0];
        if !(r > self.r_min) {
            return Err(Error::Singular(format!("polar radius {r:e} at or below r_min = {:e}", self.r_min)));
        }
        Ok(r)
    }
}

impl Hamiltonian for ElasticPendulumPolar {
    fn name(&self) -> String {
        "elastic-pendulum-polar".into()
    }
    fn dof(&self) -> usize {
        2
    }
    fn energy(&self, s: &PhaseState) -> Result<f64> {
        let PendulumParams { l, m, k, g } = self.params;
        let r = self.radius(s)?;
        let (th, pr, pt) = (s.q[1], s.p[0], s.p[1]);
        Ok((pr * pr + pt * pt / (r * r)) / (2.0 * m) + 0.5 * k * (r - l).powi(2) - m * g * r * th.cos())
    }
    fn grad_q(&self, s: &PhaseState) -> Result<DVector<f64>> {
        let PendulumParams { l, m, k, g } = self.params;
        let r = self.radius(s)?;
        let (th, pt) = (s.q[1], s.p[1]);
        let (sn, cs) = th.sin_cos();
        Ok(DVector::from_vec(vec![-pt * pt / (m * r * r * r) + k * (r - l) - m * g * cs, m * g * r * sn]))
    }
    fn grad_p(&self, s: &PhaseState) -> Result<DVector<f64>> {
        let m = self.params.m;
        let r = self.radius(s)?;
        Ok(DVector::from_vec(vec![s.p[0] / m, s.p[1] / (m * r * r)]))
    }
    fn check_regular(&self, s: &PhaseState) -> Result<()> {
        self.radius(s).map(|_| ())
    }
    fn sampling_box(&self) -> Vec<(f64, f64)> {
        vec![(0.5, 1.5), (-PI, PI), (-0.5, 0.5), (-0.5, 0.5)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fd::{fd_phase_gradient, validate_system};
    use approx::assert_abs_diff_eq;

    #[test]
    fn energy_at_equilibrium() {
        let p = PendulumParams::default();
        let h = elastic_pendulum_cartesian(p).unwrap();
        let (x, y) = p.equilibrium();
        let s = PhaseState::from_slices(&[x, y], &[0.0, 0.0]).unwrap();
        // ½k(mg/k)² − mg(l + mg/k) = 0.02 − 0.24
        assert_abs_diff_eq!(h.energy(&s).unwrap(), -0.22, epsilon = 1e-15);
        assert!(h.grad_q(&s).unwrap().amax() < 1e-15);
        // hanging below the pivot, stretched to 1.2: ½·0.2² + 0.2·1.2
        let s = PhaseState::from_slices(&[0.0, -1.2], &[0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(h.energy(&s).unwrap(), 0.26, epsilon = 1e-15);
    }

    #[test]
    fn cartesian_gradient_matches_fd() {
        let h = elastic_pendulum_cartesian(PendulumParams::default()).unwrap();
        let s = PhaseState::from_slices(&[0.5, -0.5], &[0.1, 0.2]).unwrap();
        let fd = fd_phase_gradient(&h, &s).unwrap();
        let an: Vec<f64> = h.grad_q(&s).unwrap().iter().chain(h.grad_p(&s).unwrap().iter()).copied().collect();
        for (a, b) in an.iter().zip(fd.iter()) {
            assert!((a - b).abs() <= 1e-6 * b.abs().max(1e-3));
        }
    }

    #[test]
    fn analytic_hessian_matches_fd() {
        let pot = ElasticPotential { params: PendulumParams::default() };
        let q = DVector::from_vec(vec![0.3, 0.9]);
        let hs = pot.hessian(&q).unwrap().unwrap();
        let fd = crate::fd::fd_jacobian(|x| pot.gradient(x), &q).unwrap();
        assert!((hs - fd).amax() < 1e-8);
    }

    #[test]
    fn origin_is_singular() {
        let h = elastic_pendulum_cartesian(PendulumParams::default()).unwrap();
        let s = PhaseState::from_slices(&[0.0, 0.0], &[0.0, 0.0]).unwrap();
        assert!(matches!(h.grad_q(&s), Err(Error::Singular(_))));
        let hp = elastic_pendulum_polar(PendulumParams::default()).unwrap();
        let s = PhaseState::from_slices(&[-0.1, 0.0], &[0.0, 0.0]).unwrap();
        assert!(matches!(hp.grad_p(&s), Err(Error::Singular(_))));
    }

    #[test]
    fn polar_axis_symmetry_and_validation() {
        let hp = elastic_pendulum_polar(PendulumParams::default()).unwrap();
        let s = PhaseState::from_slices(&[1.3, 0.0], &[0.2, 0.4]).unwrap();
        assert_eq!(hp.grad_q(&s).unwrap()[1], 0.0);
        assert!(validate_system(&hp, 100, 1).unwrap().passed);
    }

    #[test]
    fn rejects_bad_parameters() {
        let bad = PendulumParams { k: 0.0, ..Default::default() };
        assert!(elastic_pendulum_cartesian(bad).is_err());
        let bad = PendulumParams { g: -1.0, ..Default::default() };
        assert!(elastic_pendulum_polar(bad).is_err());
    }
}
