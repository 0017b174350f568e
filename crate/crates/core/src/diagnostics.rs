//! Backward-error quantities: the first distorted vector field of explicit
//! Euler, the elementary Hamiltonian `H_p·H_q`, its coordinate-change defect
//! `δ` and the first-integral preservation condition.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrators::{step_once, Method, StepperConfig};
use crate::numeric::loglog_slope;
use crate::state::{PhaseState, Trajectory};
use crate::system::{field_jacobian, FirstIntegral, Hamiltonian, SystemRef, VectorField};
use crate::transforms::{canonical_forward, transform_hamiltonian, PointTransform, TransformRef};

/// Cyclic-coordinate threshold on `|∂H/∂q^i|`.
pub const CYCLIC_TOL: f64 = 1e-10;
/// Absolute threshold, scaled by `max(1, |δ|)`, below which the
/// first-integral condition is declared to hold.
pub const CONDITION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BeaQuantity {
    Dvf1,
    ElementaryHpq,
    DeltaHpq,
    FirstIntegralCondition,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BeaPoint {
    Phase(PhaseState),
    Ode(DVector<f64>),
}

/// A diagnostic value together with where and how it was evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct BeaReport {
    pub point: BeaPoint,
    pub value: DVector<f64>,
    pub quantity: BeaQuantity,
    pub h: Option<f64>,
    /// Threshold for "condition holds", when the quantity has one.
    pub tol: Option<f64>,
}

impl BeaReport {
    pub fn scalar(&self) -> f64 {
        self.value[0]
    }

    pub fn holds(&self) -> Option<bool> {
        self.tol.map(|t| self.value.amax() <= t)
    }
}

/// `−½ Df(y) f(y)`: the `h`-coefficient of explicit Euler's distorted field.
pub fn dvf1_explicit_euler(f: &dyn VectorField, y: &DVector<f64>) -> Result<DVector<f64>> {
    let fy = f.eval(y)?;
    Ok(field_jacobian(f, y)? * fy * -0.5)
}

/// `Σ_i ∂H/∂p_i ∂H/∂q^i`.
pub fn elementary_hpq(sys: &dyn Hamiltonian, s: &PhaseState) -> Result<f64> {
    if s.is_diverged() {
        return Err(Error::Precondition("elementary Hamiltonian needs a finite state".into()));
    }
    sys.check_regular(s)?;
    Ok(sys.grad_p(s)?.dot(&sys.grad_q(s)?))
}

/// `δ = H_{p_i} H_{p_k} p̄_β ∂²Q^β/∂q^k∂q^i` at an original-chart state, with
/// `p̄` the induced momentum.
pub fn delta_hpq(sys: &dyn Hamiltonian, pt: &dyn PointTransform, s: &PhaseState) -> Result<f64> {
    if pt.dim() != s.dof() {
        return Err(Error::Dimension { expected: pt.dim(), got: s.dof() });
    }
    if !pt.in_domain(&s.q) {
        return Err(Error::Singular(format!("{} is not defined at q = {:?}", pt.name(), s.q.as_slice())));
    }
    sys.check_regular(s)?;
    if pt.is_affine() {
        return Ok(0.0);
    }
    let hess = pt.hessian(&s.q).ok_or_else(|| Error::Capability(format!("{} has no Hessian", pt.name())))??;
    let pbar = canonical_forward(pt, s)?.p;
    let hp = sys.grad_p(s)?;
    Ok(hess.iter().zip(pbar.iter()).map(|(hb, pb)| pb * hp.dot(&(hb * &hp))).sum())
}

/// Both sides of `H̄_p̄·H̄_q̄ − H_p·H_q = δ` at an original-chart state:
/// `(left side, δ)`.
pub fn delta_identity(sys: &SystemRef, pt: &TransformRef, s: &PhaseState) -> Result<(f64, f64)> {
    let tsys = transform_hamiltonian(sys.clone(), pt.clone())?;
    let sbar = tsys.from_original(s)?;
    let lhs = elementary_hpq(&tsys, &sbar)? - elementary_hpq(sys.as_ref(), s)?;
    Ok((lhs, delta_hpq(sys.as_ref(), pt.as_ref(), s)?))
}

/// `∂δ/∂q^i` for a cyclic original coordinate `q^i`, by central differences.
/// Zero means the conjugate momentum is kept to at least `O(h²)` by symplectic
/// Euler in the transformed chart; nonzero means it is not.
pub fn first_integral_condition(
    sys: &dyn Hamiltonian,
    pt: &dyn PointTransform,
    s: &PhaseState,
    cyclic_index: usize,
) -> Result<f64> {
    if cyclic_index >= s.dof() {
        return Err(Error::Argument(format!("cyclic index {cyclic_index} out of range for {} degrees of freedom", s.dof())));
    }
    let hq = sys.grad_q(s)?[cyclic_index];
    if hq.abs() > CYCLIC_TOL {
        return Err(Error::Precondition(format!(
            "coordinate {cyclic_index} is not cyclic: |dH/dq| = {:e}",
            hq.abs()
        )));
    }
    let x = s.q[cyclic_index];
    let step = f64::EPSILON.cbrt() * x.abs().max(1.0);
    let at = |v: f64| {
        let mut t = s.clone();
        t.q[cyclic_index] = v;
        delta_hpq(sys, pt, &t)
    };
    let (xp, xm) = (x + step, x - step);
    Ok((at(xp)? - at(xm)?) / (xp - xm))
}

/// [`first_integral_condition`] as a report carrying its declared tolerance.
pub fn first_integral_report(
    sys: &dyn Hamiltonian,
    pt: &dyn PointTransform,
    s: &PhaseState,
    cyclic_index: usize,
) -> Result<BeaReport> {
    let value = first_integral_condition(sys, pt, s, cyclic_index)?;
    let delta = delta_hpq(sys, pt, s)?;
    Ok(BeaReport {
        point: BeaPoint::Phase(s.clone()),
        value: DVector::from_element(1, value),
        quantity: BeaQuantity::FirstIntegralCondition,
        h: None,
        tol: Some(CONDITION_TOL * delta.abs().max(1.0)),
    })
}

/// `(∂δ/∂x, ∂δ/∂y)` for the unit-mass free particle simulated in polar
/// coordinates, in closed form at the Cartesian state `(x, y, p_x, p_y)`.
pub fn free_mass_polar_condition(x: f64, y: f64, px: f64, py: f64) -> (f64, f64) {
    let l = py * x - px * y;
    let r6 = (x * x + y * y).powi(3);
    let dx = l * px * px * (y.powi(3) - 3.0 * x * x * y) / r6
        + l * (px * py * x * (x * x - 7.0 * y * y) + 2.0 * py * py * y * (x - y) * (x + y)) / r6;
    let dy = -l * (2.0 * px * px * x * (y * y - x * x)) / r6
        - l * (px * py * y * (y * y - 7.0 * x * x) + py * py * x * (x * x - 3.0 * y * y)) / r6;
    (dx, dy)
}

/// `F(z_j) − F(z_0)` along a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftSeries {
    pub label: String,
    pub drift: Vec<f64>,
    pub max_abs: f64,
}

pub fn invariant_drift(traj: &Trajectory, fi: &FirstIntegral) -> Result<DriftSeries> {
    let s0 = traj.states.first().ok_or_else(|| Error::Argument("empty trajectory".into()))?;
    let f0 = fi.eval(s0);
    let drift: Vec<f64> = traj.states.iter().map(|s| fi.eval(s) - f0).collect();
    let max_abs = drift.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    Ok(DriftSeries { label: fi.label.clone(), drift, max_abs })
}

/// Single-step drifts at `h, h/2, h/4` and the fitted order.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftOrder {
    pub h: [f64; 3],
    pub drift: [f64; 3],
    /// `None` when a drift vanishes (nothing to fit).
    pub order: Option<f64>,
}

/// Per-step drift order of `fi` under `method` from `s0`.
pub fn drift_order(method: Method, sys: &dyn Hamiltonian, s0: &PhaseState, fi: &FirstIntegral, h: f64) -> Result<DriftOrder> {
    let hs = [h, h / 2.0, h / 4.0];
    let f0 = fi.eval(s0);
    let mut drift = [0.0; 3];
    for (d, &hk) in drift.iter_mut().zip(&hs) {
        let s1 = step_once(method, sys, s0, &StepperConfig::new(hk)?)?;
        *d = (fi.eval(&s1) - f0).abs();
    }
    let order = if drift.iter().all(|d| *d > 0.0) { loglog_slope(&hs, &drift) } else { None };
    Ok(DriftOrder { h: hs, drift, order })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{cooling, free_mass_cartesian, free_mass_polar, gompertz, harmonic_oscillator, ArtificialPolar};
    use crate::system::FnField;
    use crate::transforms::{AffineTransform, CartesianToPolar, PolarConvention, PolarToCartesian};
    use approx::assert_abs_diff_eq;
    use std::sync::Arc;

    #[test]
    fn dvf1_examples() {
        let c = cooling(1.0, 1.0).unwrap();
        let y = DVector::from_element(1, 1.0);
        assert_abs_diff_eq!(dvf1_explicit_euler(c.field.as_ref(), &y).unwrap()[0], -0.5, epsilon = 1e-15);
        let k = FnField::scalar(|_| 3.0);
        assert_eq!(dvf1_explicit_euler(&k, &y).unwrap()[0], 0.0);
        let g = gompertz(2.0, 0.5, 3.0).unwrap();
        let f3 = 3.0 * (2.0 - 0.5 * 3f64.ln());
        let df3 = 2.0 - 0.5 * 3f64.ln() - 0.5;
        let v = dvf1_explicit_euler(g.field.as_ref(), &DVector::from_element(1, 3.0)).unwrap()[0];
        assert_abs_diff_eq!(v, -0.5 * df3 * f3, epsilon = 1e-12);
    }

    #[test]
    fn elementary_examples() {
        let s = PhaseState::from_slices(&[1.0], &[1.0]).unwrap();
        assert_eq!(elementary_hpq(&harmonic_oscillator(), &s).unwrap(), 1.0);
        let fm = free_mass_cartesian(1.0).unwrap();
        assert_eq!(elementary_hpq(&fm, &PhaseState::from_slices(&[0.3, 2.0], &[1.0, -4.0]).unwrap()).unwrap(), 0.0);
        let ap = PhaseState::from_slices(&[1.0, 0.0], &[1.0, 1.0]).unwrap();
        assert_abs_diff_eq!(elementary_hpq(&ArtificialPolar, &ap).unwrap(), -2.0, epsilon = 1e-15);
    }

    #[test]
    fn free_mass_delta_matches_identity_and_closed_form() {
        let sys: SystemRef = Arc::new(free_mass_cartesian(1.0).unwrap());
        let pt: TransformRef = Arc::new(CartesianToPolar::new(PolarConvention::FromXAxis));
        let s = PhaseState::from_slices(&[1.0, 1.0], &[1.0, 0.0]).unwrap();
        let (lhs, delta) = delta_identity(&sys, &pt, &s).unwrap();
        assert_abs_diff_eq!(lhs, delta, epsilon = 1e-9);
        let dx = first_integral_condition(sys.as_ref(), pt.as_ref(), &s, 0).unwrap();
        let dy = first_integral_condition(sys.as_ref(), pt.as_ref(), &s, 1).unwrap();
        let (cx, cy) = free_mass_polar_condition(1.0, 1.0, 1.0, 0.0);
        assert_abs_diff_eq!(cx, 0.25, epsilon = 1e-15);
        assert!((dx - cx).abs() <= 1e-6 * cx.abs(), "{dx} vs {cx}");
        assert!((dy - cy).abs() <= 1e-8, "{dy} vs {cy}");
        let s2 = PhaseState::from_slices(&[0.7, -1.2], &[0.4, 0.9]).unwrap();
        let (cx, cy) = free_mass_polar_condition(0.7, -1.2, 0.4, 0.9);
        for (i, c) in [(0, cx), (1, cy)] {
            let v = first_integral_condition(sys.as_ref(), pt.as_ref(), &s2, i).unwrap();
            assert!(c.abs() > 1e-8 && (v - c).abs() <= 1e-6 * c.abs(), "{i}: {v} vs {c}");
        }
    }

    #[test]
    fn polar_to_cartesian_keeps_angular_momentum() {
        let sys = free_mass_polar(1.0).unwrap();
        let pt = PolarToCartesian::new(PolarConvention::FromXAxis);
        let s = PhaseState::from_slices(&[1.3, 0.4], &[0.2, -0.7]).unwrap();
        let r = first_integral_report(&sys, &pt, &s, 1).unwrap();
        assert!(r.holds().unwrap(), "{}", r.scalar());
        assert!(matches!(first_integral_condition(&sys, &pt, &s, 0), Err(Error::Precondition(_))));
    }

    #[test]
    fn affine_delta_vanishes() {
        let sys = harmonic_oscillator();
        let a = AffineTransform::new(nalgebra::DMatrix::from_element(1, 1, 2.0), DVector::from_element(1, 0.5)).unwrap();
        assert_eq!(delta_hpq(&sys, &a, &PhaseState::from_slices(&[0.3], &[0.8]).unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn delta_is_singular_at_origin() {
        let sys = free_mass_cartesian(1.0).unwrap();
        let pt = CartesianToPolar::new(PolarConvention::FromXAxis);
        let r = delta_hpq(&sys, &pt, &PhaseState::from_slices(&[0.0, 0.0], &[1.0, 0.0]).unwrap());
        assert!(matches!(r, Err(Error::Singular(_))));
    }

    #[test]
    fn drift_of_cartesian_angular_momentum_is_zero() {
        let sys = free_mass_cartesian(1.0).unwrap();
        let l = sys.first_integrals().into_iter().find(|f| f.label == "L").unwrap();
        let s0 = PhaseState::from_slices(&[1.0, 1.0], &[1.0, 0.0]).unwrap();
        let tr = crate::integrators::solve(Method::SymplecticEuler, &sys, &s0, 0.01, 1000).unwrap();
        assert!(invariant_drift(&tr, &l).unwrap().max_abs <= 1e-12);
        let zero = FirstIntegral::new("zero", |_| 0.0);
        assert_eq!(invariant_drift(&tr, &zero).unwrap().max_abs, 0.0);
    }

    #[test]
    fn polar_linear_momentum_drifts_at_second_order() {
        let sys = free_mass_polar(1.0).unwrap();
        let px = sys.first_integrals().into_iter().find(|f| f.label == "p_x").unwrap();
        let s0 = canonical_forward(
            &CartesianToPolar::new(PolarConvention::FromXAxis),
            &PhaseState::from_slices(&[1.0, 1.0], &[1.0, 0.0]).unwrap(),
        )
        .unwrap();
        let o = drift_order(Method::SymplecticEuler, &sys, &s0, &px, 0.01).unwrap();
        assert!((o.order.unwrap() - 2.0).abs() < 0.1, "{o:?}");
    }
}
