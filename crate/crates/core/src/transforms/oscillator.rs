//! The order-compensating coordinate for symplectic Euler on the harmonic
//! oscillator: `Q(q) = (2/π)(q̂√(1−q̂²) + arcsin q̂)` with `q̂ = q/s`.
//!
//! `s = 1` is the exact form, defined on `|q| ≤ 1`. The regularised form
//! uses `s = 1 + k h²`, which widens the domain enough for the numerical
//! trajectory to stay inside it.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::numeric::find_root;
use crate::transforms::point::{check_dim, PointTransform};

/// Default regularisation constant.
pub const DEFAULT_K: f64 = 2.0;

fn q_exact(u: f64) -> f64 {
    2.0 / PI * (u * (1.0 - u * u).sqrt() + u.asin())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorTransform {
    scale: f64,
}

impl OscillatorTransform {
    pub fn exact() -> Self {
        Self { scale: 1.0 }
    }

    /// `q̂ = q / (1 + k h²)`.
    pub fn regularized(h: f64, k: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::Parameter(format!("step size must be positive, got {h}")));
        }
        if !(k >= 0.0) || !k.is_finite() {
            return Err(Error::Parameter(format!("regularisation k must be non-negative, got {k}")));
        }
        Ok(Self { scale: 1.0 + k * h * h })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    fn hat(&self, q: f64) -> Result<f64> {
        let u = q / self.scale;
        if !(u.abs() <= 1.0) {
            return Err(Error::Domain(format!(
                "|q̂| = {:.6} > 1 (q = {q}, scale {}); increase k or reduce h",
                u.abs(),
                self.scale
            )));
        }
        Ok(u)
    }

    pub fn value(&self, q: f64) -> Result<f64> {
        Ok(q_exact(self.hat(q)?))
    }

    pub fn derivative(&self, q: f64) -> Result<f64> {
        let u = self.hat(q)?;
        Ok(4.0 / PI * (1.0 - u * u).sqrt() / self.scale)
    }

    pub fn second_derivative(&self, q: f64) -> Result<f64> {
        let u = self.hat(q)?;
        let w = (1.0 - u * u).sqrt();
        if w == 0.0 {
            return Err(Error::Singular(format!("Q'' unbounded at q = {q}")));
        }
        Ok(-4.0 / PI * u / w / (self.scale * self.scale))
    }

    pub fn inverse_value(&self, qbar: f64) -> Result<f64> {
        if !(qbar.abs() <= 1.0) {
            return Err(Error::Domain(format!("|q̄| = {} exceeds the image bound 1", qbar.abs())));
        }
        let u = find_root(|u| q_exact(u) - qbar, -1.0, 1.0, 0.0)?;
        Ok(self.scale * u)
    }
}

impl PointTransform for OscillatorTransform {
    fn name(&self) -> String {
        if self.scale == 1.0 {
            "oscillator-exact".into()
        } else {
            format!("oscillator-regularized(s={})", self.scale)
        }
    }
    fn dim(&self) -> usize {
        1
    }
    fn forward(&self, q: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(1, q)?;
        Ok(DVector::from_element(1, self.value(q[0])?))
    }
    fn inverse(&self, qbar: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(1, qbar)?;
        Ok(DVector::from_element(1, self.inverse_value(qbar[0])?))
    }
    fn jacobian(&self, q: &DVector<f64>) -> Result<DMatrix<f64>> {
        check_dim(1, q)?;
        Ok(DMatrix::from_element(1, 1, self.derivative(q[0])?))
    }
    fn inverse_jacobian(&self, qbar: &DVector<f64>) -> Result<DMatrix<f64>> {
        let q = self.inverse(qbar)?;
        let d = self.derivative(q[0])?;
        if d == 0.0 {
            return Err(Error::SingularTransform { rcond: 0.0 });
        }
        Ok(DMatrix::from_element(1, 1, 1.0 / d))
    }
    fn hessian(&self, q: &DVector<f64>) -> Option<Result<Vec<DMatrix<f64>>>> {
        Some(check_dim(1, q).and_then(|_| Ok(vec![DMatrix::from_element(1, 1, self.second_derivative(q[0])?)])))
    }
    fn in_domain(&self, q: &DVector<f64>) -> bool {
        q.len() == 1 && (q[0] / self.scale).abs() < 1.0
    }
    fn in_image(&self, qbar: &DVector<f64>) -> bool {
        qbar.len() == 1 && qbar[0].abs() < 1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fd::fd_derivative;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exact_values() {
        let t = OscillatorTransform::exact();
        assert_eq!(t.value(0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(t.value(1.0).unwrap(), 1.0, epsilon = 1e-15);
        for q in [0.1, 0.37, 0.8, 0.99] {
            assert_eq!(t.value(-q).unwrap(), -t.value(q).unwrap());
        }
        assert!(matches!(t.value(1.01), Err(Error::Domain(_))));
    }

    #[test]
    fn derivatives_match_fd() {
        let t = OscillatorTransform::regularized(0.1, 2.0).unwrap();
        for q in [-0.9, -0.2, 0.0, 0.5, 0.95] {
            let d = fd_derivative(|x| t.value(x).unwrap(), q).unwrap();
            assert_abs_diff_eq!(t.derivative(q).unwrap(), d, epsilon = 1e-8);
            let d2 = fd_derivative(|x| t.derivative(x).unwrap(), q).unwrap();
            assert_abs_diff_eq!(t.second_derivative(q).unwrap(), d2, epsilon = 1e-7);
        }
    }

    #[test]
    fn inverse_round_trip() {
        for t in [OscillatorTransform::exact(), OscillatorTransform::regularized(0.3, 2.0).unwrap()] {
            for q in [-0.99, -0.5, 0.0, 1e-3, 0.7, 0.999] {
                let qb = t.value(q).unwrap();
                assert_abs_diff_eq!(t.inverse_value(qb).unwrap(), q, epsilon = 1e-12);
            }
        }
        assert!(OscillatorTransform::exact().inverse_value(1.5).is_err());
    }

    #[test]
    fn regularization_is_second_order_close() {
        // |Q_h(q) − Q(q)| / h² approaches a constant as h → 0
        let q = 0.5;
        let exact = OscillatorTransform::exact().value(q).unwrap();
        let ratios: Vec<f64> = [0.1, 0.05, 0.025, 0.0125]
            .iter()
            .map(|&h| (OscillatorTransform::regularized(h, DEFAULT_K).unwrap().value(q).unwrap() - exact).abs() / (h * h))
            .collect();
        let d: Vec<f64> = ratios.windows(2).map(|w| w[0] - w[1]).collect();
        for w in d.windows(2) {
            let shrink = w[0] / w[1];
            assert!((3.5..4.5).contains(&shrink), "{shrink}");
        }
        // limit: k q Q'(q)
        let limit = DEFAULT_K * q * OscillatorTransform::exact().derivative(q).unwrap();
        assert_abs_diff_eq!(ratios[3], limit, epsilon = 1e-3 * limit);
    }
}
