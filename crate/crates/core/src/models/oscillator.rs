//! Harmonic oscillator `H = ½ p² + ½ q²` and its order-compensating chart.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::state::PhaseState;
use crate::system::{FnPotential, SeparableHamiltonian, SystemRef};
use crate::transforms::{transform_hamiltonian, OscillatorTransform, TransformedHamiltonian};

pub fn harmonic_oscillator() -> SeparableHamiltonian {
    let pot = FnPotential::new(1, |q| 0.5 * q[0] * q[0], |q| q.clone()).with_hessian(|_| DMatrix::identity(1, 1));
    SeparableHamiltonian::with_mass("harmonic-oscillator", 1.0, Arc::new(pot))
        .expect("unit mass is valid")
        .with_exact_flow(|s, t| {
            let (sn, cs) = t.sin_cos();
            let (q, p) = (s.q[0], s.p[0]);
            PhaseState { q: DVector::from_element(1, q * cs + p * sn), p: DVector::from_element(1, p * cs - q * sn) }
        })
}

/// Default initial condition `(q, p) = (1, 0)`.
pub fn oscillator_default_ic() -> PhaseState {
    PhaseState::from_slices(&[1.0], &[0.0]).expect("valid state")
}

/// The oscillator in the regularised compensating chart for step `h`.
pub fn harmonic_oscillator_compensated(h: f64, k: f64) -> Result<TransformedHamiltonian> {
    let base: SystemRef = Arc::new(harmonic_oscillator());
    transform_hamiltonian(base, Arc::new(OscillatorTransform::regularized(h, k)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::Hamiltonian;
    use approx::assert_abs_diff_eq;

    #[test]
    fn quarter_period() {
        let h = harmonic_oscillator();
        let s = h.exact_flow(&oscillator_default_ic(), std::f64::consts::FRAC_PI_2).unwrap();
        assert_abs_diff_eq!(s.q[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.p[0], -1.0, epsilon = 1e-15);
    }

    #[test]
    fn compensated_energy_is_invariant() {
        let hc = harmonic_oscillator_compensated(0.1, 2.0).unwrap();
        let s = PhaseState::from_slices(&[0.6], &[0.3]).unwrap();
        let sb = hc.from_original(&s).unwrap();
        assert_abs_diff_eq!(hc.energy(&sb).unwrap(), harmonic_oscillator().energy(&s).unwrap(), epsilon = 1e-14);
    }
}
