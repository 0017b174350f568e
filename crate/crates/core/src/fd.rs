//! Central finite differences and analytic-gradient validation.
//!
//! These are the derivative oracle for the rest of the crate: models ship
//! analytic derivatives, and tests compare them against the routines here.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::seeded;
use crate::state::PhaseState;
use crate::system::Hamiltonian;

/// Pass threshold of [`validate_system`].
pub const VALIDATION_TOL: f64 = 1e-5;

/// Step for component `x`: `cbrt(eps) * max(1, |x|)`.
pub fn fd_step(x: f64) -> f64 {
    f64::EPSILON.cbrt() * x.abs().max(1.0)
}

/// Central-difference gradient of a scalar function.
pub fn fd_gradient<F>(f: F, x: &DVector<f64>) -> Result<DVector<f64>>
where
    F: Fn(&DVector<f64>) -> f64,
{
    let mut g = DVector::zeros(x.len());
    let mut xp = x.clone();
    for i in 0..x.len() {
        let d = fd_step(x[i]);
        xp[i] = x[i] + d;
        let fp = f(&xp);
        xp[i] = x[i] - d;
        let fm = f(&xp);
        xp[i] = x[i];
        // the actual spacing after rounding of x ± d
        let span = (x[i] + d) - (x[i] - d);
        let gi = (fp - fm) / span;
        if !gi.is_finite() {
            return Err(Error::DerivativeEvaluation { index: i });
        }
        g[i] = gi;
    }
    Ok(g)
}

/// Derivative of a scalar function of one variable.
pub fn fd_derivative<F>(f: F, x: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let g = fd_gradient(|v| f(v[0]), &DVector::from_element(1, x))?;
    Ok(g[0])
}

/// Jacobian of a vector function; row `r` is the gradient of output `r`.
pub fn fd_jacobian<F>(f: F, x: &DVector<f64>) -> Result<DMatrix<f64>>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    let n = x.len();
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(n);
    let mut xp = x.clone();
    for i in 0..n {
        let d = fd_step(x[i]);
        xp[i] = x[i] + d;
        let fp = f(&xp).map_err(|_| Error::DerivativeEvaluation { index: i })?;
        xp[i] = x[i] - d;
        let fm = f(&xp).map_err(|_| Error::DerivativeEvaluation { index: i })?;
        xp[i] = x[i];
        let span = (x[i] + d) - (x[i] - d);
        let col = (fp - fm) / span;
        if col.iter().any(|v| !v.is_finite()) {
            return Err(Error::DerivativeEvaluation { index: i });
        }
        cols.push(col);
    }
    let m = cols.first().map_or(0, |c| c.len());
    Ok(DMatrix::from_fn(m, n, |r, c| cols[c][r]))
}

/// Gradient of `H` with respect to `z = (q, p)` by central differences.
pub fn fd_phase_gradient(sys: &dyn Hamiltonian, s: &PhaseState) -> Result<DVector<f64>> {
    fd_gradient(
        |z| match PhaseState::from_z(z.as_slice()) {
            Ok(st) => sys.energy(&st).unwrap_or(f64::NAN),
            Err(_) => f64::NAN,
        },
        &s.z(),
    )
}

/// Outcome of [`validate_system`].
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub system: String,
    pub n_points: usize,
    pub max_deviation: f64,
    pub worst_state: Option<PhaseState>,
    pub tolerance: f64,
    pub passed: bool,
}

/// Compares analytic `(H_q, H_p)` against central differences of `H` at
/// `n_points` seeded states drawn from the model's sampling box (the unit box
/// centred at the origin for every chart except polar ones).
///
/// Deviation at a state is `‖analytic − fd‖∞ / max(‖fd‖∞, 1e-12)`; the
/// report passes when the maximum over states is at most [`VALIDATION_TOL`].
pub fn validate_system(sys: &dyn Hamiltonian, n_points: usize, seed: u64) -> Result<ValidationReport> {
    if n_points == 0 {
        return Err(Error::Argument("n_points must be at least 1".into()));
    }
    const RETRIES: usize = 100;
    let bounds = sys.sampling_box();
    let mut rng = seeded(seed, 0);
    let mut max_dev = 0.0_f64;
    let mut worst = None;
    for _ in 0..n_points {
        let mut sample = None;
        for _ in 0..RETRIES {
            let z: Vec<f64> = bounds.iter().map(|&(lo, hi)| rng.random_range(lo..hi)).collect();
            let s = PhaseState::from_z(&z)?;
            if sys.check_regular(&s).is_err() {
                continue;
            }
            let analytic = match (sys.grad_q(&s), sys.grad_p(&s)) {
                (Ok(gq), Ok(gp)) => gq.iter().chain(gp.iter()).copied().collect::<Vec<_>>(),
                _ => continue,
            };
            match fd_phase_gradient(sys, &s) {
                Ok(fd) => {
                    sample = Some((s, DVector::from_vec(analytic), fd));
                    break;
                }
                Err(_) => continue,
            }
        }
        let (s, analytic, fd) = sample.ok_or(Error::Sampling { retries: RETRIES })?;
        let dev = (&analytic - &fd).amax() / fd.amax().max(1e-12);
        if dev > max_dev || worst.is_none() {
            max_dev = max_dev.max(dev);
            worst = Some(s);
        }
    }
    Ok(ValidationReport {
        system: sys.name(),
        n_points,
        max_deviation: max_dev,
        worst_state: worst,
        tolerance: VALIDATION_TOL,
        passed: max_dev <= VALIDATION_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn square() {
        let g = fd_gradient(|x| x[0] * x[0], &DVector::from_vec(vec![3.0])).unwrap();
        assert_abs_diff_eq!(g[0], 6.0, epsilon = 1e-8);
    }

    #[test]
    fn bilinear() {
        let g = fd_gradient(|x| x[0] * x[1], &DVector::from_vec(vec![2.0, 5.0])).unwrap();
        assert_abs_diff_eq!(g[0], 5.0, epsilon = 1e-8);
        assert_abs_diff_eq!(g[1], 2.0, epsilon = 1e-8);
    }

    #[test]
    fn non_finite_reports_index() {
        let err = fd_gradient(|x| if x[1] > 1.0 { f64::NAN } else { x[0] }, &DVector::from_vec(vec![0.0, 1.0]))
            .unwrap_err();
        assert_eq!(err, Error::DerivativeEvaluation { index: 1 });
    }

    #[test]
    fn jacobian_of_linear_map() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, -1.0, 0.5, 4.0]);
        let a2 = a.clone();
        let j = fd_jacobian(move |x| Ok(&a2 * x), &DVector::from_vec(vec![0.3, -2.0, 7.0])).unwrap();
        assert!((j - a).amax() < 1e-9);
    }

    #[test]
    fn zero_points_rejected() {
        let sys = crate::models::harmonic_oscillator();
        assert!(validate_system(&sys, 0, 1).is_err());
    }
}
