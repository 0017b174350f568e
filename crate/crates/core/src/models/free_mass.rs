//! Free point mass in the plane, in Cartesian and polar coordinates, and a
//! polar Hamiltonian whose first-order distortion is chart independent.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::state::PhaseState;
use crate::system::{CyclicOrigin, FirstIntegral, FnPotential, Hamiltonian, SeparableHamiltonian, SystemRef};
use crate::transforms::{AffineTransform, CartesianToPolar, PolarConvention, PolarToCartesian, R_MIN};

/// Polar convention of the free-mass charts: `x = r cos θ`, `y = r sin θ`.
pub const FREE_MASS_POLAR: PolarConvention = PolarConvention::FromXAxis;

fn check_mass(m: f64) -> Result<()> {
    if !(m > 0.0) || !m.is_finite() {
        return Err(Error::Parameter(format!("free mass: m must be positive, got {m}")));
    }
    Ok(())
}

fn polar_radius(s: &PhaseState) -> Result<f64> {
    let r = s.q[0];
    if !(r > R_MIN) {
        return Err(Error::Singular(format!("polar radius {r:e} at or below r_min = {R_MIN:e}")));
    }
    Ok(r)
}

fn cartesian_bare(m: f64) -> Result<SeparableHamiltonian> {
    check_mass(m)?;
    Ok(SeparableHamiltonian::with_mass("free-mass-cartesian", m, Arc::new(FnPotential::constant(2, 0.0)))?
        .with_exact_flow(move |s, t| PhaseState { q: &s.q + &s.p * (t / m), p: s.p.clone() }))
}

/// `H = (p_x² + p_y²)/(2m)` with integrals `p_x`, `p_y` and
/// `L = x p_y − y p_x`.
pub fn free_mass_cartesian(m: f64) -> Result<SeparableHamiltonian> {
    let bare_cart: SystemRef = Arc::new(cartesian_bare(m)?);
    let bare_polar: SystemRef = Arc::new(FreeMassPolar::bare(m)?);
    let identity = Arc::new(AffineTransform::identity(2));
    let px = FirstIntegral::new("p_x", |s| s.p[0]).with_origin(CyclicOrigin {
        system: bare_cart.clone(),
        transform: identity.clone(),
        cyclic_index: 0,
    });
    let py = FirstIntegral::new("p_y", |s| s.p[1]).with_origin(CyclicOrigin {
        system: bare_cart,
        transform: identity,
        cyclic_index: 1,
    });
    let l = FirstIntegral::new("L", |s| s.q[0] * s.p[1] - s.q[1] * s.p[0]).with_origin(CyclicOrigin {
        system: bare_polar,
        transform: Arc::new(PolarToCartesian::new(FREE_MASS_POLAR)),
        cyclic_index: 1,
    });
    Ok(cartesian_bare(m)?.with_first_integral(px).with_first_integral(py).with_first_integral(l))
}

/// `H = (p_r² + p_θ²/r²)/(2m)`; `θ` is cyclic.
#[derive(Clone)]
pub struct FreeMassPolar {
    m: f64,
    integrals: Vec<FirstIntegral>,
}

impl FreeMassPolar {
    /// Without declared first integrals.
    pub fn bare(m: f64) -> Result<Self> {
        check_mass(m)?;
        Ok(Self { m, integrals: Vec::new() })
    }

    pub fn mass(&self) -> f64 {
        self.m
    }
}

/// Polar free mass with integrals `p_θ`, `p_x` and `p_y`, where
/// `p_x = p_r cos θ − (p_θ/r) sin θ` and `p_y = p_r sin θ + (p_θ/r) cos θ`.
pub fn free_mass_polar(m: f64) -> Result<FreeMassPolar> {
    let bare_cart: SystemRef = Arc::new(cartesian_bare(m)?);
    let bare_polar: SystemRef = Arc::new(FreeMassPolar::bare(m)?);
    let to_polar = Arc::new(CartesianToPolar::new(FREE_MASS_POLAR));
    let ptheta = FirstIntegral::new("p_theta", |s| s.p[1]).with_origin(CyclicOrigin {
        system: bare_polar,
        transform: Arc::new(AffineTransform::identity(2)),
        cyclic_index: 1,
    });
    let px = FirstIntegral::new("p_x", |s| {
        let (r, th, pr, pt) = (s.q[0], s.q[1], s.p[0], s.p[1]);
        pr * th.cos() - pt / r * th.sin()
    })
    .with_origin(CyclicOrigin { system: bare_cart.clone(), transform: to_polar.clone(), cyclic_index: 0 });
    let py = FirstIntegral::new("p_y", |s| {
        let (r, th, pr, pt) = (s.q[0], s.q[1], s.p[0], s.p[1]);
        pr * th.sin() + pt / r * th.cos()
    })
    .with_origin(CyclicOrigin { system: bare_cart, transform: to_polar, cyclic_index: 1 });
    let mut sys = FreeMassPolar::bare(m)?;
    sys.integrals = vec![ptheta, px, py];
    Ok(sys)
}

impl Hamiltonian for FreeMassPolar {
    fn name(&self) -> String {
        "free-mass-polar".into()
    }
    fn dof(&self) -> usize {
        2
    }
    fn energy(&self, s: &PhaseState) -> Result<f64> {
        let r = polar_radius(s)?;
        Ok((s.p[0] * s.p[0] + s.p[1] * s.p[1] / (r * r)) / (2.0 * self.m))
    }
    fn grad_q(&self, s: &PhaseState) -> Result<DVector<f64>> {
        let r = polar_radius(s)?;
        Ok(DVector::from_vec(vec![-s.p[1] * s.p[1] / (self.m * r * r * r), 0.0]))
    }
    fn grad_p(&self, s: &PhaseState) -> Result<DVector<f64>> {
        let r = polar_radius(s)?;
        Ok(DVector::from_vec(vec![s.p[0] / self.m, s.p[1] / (self.m * r * r)]))
    }
    fn check_regular(&self, s: &PhaseState) -> Result<()> {
        polar_radius(s).map(|_| ())
    }
    fn first_integrals(&self) -> Vec<FirstIntegral> {
        self.integrals.clone()
    }
    fn exact_flow(&self, s0: &PhaseState, t: f64) -> Option<PhaseState> {
        let (r, th, pr, pt) = (s0.q[0], s0.q[1], s0.p[0], s0.p[1]);
        let (sn, cs) = th.sin_cos();
        let (x0, y0) = (r * cs, r * sn);
        let (px, py) = (pr * cs - pt / r * sn, pr * sn + pt / r * cs);
        let (x, y) = (x0 + t * px / self.m, y0 + t * py / self.m);
        let r1 = x.hypot(y);
        if !(r1 > R_MIN) {
            return None;
        }
        // continuous angle: a straight line sweeps less than π
        let dth = (x0 * y - y0 * x).atan2(x0 * x + y0 * y);
        let th1 = th + dth;
        let (s1, c1) = th1.sin_cos();
        Some(PhaseState::from_slices(&[r1, th1], &[px * c1 + py * s1, r1 * (py * c1 - px * s1)]).ok()?)
    }
    fn sampling_box(&self) -> Vec<(f64, f64)> {
        vec![(0.5, 1.5), (-PI, PI), (-0.5, 0.5), (-0.5, 0.5)]
    }
}

/// `H = ½ (p_r² + 2 p_θ²/r²)` on the polar chart.
#[derive(Debug, Clone, Copy, Default)]
pub struct ArtificialPolar;

impl Hamiltonian for ArtificialPolar {
    fn name(&self) -> String {
        "artificial-polar".into()
    }
    fn dof(&self) -> usize {
        2
    }
    fn energy(&self, s: &PhaseState) -> Result<f64> {
        let r = polar_radius(s)?;
        Ok(0.5 * (s.p[0] * s.p[0] + 2.0 * s.p[1] * s.p[1] / (r * r)))
    }
    fn grad_q(&self, s: &PhaseState) -> Result<DVector<f64>> {
        let r = polar_radius(s)?;
        Ok(DVector::from_vec(vec![-2.0 * s.p[1] * s.p[1] / (r * r * r), 0.0]))
    }
    fn grad_p(&self, s: &PhaseState) -> Result<DVector<f64>> {
        let r = polar_radius(s)?;
        Ok(DVector::from_vec(vec![s.p[0], 2.0 * s.p[1] / (r * r)]))
    }
    fn check_regular(&self, s: &PhaseState) -> Result<()> {
        polar_radius(s).map(|_| ())
    }
    fn sampling_box(&self) -> Vec<(f64, f64)> {
        vec![(0.5, 1.5), (-PI, PI), (-0.5, 0.5), (-0.5, 0.5)]
    }
}
