//! Variable transformations `ȳ = Ψ(y)` of general first-order ODEs.

use std::cell::Cell;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fd::fd_jacobian;
use crate::numeric::{find_root, integrate};
use crate::system::{field_jacobian, FieldRef, VectorField};
use crate::transforms::point::{rcond, RCOND_MIN};

/// An invertible change of dependent variables.
pub trait VariableTransform: Send + Sync {
    fn dim(&self) -> usize;

    fn forward(&self, y: &DVector<f64>) -> Result<DVector<f64>>;

    fn inverse(&self, ybar: &DVector<f64>) -> Result<DVector<f64>>;

    /// `DΨ(y)`, row `m` holding `∂Ψ_m/∂y_j`.
    fn jacobian(&self, y: &DVector<f64>) -> Result<DMatrix<f64>>;

    /// `D²Ψ(y)(u, v)`, when available analytically.
    fn second_derivative(&self, _y: &DVector<f64>, _u: &DVector<f64>, _v: &DVector<f64>) -> Option<Result<DVector<f64>>> {
        None
    }

    fn in_domain(&self, y: &DVector<f64>) -> bool;
}

pub type VariableTransformRef = Arc<dyn VariableTransform>;

type VecMap = dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync;
type MatMap = dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync;
type Pred = dyn Fn(&DVector<f64>) -> bool + Send + Sync;

/// Variable transform from closures.
#[derive(Clone)]
pub struct FnVariableTransform {
    dim: usize,
    forward: Arc<VecMap>,
    inverse: Arc<VecMap>,
    jacobian: Arc<MatMap>,
    domain: Arc<Pred>,
}

impl FnVariableTransform {
    pub fn new<F, I, J>(dim: usize, forward: F, inverse: I, jacobian: J) -> Self
    where
        F: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
        I: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
        J: Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    {
        Self {
            dim,
            forward: Arc::new(forward),
            inverse: Arc::new(inverse),
            jacobian: Arc::new(jacobian),
            domain: Arc::new(|_| true),
        }
    }

    pub fn with_domain<P>(mut self, domain: P) -> Self
    where
        P: Fn(&DVector<f64>) -> bool + Send + Sync + 'static,
    {
        self.domain = Arc::new(domain);
        self
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(dim, |y| y.clone(), |y| y.clone(), move |_| DMatrix::identity(dim, dim))
    }

    /// Scalar transform from `Ψ`, `Ψ⁻¹`, `Ψ'` and a domain predicate.
    pub fn scalar<F, I, J, P>(forward: F, inverse: I, derivative: J, domain: P) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        I: Fn(f64) -> f64 + Send + Sync + 'static,
        J: Fn(f64) -> f64 + Send + Sync + 'static,
        P: Fn(f64) -> bool + Send + Sync + 'static,
    {
        Self::new(
            1,
            move |y| DVector::from_element(1, forward(y[0])),
            move |y| DVector::from_element(1, inverse(y[0])),
            move |y| DMatrix::from_element(1, 1, derivative(y[0])),
        )
        .with_domain(move |y| domain(y[0]))
    }
}

fn check_finite(v: DVector<f64>, what: &str) -> Result<DVector<f64>> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(v)
    } else {
        Err(Error::Domain(format!("{what} is not finite")))
    }
}

impl VariableTransform for FnVariableTransform {
    fn dim(&self) -> usize {
        self.dim
    }
    fn forward(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        if !(self.domain)(y) {
            return Err(Error::Domain(format!("y = {:?} is outside the transform domain", y.as_slice())));
        }
        check_finite((self.forward)(y), "Ψ(y)")
    }
    fn inverse(&self, ybar: &DVector<f64>) -> Result<DVector<f64>> {
        let y = check_finite((self.inverse)(ybar), "Ψ⁻¹(ȳ)")?;
        if !(self.domain)(&y) {
            return Err(Error::Domain(format!("Ψ⁻¹(ȳ) = {:?} is outside the transform domain", y.as_slice())));
        }
        Ok(y)
    }
    fn jacobian(&self, y: &DVector<f64>) -> Result<DMatrix<f64>> {
        Ok((self.jacobian)(y))
    }
    fn in_domain(&self, y: &DVector<f64>) -> bool {
        (self.domain)(y)
    }
}

/// Absolute tolerance of the quadrature defining [`QuadratureTransform`].
pub const QUADRATURE_TOL: f64 = 1e-12;

/// `Ψ(y) = ∫_{y0}^{y} C₁/f(u) du + C₂`, evaluated by adaptive quadrature and
/// inverted by bracketed root finding on `bracket`.
#[derive(Clone)]
pub struct QuadratureTransform {
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    y0: f64,
    c1: f64,
    c2: f64,
    bracket: (f64, f64),
}

/// Builds the one-dimensional transform whose explicit Euler discretisation
/// is exact for `ẏ = f(y)`.
///
/// `bracket` is the interval on which `Ψ` is used and inverted; `f` must keep
/// one sign on it. `C₁ = 0` is rejected since it collapses `Ψ` to a constant.
pub fn compensating_transform_1d<F>(f: F, y0: f64, c1: f64, c2: f64, bracket: (f64, f64)) -> Result<QuadratureTransform>
where
    F: Fn(f64) -> f64 + Send + Sync + 'static,
{
    if c1 == 0.0 || !c1.is_finite() {
        return Err(Error::Argument(format!("C1 must be finite and nonzero, got {c1}")));
    }
    let (lo, hi) = (bracket.0.min(bracket.1), bracket.0.max(bracket.1));
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Argument(format!("invalid bracket [{}, {}]", bracket.0, bracket.1)));
    }
    if !(lo..=hi).contains(&y0) {
        return Err(Error::Argument(format!("y0 = {y0} lies outside the bracket [{lo}, {hi}]")));
    }
    let f0 = f(y0);
    if f0 == 0.0 || !f0.is_finite() {
        return Err(Error::Pole { at: y0 });
    }
    Ok(QuadratureTransform { f: Arc::new(f), y0, c1, c2, bracket: (lo, hi) })
}

impl QuadratureTransform {
    pub fn value(&self, y: f64) -> Result<f64> {
        let (lo, hi) = self.bracket;
        if !(lo..=hi).contains(&y) {
            return Err(Error::Domain(format!("y = {y} is outside [{lo}, {hi}]")));
        }
        let s0 = (self.f)(self.y0).signum();
        // a sign change of f at any node means it vanishes in between
        let pole = Cell::new(None);
        let v = integrate(
            |u| {
                let fu = (self.f)(u);
                if (fu.signum() != s0 || fu == 0.0) && pole.get().is_none() {
                    pole.set(Some(u));
                }
                self.c1 / fu
            },
            self.y0,
            y,
            QUADRATURE_TOL,
        )?;
        if let Some(at) = pole.get() {
            return Err(Error::Pole { at });
        }
        Ok(v + self.c2)
    }

    pub fn derivative(&self, y: f64) -> f64 {
        self.c1 / (self.f)(y)
    }

    pub fn inverse_value(&self, ybar: f64) -> Result<f64> {
        let (lo, hi) = self.bracket;
        let g = |y: f64| self.value(y).map(|v| v - ybar).unwrap_or(f64::NAN);
        let (glo, ghi) = (g(lo), g(hi));
        if glo.is_finite() && ghi.is_finite() && glo.signum() == ghi.signum() && glo != 0.0 && ghi != 0.0 {
            return Err(Error::Domain(format!(
                "ȳ = {ybar} lies outside Ψ([{lo}, {hi}]) = [{}, {}]",
                (glo + ybar).min(ghi + ybar),
                (glo + ybar).max(ghi + ybar)
            )));
        }
        find_root(g, lo, hi, 0.0)
    }
}

impl VariableTransform for QuadratureTransform {
    fn dim(&self) -> usize {
        1
    }
    fn forward(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(DVector::from_element(1, self.value(y[0])?))
    }
    fn inverse(&self, ybar: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(DVector::from_element(1, self.inverse_value(ybar[0])?))
    }
    fn jacobian(&self, y: &DVector<f64>) -> Result<DMatrix<f64>> {
        Ok(DMatrix::from_element(1, 1, self.derivative(y[0])))
    }
    fn in_domain(&self, y: &DVector<f64>) -> bool {
        y.len() == 1 && (self.bracket.0..=self.bracket.1).contains(&y[0])
    }
}

/// `f̄(ȳ) = DΨ(y) f(y)` with `y = Ψ⁻¹(ȳ)`.
#[derive(Clone)]
pub struct TransformedField {
    f: FieldRef,
    psi: VariableTransformRef,
}

pub fn transform_ode(f: FieldRef, psi: VariableTransformRef) -> Result<TransformedField> {
    if f.dim() != psi.dim() {
        return Err(Error::Dimension { expected: f.dim(), got: psi.dim() });
    }
    Ok(TransformedField { f, psi })
}

impl TransformedField {
    pub fn original(&self) -> &FieldRef {
        &self.f
    }

    pub fn transform(&self) -> &VariableTransformRef {
        &self.psi
    }
}

impl VectorField for TransformedField {
    fn dim(&self) -> usize {
        self.f.dim()
    }

    fn eval(&self, ybar: &DVector<f64>) -> Result<DVector<f64>> {
        let y = self.psi.inverse(ybar)?;
        let d = self.psi.jacobian(&y)?;
        let rc = rcond(&d);
        if rc < RCOND_MIN {
            return Err(Error::SingularTransform { rcond: rc });
        }
        Ok(d * self.f.eval(&y)?)
    }

    fn exact_solution(&self, ybar0: &DVector<f64>, t: f64) -> Option<DVector<f64>> {
        let y0 = self.psi.inverse(ybar0).ok()?;
        let y = self.f.exact_solution(&y0, t)?;
        self.psi.forward(&y).ok()
    }
}

/// `Df·f + (DΨ)⁻¹ D²Ψ(f, f)` at `y`; zero where `Ψ` cancels the first-order
/// distortion of explicit Euler.
pub fn ndcomp_residual(f: &dyn VectorField, psi: &dyn VariableTransform, y: &DVector<f64>) -> Result<DVector<f64>> {
    let fy = f.eval(y)?;
    let df = field_jacobian(f, y)?;
    let d2 = match psi.second_derivative(y, &fy, &fy) {
        Some(v) => v?,
        None => fd_jacobian(|x| Ok(psi.jacobian(x)? * &fy), y)? * &fy,
    };
    let dpsi = psi.jacobian(y)?;
    let rc = rcond(&dpsi);
    if rc < RCOND_MIN {
        return Err(Error::SingularTransform { rcond: rc });
    }
    let corr = dpsi.lu().solve(&d2).ok_or(Error::SingularTransform { rcond: rc })?;
    Ok(df * fy + corr)
}
