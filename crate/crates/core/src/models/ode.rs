//! Scalar ODE models: Newton cooling and Gompertz growth.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::system::VectorField;
use crate::transforms::{FnVariableTransform, VariableTransformRef};

type Scalar1 = dyn Fn(f64) -> f64 + Send + Sync;
type Scalar2 = dyn Fn(f64, f64) -> f64 + Send + Sync;

/// `ẏ = f(y)` in one dimension with analytic `f'` and closed-form solution.
#[derive(Clone)]
pub struct ScalarOde {
    name: String,
    f: Arc<Scalar1>,
    df: Arc<Scalar1>,
    solution: Arc<Scalar2>,
    domain: Arc<dyn Fn(f64) -> bool + Send + Sync>,
}

impl ScalarOde {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn rhs(&self, y: f64) -> f64 {
        (self.f)(y)
    }

    pub fn rhs_derivative(&self, y: f64) -> f64 {
        (self.df)(y)
    }

    /// `y(t)` from `y(0) = y0`.
    pub fn solution(&self, y0: f64, t: f64) -> f64 {
        (self.solution)(y0, t)
    }
}

impl VectorField for ScalarOde {
    fn dim(&self) -> usize {
        1
    }

    fn eval(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        if !(self.domain)(y[0]) {
            return Err(Error::Domain(format!("{}: y = {} is outside the model domain", self.name, y[0])));
        }
        Ok(DVector::from_element(1, (self.f)(y[0])))
    }

    fn jacobian(&self, y: &DVector<f64>) -> Option<Result<DMatrix<f64>>> {
        Some(Ok(DMatrix::from_element(1, 1, (self.df)(y[0]))))
    }

    fn exact_solution(&self, y0: &DVector<f64>, t: f64) -> Option<DVector<f64>> {
        Some(DVector::from_element(1, (self.solution)(y0[0], t)))
    }
}

/// A scalar ODE with its initial value and a transform under which the
/// explicit Euler method is exact.
#[derive(Clone)]
pub struct OdeModel {
    pub field: Arc<ScalarOde>,
    pub y0: f64,
    pub transform: VariableTransformRef,
    /// Constant value of the transformed right-hand side.
    pub transformed_rate: f64,
}

/// `ẏ = −α y`, compensated by `Ψ = ln y` which turns it into `ẏ̄ = −α`.
pub fn cooling(alpha: f64, y0: f64) -> Result<OdeModel> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Parameter(format!("cooling: alpha must be positive, got {alpha}")));
    }
    if !(y0 > 0.0) || !y0.is_finite() {
        return Err(Error::Parameter(format!("cooling: y0 must be positive, got {y0}")));
    }
    let field = ScalarOde {
        name: "cooling".into(),
        f: Arc::new(move |y| -alpha * y),
        df: Arc::new(move |_| -alpha),
        solution: Arc::new(move |y0, t| y0 * (-alpha * t).exp()),
        domain: Arc::new(|y| y.is_finite()),
    };
    let psi = FnVariableTransform::scalar(f64::ln, f64::exp, |y| 1.0 / y, |y| y > 0.0);
    Ok(OdeModel { field: Arc::new(field), y0, transform: Arc::new(psi), transformed_rate: -alpha })
}

/// `ẏ = y (a − b ln y)`, compensated by
/// `Ψ(y) = −(1/b) ln((a − b ln y)/(a − b ln y0))`, which turns it into `ẏ̄ = 1`.
///
/// `Ψ` is invertible on the side of the equilibrium `e^{a/b}` where `y0`
/// starts, which contains the whole solution.
pub fn gompertz(a: f64, b: f64, y0: f64) -> Result<OdeModel> {
    if b == 0.0 || !b.is_finite() || !a.is_finite() {
        return Err(Error::Parameter(format!("gompertz: need finite a and nonzero finite b, got a = {a}, b = {b}")));
    }
    if !(y0 > 0.0) || !y0.is_finite() {
        return Err(Error::Parameter(format!("gompertz: y0 must be positive, got {y0}")));
    }
    let g0 = a - b * y0.ln();
    if g0 == 0.0 {
        return Err(Error::Parameter("gompertz: y0 is the equilibrium, the transform degenerates".into()));
    }
    let field = ScalarOde {
        name: "gompertz".into(),
        f: Arc::new(move |y| y * (a - b * y.ln())),
        df: Arc::new(move |y| a - b * y.ln() - b),
        solution: Arc::new(move |y0, t| (a / b + (y0.ln() - a / b) * (-b * t).exp()).exp()),
        domain: Arc::new(|y| y > 0.0),
    };
    let side = g0.signum();
    let psi = FnVariableTransform::scalar(
        move |y| -((a - b * y.ln()) / g0).ln() / b,
        move |v| ((a - g0 * (-b * v).exp()) / b).exp(),
        move |y| 1.0 / (y * (a - b * y.ln())),
        move |y| y > 0.0 && (a - b * y.ln()) * side > 0.0,
    );
    Ok(OdeModel { field: Arc::new(field), y0, transform: Arc::new(psi), transformed_rate: 1.0 })
}
