//! Hamiltonian and ODE abstractions.
//!
//! Models implement [`Hamiltonian`] (canonical systems) or [`VectorField`]
//! (general first-order ODEs). Everything here is immutable after
//! construction and `Send + Sync`, so systems can be shared across threads
//! behind an `Arc`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::state::PhaseState;
use crate::transforms::PointTransform;

/// An autonomous Hamiltonian `H(q, p)` with analytic first derivatives.
pub trait Hamiltonian: Send + Sync {
    fn name(&self) -> String;

    fn dof(&self) -> usize;

    fn energy(&self, s: &PhaseState) -> Result<f64>;

    /// `∂H/∂q`.
    fn grad_q(&self, s: &PhaseState) -> Result<DVector<f64>>;

    /// `∂H/∂p`.
    fn grad_p(&self, s: &PhaseState) -> Result<DVector<f64>>;

    /// When false, symplectic Euler resolves its implicit momentum update
    /// with a single evaluation.
    fn grad_q_depends_on_p(&self) -> bool {
        true
    }

    /// When false, the adjoint symplectic Euler resolves its implicit
    /// position update with a single evaluation.
    fn grad_p_depends_on_q(&self) -> bool {
        true
    }

    /// Fails with [`Error::Singular`] on the model's singular locus.
    fn check_regular(&self, _s: &PhaseState) -> Result<()> {
        Ok(())
    }

    fn first_integrals(&self) -> Vec<FirstIntegral> {
        Vec::new()
    }

    fn as_separable(&self) -> Option<&SeparableHamiltonian> {
        None
    }

    /// Closed-form flow, when the model has one.
    fn exact_flow(&self, _s0: &PhaseState, _t: f64) -> Option<PhaseState> {
        None
    }

    /// Box `(lo, hi)` per phase-space component (q first, then p) for seeded
    /// sampling: the unit box centred at the origin unless a chart is only
    /// meaningful elsewhere (polar radii).
    fn sampling_box(&self) -> Vec<(f64, f64)> {
        vec![(-0.5, 0.5); 2 * self.dof()]
    }
}

pub type SystemRef = Arc<dyn Hamiltonian>;

/// Potential energy `U(q)` of a separable system.
pub trait Potential: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, q: &DVector<f64>) -> Result<f64>;

    fn gradient(&self, q: &DVector<f64>) -> Result<DVector<f64>>;

    /// `U_qq`, when available analytically.
    fn hessian(&self, _q: &DVector<f64>) -> Option<Result<DMatrix<f64>>> {
        None
    }

    fn check_regular(&self, _q: &DVector<f64>) -> Result<()> {
        Ok(())
    }
}

type ScalarFn = dyn Fn(&DVector<f64>) -> f64 + Send + Sync;
type VectorFn = dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync;
type MatrixFn = dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync;

/// Potential assembled from closures.
#[derive(Clone)]
pub struct FnPotential {
    dim: usize,
    value: Arc<ScalarFn>,
    gradient: Arc<VectorFn>,
    hessian: Option<Arc<MatrixFn>>,
}

impl FnPotential {
    pub fn new<V, G>(dim: usize, value: V, gradient: G) -> Self
    where
        V: Fn(&DVector<f64>) -> f64 + Send + Sync + 'static,
        G: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    {
        Self { dim, value: Arc::new(value), gradient: Arc::new(gradient), hessian: None }
    }

    pub fn with_hessian<Hs>(mut self, hessian: Hs) -> Self
    where
        Hs: Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    {
        self.hessian = Some(Arc::new(hessian));
        self
    }

    /// `U ≡ c`.
    pub fn constant(dim: usize, c: f64) -> Self {
        Self::new(dim, move |_| c, move |_| DVector::zeros(dim)).with_hessian(move |_| DMatrix::zeros(dim, dim))
    }
}

impl Potential for FnPotential {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, q: &DVector<f64>) -> Result<f64> {
        Ok((self.value)(q))
    }
    fn gradient(&self, q: &DVector<f64>) -> Result<DVector<f64>> {
        Ok((self.gradient)(q))
    }
    fn hessian(&self, q: &DVector<f64>) -> Option<Result<DMatrix<f64>>> {
        self.hessian.as_ref().map(|h| Ok(h(q)))
    }
}

type FlowFn = dyn Fn(&PhaseState, f64) -> PhaseState + Send + Sync;

/// `H(q, p) = ½ pᵀ M⁻¹ p + U(q)`.
#[derive(Clone)]
pub struct SeparableHamiltonian {
    name: String,
    m_inv: DMatrix<f64>,
    potential: Arc<dyn Potential>,
    integrals: Vec<FirstIntegral>,
    flow: Option<Arc<FlowFn>>,
    sampling_box: Option<Vec<(f64, f64)>>,
}

impl SeparableHamiltonian {
    pub fn new(name: impl Into<String>, m_inv: DMatrix<f64>, potential: Arc<dyn Potential>) -> Result<Self> {
        let d = potential.dim();
        if m_inv.nrows() != d || m_inv.ncols() != d {
            return Err(Error::Dimension { expected: d, got: m_inv.nrows() });
        }
        let scale = m_inv.amax().max(f64::MIN_POSITIVE);
        if (&m_inv - m_inv.transpose()).amax() > 1e-12 * scale {
            return Err(Error::Parameter("inverse mass matrix is not symmetric".into()));
        }
        if m_inv.clone().cholesky().is_none() {
            return Err(Error::Parameter("inverse mass matrix is not positive definite".into()));
        }
        Ok(Self { name: name.into(), m_inv, potential, integrals: Vec::new(), flow: None, sampling_box: None })
    }

    pub fn with_first_integral(mut self, fi: FirstIntegral) -> Self {
        self.integrals.push(fi);
        self
    }

    pub fn with_exact_flow<F>(mut self, flow: F) -> Self
    where
        F: Fn(&PhaseState, f64) -> PhaseState + Send + Sync + 'static,
    {
        self.flow = Some(Arc::new(flow));
        self
    }

    pub fn with_sampling_box(mut self, b: Vec<(f64, f64)>) -> Self {
        self.sampling_box = Some(b);
        self
    }

    /// Scalar mass `m` in every direction.
    pub fn with_mass(name: impl Into<String>, mass: f64, potential: Arc<dyn Potential>) -> Result<Self> {
        if !(mass > 0.0) {
            return Err(Error::Parameter(format!("mass must be positive, got {mass}")));
        }
        let d = potential.dim();
        Self::new(name, DMatrix::identity(d, d) / mass, potential)
    }

    pub fn m_inv(&self) -> &DMatrix<f64> {
        &self.m_inv
    }

    pub fn potential(&self) -> &dyn Potential {
        self.potential.as_ref()
    }

    pub fn potential_arc(&self) -> Arc<dyn Potential> {
        self.potential.clone()
    }

    pub fn kinetic(&self, p: &DVector<f64>) -> f64 {
        0.5 * p.dot(&(&self.m_inv * p))
    }
}

impl fmt::Debug for SeparableHamiltonian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SeparableHamiltonian").field("name", &self.name).field("m_inv", &self.m_inv).finish()
    }
}

impl Hamiltonian for SeparableHamiltonian {
    fn name(&self) -> String {
        self.name.clone()
    }
    fn dof(&self) -> usize {
        self.potential.dim()
    }
    fn energy(&self, s: &PhaseState) -> Result<f64> {
        Ok(self.kinetic(&s.p) + self.potential.value(&s.q)?)
    }
    fn grad_q(&self, s: &PhaseState) -> Result<DVector<f64>> {
        self.potential.gradient(&s.q)
    }
    fn grad_p(&self, s: &PhaseState) -> Result<DVector<f64>> {
        Ok(&self.m_inv * &s.p)
    }
    fn grad_q_depends_on_p(&self) -> bool {
        false
    }
    fn grad_p_depends_on_q(&self) -> bool {
        false
    }
    fn check_regular(&self, s: &PhaseState) -> Result<()> {
        self.potential.check_regular(&s.q)
    }
    fn as_separable(&self) -> Option<&SeparableHamiltonian> {
        Some(self)
    }
    fn first_integrals(&self) -> Vec<FirstIntegral> {
        self.integrals.clone()
    }
    fn exact_flow(&self, s0: &PhaseState, t: f64) -> Option<PhaseState> {
        self.flow.as_ref().map(|f| f(s0, t))
    }
    fn sampling_box(&self) -> Vec<(f64, f64)> {
        self.sampling_box.clone().unwrap_or_else(|| vec![(-0.5, 0.5); 2 * self.dof()])
    }
}

/// Where a first integral comes from: the momentum conjugate to a cyclic
/// coordinate of `system`, which `transform` maps into the chart the
/// integral is evaluated in.
#[derive(Clone)]
pub struct CyclicOrigin {
    pub system: SystemRef,
    pub transform: Arc<dyn PointTransform>,
    pub cyclic_index: usize,
}

/// A conserved quantity of the exact flow.
#[derive(Clone)]
pub struct FirstIntegral {
    pub label: String,
    eval: Arc<dyn Fn(&PhaseState) -> f64 + Send + Sync>,
    pub origin: Option<CyclicOrigin>,
}

impl FirstIntegral {
    pub fn new<F>(label: impl Into<String>, f: F) -> Self
    where
        F: Fn(&PhaseState) -> f64 + Send + Sync + 'static,
    {
        Self { label: label.into(), eval: Arc::new(f), origin: None }
    }

    pub fn with_origin(mut self, origin: CyclicOrigin) -> Self {
        self.origin = Some(origin);
        self
    }

    pub fn eval(&self, s: &PhaseState) -> f64 {
        (self.eval)(s)
    }
}

impl fmt::Debug for FirstIntegral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FirstIntegral").field("label", &self.label).finish()
    }
}

/// Autonomous vector field `y' = f(y)`.
pub trait VectorField: Send + Sync {
    fn dim(&self) -> usize;

    fn eval(&self, y: &DVector<f64>) -> Result<DVector<f64>>;

    /// Analytic `Df(y)`, if provided. Callers fall back to finite differences.
    fn jacobian(&self, _y: &DVector<f64>) -> Option<Result<DMatrix<f64>>> {
        None
    }

    fn exact_solution(&self, _y0: &DVector<f64>, _t: f64) -> Option<DVector<f64>> {
        None
    }
}

pub type FieldRef = Arc<dyn VectorField>;

/// `Df(y)`, analytic when available, central differences otherwise.
pub fn field_jacobian(f: &dyn VectorField, y: &DVector<f64>) -> Result<DMatrix<f64>> {
    match f.jacobian(y) {
        Some(j) => j,
        None => crate::fd::fd_jacobian(|x| f.eval(x), y),
    }
}

/// Vector field built from a closure.
#[derive(Clone)]
pub struct FnField {
    dim: usize,
    f: Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>,
}

impl FnField {
    pub fn new<F>(dim: usize, f: F) -> Self
    where
        F: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    {
        Self { dim, f: Arc::new(f) }
    }

    pub fn scalar<F>(f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::new(1, move |y| DVector::from_element(1, f(y[0])))
    }
}

impl VectorField for FnField {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        Ok((self.f)(y))
    }
}

/// Canonical equations `ż = (H_p, −H_q)` of a Hamiltonian as a vector field
/// on `z = (q, p)`.
#[derive(Clone)]
pub struct CanonicalField {
    sys: SystemRef,
}

impl CanonicalField {
    pub fn new(sys: SystemRef) -> Self {
        Self { sys }
    }
}

impl VectorField for CanonicalField {
    fn dim(&self) -> usize {
        2 * self.sys.dof()
    }

    fn eval(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        let s = PhaseState::from_z(z.as_slice())?;
        self.sys.check_regular(&s)?;
        let hp = self.sys.grad_p(&s)?;
        let hq = self.sys.grad_q(&s)?;
        let d = s.dof();
        Ok(DVector::from_fn(2 * d, |i, _| if i < d { hp[i] } else { -hq[i - d] }))
    }

    fn exact_solution(&self, z0: &DVector<f64>, t: f64) -> Option<DVector<f64>> {
        let s0 = PhaseState::from_z(z0.as_slice()).ok()?;
        self.sys.exact_flow(&s0, t).map(|s| s.z())
    }
}
