//! Canonical phase-space maps induced by point transformations, and
//! Hamiltonians expressed in transformed coordinates.

use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::state::PhaseState;
use crate::system::{CyclicOrigin, FirstIntegral, Hamiltonian, SystemRef};
use crate::transforms::point::{check_dim, ComposedTransform, PointTransform, TransformRef};

/// `p̄_α = p_i ∂(Q⁻¹)^i/∂q̄^α` evaluated at `q̄ = Q(q)`.
pub fn induced_momentum_forward(pt: &dyn PointTransform, q: &DVector<f64>, p: &DVector<f64>) -> Result<DVector<f64>> {
    check_dim(pt.dim(), p)?;
    let qbar = pt.forward(q)?;
    Ok(pt.inverse_jacobian(&qbar)?.transpose() * p)
}

/// `p_i = p̄_α ∂Q^α/∂q^i` evaluated at `q = Q⁻¹(q̄)`.
pub fn induced_momentum_inverse(pt: &dyn PointTransform, qbar: &DVector<f64>, pbar: &DVector<f64>) -> Result<DVector<f64>> {
    check_dim(pt.dim(), pbar)?;
    let q = pt.inverse(qbar)?;
    Ok(pt.jacobian(&q)?.transpose() * pbar)
}

/// `(q, p) ↦ (Q(q), p̄)`.
pub fn canonical_forward(pt: &dyn PointTransform, s: &PhaseState) -> Result<PhaseState> {
    let qbar = pt.forward(&s.q)?;
    let pbar = pt.inverse_jacobian(&qbar)?.transpose() * &s.p;
    PhaseState::new(qbar, pbar)
}

/// `(q̄, p̄) ↦ (Q⁻¹(q̄), p)`.
pub fn canonical_inverse(pt: &dyn PointTransform, s: &PhaseState) -> Result<PhaseState> {
    let q = pt.inverse(&s.q)?;
    let p = pt.jacobian(&q)?.transpose() * &s.p;
    PhaseState::new(q, p)
}

/// `H̄(q̄, p̄) = H(Q⁻¹(q̄), p(q̄, p̄))` with analytic chain-rule gradients.
#[derive(Clone)]
pub struct TransformedHamiltonian {
    base: SystemRef,
    pt: TransformRef,
}

pub fn transform_hamiltonian(sys: SystemRef, pt: TransformRef) -> Result<TransformedHamiltonian> {
    if sys.dof() != pt.dim() {
        return Err(Error::Dimension { expected: sys.dof(), got: pt.dim() });
    }
    Ok(TransformedHamiltonian { base: sys, pt })
}

impl TransformedHamiltonian {
    pub fn base(&self) -> &SystemRef {
        &self.base
    }

    pub fn transform(&self) -> &TransformRef {
        &self.pt
    }

    /// Original-chart state of a transformed-chart state.
    pub fn to_original(&self, s: &PhaseState) -> Result<PhaseState> {
        canonical_inverse(self.pt.as_ref(), s)
    }

    /// Transformed-chart state of an original-chart state.
    pub fn from_original(&self, s: &PhaseState) -> Result<PhaseState> {
        canonical_forward(self.pt.as_ref(), s)
    }
}

impl Hamiltonian for TransformedHamiltonian {
    fn name(&self) -> String {
        format!("{} [{}]", self.base.name(), self.pt.name())
    }

    fn dof(&self) -> usize {
        self.pt.dim()
    }

    fn energy(&self, s: &PhaseState) -> Result<f64> {
        self.base.energy(&self.to_original(s)?)
    }

    fn grad_q(&self, s: &PhaseState) -> Result<DVector<f64>> {
        let q = self.pt.inverse(&s.q)?;
        let j = self.pt.jacobian(&q)?;
        let orig = PhaseState::new(q.clone(), j.transpose() * &s.p)?;
        let hp = self.base.grad_p(&orig)?;
        let hq = self.base.grad_q(&orig)?;
        let jinv = self.pt.inverse_jacobian(&s.q)?;
        let hess = self
            .pt
            .hessian(&q)
            .ok_or_else(|| Error::Capability(format!("transform {} has no second derivatives", self.pt.name())))??;
        let d = self.dof();
        // Σ_β p̄_β Hess^β[i][l] contracted with H_p[i]
        let mut w = DVector::zeros(d);
        for (beta, hb) in hess.iter().enumerate() {
            w += s.p[beta] * (hb.transpose() * &hp);
        }
        Ok(jinv.transpose() * (w + hq))
    }

    fn grad_p(&self, s: &PhaseState) -> Result<DVector<f64>> {
        let q = self.pt.inverse(&s.q)?;
        let j = self.pt.jacobian(&q)?;
        let orig = PhaseState::new(q, j.transpose() * &s.p)?;
        Ok(j * self.base.grad_p(&orig)?)
    }

    fn grad_q_depends_on_p(&self) -> bool {
        !self.pt.is_affine() || self.base.grad_q_depends_on_p()
    }

    fn grad_p_depends_on_q(&self) -> bool {
        !self.pt.is_affine() || self.base.grad_p_depends_on_q()
    }

    fn check_regular(&self, s: &PhaseState) -> Result<()> {
        let orig = self.to_original(s).map_err(|e| match e {
            Error::Domain(m) => Error::Singular(m),
            other => other,
        })?;
        self.base.check_regular(&orig)
    }

    fn first_integrals(&self) -> Vec<FirstIntegral> {
        self.base
            .first_integrals()
            .into_iter()
            .map(|fi| {
                let pt = self.pt.clone();
                let inner = fi.clone();
                let mut out = FirstIntegral::new(fi.label.clone(), move |s| match canonical_inverse(pt.as_ref(), s) {
                    Ok(o) => inner.eval(&o),
                    Err(_) => f64::NAN,
                });
                if let Some(origin) = fi.origin {
                    if let Ok(c) = ComposedTransform::new(origin.transform.clone(), self.pt.clone()) {
                        out = out.with_origin(CyclicOrigin {
                            system: origin.system,
                            transform: Arc::new(c),
                            cyclic_index: origin.cyclic_index,
                        });
                    }
                }
                out
            })
            .collect()
    }

    fn exact_flow(&self, s0: &PhaseState, t: f64) -> Option<PhaseState> {
        let o = self.to_original(s0).ok()?;
        let st = self.base.exact_flow(&o, t)?;
        self.from_original(&st).ok()
    }
}
