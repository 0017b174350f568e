//! Point transformations `q̄ = Q(q)` of generalised coordinates.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};

/// An invertible change of generalised coordinates.
///
/// Index conventions: `jacobian(q)[(α, i)] = ∂Q^α/∂q^i`,
/// `inverse_jacobian(q̄)[(i, α)] = ∂(Q⁻¹)^i/∂q̄^α`, and
/// `hessian(q)[β][(k, i)] = ∂²Q^β/∂q^k∂q^i`.
pub trait PointTransform: Send + Sync {
    fn name(&self) -> String;

    fn dim(&self) -> usize;

    fn forward(&self, q: &DVector<f64>) -> Result<DVector<f64>>;

    fn inverse(&self, qbar: &DVector<f64>) -> Result<DVector<f64>>;

    fn jacobian(&self, q: &DVector<f64>) -> Result<DMatrix<f64>>;

    fn inverse_jacobian(&self, qbar: &DVector<f64>) -> Result<DMatrix<f64>>;

    /// Second derivatives, one `d × d` matrix per output component; `None`
    /// when the transform does not provide them.
    fn hessian(&self, q: &DVector<f64>) -> Option<Result<Vec<DMatrix<f64>>>>;

    fn is_affine(&self) -> bool {
        false
    }

    fn in_domain(&self, q: &DVector<f64>) -> bool;

    fn in_image(&self, qbar: &DVector<f64>) -> bool {
        self.inverse(qbar).is_ok()
    }
}

pub type TransformRef = Arc<dyn PointTransform>;

pub(crate) fn check_dim(expected: usize, v: &DVector<f64>) -> Result<()> {
    if v.len() != expected {
        return Err(Error::Dimension { expected, got: v.len() });
    }
    Ok(())
}

/// Reciprocal 1-norm condition number of a square matrix via its LU
/// factorisation; zero when singular.
pub fn rcond(a: &DMatrix<f64>) -> f64 {
    let norm1 = |m: &DMatrix<f64>| m.column_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let na = norm1(a);
    if na == 0.0 || !na.is_finite() {
        return 0.0;
    }
    match a.clone().lu().try_inverse() {
        Some(inv) if inv.iter().all(|v| v.is_finite()) => 1.0 / (na * norm1(&inv)),
        _ => 0.0,
    }
}

/// Smallest reciprocal condition number accepted for transform Jacobians.
pub const RCOND_MIN: f64 = 1e-14;

/// `Q(q) = A q + b` with invertible `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineTransform {
    a: DMatrix<f64>,
    a_inv: DMatrix<f64>,
    b: DVector<f64>,
}

impl AffineTransform {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Dimension { expected: a.nrows(), got: a.ncols() });
        }
        check_dim(a.nrows(), &b)?;
        let rc = rcond(&a);
        if rc < RCOND_MIN {
            return Err(Error::SingularTransform { rcond: rc });
        }
        let a_inv = a.clone().lu().try_inverse().ok_or(Error::SingularTransform { rcond: rc })?;
        Ok(Self { a, a_inv, b })
    }

    pub fn identity(d: usize) -> Self {
        Self { a: DMatrix::identity(d, d), a_inv: DMatrix::identity(d, d), b: DVector::zeros(d) }
    }

    /// `A = I + E` with entries of `E` uniform in `[-0.4, 0.4]`, `b` uniform in
    /// `[-1, 1]`; redrawn until well conditioned.
    pub fn random<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Self {
        loop {
            let a = DMatrix::from_fn(d, d, |i, j| if i == j { 1.0 } else { 0.0 } + rng.random_range(-0.4..0.4));
            let b = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
            if rcond(&a) > 1e-3 {
                if let Ok(t) = Self::new(a, b) {
                    return t;
                }
            }
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn offset(&self) -> &DVector<f64> {
        &self.b
    }
}

impl PointTransform for AffineTransform {
    fn name(&self) -> String {
        "affine".into()
    }
    fn dim(&self) -> usize {
        self.b.len()
    }
    fn forward(&self, q: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.dim(), q)?;
        Ok(&self.a * q + &self.b)
    }
    fn inverse(&self, qbar: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.dim(), qbar)?;
        Ok(&self.a_inv * (qbar - &self.b))
    }
    fn jacobian(&self, _q: &DVector<f64>) -> Result<DMatrix<f64>> {
        Ok(self.a.clone())
    }
    fn inverse_jacobian(&self, _qbar: &DVector<f64>) -> Result<DMatrix<f64>> {
        Ok(self.a_inv.clone())
    }
    fn hessian(&self, _q: &DVector<f64>) -> Option<Result<Vec<DMatrix<f64>>>> {
        let d = self.dim();
        Some(Ok(vec![DMatrix::zeros(d, d); d]))
    }
    fn is_affine(&self) -> bool {
        true
    }
    fn in_domain(&self, q: &DVector<f64>) -> bool {
        q.len() == self.dim()
    }
    fn in_image(&self, qbar: &DVector<f64>) -> bool {
        qbar.len() == self.dim()
    }
}

/// Radius below which polar charts are treated as singular.
pub const R_MIN: f64 = 1e-8;

/// Axis from which the polar angle is measured.
///
/// `FromXAxis`: `x = r cos θ`, `y = r sin θ`, `θ = atan2(y, x)`.
/// `FromYAxis`: `x = r sin θ`, `y = r cos θ`, `θ = atan2(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PolarConvention {
    #[default]
    FromXAxis,
    FromYAxis,
}

impl PolarConvention {
    /// Cartesian indices playing the roles of the standard `(x, y)` pair.
    fn axes(self) -> (usize, usize) {
        match self {
            PolarConvention::FromXAxis => (0, 1),
            PolarConvention::FromYAxis => (1, 0),
        }
    }

    pub fn to_polar(self, x: f64, y: f64) -> (f64, f64) {
        let c = [x, y];
        let (ia, ib) = self.axes();
        (c[0].hypot(c[1]), c[ib].atan2(c[ia]))
    }

    pub fn to_cartesian(self, r: f64, theta: f64) -> (f64, f64) {
        let (ia, ib) = self.axes();
        let mut c = [0.0; 2];
        c[ia] = r * theta.cos();
        c[ib] = r * theta.sin();
        (c[0], c[1])
    }
}

fn polar_domain_check(r: f64) -> Result<()> {
    if !(r > R_MIN) {
        return Err(Error::Singular(format!("polar radius {r:e} is at or below r_min = {R_MIN:e}")));
    }
    Ok(())
}

// ∂(r, θ)/∂(x, y) at a Cartesian point.
fn polar_jacobian(conv: PolarConvention, q: &DVector<f64>) -> Result<DMatrix<f64>> {
    let (ia, ib) = conv.axes();
    let (a, b) = (q[ia], q[ib]);
    let r2 = a * a + b * b;
    let r = r2.sqrt();
    polar_domain_check(r)?;
    let mut j = DMatrix::zeros(2, 2);
    j[(0, ia)] = a / r;
    j[(0, ib)] = b / r;
    j[(1, ia)] = -b / r2;
    j[(1, ib)] = a / r2;
    Ok(j)
}

// ∂(x, y)/∂(r, θ) at a polar point.
fn cartesian_jacobian(conv: PolarConvention, rt: &DVector<f64>) -> Result<DMatrix<f64>> {
    let (r, th) = (rt[0], rt[1]);
    polar_domain_check(r)?;
    let (ia, ib) = conv.axes();
    let (s, c) = th.sin_cos();
    let mut j = DMatrix::zeros(2, 2);
    j[(ia, 0)] = c;
    j[(ia, 1)] = -r * s;
    j[(ib, 0)] = s;
    j[(ib, 1)] = r * c;
    Ok(j)
}

/// `(x, y) ↦ (r, θ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CartesianToPolar {
    pub convention: PolarConvention,
}

/// `(r, θ) ↦ (x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PolarToCartesian {
    pub convention: PolarConvention,
}

impl CartesianToPolar {
    pub fn new(convention: PolarConvention) -> Self {
        Self { convention }
    }
}

impl PolarToCartesian {
    pub fn new(convention: PolarConvention) -> Self {
        Self { convention }
    }
}

impl PointTransform for CartesianToPolar {
    fn name(&self) -> String {
        "cartesian-to-polar".into()
    }
    fn dim(&self) -> usize {
        2
    }
    fn forward(&self, q: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(2, q)?;
        let (r, th) = self.convention.to_polar(q[0], q[1]);
        polar_domain_check(r)?;
        Ok(DVector::from_vec(vec![r, th]))
    }
    fn inverse(&self, qbar: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(2, qbar)?;
        polar_domain_check(qbar[0])?;
        let (x, y) = self.convention.to_cartesian(qbar[0], qbar[1]);
        Ok(DVector::from_vec(vec![x, y]))
    }
    fn jacobian(&self, q: &DVector<f64>) -> Result<DMatrix<f64>> {
        check_dim(2, q)?;
        polar_jacobian(self.convention, q)
    }
    fn inverse_jacobian(&self, qbar: &DVector<f64>) -> Result<DMatrix<f64>> {
        check_dim(2, qbar)?;
        cartesian_jacobian(self.convention, qbar)
    }
    fn hessian(&self, q: &DVector<f64>) -> Option<Result<Vec<DMatrix<f64>>>> {
        Some((|| {
            check_dim(2, q)?;
            let (ia, ib) = self.convention.axes();
            let (a, b) = (q[ia], q[ib]);
            let r2 = a * a + b * b;
            let r = r2.sqrt();
            polar_domain_check(r)?;
            let r3 = r2 * r;
            let r4 = r2 * r2;
            let mut hr = DMatrix::zeros(2, 2);
            hr[(ia, ia)] = b * b / r3;
            hr[(ib, ib)] = a * a / r3;
            hr[(ia, ib)] = -a * b / r3;
            hr[(ib, ia)] = -a * b / r3;
            let mut ht = DMatrix::zeros(2, 2);
            ht[(ia, ia)] = 2.0 * a * b / r4;
            ht[(ib, ib)] = -2.0 * a * b / r4;
            ht[(ia, ib)] = (b * b - a * a) / r4;
            ht[(ib, ia)] = (b * b - a * a) / r4;
            Ok(vec![hr, ht])
        })())
    }
    fn in_domain(&self, q: &DVector<f64>) -> bool {
        q.len() == 2 && q[0].hypot(q[1]) > R_MIN
    }
    fn in_image(&self, qbar: &DVector<f64>) -> bool {
        qbar.len() == 2 && qbar[0] > R_MIN && qbar[1].is_finite()
    }
}

impl PointTransform for PolarToCartesian {
    fn name(&self) -> String {
        "polar-to-cartesian".into()
    }
    fn dim(&self) -> usize {
        2
    }
    fn forward(&self, q: &DVector<f64>) -> Result<DVector<f64>> {
        CartesianToPolar::new(self.convention).inverse(q)
    }
    fn inverse(&self, qbar: &DVector<f64>) -> Result<DVector<f64>> {
        CartesianToPolar::new(self.convention).forward(qbar)
    }
    fn jacobian(&self, q: &DVector<f64>) -> Result<DMatrix<f64>> {
        check_dim(2, q)?;
        cartesian_jacobian(self.convention, q)
    }
    fn inverse_jacobian(&self, qbar: &DVector<f64>) -> Result<DMatrix<f64>> {
        check_dim(2, qbar)?;
        polar_jacobian(self.convention, qbar)
    }
    fn hessian(&self, q: &DVector<f64>) -> Option<Result<Vec<DMatrix<f64>>>> {
        Some((|| {
            check_dim(2, q)?;
            let (r, th) = (q[0], q[1]);
            polar_domain_check(r)?;
            let (s, c) = th.sin_cos();
            let (ia, ib) = self.convention.axes();
            // a = r cos θ, b = r sin θ
            let ha = DMatrix::from_row_slice(2, 2, &[0.0, -s, -s, -r * c]);
            let hb = DMatrix::from_row_slice(2, 2, &[0.0, c, c, -r * s]);
            let mut out = vec![DMatrix::zeros(2, 2); 2];
            out[ia] = ha;
            out[ib] = hb;
            Ok(out)
        })())
    }
    fn in_domain(&self, q: &DVector<f64>) -> bool {
        q.len() == 2 && q[0] > R_MIN && q[1].is_finite()
    }
    fn in_image(&self, qbar: &DVector<f64>) -> bool {
        qbar.len() == 2 && qbar[0].hypot(qbar[1]) > R_MIN
    }
}

/// `second ∘ first`: maps `q` to `second(first(q))`.
#[derive(Clone)]
pub struct ComposedTransform {
    first: TransformRef,
    second: TransformRef,
}

impl ComposedTransform {
    pub fn new(first: TransformRef, second: TransformRef) -> Result<Self> {
        if first.dim() != second.dim() {
            return Err(Error::Dimension { expected: first.dim(), got: second.dim() });
        }
        Ok(Self { first, second })
    }
}

impl PointTransform for ComposedTransform {
    fn name(&self) -> String {
        format!("{}∘{}", self.second.name(), self.first.name())
    }
    fn dim(&self) -> usize {
        self.first.dim()
    }
    fn forward(&self, q: &DVector<f64>) -> Result<DVector<f64>> {
        self.second.forward(&self.first.forward(q)?)
    }
    fn inverse(&self, qbar: &DVector<f64>) -> Result<DVector<f64>> {
        self.first.inverse(&self.second.inverse(qbar)?)
    }
    fn jacobian(&self, q: &DVector<f64>) -> Result<DMatrix<f64>> {
        let u = self.first.forward(q)?;
        Ok(self.second.jacobian(&u)? * self.first.jacobian(q)?)
    }
    fn inverse_jacobian(&self, qbar: &DVector<f64>) -> Result<DMatrix<f64>> {
        let u = self.second.inverse(qbar)?;
        Ok(self.first.inverse_jacobian(&u)? * self.second.inverse_jacobian(qbar)?)
    }
    fn hessian(&self, q: &DVector<f64>) -> Option<Result<Vec<DMatrix<f64>>>> {
        let h1 = self.first.hessian(q)?;
        let u = match self.first.forward(q) {
            Ok(u) => u,
            Err(e) => return Some(Err(e)),
        };
        let h2 = self.second.hessian(&u)?;
        Some((|| {
            let (h1, h2) = (h1?, h2?);
            let j1 = self.first.jacobian(q)?;
            let j2 = self.second.jacobian(&u)?;
            let d = self.dim();
            let out = (0..d)
                .map(|beta| {
                    let mut m = j1.transpose() * &h2[beta] * &j1;
                    for (gamma, hg) in h1.iter().enumerate() {
                        m += hg * j2[(beta, gamma)];
                    }
                    m
                })
                .collect();
            Ok(out)
        })())
    }
    fn is_affine(&self) -> bool {
        self.first.is_affine() && self.second.is_affine()
    }
    fn in_domain(&self, q: &DVector<f64>) -> bool {
        self.first.in_domain(q) && self.first.forward(q).map(|u| self.second.in_domain(&u)).unwrap_or(false)
    }
}
