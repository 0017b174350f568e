//! Phase-space and ODE states, and fixed-step trajectories.

use nalgebra::DVector;

use crate::error::{Error, Result};

/// Sup-norm above which a state counts as diverged.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

/// Generalised coordinates and momenta of a system with `d` degrees of freedom.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState {
    pub q: DVector<f64>,
    pub p: DVector<f64>,
}

impl PhaseState {
    pub fn new(q: DVector<f64>, p: DVector<f64>) -> Result<Self> {
        if q.len() != p.len() {
            return Err(Error::Dimension { expected: q.len(), got: p.len() });
        }
        if q.is_empty() {
            return Err(Error::Argument("phase state needs at least one degree of freedom".into()));
        }
        Ok(Self { q, p })
    }

    pub fn from_slices(q: &[f64], p: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(q), DVector::from_column_slice(p))
    }

    /// Splits `z = (q, p)` of even length.
    pub fn from_z(z: &[f64]) -> Result<Self> {
        if z.is_empty() || z.len() % 2 != 0 {
            return Err(Error::Argument(format!("phase vector length {} is not a positive even number", z.len())));
        }
        let d = z.len() / 2;
        Self::from_slices(&z[..d], &z[d..])
    }

    pub fn dof(&self) -> usize {
        self.q.len()
    }

    /// Concatenation `(q, p)`.
    pub fn z(&self) -> DVector<f64> {
        let d = self.dof();
        DVector::from_fn(2 * d, |i, _| if i < d { self.q[i] } else { self.p[i - d] })
    }

    pub fn sup_norm(&self) -> f64 {
        self.q.iter().chain(self.p.iter()).fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_diverged(&self) -> bool {
        let finite = self.q.iter().chain(self.p.iter()).all(|v| v.is_finite());
        !finite || self.sup_norm() > DIVERGENCE_LIMIT
    }
}

/// State of a general first-order ODE `y' = f(y)` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeState {
    pub y: DVector<f64>,
    pub t: f64,
}

impl OdeState {
    pub fn new(y: DVector<f64>, t: f64) -> Self {
        Self { y, t }
    }

    pub fn scalar(y: f64, t: f64) -> Self {
        Self { y: DVector::from_element(1, y), t }
    }

    pub fn is_diverged(&self) -> bool {
        self.y.iter().any(|v| !v.is_finite() || v.abs() > DIVERGENCE_LIMIT)
    }
}

/// Fixed-step sequence of states.
///
/// `times[j] = t0 + j*h` is recomputed from the index, never accumulated.
/// When a step fails, `states` stops before the failing index and
/// `diverged_at` holds that index.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<S = PhaseState> {
    pub t0: f64,
    pub h: f64,
    pub method: String,
    pub states: Vec<S>,
    pub diverged_at: Option<usize>,
    /// Free-form notes, e.g. which derivative path a method used.
    pub notes: Vec<(String, String)>,
}

impl<S> Trajectory<S> {
    pub fn new(t0: f64, h: f64, method: impl Into<String>) -> Self {
        Self { t0, h, method: method.into(), states: Vec::new(), diverged_at: None, notes: Vec::new() }
    }

    pub fn time(&self, j: usize) -> f64 {
        self.t0 + j as f64 * self.h
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.states.len()).map(|j| self.time(j)).collect()
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> Option<&S> {
        self.states.last()
    }

    pub fn is_diverged(&self) -> bool {
        self.diverged_at.is_some()
    }

    pub fn note(&self, key: &str) -> Option<&str> {
        self.notes.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}
