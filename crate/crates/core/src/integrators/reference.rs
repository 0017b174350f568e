//! High-accuracy reference solutions used as error oracles.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::state::{OdeState, PhaseState, Trajectory};
use crate::system::{Hamiltonian, VectorField};

/// Default relative halving tolerance.
pub const DEFAULT_REFERENCE_TOL: f64 = 1e-10;
const START_STEPS: usize = 1000;
const MAX_HALVINGS: usize = 12;
/// Number of intervals of analytic reference trajectories.
const ANALYTIC_STEPS: usize = 1000;

fn rk4_step<F>(f: &F, y: &DVector<f64>, h: f64) -> Result<DVector<f64>>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    let k1 = f(y)?;
    let k2 = f(&(y + &k1 * (0.5 * h)))?;
    let k3 = f(&(y + &k2 * (0.5 * h)))?;
    let k4 = f(&(y + &k3 * h))?;
    let next = y + (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0);
    if next.iter().any(|v| !v.is_finite()) {
        return Err(Error::Diverged);
    }
    Ok(next)
}

/// Classical Runge–Kutta over `n` equal steps to `t_max`, reporting each state.
pub fn rk4_run<F>(f: &F, y0: &DVector<f64>, t_max: f64, n: usize, visit: &mut dyn FnMut(usize, &DVector<f64>)) -> Result<DVector<f64>>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    let h = t_max / n as f64;
    let mut y = y0.clone();
    visit(0, &y);
    for j in 0..n {
        y = rk4_step(f, &y, h)?;
        visit(j + 1, &y);
    }
    Ok(y)
}

/// Where a reference value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceSource {
    Analytic,
    Rk4,
}

impl ReferenceSource {
    pub fn label(self) -> &'static str {
        match self {
            ReferenceSource::Analytic => "analytic",
            ReferenceSource::Rk4 => "rk4",
        }
    }
}

/// Reference value at `t_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceEndpoint {
    /// Endpoint of the accepted run.
    pub value: DVector<f64>,
    /// Richardson-extrapolated endpoint `fine + (fine − coarse)/15`; equal
    /// to `value` for analytic references.
    pub extrapolated: DVector<f64>,
    pub n_steps: usize,
    pub halvings: usize,
    pub source: ReferenceSource,
}

/// RK4 endpoint with automatic step halving: starting from `t_max/1000`,
/// halve until the endpoint changes by less than `tol` relative.
pub fn rk4_halving<F>(f: &F, y0: &DVector<f64>, t_max: f64, tol: f64) -> Result<ReferenceEndpoint>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    if !(t_max > 0.0) || !t_max.is_finite() {
        return Err(Error::Argument(format!("t_max must be positive, got {t_max}")));
    }
    if !(tol > 0.0) {
        return Err(Error::Argument(format!("reference tolerance must be positive, got {tol}")));
    }
    let mut n = START_STEPS;
    let mut coarse = rk4_run(f, y0, t_max, n, &mut |_, _| {})?;
    let mut change = f64::INFINITY;
    for halvings in 1..=MAX_HALVINGS {
        n *= 2;
        let fine = rk4_run(f, y0, t_max, n, &mut |_, _| {})?;
        let diff = &fine - &coarse;
        change = diff.amax() / fine.amax().max(f64::MIN_POSITIVE);
        if change < tol {
            let extrapolated = &fine + diff / 15.0;
            return Ok(ReferenceEndpoint { value: fine, extrapolated, n_steps: n, halvings, source: ReferenceSource::Rk4 });
        }
        coarse = fine;
    }
    Err(Error::OraclePrecision { halvings: MAX_HALVINGS, change, tol })
}

fn canonical_rhs(sys: &dyn Hamiltonian) -> impl Fn(&DVector<f64>) -> Result<DVector<f64>> + '_ {
    move |z: &DVector<f64>| {
        let s = PhaseState::from_z(z.as_slice())?;
        sys.check_regular(&s)?;
        let hp = sys.grad_p(&s)?;
        let hq = sys.grad_q(&s)?;
        let d = s.dof();
        Ok(DVector::from_fn(2 * d, |i, _| if i < d { hp[i] } else { -hq[i - d] }))
    }
}

/// Reference phase-space endpoint at `t_max`.
pub fn reference_endpoint(sys: &dyn Hamiltonian, s0: &PhaseState, t_max: f64, tol: f64) -> Result<ReferenceEndpoint> {
    if let Some(e) = sys.exact_flow(s0, t_max) {
        let z = e.z();
        return Ok(ReferenceEndpoint {
            value: z.clone(),
            extrapolated: z,
            n_steps: 0,
            halvings: 0,
            source: ReferenceSource::Analytic,
        });
    }
    rk4_halving(&canonical_rhs(sys), &s0.z(), t_max, tol)
}

/// Reference trajectory on `[0, t_max]`: the closed-form flow on 1000
/// intervals when the model has one, otherwise RK4 at the step accepted by
/// the halving loop. `notes` records the source.
pub fn reference_solve(sys: &dyn Hamiltonian, s0: &PhaseState, t_max: f64, tol_hint: f64) -> Result<Trajectory> {
    if !(t_max > 0.0) || !t_max.is_finite() {
        return Err(Error::Argument(format!("t_max must be positive, got {t_max}")));
    }
    if sys.exact_flow(s0, t_max).is_some() {
        let h = t_max / ANALYTIC_STEPS as f64;
        let mut tr = Trajectory::new(0.0, h, "reference");
        tr.states = (0..=ANALYTIC_STEPS)
            .map(|j| sys.exact_flow(s0, j as f64 * h).ok_or_else(|| Error::Domain("exact flow undefined".into())))
            .collect::<Result<_>>()?;
        tr.notes.push(("source".into(), ReferenceSource::Analytic.label().into()));
        return Ok(tr);
    }
    let rhs = canonical_rhs(sys);
    let end = rk4_halving(&rhs, &s0.z(), t_max, tol_hint)?;
    let mut tr = Trajectory::new(0.0, t_max / end.n_steps as f64, "reference");
    let mut states = Vec::with_capacity(end.n_steps + 1);
    rk4_run(&rhs, &s0.z(), t_max, end.n_steps, &mut |_, z| {
        states.push(PhaseState::from_z(z.as_slice()).expect("even length"))
    })?;
    tr.states = states;
    tr.notes.push(("source".into(), ReferenceSource::Rk4.label().into()));
    tr.notes.push(("halvings".into(), end.halvings.to_string()));
    Ok(tr)
}

/// Reference solution of a general ODE, analytic when available.
pub fn reference_solve_ode(f: &dyn VectorField, y0: &DVector<f64>, t_max: f64, tol_hint: f64) -> Result<Trajectory<OdeState>> {
    if !(t_max > 0.0) || !t_max.is_finite() {
        return Err(Error::Argument(format!("t_max must be positive, got {t_max}")));
    }
    if f.exact_solution(y0, t_max).is_some() {
        let h = t_max / ANALYTIC_STEPS as f64;
        let mut tr = Trajectory::new(0.0, h, "reference");
        tr.states = (0..=ANALYTIC_STEPS)
            .map(|j| {
                let t = j as f64 * h;
                f.exact_solution(y0, t).map(|y| OdeState::new(y, t)).ok_or_else(|| Error::Domain("exact solution undefined".into()))
            })
            .collect::<Result<_>>()?;
        tr.notes.push(("source".into(), ReferenceSource::Analytic.label().into()));
        return Ok(tr);
    }
    let rhs = |y: &DVector<f64>| f.eval(y);
    let end = rk4_halving(&rhs, y0, t_max, tol_hint)?;
    let h = t_max / end.n_steps as f64;
    let mut tr = Trajectory::new(0.0, h, "reference");
    let mut states = Vec::with_capacity(end.n_steps + 1);
    rk4_run(&rhs, y0, t_max, end.n_steps, &mut |j, y| states.push(OdeState::new(y.clone(), j as f64 * h)))?;
    tr.states = states;
    tr.notes.push(("source".into(), ReferenceSource::Rk4.label().into()));
    Ok(tr)
}
