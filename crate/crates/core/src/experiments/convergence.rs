//! Global error against a reference solution over a sweep of step sizes.

use nalgebra::DVector;
use rayon::prelude::*;

use super::{bool_cell, build, chart_label, charts, energy_run, fmt_f64, initial_state, snap_step, ExperimentOutput, Table};
use crate::error::{Error, Result};
use crate::experiments::config::ExperimentConfig;
use crate::integrators::{reference_endpoint, Method};
use crate::numeric::loglog_slope;

/// Minimum number of surviving rows per slope fit.
pub const MIN_ROWS: usize = 4;
const DEFAULT_REFERENCE_TOL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub method: Method,
    pub chart: String,
    pub h: f64,
    pub n_steps: usize,
    /// Euclidean endpoint distance to the reference, in the original chart.
    pub err_phase: f64,
    /// RMS of `H(z_j) − H(z_0)` over stored states.
    pub err_energy: f64,
    pub err_energy_max: f64,
    pub diverged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlopeSummary {
    pub method: Method,
    pub chart: String,
    pub slope_phase: Option<f64>,
    pub slope_energy: Option<f64>,
    pub slope_energy_max: Option<f64>,
    pub rows_used: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    pub slopes: Vec<SlopeSummary>,
    pub output: ExperimentOutput,
}

impl ConvergenceReport {
    pub fn slope(&self, method: Method, chart: &str) -> Option<&SlopeSummary> {
        self.slopes.iter().find(|s| s.method == method && s.chart == chart)
    }
}

fn fit(rows: &[&ConvergenceRow], metric: impl Fn(&ConvergenceRow) -> f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> =
        rows.iter().map(|r| (r.h, metric(r))).filter(|(_, e)| e.is_finite() && *e > 0.0).collect();
    if pts.len() < 2 {
        return None;
    }
    let (h, e): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    loglog_slope(&h, &e)
}

pub fn run_convergence(cfg: &ExperimentConfig) -> Result<ConvergenceReport> {
    cfg.validate()?;
    let hs = cfg.h_range()?;
    let methods = cfg.method_list(Method::StoermerVerlet);
    let tol = cfg.reference_tol.unwrap_or(DEFAULT_REFERENCE_TOL);
    let chart_list = charts(cfg);

    let original = build(cfg, None, None)?;
    let z0 = initial_state(cfg, &original)?;

    let tasks: Vec<(usize, Method, f64)> = chart_list
        .iter()
        .enumerate()
        .flat_map(|(ci, _)| {
            let hs = &hs;
            methods.iter().flat_map(move |&m| hs.iter().map(move |&h| (ci, m, h)))
        })
        .collect();
    let runs: Vec<(ConvergenceRow, Option<DVector<f64>>)> = tasks
        .par_iter()
        .map(|&(ci, method, h)| {
            let (h, n) = snap_step(h, cfg.t_max);
            let entry = build(cfg, chart_list[ci], Some(h))?;
            let sys = entry.hamiltonian()?;
            let s0 = entry.to_chart(&z0)?;
            let (run, last) = energy_run(method, sys.as_ref(), &s0, h, n)?;
            let diverged = run.diverged_at.is_some();
            let end = match (&last, diverged) {
                (Some(s), false) => entry.to_original(s).ok().map(|o| o.z()),
                _ => None,
            };
            let nan_if = |v: f64| if diverged { f64::NAN } else { v };
            let row = ConvergenceRow {
                method,
                chart: chart_label(&entry),
                h,
                n_steps: n,
                err_phase: f64::NAN,
                err_energy: nan_if(run.rms),
                err_energy_max: nan_if(run.max_abs),
                diverged,
            };
            Ok((row, end))
        })
        .collect::<Result<_>>()?;

    let mut keys: Vec<(Method, String)> = Vec::new();
    for (r, _) in &runs {
        if !keys.iter().any(|(m, c)| *m == r.method && *c == r.chart) {
            keys.push((r.method, r.chart.clone()));
        }
    }
    for (method, chart) in &keys {
        let group = runs.iter().filter(|(r, _)| r.method == *method && r.chart == *chart);
        let (total, alive) = group.fold((0, 0), |(t, a), (r, _)| (t + 1, a + usize::from(!r.diverged)));
        if alive < MIN_ROWS {
            return Err(Error::Experiment(format!(
                "{method} in {chart} coordinates: only {alive} of {total} step sizes survived, {MIN_ROWS} are needed for a slope"
            )));
        }
    }

    // one reference in the original chart serves every chart
    let reference = reference_endpoint(original.hamiltonian()?.as_ref(), &z0, cfg.t_max, tol)?;
    let rows: Vec<ConvergenceRow> = runs
        .into_iter()
        .map(|(mut r, end)| {
            if let Some(z) = end {
                r.err_phase = (z - &reference.extrapolated).norm();
            }
            r
        })
        .collect();

    let mut slopes = Vec::new();
    for (method, chart) in keys {
        let group: Vec<&ConvergenceRow> =
            rows.iter().filter(|r| r.method == method && r.chart == chart && !r.diverged).collect();
        slopes.push(SlopeSummary {
            method,
            chart,
            slope_phase: fit(&group, |r| r.err_phase),
            slope_energy: fit(&group, |r| r.err_energy),
            slope_energy_max: fit(&group, |r| r.err_energy_max),
            rows_used: group.len(),
        });
    }

    let mut table = Table::new(&["method", "chart", "h", "err_phase", "err_energy", "err_energy_max", "diverged"]);
    table.meta("err_phase", "euclidean distance of the final state, mapped to the original chart, to the reference endpoint");
    table.meta("err_energy", "rms over stored states of H(z_j) - H(z_0)");
    table.meta("err_energy_max", "max over stored states of |H(z_j) - H(z_0)|");
    table.meta("reference", format!("rk4 step halving to {} relative, richardson-corrected; analytic when available", fmt_f64(tol)));
    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_else(|| "nan".into());
    for s in &slopes {
        table.meta(
            format!("slope {} {}", s.method, s.chart),
            format!(
                "phase={} energy={} energy_max={} rows={}",
                opt(s.slope_phase),
                opt(s.slope_energy),
                opt(s.slope_energy_max),
                s.rows_used
            ),
        );
    }
    for r in &rows {
        table.push(vec![
            r.method.to_string(),
            r.chart.clone(),
            fmt_f64(r.h),
            fmt_f64(r.err_phase),
            fmt_f64(r.err_energy),
            fmt_f64(r.err_energy_max),
            bool_cell(r.diverged),
        ]);
    }
    let plot = plot_script(cfg, &slopes);
    Ok(ConvergenceReport { rows, slopes, output: ExperimentOutput { table, plot } })
}

fn plot_script(cfg: &ExperimentConfig, slopes: &[SlopeSummary]) -> String {
    let csv = cfg.out.as_ref().and_then(|p| p.file_name()).map(|f| f.to_string_lossy().into_owned());
    let csv = csv.unwrap_or_else(|| "convergence.csv".into());
    let mut s = String::from(
        "set datafile separator ','\nset logscale xy\nset key left top\nset xlabel 'h'\nset multiplot layout 1,2\n",
    );
    for (col, title) in [(4, "phase error"), (6, "max energy error")] {
        s.push_str(&format!("set ylabel '{title}'\nplot "));
        let parts: Vec<String> = slopes
            .iter()
            .map(|sl| {
                format!(
                    "'{csv}' using (strcol(1) eq '{m}' && strcol(2) eq '{c}' ? $3 : 1/0):{col} with linespoints title '{m} {c}'",
                    m = sl.method,
                    c = sl.chart
                )
            })
            .collect();
        s.push_str(&parts.join(", \\\n     "));
        s.push('\n');
    }
    s.push_str("unset multiplot\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::config::{ExperimentKind, ExperimentConfig};

    #[test]
    fn too_few_surviving_rows_is_an_experiment_error() {
        let mut c = ExperimentConfig::new(ExperimentKind::Convergence, "harmonic-oscillator", 1.0);
        c.methods = vec![Method::SymplecticEuler];
        (c.h_max, c.h_min, c.n_h) = (Some(0.1), Some(0.05), Some(3));
        assert!(matches!(run_convergence(&c), Err(Error::Experiment(_))));
    }

    #[test]
    fn oscillator_symplectic_euler_is_first_order() {
        let mut c = ExperimentConfig::new(ExperimentKind::Convergence, "harmonic-oscillator", 2.0);
        c.methods = vec![Method::SymplecticEuler];
        (c.h_max, c.h_min, c.n_h) = (Some(0.1), Some(0.0125), Some(4));
        let r = run_convergence(&c).unwrap();
        let s = r.slope(Method::SymplecticEuler, "cartesian").unwrap();
        assert!((s.slope_phase.unwrap() - 1.0).abs() < 0.1, "{s:?}");
        assert_eq!(r.output.table.rows.len(), 4);
    }
}
