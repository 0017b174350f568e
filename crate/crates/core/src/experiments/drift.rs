//! Drift of declared first integrals next to the predicted preservation
//! condition.

use super::{build, chart_label, charts, fmt_f64, initial_state, snap_step, ExperimentOutput, Table};
use crate::diagnostics::{drift_order, first_integral_condition, invariant_drift};
use crate::error::{Error, Result};
use crate::experiments::config::ExperimentConfig;
use crate::integrators::{solve, Method};
use crate::state::PhaseState;
use crate::system::FirstIntegral;
use crate::transforms::canonical_inverse;

/// `∂δ/∂q^i` at `s` for an integral that is a cyclic momentum in its origin
/// chart; `None` when the integral declares no origin.
pub fn integral_condition(fi: &FirstIntegral, s: &PhaseState) -> Option<Result<f64>> {
    let o = fi.origin.as_ref()?;
    Some(
        canonical_inverse(o.transform.as_ref(), s)
            .and_then(|so| first_integral_condition(o.system.as_ref(), o.transform.as_ref(), &so, o.cyclic_index)),
    )
}

pub fn run_invariant_drift(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let entry = build(cfg, charts(cfg)[0], None)?;
    let sys = entry.hamiltonian()?;
    let method = cfg.method_list(Method::SymplecticEuler)[0];
    let s0 = initial_state(cfg, &entry)?;
    let (h, n) = snap_step(cfg.step()?, cfg.t_max);

    let all = sys.first_integrals();
    let available: Vec<String> = all.iter().map(|f| f.label.clone()).collect();
    let integrals: Vec<FirstIntegral> = if cfg.integrals.is_empty() {
        all
    } else {
        cfg.integrals
            .iter()
            .map(|l| {
                all.iter().find(|f| &f.label == l).cloned().ok_or_else(|| {
                    Error::Configuration(format!(
                        "model '{}' has no first integral '{l}' (available: {})",
                        cfg.model,
                        available.join(", ")
                    ))
                })
            })
            .collect::<Result<_>>()?
    };
    if integrals.is_empty() {
        return Err(Error::Configuration(format!("model '{}' declares no first integrals", cfg.model)));
    }

    let tr = solve(method, sys.as_ref(), &s0, h, n)?;
    let mut header = vec!["t".to_string()];
    header.extend(integrals.iter().map(|f| format!("drift_{}", f.label)));
    let mut table = Table::new(&header);
    table.meta("method", method.to_string());
    table.meta("chart", chart_label(&entry));
    if let Some(d) = tr.diverged_at {
        table.meta("diverged_at", d.to_string());
    }
    let mut series = Vec::new();
    for fi in &integrals {
        let d = invariant_drift(&tr, fi)?;
        let order = drift_order(method, sys.as_ref(), &s0, fi, h)?;
        let cond = match integral_condition(fi, &s0) {
            Some(Ok(v)) => fmt_f64(v),
            Some(Err(e)) => format!("unavailable ({e})"),
            None => "n/a".into(),
        };
        table.meta(
            format!("integral {}", fi.label),
            format!(
                "max_drift={} step_order={} condition_at_ic={}",
                fmt_f64(d.max_abs),
                order.order.map(fmt_f64).unwrap_or_else(|| "nan".into()),
                cond
            ),
        );
        series.push(d.drift);
    }
    for j in 0..tr.len() {
        let mut row = vec![fmt_f64(tr.time(j))];
        row.extend(series.iter().map(|d| fmt_f64(d[j])));
        table.push(row);
    }
    let csv = cfg.out.as_ref().and_then(|p| p.file_name()).map(|f| f.to_string_lossy().into_owned());
    let csv = csv.unwrap_or_else(|| "drift.csv".into());
    let curves: Vec<String> = integrals
        .iter()
        .enumerate()
        .map(|(i, f)| format!("'{csv}' using 1:{} with lines title '{}'", i + 2, f.label))
        .collect();
    let plot = format!(
        "set datafile separator ','\nset xlabel 't'\nset ylabel 'F(z_t) - F(z_0)'\nplot {}\n",
        curves.join(", \\\n     ")
    );
    Ok(ExperimentOutput { table, plot })
}
