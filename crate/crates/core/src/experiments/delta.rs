//! Seeded samples of `H_p·H_q`, its transformed counterpart and `δ`.

use std::sync::Arc;

use rand::Rng;

use super::{build, fmt_f64, ExperimentOutput, Table};
use crate::diagnostics::{delta_identity, elementary_hpq, first_integral_condition, CYCLIC_TOL};
use crate::error::{Error, Result};
use crate::experiments::config::ExperimentConfig;
use crate::models::{Coords, FREE_MASS_POLAR, PENDULUM_POLAR};
use crate::rng::seeded;
use crate::state::PhaseState;
use crate::system::SystemRef;
use crate::transforms::{
    AffineTransform, CartesianToPolar, OscillatorTransform, PolarConvention, PolarToCartesian, TransformRef,
};

const DEFAULT_SAMPLES: usize = 20;

fn convention(model: &str) -> Result<PolarConvention> {
    match model {
        "elastic-pendulum" => Ok(PENDULUM_POLAR),
        "free-mass" | "artificial-polar" => Ok(FREE_MASS_POLAR),
        _ => Err(Error::Configuration(format!("model '{model}' has no polar chart"))),
    }
}

/// `cartesian-to-polar`, `polar-to-cartesian` (with the model's polar
/// convention) or `oscillator`.
pub fn named_transform(model: &str, name: &str) -> Result<TransformRef> {
    Ok(match name {
        "cartesian-to-polar" => Arc::new(CartesianToPolar::new(convention(model)?)),
        "polar-to-cartesian" => Arc::new(PolarToCartesian::new(convention(model)?)),
        "oscillator" => Arc::new(OscillatorTransform::exact()),
        _ => {
            return Err(Error::Configuration(format!(
                "unknown transform '{name}' (available: cartesian-to-polar, polar-to-cartesian, oscillator, affine)"
            )))
        }
    })
}

enum Probe {
    Fixed(TransformRef),
    Affine,
}

fn setup(cfg: &ExperimentConfig) -> Result<(SystemRef, Probe, String)> {
    let default = match (cfg.model.as_str(), cfg.coords.first()) {
        ("harmonic-oscillator", _) => "oscillator",
        ("artificial-polar", _) | (_, Some(Coords::Polar)) => "polar-to-cartesian",
        _ => "cartesian-to-polar",
    };
    let name = cfg.transform.clone().unwrap_or_else(|| default.to_string());
    let (coords, probe) = match name.as_str() {
        "affine" => (cfg.coords.first().copied(), Probe::Affine),
        "polar-to-cartesian" => (Some(Coords::Polar), Probe::Fixed(named_transform(&cfg.model, &name)?)),
        _ => (Some(Coords::Cartesian), Probe::Fixed(named_transform(&cfg.model, &name)?)),
    };
    let entry = build(cfg, coords, None)?;
    Ok((entry.hamiltonian()?, probe, name))
}

pub fn run_delta_probe(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let (sys, probe, name) = setup(cfg)?;
    let d = sys.dof();
    let bounds = sys.sampling_box();
    let n = cfg.samples.unwrap_or(DEFAULT_SAMPLES);

    let mut header = vec!["sample".to_string()];
    header.extend((0..d).map(|i| format!("q{i}")));
    header.extend((0..d).map(|i| format!("p{i}")));
    header.extend(["hp_hq", "hbar_p_hbar_q", "delta", "identity_residual"].map(String::from));
    header.extend((0..d).map(|i| format!("condition_q{i}")));
    let mut table = Table::new(&header);

    let (mut skipped, mut nonzero, mut max_delta, mut max_resid) = (0usize, 0usize, 0.0f64, 0.0f64);
    for i in 0..n {
        let mut rng = seeded(cfg.seed, i as u64);
        let z: Vec<f64> = bounds.iter().map(|&(lo, hi)| rng.random_range(lo..hi)).collect();
        let s = PhaseState::from_z(&z)?;
        let pt: TransformRef = match &probe {
            Probe::Fixed(t) => t.clone(),
            Probe::Affine => Arc::new(AffineTransform::random(d, &mut rng)),
        };
        let sample = (|| -> Result<Vec<String>> {
            let hphq = elementary_hpq(sys.as_ref(), &s)?;
            let (lhs, delta) = delta_identity(&sys, &pt, &s)?;
            let hq = sys.grad_q(&s)?;
            let mut row = vec![i.to_string()];
            row.extend(z.iter().map(|v| fmt_f64(*v)));
            row.extend([fmt_f64(hphq), fmt_f64(lhs + hphq), fmt_f64(delta), fmt_f64(lhs - delta)]);
            for k in 0..d {
                row.push(if hq[k].abs() <= CYCLIC_TOL {
                    fmt_f64(first_integral_condition(sys.as_ref(), pt.as_ref(), &s, k)?)
                } else {
                    String::new()
                });
            }
            max_delta = max_delta.max(delta.abs());
            max_resid = max_resid.max((lhs - delta).abs());
            if delta.abs() > 1e-6 {
                nonzero += 1;
            }
            Ok(row)
        })();
        match sample {
            Ok(row) => table.push(row),
            Err(e) if e.is_divergence() || matches!(e, Error::Domain(_)) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    table.meta("transform", name);
    table.meta("system", sys.name());
    table.meta("samples", n.to_string());
    table.meta("skipped_singular", skipped.to_string());
    table.meta("nonzero_delta", nonzero.to_string());
    table.meta("max_abs_delta", fmt_f64(max_delta));
    table.meta("max_identity_residual", fmt_f64(max_resid));

    let csv = cfg.out.as_ref().and_then(|p| p.file_name()).map(|f| f.to_string_lossy().into_owned());
    let csv = csv.unwrap_or_else(|| "delta.csv".into());
    let col = 2 * d + 4;
    let plot = format!(
        "set datafile separator ','\nset xlabel 'sample'\nset ylabel 'value'\n\
         plot '{csv}' using 1:{} with points title 'H_p H_q', '{csv}' using 1:{} with points title 'Hbar_p Hbar_q', \
         '{csv}' using 1:{col} with points title 'delta'\n",
        col - 2,
        col - 1
    );
    Ok(ExperimentOutput { table, plot })
}
