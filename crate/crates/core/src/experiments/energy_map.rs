//! Cartesian versus polar energy error over a grid of initial positions of the
//! elastic pendulum released at rest.

use rayon::prelude::*;

use super::{bool_cell, build, energy_run, fmt_f64, snap_step, ExperimentOutput, Table};
use crate::error::{Error, Result};
use crate::experiments::config::ExperimentConfig;
use crate::integrators::Method;
use crate::models::{Coords, PendulumParams};
use crate::state::PhaseState;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyCell {
    pub x0: f64,
    pub y0: f64,
    pub eps_xy: f64,
    pub eps_rphi: f64,
    pub diverged_xy: bool,
    pub diverged_rphi: bool,
    /// `r − 2l − (2mg/k) cos φ`; non-negative cells cross the polar singularity.
    pub boundary_margin: f64,
}

impl EnergyCell {
    /// `log10(ε_xy / ε_rφ)`.
    pub fn log_ratio(&self) -> f64 {
        if self.diverged_xy || self.diverged_rphi {
            f64::NAN
        } else {
            (self.eps_xy / self.eps_rphi).log10()
        }
    }
}

pub fn run_energy_map(cfg: &ExperimentConfig) -> Result<(ExperimentOutput, Vec<EnergyCell>)> {
    cfg.validate()?;
    if cfg.model != "elastic-pendulum" {
        return Err(Error::Configuration(format!("energy-map needs the elastic-pendulum model, got '{}'", cfg.model)));
    }
    let grid = cfg.grid.ok_or_else(|| Error::Configuration("energy-map needs a grid".into()))?;
    let method = cfg.method_list(Method::SymplecticEuler)[0];
    let (h, n) = snap_step(cfg.step()?, cfg.t_max);
    let cart = build(cfg, Some(Coords::Cartesian), None)?;
    let polar = build(cfg, Some(Coords::Polar), None)?;
    let (cart_sys, polar_sys) = (cart.hamiltonian()?, polar.hamiltonian()?);
    let pp = PendulumParams { l: cart.params["l"], m: cart.params["m"], k: cart.params["k"], g: cart.params["g"] };

    let (xs, ys) = (grid.x.points(), grid.y.points());
    let cells: Vec<EnergyCell> = (0..xs.len() * ys.len())
        .into_par_iter()
        .map(|idx| {
            let (x0, y0) = (xs[idx % xs.len()], ys[idx / xs.len()]);
            let s_cart = PhaseState::from_slices(&[x0, y0], &[0.0, 0.0])?;
            let (rc, _) = energy_run(method, cart_sys.as_ref(), &s_cart, h, n)?;
            let (rp, diverged_rphi) = match polar.to_chart(&s_cart) {
                Ok(s) => {
                    let (r, _) = energy_run(method, polar_sys.as_ref(), &s, h, n)?;
                    (r.rms, r.diverged_at.is_some())
                }
                Err(e) if e.is_divergence() => (f64::NAN, true),
                Err(e) => return Err(e),
            };
            let diverged_xy = rc.diverged_at.is_some();
            Ok(EnergyCell {
                x0,
                y0,
                eps_xy: if diverged_xy { f64::NAN } else { rc.rms },
                eps_rphi: if diverged_rphi { f64::NAN } else { rp },
                diverged_xy,
                diverged_rphi,
                boundary_margin: pp.divergence_margin(x0, y0),
            })
        })
        .collect::<Result<_>>()?;

    let mut table = Table::new(&[
        "x0",
        "y0",
        "eps_xy",
        "eps_rphi",
        "log_ratio",
        "diverged_xy",
        "diverged_rphi",
        "boundary_margin",
    ]);
    let count = |f: &dyn Fn(&EnergyCell) -> bool| cells.iter().filter(|c| f(c)).count().to_string();
    table.meta("eps", "rms over stored states of H(z_j) - H(z_0)");
    table.meta("method", method.to_string());
    table.meta("cells", cells.len().to_string());
    table.meta("cartesian_better", count(&|c| c.eps_xy < c.eps_rphi));
    table.meta("polar_better", count(&|c| c.eps_rphi < c.eps_xy));
    table.meta("diverged_rphi", count(&|c| c.diverged_rphi));
    table.meta("diverged_xy", count(&|c| c.diverged_xy));
    table.meta("unflagged_beyond_boundary", count(&|c| c.boundary_margin >= 0.0 && !c.diverged_rphi));
    for c in &cells {
        table.push(vec![
            fmt_f64(c.x0),
            fmt_f64(c.y0),
            fmt_f64(c.eps_xy),
            fmt_f64(c.eps_rphi),
            fmt_f64(c.log_ratio()),
            bool_cell(c.diverged_xy),
            bool_cell(c.diverged_rphi),
            fmt_f64(c.boundary_margin),
        ]);
    }
    let csv = cfg.out.as_ref().and_then(|p| p.file_name()).map(|f| f.to_string_lossy().into_owned());
    let csv = csv.unwrap_or_else(|| "energy_map.csv".into());
    let plot = format!(
        "set datafile separator ','\nset xlabel 'x(0)'\nset ylabel 'y(0)'\nset size ratio -1\n\
         set palette defined (-1 'blue', 0 'white', 1 'red')\nset cbrange [-3:3]\nset cblabel 'log10(eps_xy/eps_rphi)'\n\
         set contour base\nset cntrparam levels discrete 0\nset view map\nunset surface\n\
         splot '{csv}' using 1:2:5 with points pointtype 5 palette notitle, \\\n      \
         '{csv}' using 1:2:8 with lines lc 'black' dt 2 title 'polar divergence boundary'\n"
    );
    Ok((ExperimentOutput { table, plot }, cells))
}
