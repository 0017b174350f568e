//! Plain trajectories in one or more charts, also mapped back to the
//! original chart.

use super::{build, chart_label, charts, fmt_f64, initial_state, snap_step, ExperimentOutput, Table};
use crate::error::Result;
use crate::experiments::config::ExperimentConfig;
use crate::integrators::{solve, Method};

pub fn run_trajectory(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let (h, n) = snap_step(cfg.step()?, cfg.t_max);
    let methods = cfg.method_list(Method::SymplecticEuler);
    let mut table: Option<Table> = None;
    let mut curves = Vec::new();
    for c in charts(cfg) {
        let entry = build(cfg, c, Some(h))?;
        let sys = entry.hamiltonian()?;
        let s0 = initial_state(cfg, &entry)?;
        let d = s0.dof();
        let t = table.get_or_insert_with(|| {
            let mut hd = vec!["chart".to_string(), "method".to_string(), "t".to_string()];
            for prefix in ["q", "p", "orig_q", "orig_p"] {
                hd.extend((0..d).map(|i| format!("{prefix}{i}")));
            }
            hd.push("energy".into());
            Table::new(&hd)
        });
        let e0 = sys.energy(&s0)?;
        for &m in &methods {
            let tr = solve(m, sys.as_ref(), &s0, h, n)?;
            let label = chart_label(&entry);
            let mut max_dev = 0.0f64;
            for (j, s) in tr.states.iter().enumerate() {
                let o = entry.to_original(s);
                let e = sys.energy(s)?;
                max_dev = max_dev.max((e - e0).abs());
                let mut row = vec![label.clone(), m.to_string(), fmt_f64(tr.time(j))];
                row.extend(s.q.iter().chain(s.p.iter()).map(|v| fmt_f64(*v)));
                match &o {
                    Ok(o) => row.extend(o.q.iter().chain(o.p.iter()).map(|v| fmt_f64(*v))),
                    Err(_) => row.extend((0..2 * d).map(|_| "nan".to_string())),
                }
                row.push(fmt_f64(e));
                t.push(row);
            }
            let mut summary = format!(
                "max_energy_deviation={} diverged_at={}",
                fmt_f64(max_dev),
                tr.diverged_at.map(|d| d.to_string()).unwrap_or_else(|| "none".into())
            );
            if let Some(r) = tr.note("stop_reason") {
                summary.push_str(&format!(" stop_reason={r}"));
            }
            t.meta(format!("run {m} {label}"), summary);
            curves.push((label, m));
        }
    }
    let table = table.expect("at least one chart");
    let csv = cfg.out.as_ref().and_then(|p| p.file_name()).map(|f| f.to_string_lossy().into_owned());
    let csv = csv.unwrap_or_else(|| "trajectory.csv".into());
    let d = (table.header.len() - 4) / 4;
    let (oq, op) = (4 + 2 * d, 4 + 3 * d);
    let parts: Vec<String> = curves
        .iter()
        .map(|(c, m)| {
            format!("'{csv}' using (strcol(1) eq '{c}' && strcol(2) eq '{m}' ? ${oq} : 1/0):{op} with points pt 7 ps 0.3 title '{m} {c}'")
        })
        .collect();
    let plot = format!(
        "set datafile separator ','\nset xlabel 'q'\nset ylabel 'p'\nset size ratio -1\nplot {}\n",
        parts.join(", \\\n     ")
    );
    Ok(ExperimentOutput { table, plot })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::config::preset;

    #[test]
    fn oscillator_charts_bounded() {
        let mut c = preset("fig6").unwrap();
        c.t_max = 30.0;
        let out = run_trajectory(&c).unwrap();
        assert_eq!(out.table.rows.len(), 2 * 101);
        assert!(out.table.floats("orig_q0").iter().all(|q| q.abs() < 1.5));
    }
}
