use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::Parser;

use symcoord::experiments::{self, preset, ExperimentConfig, ExperimentKind, GridSpec, Threads, PRESET_NAMES};
use symcoord::models::Coords;
use symcoord::{Error, Method, Result};

/// Run a coordinate-dependence experiment and write its CSV and gnuplot script.
#[derive(Debug, Parser)]
#[command(name = "symcoord", version, after_help = after_help())]
struct Cli {
    /// convergence, energy-map, invariant-drift, compensate-demo, delta-probe or trajectory
    experiment: Option<String>,

    #[arg(long)]
    model: Option<String>,
    /// Comma-separated charts: cartesian, polar, compensated
    #[arg(long)]
    coords: Option<String>,
    /// Comma-separated integrators
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    h_max: Option<f64>,
    #[arg(long)]
    h_min: Option<f64>,
    #[arg(long)]
    n_h: Option<usize>,
    #[arg(long)]
    t_max: Option<f64>,
    /// Initial state q then p, in the original chart
    #[arg(long, allow_hyphen_values = true)]
    ic: Option<String>,
    /// x:<lo>:<hi>:<n>,y:<lo>:<hi>:<n>
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    /// Model parameter override, repeatable
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// TOML file with the same keys as the flags
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Positive integer or auto
    #[arg(long)]
    threads: Option<String>,
    /// CSV path; the plot script goes next to it. Without it the CSV goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated first-integral labels (invariant-drift)
    #[arg(long)]
    integrals: Option<String>,
    /// cartesian-to-polar, polar-to-cartesian, oscillator or affine (delta-probe)
    #[arg(long)]
    transform: Option<String>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    reference_tol: Option<f64>,
}

fn after_help() -> String {
    format!(
        "Models: {}\nPresets: {}\nMethods: {}\nExit codes: 0 success, 2 configuration error, 3 divergence, 4 numeric failure",
        symcoord::models::MODEL_NAMES.join(", "),
        PRESET_NAMES.join(", "),
        Method::ALL.iter().map(|m| m.label()).collect::<Vec<_>>().join(", ")
    )
}

fn list<T: FromStr<Err = Error>>(s: &str) -> Result<Vec<T>> {
    s.split(',').map(str::trim).filter(|x| !x.is_empty()).map(T::from_str).collect()
}

fn resolve(cli: Cli) -> Result<ExperimentConfig> {
    let base = match (&cli.preset, &cli.config) {
        (Some(p), _) => Some(preset(p)?),
        (_, Some(path)) => Some(ExperimentConfig::from_toml_file(path)?),
        _ => None,
    };
    let kind = cli.experiment.as_deref().map(ExperimentKind::from_str).transpose()?;
    let mut cfg = match base {
        Some(mut c) => {
            if let Some(k) = kind {
                c.experiment = k;
            }
            if let Some(m) = &cli.model {
                c.model = m.clone();
            }
            c
        }
        None => {
            let k = kind.ok_or_else(|| Error::Configuration("an experiment, --preset or --config is required".into()))?;
            let m = cli.model.clone().ok_or_else(|| Error::Configuration("--model is required".into()))?;
            let t = cli.t_max.ok_or_else(|| Error::Configuration("--t-max is required".into()))?;
            ExperimentConfig::new(k, &m, t)
        }
    };
    if let Some(s) = &cli.coords {
        cfg.coords = list::<Coords>(s)?;
    }
    if let Some(s) = &cli.method {
        cfg.methods = list::<Method>(s)?;
    }
    if cli.h.is_some() {
        cfg.h = cli.h;
    }
    if cli.h_max.is_some() {
        cfg.h_max = cli.h_max;
    }
    if cli.h_min.is_some() {
        cfg.h_min = cli.h_min;
    }
    if cli.n_h.is_some() {
        cfg.n_h = cli.n_h;
    }
    if let Some(t) = cli.t_max {
        cfg.t_max = t;
    }
    if let Some(s) = &cli.ic {
        let z = s
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| Error::Configuration(format!("--ic expects a comma-separated list of numbers, got '{s}'")))?;
        cfg.ic = Some(z);
    }
    if let Some(g) = &cli.grid {
        cfg.grid = Some(GridSpec::from_str(g)?);
    }
    for kv in &cli.params {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Configuration(format!("--param expects key=value, got '{kv}'")))?;
        let v: f64 = v.trim().parse().map_err(|_| Error::Configuration(format!("--param {k}: '{v}' is not a number")))?;
        cfg.params.insert(k.trim().to_string(), v);
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = &cli.threads {
        cfg.threads = Threads::from_str(t)?;
    }
    if let Some(s) = &cli.integrals {
        cfg.integrals = s.split(',').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect();
    }
    if cli.transform.is_some() {
        cfg.transform = cli.transform;
    }
    if cli.samples.is_some() {
        cfg.samples = cli.samples;
    }
    if cli.reference_tol.is_some() {
        cfg.reference_tol = cli.reference_tol;
    }
    if cli.out.is_some() {
        cfg.out = cli.out;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = resolve(cli).and_then(|cfg| {
        let out = experiments::run(&cfg)?;
        match &cfg.out {
            Some(path) => {
                out.write(&cfg, path)?;
                eprintln!("{}: {} rows -> {}", cfg.experiment, out.table.rows.len(), path.display());
                for (k, v) in &out.table.meta {
                    eprintln!("  {k}: {v}");
                }
            }
            None => print!("{}", out.csv(&cfg)),
        }
        Ok(())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("symcoord: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
