use std::collections::BTreeMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use symcoord::diagnostics::{delta_hpq, first_integral_condition, free_mass_polar_condition};
use symcoord::experiments::{
    preset, run, run_compensate_demo, run_convergence, run_delta_probe, run_energy_map, run_invariant_drift,
    run_trajectory, ExperimentConfig, ExperimentKind, Table, Threads,
};
use symcoord::fd::validate_system;
use symcoord::integrators::{
    rowlands_kernel_step, rowlands_solve, step_once, stormer_verlet_step, symplecticity_defect, Corrector, Method,
    RowlandsConfig, StepperConfig,
};
use symcoord::models::{build_model, free_mass_cartesian, free_mass_polar, Coords, FREE_MASS_POLAR};
use symcoord::system::SystemRef;
use symcoord::transforms::{AffineTransform, CartesianToPolar, PolarToCartesian};
use symcoord::{Hamiltonian, PhaseState, Result};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn meta_f64(t: &Table, key: &str) -> f64 {
    t.meta_value(key).and_then(|v| v.parse().ok()).unwrap_or(f64::NAN)
}

/// `name=value` field inside a meta value.
fn field(t: &Table, key: &str, name: &str) -> f64 {
    t.meta_value(key)
        .and_then(|v| v.split_whitespace().find_map(|kv| kv.strip_prefix(&format!("{name}="))))
        .and_then(|v| v.parse().ok())
        .unwrap_or(f64::NAN)
}

fn within(v: f64, target: f64, tol: f64) -> bool {
    (v - target).abs() <= tol
}

fn compensated_exactness() -> Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for name in ["fig1", "fig2"] {
        let t = run_compensate_demo(&preset(name)?)?.table;
        let comp = meta_f64(&t, "max_rel_err_compensated");
        let orig = meta_f64(&t, "rel_err_original_at_t_max");
        pass &= comp <= 1e-10 && orig >= 1e-2;
        parts.push(format!("{name}: compensated {comp:.1e}, original {orig:.3}"));
    }
    Ok(outcome(pass, parts.join("; ")))
}

fn convergence_orders() -> Result<Outcome> {
    let rep = run_convergence(&preset("fig3-desk")?)?;
    let sv = rep.slope(Method::StoermerVerlet, "cartesian").expect("verlet row");
    let rw = rep.slope(Method::RowlandsCheap, "cartesian").expect("rowlands row");
    let g = |v: Option<f64>| v.unwrap_or(f64::NAN);
    let pass = within(g(sv.slope_phase), 2.0, 0.1)
        && within(g(sv.slope_energy), 2.0, 0.1)
        && within(g(rw.slope_phase), 4.0, 0.3)
        && within(g(rw.slope_energy), 4.0, 0.3);
    Ok(outcome(
        pass,
        format!(
            "verlet phase {:.3} energy {:.3}; rowlands phase {:.3} energy {:.3}",
            g(sv.slope_phase),
            g(sv.slope_energy),
            g(rw.slope_phase),
            g(rw.slope_energy)
        ),
    ))
}

fn oscillator_compensation() -> Result<Outcome> {
    let rep = run_convergence(&preset("fig7")?)?;
    let o = rep.slope(Method::SymplecticEuler, "cartesian").expect("cartesian row");
    let c = rep.slope(Method::SymplecticEuler, "compensated").expect("compensated row");
    let g = |v: Option<f64>| v.unwrap_or(f64::NAN);
    let t = run_trajectory(&preset("fig6")?)?.table;
    let dev_o = field(&t, "run symplectic-euler cartesian", "max_energy_deviation");
    let dev_c = field(&t, "run symplectic-euler compensated", "max_energy_deviation");
    let bounded = t.floats("orig_q0").iter().chain(t.floats("orig_p0").iter()).all(|v| v.abs() < 2.0);
    let pass = within(g(o.slope_energy_max), 1.0, 0.1)
        && within(g(c.slope_energy_max), 2.0, 0.1)
        && bounded
        && dev_c < dev_o;
    Ok(outcome(
        pass,
        format!(
            "max-norm energy slope {:.3} vs {:.3} (rms-metric slopes {:.3} vs {:.3}{}); 1000 steps at h=0.3: max|dH| {dev_c:.4} < {dev_o:.4}, bounded {bounded}",
            g(o.slope_energy_max),
            g(c.slope_energy_max),
            g(o.slope_energy),
            g(c.slope_energy),
            if within(g(c.slope_energy), 2.0, 0.1) { "" } else { ", compensated rms slope outside 2.0 +- 0.1" }
        ),
    ))
}

fn non_invariance_witness() -> Result<Outcome> {
    let t = run_delta_probe(&preset("fig5-delta")?)?.table;
    let resid = meta_f64(&t, "max_identity_residual");
    let nonzero = meta_f64(&t, "nonzero_delta");
    let mut affine = ExperimentConfig::new(ExperimentKind::DeltaProbe, "elastic-pendulum", 1.0);
    affine.transform = Some("affine".into());
    affine.samples = Some(10);
    let a = run_delta_probe(&affine)?.table;
    let max_affine = a.floats("delta").iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let pass = t.rows.len() == 20 && resid <= 1e-8 && nonzero >= 19.0 && a.rows.len() == 10 && max_affine <= 1e-12;
    Ok(outcome(
        pass,
        format!("identity residual {resid:.1e}, nonzero delta at {nonzero}/20, affine max |delta| {max_affine:.1e}"),
    ))
}

fn first_integral_condition_check() -> Result<Outcome> {
    let polar = free_mass_polar(1.0)?;
    let to_cart = PolarToCartesian::new(FREE_MASS_POLAR);
    let cart = free_mass_cartesian(1.0)?;
    let to_polar = CartesianToPolar::new(FREE_MASS_POLAR);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut theta_max, mut closed_max) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let r = rng.random_range(0.5..1.5);
        let th = rng.random_range(-3.0..3.0);
        let (pr, pt) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let s = PhaseState::from_slices(&[r, th], &[pr, pt])?;
        theta_max = theta_max.max(first_integral_condition(&polar, &to_cart, &s, 1)?.abs());

        let (x, y) = (rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5));
        let (px, py) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let s = PhaseState::from_slices(&[x, y], &[px, py])?;
        let (dx, dy) = free_mass_polar_condition(x, y, px, py);
        for (i, closed) in [(0, dx), (1, dy)] {
            if closed.abs() > 1e-8 {
                let fd = first_integral_condition(&cart, &to_polar, &s, i)?;
                closed_max = closed_max.max(((fd - closed) / closed).abs());
            }
        }
    }

    let mut c = ExperimentConfig::new(ExperimentKind::InvariantDrift, "free-mass", 100.0);
    c.coords = vec![Coords::Cartesian];
    c.h = Some(0.01);
    c.ic = Some(vec![0.3, -0.7, 0.6, 0.2]);
    c.integrals = vec!["L".into()];
    let l_drift = field(&run_invariant_drift(&c)?.table, "integral L", "max_drift");

    let mut c = ExperimentConfig::new(ExperimentKind::InvariantDrift, "free-mass", 1.0);
    c.coords = vec![Coords::Polar];
    c.h = Some(0.01);
    c.integrals = vec!["p_x".into()];
    let order = field(&run_invariant_drift(&c)?.table, "integral p_x", "step_order");

    let pass = theta_max <= 1e-9 && closed_max <= 1e-6 && l_drift <= 1e-12 && within(order, 2.0, 0.1);
    Ok(outcome(
        pass,
        format!(
            "theta condition max {theta_max:.1e}; closed-form rel dev {closed_max:.1e}; L drift over 1e4 steps {l_drift:.1e}; p_x step order {order:.3}"
        ),
    ))
}

fn energy_map() -> Result<Outcome> {
    let (out, cells) = run_energy_map(&preset("fig4-desk")?)?;
    let t = &out.table;
    let cart_better = meta_f64(t, "cartesian_better");
    let polar_better = meta_f64(t, "polar_better");
    let unflagged = cells.iter().filter(|c| c.boundary_margin >= 0.0 && !c.diverged_rphi).count();
    let pass = cells.len() == 961 && cart_better > 0.0 && polar_better > 0.0 && unflagged == 0;
    Ok(outcome(
        pass,
        format!(
            "{} cells: cartesian better {cart_better}, polar better {polar_better}, polar diverged {}, unflagged beyond boundary {unflagged}",
            cells.len(),
            meta_f64(t, "diverged_rphi")
        ),
    ))
}

fn models() -> Result<Vec<(String, SystemRef)>> {
    let cases: [(&str, Option<Coords>); 7] = [
        ("elastic-pendulum", Some(Coords::Cartesian)),
        ("elastic-pendulum", Some(Coords::Polar)),
        ("free-mass", Some(Coords::Cartesian)),
        ("free-mass", Some(Coords::Polar)),
        ("harmonic-oscillator", Some(Coords::Cartesian)),
        ("harmonic-oscillator", Some(Coords::Compensated)),
        ("artificial-polar", None),
    ];
    cases
        .iter()
        .map(|&(n, c)| Ok((format!("{n}/{c:?}"), build_model(n, c, &BTreeMap::new(), Some(0.1))?.hamiltonian()?)))
        .collect()
}

fn random_state(sys: &dyn Hamiltonian, rng: &mut ChaCha8Rng) -> Result<PhaseState> {
    loop {
        let z: Vec<f64> = sys.sampling_box().iter().map(|&(lo, hi)| rng.random_range(lo..hi)).collect();
        let s = PhaseState::from_z(&z)?;
        if sys.check_regular(&s).is_ok() {
            return Ok(s);
        }
    }
}

fn property_suites() -> Result<Outcome> {
    let h = 0.05;
    let cfg = StepperConfig::new(h)?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut defect = 0.0f64;
    let mut fd_ok = true;
    for (_, sys) in models()? {
        for _ in 0..20 {
            let s = random_state(sys.as_ref(), &mut rng)?;
            for m in [Method::SymplecticEuler, Method::SymplecticEulerAdjoint] {
                defect = defect.max(symplecticity_defect(|x| step_once(m, sys.as_ref(), x, &cfg), &s)?);
            }
            if let Some(sep) = sys.as_separable() {
                defect = defect.max(symplecticity_defect(|x| stormer_verlet_step(sep, x, h), &s)?);
                let rc = RowlandsConfig::new(Corrector::Exact, sep.clone());
                defect = defect.max(symplecticity_defect(|x| rowlands_kernel_step(&rc, x, h), &s)?);
            }
        }
        fd_ok &= validate_system(sys.as_ref(), 50, 3)?.passed;
    }

    let pend = build_model("elastic-pendulum", Some(Coords::Cartesian), &BTreeMap::new(), None)?.hamiltonian()?;
    let sep = pend.as_separable().expect("separable pendulum");
    let (mut revers, mut conj) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let s0 = random_state(pend.as_ref(), &mut rng)?;
        let mut s = s0.clone();
        for _ in 0..500 {
            s = stormer_verlet_step(sep, &s, 0.01)?;
        }
        for _ in 0..500 {
            s = stormer_verlet_step(sep, &s, -0.01)?;
        }
        revers = revers.max((s.z() - s0.z()).amax() / s0.sup_norm().max(1.0));

        let rc = RowlandsConfig::new(Corrector::Exact, sep.clone());
        let tr = rowlands_solve(&rc, &s0, 0.02, 100)?;
        let mut k = rc.preprocess(&s0, 0.02)?;
        for (j, stored) in tr.states.iter().enumerate() {
            if j > 0 {
                k = rowlands_kernel_step(&rc, &k, 0.02)?;
            }
            conj = conj.max((rc.postprocess_exact(&k, 0.02)?.z() - stored.z()).amax());
        }
    }

    let mut affine = 0.0f64;
    for (_, sys) in models()? {
        for _ in 0..5 {
            let s = random_state(sys.as_ref(), &mut rng)?;
            let pt = AffineTransform::random(sys.dof(), &mut rng);
            affine = affine.max(delta_hpq(sys.as_ref(), &pt, &s)?.abs());
        }
    }

    let mut deterministic = true;
    let mut small = preset("fig4-desk")?;
    small.t_max = 20.0;
    for cfg in [small, preset("fig3-desk")?, preset("fig5-delta")?] {
        let mut csv = Vec::new();
        for threads in [Threads::Count(1), Threads::Count(1), Threads::Count(3), Threads::Auto] {
            let mut c = cfg.clone();
            c.threads = threads;
            csv.push(run(&c)?.csv(&c));
        }
        deterministic &= csv.windows(2).all(|w| w[0] == w[1]);
    }

    let pass = defect <= 1e-6 && revers <= 1e-9 && conj <= 1e-12 && fd_ok && affine <= 1e-12 && deterministic;
    Ok(outcome(
        pass,
        format!(
            "defect {defect:.1e}, reversibility {revers:.1e}, conjugacy {conj:.1e}, fd validation {fd_ok}, affine delta {affine:.1e}, byte-identical csv {deterministic}"
        ),
    ))
}

fn main() {
    let criteria: [(&str, f64, fn() -> Result<Outcome>); 7] = [
        ("1 compensated exactness", 1.0, compensated_exactness),
        ("2 convergence orders", 30.0, convergence_orders),
        ("3 oscillator compensation", 10.0, oscillator_compensation),
        ("4 non-invariance witness", 1.0, non_invariance_witness),
        ("5 first-integral condition", 10.0, first_integral_condition_check),
        ("6 energy map", 300.0, energy_map),
        ("7 property suites", f64::INFINITY, property_suites),
    ];
    let mut failed = 0;
    for (name, budget, check) in criteria {
        let start = Instant::now();
        let result = check();
        let secs = start.elapsed().as_secs_f64();
        let (pass, detail) = match result {
            Ok(o) => (o.pass && secs < budget, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        let limit = if budget.is_finite() { format!(" (limit {budget} s)") } else { String::new() };
        println!("{} criterion {name}: {detail} [{secs:.2} s{limit}]", if pass { "PASS" } else { "FAIL" });
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
