use std::collections::BTreeMap;
use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use symcoord::diagnostics::{delta_hpq, delta_identity};
use symcoord::experiments::{preset, run, Axis, ExperimentConfig, ExperimentKind, GridSpec, Threads};
use symcoord::fd::validate_system;
use symcoord::integrators::{
    rowlands_kernel_step, rowlands_solve, step_once, stormer_verlet_step, symplecticity_defect, Corrector, Method,
    RowlandsConfig, StepperConfig,
};
use symcoord::models::{build_model, free_mass_cartesian, Coords, PENDULUM_POLAR};
use symcoord::system::SystemRef;
use symcoord::transforms::{AffineTransform, CartesianToPolar, TransformRef};
use symcoord::{Hamiltonian, PhaseState};

const H: f64 = 0.05;

fn systems() -> Vec<(String, SystemRef)> {
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
        .map(|&(name, c)| {
            let e = build_model(name, c, &BTreeMap::new(), Some(0.1)).unwrap();
            (format!("{name}/{c:?}"), e.hamiltonian().unwrap())
        })
        .collect()
}

/// A point of `sys`'s sampling box selected by `u ∈ [0,1)^4`.
fn state_in_box(sys: &dyn Hamiltonian, u: &[f64; 4]) -> PhaseState {
    let b = sys.sampling_box();
    let z: Vec<f64> = b.iter().zip(u.iter()).map(|(&(lo, hi), t)| lo + (hi - lo) * t).collect();
    PhaseState::from_z(&z).unwrap()
}

fn unit4() -> impl Strategy<Value = [f64; 4]> {
    prop::array::uniform4(0.0..1.0f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn symplectic_steppers_have_small_defect(u in unit4()) {
        let cfg = StepperConfig::new(H).unwrap();
        for (label, sys) in systems() {
            let s = state_in_box(sys.as_ref(), &u);
            prop_assume!(sys.check_regular(&s).is_ok());
            for m in [Method::SymplecticEuler, Method::SymplecticEulerAdjoint] {
                let d = symplecticity_defect(|x| step_once(m, sys.as_ref(), x, &cfg), &s).unwrap();
                prop_assert!(d <= 1e-6, "{m} on {label}: {d}");
            }
            if let Some(sep) = sys.as_separable() {
                let d = symplecticity_defect(|x| stormer_verlet_step(sep, x, H), &s).unwrap();
                prop_assert!(d <= 1e-6, "verlet on {label}: {d}");
                let rc = RowlandsConfig::new(Corrector::Exact, sep.clone());
                let d = symplecticity_defect(|x| rowlands_kernel_step(&rc, x, H), &s).unwrap();
                prop_assert!(d <= 1e-6, "rowlands kernel on {label}: {d}");
            }
        }
    }

    #[test]
    fn verlet_is_reversible(u in unit4(), n in 1usize..200) {
        let e = build_model("elastic-pendulum", Some(Coords::Cartesian), &BTreeMap::new(), None).unwrap();
        let sys = e.hamiltonian().unwrap();
        let sep = sys.as_separable().unwrap();
        let s0 = state_in_box(sys.as_ref(), &u);
        let mut s = s0.clone();
        for _ in 0..n {
            s = stormer_verlet_step(sep, &s, 0.01).unwrap();
        }
        for _ in 0..n {
            s = stormer_verlet_step(sep, &s, -0.01).unwrap();
        }
        let err = (s.z() - s0.z()).amax() / s0.sup_norm().max(1.0);
        prop_assert!(err <= 1e-9, "{err}");
    }

    #[test]
    fn rowlands_exact_is_a_conjugacy(u in unit4(), n in 1usize..100) {
        let e = build_model("elastic-pendulum", Some(Coords::Cartesian), &BTreeMap::new(), None).unwrap();
        let sys = e.hamiltonian().unwrap();
        let rc = RowlandsConfig::new(Corrector::Exact, sys.as_separable().unwrap().clone());
        let s0 = state_in_box(sys.as_ref(), &u);
        let h = 0.02;
        let tr = rowlands_solve(&rc, &s0, h, n).unwrap();
        let mut k = rc.preprocess(&s0, h).unwrap();
        for j in 0..=n {
            if j > 0 {
                k = rowlands_kernel_step(&rc, &k, h).unwrap();
            }
            let post = rc.postprocess_exact(&k, h).unwrap();
            let err = (post.z() - tr.states[j].z()).amax();
            prop_assert!(err <= 1e-12, "index {j}: {err}");
        }
    }

    #[test]
    fn affine_transforms_have_zero_delta(u in unit4(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (label, sys) in systems() {
            let s = state_in_box(sys.as_ref(), &u);
            prop_assume!(sys.check_regular(&s).is_ok());
            let pt = AffineTransform::random(sys.dof(), &mut rng);
            let d = delta_hpq(sys.as_ref(), &pt, &s).unwrap();
            prop_assert!(d.abs() <= 1e-12, "{label}: {d}");
        }
    }

    #[test]
    fn delta_identity_holds_for_polar_pendulum(u in unit4()) {
        let e = build_model("elastic-pendulum", Some(Coords::Cartesian), &BTreeMap::new(), None).unwrap();
        let sys = e.hamiltonian().unwrap();
        let s = state_in_box(sys.as_ref(), &u);
        prop_assume!(s.q.norm() > 1e-3);
        let pt: TransformRef = Arc::new(CartesianToPolar::new(PENDULUM_POLAR));
        let (lhs, delta) = delta_identity(&sys, &pt, &s).unwrap();
        prop_assert!((lhs - delta).abs() <= 1e-8, "{lhs} vs {delta}");
    }

    #[test]
    fn free_mass_angular_momentum_is_exact(x in -2.0..2.0f64, y in -2.0..2.0f64, px in -1.0..1.0f64, py in -1.0..1.0f64) {
        let sys = free_mass_cartesian(1.0).unwrap();
        let s0 = PhaseState::from_slices(&[x, y], &[px, py]).unwrap();
        let l = |s: &PhaseState| s.q[0] * s.p[1] - s.q[1] * s.p[0];
        let tr = symcoord::solve(Method::SymplecticEuler, &sys, &s0, 0.01, 10_000).unwrap();
        let l0 = l(&s0);
        for s in &tr.states {
            let scale = (s.q.amax() * s.p.amax()).max(l0.abs()).max(1.0);
            prop_assert!((l(s) - l0).abs() <= 1e-12 * scale);
        }
    }
}

#[test]
fn analytic_gradients_match_finite_differences() {
    for (label, sys) in systems() {
        let r = validate_system(sys.as_ref(), 50, 1).unwrap();
        assert!(r.passed, "{label}: {}", r.max_deviation);
    }
}

fn small_map() -> ExperimentConfig {
    let mut c = ExperimentConfig::new(ExperimentKind::EnergyMap, "elastic-pendulum", 20.0);
    c.h = Some(0.2);
    c.params.insert("g".into(), 0.02);
    c.grid = Some(GridSpec { x: Axis { lo: -1.5, hi: 1.5, n: 7 }, y: Axis { lo: -1.5, hi: 1.5, n: 7 } });
    c
}

#[test]
fn csv_is_byte_identical_across_runs_and_thread_counts() {
    let mut delta = preset("fig5-delta").unwrap();
    delta.seed = 42;
    for cfg in [small_map(), preset("fig3-desk").unwrap(), delta] {
        let mut outputs = Vec::new();
        for threads in [Threads::Count(1), Threads::Count(1), Threads::Count(4), Threads::Auto] {
            let mut c = cfg.clone();
            c.threads = threads;
            outputs.push(run(&c).unwrap().csv(&c));
        }
        assert!(outputs.windows(2).all(|w| w[0] == w[1]), "{}", cfg.experiment);
    }
}
