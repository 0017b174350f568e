use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use symcoord_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(symcoord_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn model_energy_and_solve() {
    unsafe {
        let mut m = ptr::null_mut();
        let name = c("elastic-pendulum");
        let coords = c("cartesian");
        let params = c("g=0.2");
        assert_eq!(symcoord_model_new(name.as_ptr(), coords.as_ptr(), params.as_ptr(), 0.0, &mut m), SymcoordStatus::Ok);
        let mut dof = 0;
        assert_eq!(symcoord_model_dof(m, &mut dof), SymcoordStatus::Ok);
        assert_eq!(dof, 2);
        let mut z0 = [0.0; 4];
        assert_eq!(symcoord_model_default_state(m, z0.as_mut_ptr(), 4), SymcoordStatus::Ok);
        let mut e0 = 0.0;
        assert_eq!(symcoord_energy(m, z0.as_ptr(), 4, &mut e0), SymcoordStatus::Ok);

        let method = c("rowlands-cheap");
        let mut t = ptr::null_mut();
        assert_eq!(symcoord_solve(m, method.as_ptr(), z0.as_ptr(), 4, 0.01, 400, &mut t), SymcoordStatus::Ok);
        assert_eq!(symcoord_trajectory_len(t), 401);
        assert_eq!(symcoord_trajectory_diverged_at(t), -1);
        let (mut time, mut z) = (0.0, [0.0; 4]);
        assert_eq!(symcoord_trajectory_state(t, 400, &mut time, z.as_mut_ptr(), 4), SymcoordStatus::Ok);
        assert!((time - 4.0).abs() < 1e-12);
        let mut e = 0.0;
        symcoord_energy(m, z.as_ptr(), 4, &mut e);
        assert!((e - e0).abs() < 1e-7);
        assert_eq!(symcoord_trajectory_state(t, 401, &mut time, z.as_mut_ptr(), 4), SymcoordStatus::InvalidArgument);
        assert!(last_error().contains("out of range"));

        let mut hphq = 0.0;
        assert_eq!(symcoord_elementary_hpq(m, z0.as_ptr(), 4, &mut hphq), SymcoordStatus::Ok);
        let tr = c("cartesian-to-polar");
        let zs = [0.7, -1.2, 0.4, 0.9];
        let mut delta = 0.0;
        assert_eq!(symcoord_delta_hpq(m, tr.as_ptr(), zs.as_ptr(), 4, &mut delta), SymcoordStatus::Ok);
        assert!(delta.abs() > 1e-6);

        let mut polar = [0.0; 4];
        assert_eq!(symcoord_chart_map(m, 1, zs.as_ptr(), 4, polar.as_mut_ptr(), 4), SymcoordStatus::Ok);
        assert_eq!(polar, zs);

        symcoord_trajectory_free(t);
        symcoord_model_free(m);
    }
}

#[test]
fn errors_are_reported_with_codes() {
    unsafe {
        let mut m = ptr::null_mut();
        let bad = c("no-such-model");
        assert_eq!(symcoord_model_new(bad.as_ptr(), ptr::null(), ptr::null(), 0.0, &mut m), SymcoordStatus::Configuration);
        assert!(m.is_null());
        assert!(last_error().contains("no-such-model"));
        assert_eq!(symcoord_model_new(ptr::null(), ptr::null(), ptr::null(), 0.0, &mut m), SymcoordStatus::NullPointer);

        let ho = c("harmonic-oscillator");
        assert_eq!(symcoord_model_new(ho.as_ptr(), ptr::null(), ptr::null(), 0.0, &mut m), SymcoordStatus::Ok);
        let z = [1.0, 0.0, 0.0];
        let mut e = 0.0;
        assert_eq!(symcoord_energy(m, z.as_ptr(), 3, &mut e), SymcoordStatus::InvalidArgument);
        assert_eq!(symcoord_energy(m, z.as_ptr(), 2, &mut e), SymcoordStatus::Ok);
        assert!(last_error().is_empty());
        let method = c("leapfrog-9000");
        let mut t = ptr::null_mut();
        assert_eq!(symcoord_solve(m, method.as_ptr(), z.as_ptr(), 2, 0.1, 10, &mut t), SymcoordStatus::Configuration);
        symcoord_model_free(m);

        let comp = c("compensated");
        assert_eq!(symcoord_model_new(ho.as_ptr(), comp.as_ptr(), ptr::null(), 0.0, &mut m), SymcoordStatus::Configuration);
    }
}

#[test]
fn experiment_round_trip() {
    let toml = c("experiment = \"compensate-demo\"\nmodel = \"cooling\"\nh = 0.3\nt-max = 3.0\n");
    unsafe {
        let mut csv = ptr::null_mut();
        assert_eq!(symcoord_run_experiment(toml.as_ptr(), &mut csv), SymcoordStatus::Ok);
        let text = CStr::from_ptr(csv).to_str().unwrap().to_string();
        symcoord_string_free(csv);
        assert!(text.starts_with("# config: "));
        assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 12);

        let bad = c("experiment = \"compensate-demo\"\nmodel = \"free-mass\"\nh = 0.3\nt-max = 3.0\n");
        assert_eq!(symcoord_run_experiment(bad.as_ptr(), &mut csv), SymcoordStatus::Configuration);
        assert!(csv.is_null());
    }
}

#[test]
fn c_program_links_against_the_static_library() {
    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    // test binaries live in <target>/<profile>/deps
    let profile_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let lib = profile_dir.join("libsymcoord_ffi.a");
    assert!(lib.exists(), "{} missing", lib.display());
    let out = tempfile::tempdir().unwrap();
    let exe = out.path().join("smoke");
    let st = Command::new("cc")
        .arg(crate_dir.join("tests/smoke.c"))
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&exe)
        .status()
        .expect("a C compiler");
    assert!(st.success());
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    let stdout = String::from_utf8_lossy(&run.stdout);
    let f: Vec<f64> = stdout.split_whitespace().map(|x| x.parse().unwrap()).collect();
    assert_eq!(f[..2], [101.0, 1.0]);
    assert!((f[2] - 0.5).abs() < 1e-4);
}
