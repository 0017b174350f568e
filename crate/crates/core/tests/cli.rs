use std::fs;
use std::process::Command;

fn symcoord() -> Command {
    Command::new(env!("CARGO_BIN_EXE_symcoord"))
}

#[test]
fn preset_writes_csv_and_plot_script() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("nested/fig1.csv");
    let st = symcoord().args(["--preset", "fig1", "--out"]).arg(&out).output().unwrap().status;
    assert!(st.success());
    let csv = fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# config: {"));
    let header = csv.lines().find(|l| !l.starts_with('#')).unwrap();
    assert!(header.starts_with("t,y_numeric_original,y_numeric_compensated,y_exact"));
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 12);
    let gp = fs::read_to_string(dir.path().join("nested/fig1.gp")).unwrap();
    assert!(gp.contains("fig1.csv"));
}

#[test]
fn flags_build_a_config_and_stdout_receives_csv() {
    let out = symcoord()
        .args(["invariant-drift", "--model", "free-mass", "--coords", "polar", "--method", "symplectic-euler"])
        .args(["--h", "0.1", "--t-max", "1", "--integrals", "p_theta,p_x"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\nt,drift_p_theta,drift_p_x\n"));
    assert!(text.contains("# integral p_x: max_drift="));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        "experiment = \"compensate-demo\"\nmodel = \"cooling\"\nh = 0.3\nt-max = 3.0\n[params]\nalpha = 1.0\n",
    )
    .unwrap();
    let out = symcoord().arg("--config").arg(&cfg).args(["--t-max", "0.6"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\"t-max\":0.6"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 4);
}

#[test]
fn identical_runs_are_byte_identical() {
    let run = |threads: &str| {
        symcoord()
            .args(["delta-probe", "--model", "elastic-pendulum", "--t-max", "1", "--seed", "9", "--threads", threads])
            .output()
            .unwrap()
            .stdout
    };
    let a = run("1");
    assert!(!a.is_empty());
    assert_eq!(a, run("1"));
    assert_eq!(a, run("2"));
}

#[test]
fn exit_codes() {
    let code = |args: &[&str]| symcoord().args(args).output().unwrap().status.code();
    assert_eq!(code(&["convergence", "--model", "no-such-model", "--t-max", "1"]), Some(2));
    assert_eq!(code(&["--preset", "fig99"]), Some(2));
    assert_eq!(code(&["--preset", "fig1", "--t-max", "-1"]), Some(2));
    assert_eq!(code(&["--preset", "fig1", "--bogus"]), Some(2));
    // released beyond the polar divergence boundary: every step size fails
    assert_eq!(
        code(&[
            "convergence", "--model", "elastic-pendulum", "--coords", "polar", "--method", "symplectic-euler",
            "--h-max", "0.02", "--h-min", "0.01", "--n-h", "4", "--t-max", "50", "--ic", "0,-3,0,0",
        ]),
        Some(3)
    );
}
