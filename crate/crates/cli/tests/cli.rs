//! End-to-end checks of the binary: flag validation, exit codes, file
//! formats, and config-file handling.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ep2l"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn read_csv_columns(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(|v| v.parse::<f64>().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn simulate_rabi_matches_the_analytic_cosine() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "simulate",
        "--passage",
        "constant-kappa",
        "--kappa0",
        "1",
        "--gamma",
        "linear:0,0",
        "--t0",
        "0",
        "--t1",
        "10",
        "--dt",
        "0.001",
        "--stride",
        "10",
        "--bloch",
        "0,0,1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let (header, rows) = read_csv_columns(&dir.path().join("trajectory.csv"));
    assert_eq!(
        header.join(","),
        "t,p11_re,p11_im,p12_re,p12_im,p21_re,p21_im,p22_re,p22_im,ax,ay,az,purity,log_norm"
    );
    let t_col = 0;
    let az_col = header.iter().position(|h| h == "az").unwrap();
    for row in &rows {
        let expect = (2.0 * row[t_col]).cos();
        assert!(
            (row[az_col] - expect).abs() <= 1e-6,
            "t = {}: az = {} vs cos = {expect}",
            row[t_col],
            row[az_col]
        );
    }
}

#[test]
fn simulate_from_the_coalescing_state_decays() {
    // from [1, 0]ᵀ at t = 0 the amplitudes head toward the zero vector:
    // the log-norm column falls monotonically over the recorded samples
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "simulate",
        "--passage",
        "diabatic",
        "--n",
        "0",
        "--t0",
        "0",
        "--t1",
        "4",
        "--dt",
        "0.001",
        "--stride",
        "500",
        "--amps",
        "1,0,0,0",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let (header, rows) = read_csv_columns(&dir.path().join("trajectory.csv"));
    let ln_col = header.iter().position(|h| h == "log_norm").unwrap();
    for pair in rows.windows(2) {
        assert!(
            pair[1][ln_col] < pair[0][ln_col],
            "log-norm should decrease: {} → {}",
            pair[0][ln_col],
            pair[1][ln_col]
        );
    }
    let last = rows.last().unwrap()[ln_col];
    assert!(
        last < -5.0,
        "final log-norm {last} should reflect the decay"
    );
}

#[test]
fn numerical_failure_exits_3_with_partial_output() {
    // coarse first-order stepping through the strongly broken region aborts;
    // the partial trajectory is kept and carries the failure marker
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "simulate",
        "--passage",
        "diabatic",
        "--n",
        "0",
        "--t0",
        "-4",
        "--t1",
        "4",
        "--dt",
        "0.001",
        "--method",
        "euler",
        "--stride",
        "10",
        "--bloch",
        "0,0.6,-0.8",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    let text = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert!(text.lines().count() > 1, "partial rows retained");
    assert!(
        text.lines()
            .last()
            .unwrap()
            .starts_with("# numerical_failure t="),
        "{text}"
    );
}

#[test]
fn simulate_rejects_bad_step() {
    let out = run(&[
        "simulate",
        "--passage",
        "diabatic",
        "--n",
        "0",
        "--t0",
        "0",
        "--t1",
        "1",
        "--dt",
        "0",
        "--bloch",
        "0,0,1",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_requires_exactly_one_initial_state() {
    let base = [
        "simulate",
        "--passage",
        "diabatic",
        "--n",
        "0",
        "--t0",
        "0",
        "--t1",
        "1",
    ];
    let none = run(&base);
    assert_eq!(none.status.code(), Some(2));
    let both = bin()
        .args(base)
        .args(["--amps", "1,0,0,0", "--bloch", "0,0,1"])
        .output()
        .unwrap();
    assert_eq!(both.status.code(), Some(2));
}

#[test]
fn oracle_emits_the_odd_parity_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "oracle",
        "--n",
        "1",
        "--t0",
        "-2",
        "--t1",
        "2",
        "--dt",
        "0.5",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let (header, rows) = read_csv_columns(&dir.path().join("oracle.csv"));
    assert_eq!(header.join(","), "t,x,dx,ax,ay,az");
    let row0 = rows.iter().find(|r| r[0] == 0.0).expect("t = 0 row");
    assert_eq!(row0[1], 0.0, "x_1(0)");
}

#[test]
fn oracle_rejects_non_integer_index() {
    let out = run(&["oracle", "--n", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn ep_reports_the_diabatic_pair() {
    let out = run(&[
        "ep",
        "--passage",
        "diabatic",
        "--n",
        "0",
        "--t0",
        "-4",
        "--t1",
        "4",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("exceptional points: 2"), "{text}");
    assert!(text.contains("t_c = -1.0000000000000000e0"), "{text}");
    assert!(text.contains("t_c = 1.0000000000000000e0"), "{text}");
    assert!(
        text.contains("[1.000000+0.000000i, 0.000000+0.000000i]"),
        "{text}"
    );
}

#[test]
fn figure_dataset_lists_the_quadratic_ep_triple() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["figure", "fig2b", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    let eps: Vec<f64> = report["ep_times"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert_eq!(eps.len(), 3);
    assert!((eps[0] + std::f64::consts::SQRT_2).abs() < 1e-10);
    assert!(eps[1].abs() < 1e-6);
    assert!((eps[2] - std::f64::consts::SQRT_2).abs() < 1e-10);
    // pinned report keys
    for key in [
        "spec",
        "ep_times",
        "diameter_series",
        "orbit_distance_series",
        "min_purity",
        "fixed_point",
        "failures",
        "format_version",
    ] {
        assert!(report.get(key).is_some(), "report lacks `{key}`");
    }
    assert!(report["orbit_distance_series"].is_null());
    assert_eq!(report["format_version"], 1);
}

#[test]
fn figure_rejects_unknown_ids() {
    let out = run(&["figure", "fig9"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn ensemble_rejects_empty_counts() {
    let out = run(&[
        "ensemble",
        "--passage",
        "diabatic",
        "--n",
        "0",
        "--t0",
        "-1",
        "--t1",
        "1",
        "--pure",
        "0",
        "--mixed",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn constant_kappa_requires_a_gamma_ramp() {
    let out = run(&[
        "simulate",
        "--passage",
        "constant-kappa",
        "--kappa0",
        "1",
        "--t0",
        "0",
        "--t1",
        "1",
        "--bloch",
        "0,0,1",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        r#"
[passage]
family = "diabatic"
n = 0.0
t0 = 0.0
t1 = 2.0

[integrator]
dt = 0.01
stride = 100

[initial]
bloch = [0.0, 0.0, 1.0]

[output]
dir = "from-config"
"#,
    )
    .unwrap();
    // config alone
    let out = bin()
        .current_dir(dir.path())
        .args(["simulate", "--config", cfg.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let (_, rows) = read_csv_columns(&dir.path().join("from-config/trajectory.csv"));
    assert_eq!(rows.len(), 3); // t = 0, 1, 2

    // --t1 flag overrides the file value
    let out = bin()
        .current_dir(dir.path())
        .args(["simulate", "--config", cfg.to_str().unwrap(), "--t1", "4.0"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let (_, rows) = read_csv_columns(&dir.path().join("from-config/trajectory.csv"));
    assert_eq!(rows.len(), 5); // t = 0 .. 4
    assert_eq!(rows.last().unwrap()[0], 4.0);
}

#[test]
fn config_file_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(
        &cfg,
        "[passage]\nfamily = \"diabatic\"\nn = 0.0\nt0 = 0.0\nt1 = 1.0\nwobble = 3\n",
    )
    .unwrap();
    let out = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--bloch",
        "0,0,1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("wobble"), "{err}");
}

#[test]
fn ensemble_writes_one_file_per_member_plus_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "ensemble",
        "--passage",
        "linear",
        "--t0",
        "-6",
        "--t1",
        "0",
        "--dt",
        "0.001",
        "--stride",
        "100",
        "--pure",
        "2",
        "--mixed",
        "1",
        "--seed",
        "7",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let mut names: Vec<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(
        names,
        vec![
            "member_000.csv",
            "member_001.csv",
            "member_002.csv",
            "report.json"
        ]
    );
}

#[test]
fn lab_frame_output_rotates_the_trajectory() {
    // the same passage emitted in both frames: Bloch columns must differ,
    // purity must not
    let args = |frame: &str, out: &str| {
        vec![
            "simulate".to_string(),
            "--passage".into(),
            "diabatic".into(),
            "--n".into(),
            "0".into(),
            "--t0".into(),
            "-1".into(),
            "--t1".into(),
            "1".into(),
            "--dt".into(),
            "0.01".into(),
            "--stride".into(),
            "50".into(),
            "--bloch".into(),
            "0,0,1".into(),
            "--frame".into(),
            frame.into(),
            "--out".into(),
            out.into(),
        ]
    };
    let dir = tempfile::tempdir().unwrap();
    let native = dir.path().join("native");
    let lab = dir.path().join("lab");
    assert!(bin()
        .args(args("native", native.to_str().unwrap()))
        .status()
        .unwrap()
        .success());
    assert!(bin()
        .args(args("lab", lab.to_str().unwrap()))
        .status()
        .unwrap()
        .success());
    let (h, native_rows) = read_csv_columns(&native.join("trajectory.csv"));
    let (_, lab_rows) = read_csv_columns(&lab.join("trajectory.csv"));
    let ay = h.iter().position(|c| c == "ay").unwrap();
    let purity = h.iter().position(|c| c == "purity").unwrap();
    let mut bloch_differs = false;
    for (a, b) in native_rows.iter().zip(&lab_rows) {
        bloch_differs |= (a[ay] - b[ay]).abs() > 1e-6;
        assert!((a[purity] - b[purity]).abs() < 1e-12);
    }
    assert!(
        bloch_differs,
        "frame change should move the Bloch components"
    );
}
