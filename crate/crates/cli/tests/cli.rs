//! End-to-end tests of the `jjcomp` binary: exit codes, output formats and
//! the external waveform interface.

use std::path::PathBuf;
use std::process::{Command, Output};
use std::sync::atomic::{AtomicU64, Ordering};

static COUNTER: AtomicU64 = AtomicU64::new(0);

fn scratch_path(name: &str) -> PathBuf {
    let n = COUNTER.fetch_add(1, Ordering::Relaxed);
    std::env::temp_dir().join(format!(
        "jjcomp-cli-test-{}-{n}-{name}",
        std::process::id()
    ))
}

fn write_file(name: &str, contents: &str) -> PathBuf {
    let path = scratch_path(name);
    std::fs::write(&path, contents).unwrap();
    path
}

fn jjcomp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jjcomp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn base_config_json() -> String {
    r#"{
        "parameters": {"dimensionless": {"beta_c": 1.0, "q": 498.0, "theta": 0.6}},
        "waveform": {"kind": "step", "t_inv": 16.0, "t_end": 32.0},
        "plateau_check": false
    }"#
    .to_string()
}

#[test]
fn gray_zone_single_point_csv() {
    let cfg = write_file("single.json", &base_config_json());
    let out = jjcomp(&["gray-zone", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let mut lines = stdout.lines();
    assert_eq!(
        lines.next().unwrap(),
        "axis,value,delta_ix_over_ic,delta_ix_amperes,err,plateau_ok,C,Q1,K1,status"
    );
    let row = lines.next().unwrap();
    assert!(row.starts_with("single,0,"), "row: {row}");
    assert!(row.ends_with(",ok"), "row: {row}");
    let width: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
    assert!(width > 0.0 && width < 1.0);
}

#[test]
fn malformed_config_exits_2() {
    let cfg = write_file("bad.json", "{\"parameters\": 42}");
    let out = jjcomp(&["gray-zone", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("configuration error"));
}

#[test]
fn missing_config_file_exits_2() {
    let out = jjcomp(&["gray-zone", "--config", "/nonexistent/path.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn destroyed_instability_exits_3() {
    let cfg = write_file(
        "lambda.json",
        r#"{
            "parameters": {"dimensionless": {"beta_c": 1.0, "q": 498.0, "theta": 0.6}},
            "waveform": {"kind": "step", "t_inv": 16.0, "t_end": 32.0},
            "lambda": 0.4,
            "plateau_check": false
        }"#,
    );
    let out = jjcomp(&["gray-zone", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no instability"));
}

#[test]
fn sweep_rows_and_json_round_trip() {
    let cfg = write_file(
        "sweep.json",
        r#"{
            "parameters": {"dimensionless": {"beta_c": 1.0, "q": 498.0, "theta": 0.6}},
            "waveform": {"kind": "step", "t_inv": 16.0, "t_end": 32.0},
            "sweep": {"axis": "temperature", "values": [0.3, 0.6, 1.2]},
            "output": {"format": "json"},
            "plateau_check": false
        }"#,
    );
    let out = jjcomp(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    let rows = doc["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    for row in rows {
        assert_eq!(row["status"], "ok");
        assert!(row["delta_ix_over_ic"].as_f64().unwrap() > 0.0);
        assert_eq!(row["err"].as_f64().unwrap(), 0.0);
    }

    // Re-serializing the parsed document reproduces every numeric field
    // bit-exactly (shortest round-trip float formatting).
    let reparsed: serde_json::Value =
        serde_json::from_str(&serde_json::to_string(&doc).unwrap()).unwrap();
    for (a, b) in rows.iter().zip(reparsed["rows"].as_array().unwrap()) {
        for key in ["value", "delta_ix_over_ic", "err", "c", "q1", "k1"] {
            let x = a[key].as_f64().unwrap();
            let y = b[key].as_f64().unwrap();
            assert_eq!(x.to_bits(), y.to_bits(), "field {key}");
        }
    }

    // Determinism: a second identical run emits identical bytes.
    let out2 = jjcomp(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.stdout, out2.stdout);
}

#[test]
fn sweep_with_partial_failures_still_succeeds() {
    let cfg = write_file(
        "sweep-partial.json",
        r#"{
            "parameters": {"dimensionless": {"beta_c": 1.0, "q": 498.0, "theta": 0.6}},
            "waveform": {"kind": "step", "t_inv": 16.0, "t_end": 32.0},
            "sweep": {"axis": "lambda", "values": [0.4, 5.0]},
            "plateau_check": false
        }"#,
    );
    let out = jjcomp(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "partial failure should keep exit 0");
    let stdout = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = stdout.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].contains("no instability"));
    assert!(rows[1].ends_with(",ok"));
}

#[test]
fn monte_carlo_rows_carry_error_bars() {
    let cfg = write_file(
        "mc.json",
        r#"{
            "parameters": {"dimensionless": {"beta_c": 1.0, "q": 498.0, "theta": 0.0}},
            "waveform": {"kind": "step", "t_inv": 12.0, "t_end": 24.0},
            "method": "monte_carlo",
            "mc": {"sample_budget": 40000, "n_adapt_iterations": 3,
                   "stratification_bins": 4, "rng_seed": 11},
            "plateau_check": false
        }"#,
    );
    let out = jjcomp(&["gray-zone", "--config", cfg.to_str().unwrap(), "--seed", "99"]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let row = stdout.lines().nth(1).unwrap();
    let err: f64 = row.split(',').nth(4).unwrap().parse().unwrap();
    assert!(err > 0.0, "Monte Carlo row should carry an error bar: {row}");
}

#[test]
fn prob_curve_is_a_sigmoid() {
    let cfg = write_file(
        "curve.json",
        r#"{
            "parameters": {"dimensionless": {"beta_c": 1.0, "q": 498.0, "theta": 0.6}},
            "waveform": {"kind": "step", "t_inv": 16.0, "t_end": 32.0},
            "ix_over_ic": {"range": {"start": -0.2, "stop": 0.2, "points": 41}},
            "plateau_check": false
        }"#,
    );
    let out = jjcomp(&["prob-curve", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    let mut lines = stdout.lines();
    assert_eq!(lines.next().unwrap(), "ix_over_ic,p");
    let points: Vec<(f64, f64)> = lines
        .map(|l| {
            let mut it = l.split(',');
            (
                it.next().unwrap().parse().unwrap(),
                it.next().unwrap().parse().unwrap(),
            )
        })
        .collect();
    assert_eq!(points.len(), 41);
    assert_eq!(points[20].1, 0.5);
    for w in points.windows(2) {
        assert!(w[1].1 < w[0].1, "p must decrease in Ix");
    }
    for (l, r) in points.iter().zip(points.iter().rev()) {
        assert!((l.1 + r.1 - 1.0).abs() < 1e-12);
    }
}

#[test]
fn waveform_info_reads_phi_e_tables() {
    let table = write_file(
        "drive.csv",
        "# SFQ pulse drive\nt,phi_e\n0,0\n5,1.5707963267948966\n10,3.141592653589793\n20,6.283185307179586\n",
    );
    let cfg = write_file(
        "info.json",
        &format!(
            r#"{{
                "parameters": {{"dimensionless": {{"beta_c": 1.0, "q": 498.0, "theta": 0.6}}}},
                "waveform": {{"kind": "table", "path": "{}"}}
            }}"#,
            table.to_str().unwrap()
        ),
    );
    let out = jjcomp(&["waveform-info", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let info: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(info["t_end"].as_f64().unwrap(), 20.0);
    assert_eq!(info["mu_initial"].as_f64().unwrap(), 1.0);
    assert!((info["mu_final"].as_f64().unwrap() + 1.0).abs() < 1e-12);
    assert!(info["has_instability"].as_bool().unwrap());
    let t_inv = info["inversion_time"].as_f64().unwrap();
    assert!((t_inv - 10.0).abs() < 1e-6, "t_inv = {t_inv}");
}

#[test]
fn dump_bvp_writes_basis_csv() {
    let cfg = write_file("dump.json", &base_config_json());
    let dump = scratch_path("bvp.csv");
    let out = jjcomp(&[
        "gray-zone",
        "--config",
        cfg.to_str().unwrap(),
        "--dump-bvp",
        dump.to_str().unwrap(),
        "--out",
        scratch_path("row.csv").to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&dump).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,a1,a2,a,b1,b2,a1_prime,a2_prime,a_prime,b1_prime,b2_prime"
    );
    assert_eq!(lines.count(), 3201); // 32/0.01 + 1 nodes
}
