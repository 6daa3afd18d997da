use std::process::{Command, Output};

use kwgauss::circuit::{parse_text, simulate, to_text, Circuit, SparseState};
use kwgauss::kw1d::{build_kw1d, Kw1dConfig};
use serde_json::Value;

fn kwgauss(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kwgauss"))
        .args(args)
        .env_remove("KWGAUSS_QUBIT_CAP")
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> Vec<Value> {
    let out = kwgauss(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice::<Value>(&out.stdout).unwrap().as_array().unwrap().clone()
}

#[test]
fn prep1d_row_has_counts_and_fidelity() {
    let rows = json(&["prep1d", "--k", "4", "--b", "6", "--sigma", "2"]);
    assert_eq!(rows.len(), 1);
    let r = &rows[0];
    assert_eq!(r["k"], 4);
    assert_eq!(r["regimes"].as_array().unwrap().len(), 4);
    assert_eq!(r["cnot_exponential_formula"], 14);
    assert!(r["cnot_kw"].as_u64().unwrap() > 0);
    let f = r["fidelity"].as_f64().unwrap();
    assert!(f > 0.99 && f <= 1.0, "{f}");
}

#[test]
fn fidelity_rises_with_angle_bits() {
    let rows = json(&["prep1d", "--k", "4", "--b", "2..8", "--sigma", "2"]);
    let f: Vec<f64> = rows.iter().map(|r| r["fidelity"].as_f64().unwrap()).collect();
    assert_eq!(f.len(), 7);
    assert!(f.windows(2).all(|w| w[1] > w[0]), "{f:?}");
}

#[test]
fn above_cap_falls_back_to_counts() {
    let out = kwgauss(&["prep1d", "--k", "26", "--b", "4"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
    let rows: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(rows[0].get("fidelity").is_none());
    assert!(rows[0]["cnot_kw"].as_u64().unwrap() > 0);
}

#[test]
fn strict_cap_exits_3() {
    let out = kwgauss(&["prep1d", "--k", "26", "--b", "4", "--strict"]);
    assert_eq!(out.status.code(), Some(3));
    let out = kwgauss(&["shear", "--n-dims", "3", "--k", "3", "--qubit-cap", "8", "--strict"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn env_var_sets_the_cap() {
    let out = Command::new(env!("CARGO_BIN_EXE_kwgauss"))
        .args(["prep1d", "--k", "4", "--strict"])
        .env("KWGAUSS_QUBIT_CAP", "3")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn validation_errors_exit_2() {
    for args in [
        &["prep1d", "--k", "4", "--mu", "0.3"][..],
        &["prep1d", "--k", "4", "--sigma", "-1"],
        &["prep1d", "--k", "0"],
        &["shear", "--n-dims", "1"],
        &["prep1d", "--k", "x"],
        &["export", "prep1d", "--k", "3,4"],
    ] {
        assert_eq!(kwgauss(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "qubit_cap = 3\nstrict = true\n").unwrap();
    let c = cfg.to_str().unwrap();
    assert_eq!(kwgauss(&["prep1d", "--k", "4", "--config", c]).status.code(), Some(3));
    assert!(kwgauss(&["prep1d", "--k", "4", "--config", c, "--qubit-cap", "10"]).status.success());
    std::fs::write(&cfg, "bogus = 1\n").unwrap();
    assert_eq!(kwgauss(&["prep1d", "--k", "4", "--config", c]).status.code(), Some(2));
}

#[test]
fn count_only_skips_fidelity() {
    let rows = json(&["shear", "--n-dims", "2", "--k", "2", "--count-only"]);
    assert!(rows[0].get("fidelity_vs_optimal").is_none());
    assert!(rows[0]["cnot_measured"].as_u64().unwrap() <= rows[0]["cnot_bound"].as_u64().unwrap());
}

#[test]
fn shear_rows_and_fit() {
    let rows = json(&["shear", "--n-dims", "2,3", "--k", "3", "--mass", "1", "--scale", "1,2"]);
    assert_eq!(rows.len(), 4);
    for r in &rows {
        let f = r["fidelity_vs_optimal"].as_f64().unwrap();
        assert!(f > 0.5 && f <= 1.0);
        assert!(r["fit"]["a_tilde"].is_number());
    }
}

#[test]
fn shear_crossover_at_two_qubits_per_site() {
    let rows = json(&["shear", "--n-dims", "2..8", "--k", "2", "--count-only"]);
    for r in &rows {
        let n = r["n"].as_u64().unwrap();
        let ours = r["cnot_pipeline"].as_u64().unwrap();
        let generic = r["cnot_generic_real"].as_u64().unwrap();
        if n >= 7 {
            assert!(ours < generic, "N={n}: {ours} vs {generic}");
        }
    }
}

#[test]
fn covariance_file_input() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("cov.txt");
    std::fs::write(&p, "# identity\n1 0\n0 1\n").unwrap();
    let rows = json(&["shear", "--covariance", p.to_str().unwrap(), "--k", "3"]);
    // No correlation: the shear is the identity and costs nothing.
    assert_eq!(rows[0]["cnot_measured"], 0);
    std::fs::write(&p, "1 0\n0\n").unwrap();
    assert_eq!(kwgauss(&["shear", "--covariance", p.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn csv_output_has_header() {
    let out = kwgauss(&["counts", "--k", "2..4", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "k,b,sigma,cnot_kw,generic_complex,generic_real,symmetric_real");
    assert_eq!(lines.len(), 4);
}

#[test]
fn outputs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["prep1d", "--k", "3..5", "--b", "3,6", "--sigma", "0.3,2"][..],
        &["shear", "--n-dims", "2..4", "--k", "3", "--format", "csv"],
        &["export", "shear", "--n-dims", "3", "--k", "3"],
    ] {
        let runs: Vec<Vec<u8>> = (0..2)
            .map(|i| {
                let f = dir.path().join(format!("out{i}"));
                let mut a = args.to_vec();
                a.extend(["--out", f.to_str().unwrap()]);
                assert!(kwgauss(&a).status.success());
                std::fs::read(f).unwrap()
            })
            .collect();
        assert!(!runs[0].is_empty());
        assert_eq!(runs[0], runs[1], "{args:?}");
    }
}

#[test]
fn exported_circuit_round_trips() {
    let out = kwgauss(&["export", "prep1d", "--k", "3", "--b", "4", "--sigma", "1.5"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let c = parse_text(&text).unwrap();
    for r in c.registers.registers() {
        assert!(text.contains(&format!("# register {} ", r.name)));
    }
    assert_eq!(to_text(&c), text);
    let built = build_kw1d(&Kw1dConfig::symmetric(1.5, 3, 4).unwrap()).unwrap();
    let run = |c: &Circuit| simulate(c, &SparseState::zero(c.qubit_count()).unwrap()).unwrap();
    let (parsed, direct) = (run(&c), run(&built.circuit));
    assert!(parsed.support() > 1);
    assert_eq!(parsed.support(), direct.support());
    for key in 0..1u128 << 3 {
        assert_eq!(parsed.amplitude(key), direct.amplitude(key));
    }
}
