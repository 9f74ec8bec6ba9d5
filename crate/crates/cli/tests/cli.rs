use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_levelcross"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("config.json");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn malformed_config_is_an_input_error_and_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "{\"preset\": \"five_site\",\n  \"initial\": }");
    let out = tmp.path().join("out");
    let o = run(&["chain", "run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
    assert!(!out.exists());
}

#[test]
fn unknown_field_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"preset": "five_site", "t_end": 5, "bogus": 1}"#);
    let o = run(&["chain", "run", "--config", cfg.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bogus"));
}

#[test]
fn interchange_run_is_deterministic_and_tagged() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("interchange.json");
    let mut texts = Vec::new();
    for name in ["a", "b"] {
        let out = tmp.path().join(name);
        let o = run(&["chain", "run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout(&o).contains("permutation (1 2)"));
        let csv = std::fs::read_to_string(out.join("probabilities.csv")).unwrap();
        let json = std::fs::read_to_string(out.join("report.json")).unwrap();
        assert!(csv.starts_with("# levelcross "));
        assert!(csv.contains("config_sha256="));
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["meta"]["config_sha256"].as_str().unwrap().len(), 64);
        assert_eq!(v["permutation"]["permutation"], "(1 2)");
        texts.push((csv, json));
    }
    assert_eq!(texts[0], texts[1]);
}

#[test]
fn wrong_expectation_exits_with_tolerance_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"preset": "five_site", "sequence": {"primitives": ["a", "b", "a"]}, "expect": "(1 3)"}"#);
    let o = run(&["chain", "run", "--config", cfg.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn idle_chain_keeps_state_four() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let o = run(&["chain", "run", "--config", configs().join("idle.json").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(out.join("probabilities.csv")).unwrap();
    let last: Vec<f64> = csv.lines().last().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert!((last[0] - 60.0).abs() < 1e-9);
    assert!(last[4] > 0.999, "{last:?}");
}

#[test]
fn levels_and_coarse_grid() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let o = run(&["chain", "levels", "--config", configs().join("interchange.json").to_str().unwrap(), "--out", out.to_str().unwrap(), "--gnuplot"]);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(out.join("levels.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().starts_with("t,E1,E2,E3,E4,E5"));
    assert!(out.join("levels.gp").exists());
    let side: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("levels.json")).unwrap()).unwrap();
    assert_eq!(side["adiabatic"][0]["end"], 2);
    assert_eq!(side["jump_times"].as_array().unwrap().len(), 3);

    // A sample sits on a near-exact crossing, where no refinement can separate the levels.
    let cfg = write_config(
        tmp.path(),
        r#"{"chain": {"n_sites": 3, "links": [[1, 2, 30.0], [2, 3, 1e-4]], "bias_sites": [3]}, "sw_threshold": 10.0,
            "pulses": [{"site": 3, "segments": [{"t0": 0.0, "dur": 2.0, "v0": 14.0, "slope": 1.0}]}], "grid_points": 3}"#,
    );
    let o = run(&["chain", "levels", "--config", cfg.to_str().unwrap(), "--out", tmp.path().join("c").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("refine"));
}

#[test]
fn compile_swap_of_one_and_five() {
    let o = run(&["chain", "compile", "--target", "(1 5)"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "a,f,a");
    let bad = run(&["chain", "compile", "--target", "(1 9)"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn bloc_analysis_of_the_five_site_chain() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["analyze", "blocs", "--config", configs().join("interchange.json").to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "Strong bloc {1,2}\nWeak bloc {3}\nStrong bloc {4,5}\n");
    assert!(tmp.path().join("blocs.json").exists());
}

#[test]
fn cavity_runs_and_printed_divergence() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("cnot");
    let o = run(&[
        "cavity", "cnot", "--initial", "10", "--omega", "1", "--g", "2000", "--kappa", "2000", "--delta0", "10", "--rate", "0.2", "--t-end", "100",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("swap fidelity"));
    let survival = std::fs::read_to_string(out.join("survival.csv")).unwrap();
    assert!(survival.lines().nth(1).unwrap() == "t,P_10_0,P_11_0,P_a0");

    let p = tmp.path().join("printed");
    let o = run(&["cavity", "cnot", "--convention", "printed", "--out", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(!p.exists());

    let e = tmp.path().join("eff");
    let o = run(&["cavity", "effective", "--config", configs().join("cavity_cnot.json").to_str().unwrap(), "--out", e.to_str().unwrap(), "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(e.join("survival.data.json")).unwrap()).unwrap();
    assert_eq!(v["columns"][0], "t");
}

#[test]
fn selftest_subset() {
    let o = run(&["selftest", "--criteria", "5,6"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("[PASS]")).count(), 2);
}
