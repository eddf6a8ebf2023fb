use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fqco"))
}

fn problems() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../problems")
}

fn example() -> PathBuf {
    problems().join("qcbo3.json")
}

fn run_cmd(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let mut rows = vec![r.headers().unwrap().iter().map(String::from).collect()];
    rows.extend(r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()));
    rows
}

fn assert_csv_close(got: &Path, want: &Path) {
    let (a, b) = (read_csv(got), read_csv(want));
    assert_eq!(a.len(), b.len(), "{}", got.display());
    assert_eq!(a[0], b[0]);
    for (ra, rb) in a.iter().zip(&b).skip(1) {
        for (x, y) in ra.iter().zip(rb) {
            match (x.parse::<f64>(), y.parse::<f64>()) {
                (Ok(x), Ok(y)) if x.is_nan() && y.is_nan() => {}
                (Ok(x), Ok(y)) => assert!((x - y).abs() <= 1e-9 * y.abs().max(1.0), "{x} vs {y}"),
                _ => assert_eq!(x, y),
            }
        }
    }
}

#[test]
fn verify_reports_the_encoded_optimum() {
    let o = run_cmd(&["verify", example().to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["operator"]["encoding"]["argmin"], "001");
    assert_eq!(report["operator"]["encoding"]["min_value"], -3.0);
    assert_eq!(report["gamma_source"], "problem-file");
    assert_eq!(report["oracle"]["optimum"]["feasible_count"], 2);
}

#[test]
fn verify_with_zero_gamma_fails_on_the_unconstrained_minimum() {
    let o = run_cmd(&["verify", example().to_str().unwrap(), "--gamma", "0"]);
    assert_eq!(code(&o), 1);
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["operator"]["encoding"]["argmin"], "111");
    assert_eq!(report["operator"]["encoding"]["ok"], false);
}

#[test]
fn malformed_input_exits_two_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\n  \"n\": 3,\n  \"objective\": [\n").unwrap();
    let o = run_cmd(&["verify", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.json:4:"), "{err}");

    std::fs::write(&bad, r#"{"n": 2, "objective": {"Q": [[0, 1], [0, 0]]}}"#).unwrap();
    assert_eq!(code(&run_cmd(&["verify", bad.to_str().unwrap()])), 2);
    assert_eq!(code(&run_cmd(&["verify", dir.path().join("missing.json").to_str().unwrap()])), 2);
    assert_eq!(code(&run_cmd(&["run", example().to_str().unwrap(), "--controller", "pid"])), 2);
    assert_eq!(code(&run_cmd(&["run", example().to_str().unwrap(), "--dt", "-1", "--out-dir", dir.path().to_str().unwrap()])), 2);
    assert_eq!(code(&run_cmd(&["run", example().to_str().unwrap(), "--gamma", "0", "--out-dir", dir.path().to_str().unwrap()])), 2);
}

#[test]
fn oracle_prints_ground_truth() {
    let o = run_cmd(&["oracle", example().to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["optimum"]["optimum_bits"], "001");
    assert_eq!(report["constraint_operator_spectrum"]["min"], -3.0);
    assert_eq!(report["constraint_operator_spectrum"]["max"], 36.0);
    assert_eq!(report["cost_spectrum"]["min"], -12.0);
}

#[test]
fn run_matches_golden_outputs() {
    let dir = tempfile::tempdir().unwrap();
    for (mode, name) in [("falqon-c", "falqon-c_standard"), ("falqon", "falqon_standard")] {
        let o = run_cmd(&[
            "run",
            example().to_str().unwrap(),
            "--mode",
            mode,
            "--controller",
            "standard",
            "--dt",
            "0.02",
            "--depth",
            "200",
            "--gamma",
            "3",
            "--out-dir",
            dir.path().to_str().unwrap(),
            "--name",
            name,
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        for suffix in ["trace.csv", "final_probabilities.csv"] {
            let file = format!("{name}_{suffix}");
            assert_csv_close(&dir.path().join(&file), &problems().join("golden").join(&file));
        }
        let meta: serde_json::Value =
            serde_json::from_slice(&std::fs::read(dir.path().join(format!("{name}_metadata.json"))).unwrap()).unwrap();
        assert_eq!(meta["config"]["mode"], mode);
        assert_eq!(meta["cost_terms"]["zz_terms"], 1);
        assert!(meta["generated_at"].is_string());
    }
}

#[test]
fn depth_zero_gives_a_single_row() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_cmd(&["run", example().to_str().unwrap(), "--depth", "0", "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let rows = read_csv(&dir.path().join("run_trace.csv"));
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0], ["k", "zeta_1", "zeta_2", "zeta_3", "V", "r_a", "P_s", "dt_bound"]);
    assert_eq!(rows[1][0], "0");
}

#[test]
fn monitoring_fills_the_bound_column_and_extras_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("state.bin");
    let o = run_cmd(&[
        "run",
        example().to_str().unwrap(),
        "--depth",
        "5",
        "--monitor-dt-bound",
        "--zeta-init",
        "0.1,0.2,0.3",
        "--control-arg",
        "dt-scaled",
        "--gnuplot",
        "--dump-state",
        dump.to_str().unwrap(),
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_csv(&dir.path().join("run_trace.csv"));
    assert!(rows[1..].iter().all(|r| !r[7].is_empty()));
    assert_eq!(&rows[2][1..4], ["0.1", "0.2", "0.3"]);
    let state = fqco::StateVector::read_dump(std::fs::File::open(&dump).unwrap()).unwrap();
    assert_eq!(state.n(), 3);
    let script = std::fs::read_to_string(dir.path().join("run_plot.gp")).unwrap();
    assert!(script.contains("run_trace.csv"));
}

#[test]
fn qubit_cap_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = bin()
        .args(["run", example().to_str().unwrap(), "--depth", "1", "--out-dir", out])
        .env("FQCO_MEM_CAP_QUBITS", "2")
        .output()
        .unwrap();
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("qubit"));
    let o = bin()
        .args(["run", example().to_str().unwrap(), "--depth", "1", "--out-dir", out])
        .env("FQCO_MEM_CAP_QUBITS", "lots")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn inequality_problems_are_canonicalized() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("ineq.json");
    // minimize -x1 - 2 x2 subject to x1 + x2 <= 1
    std::fs::write(
        &p,
        r#"{"n": 2, "objective": {"c": [-1, -2]}, "inequalities": [{"c": [1, 1], "a": -1}]}"#,
    )
    .unwrap();
    let o = run_cmd(&["verify", p.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["canonical_n"], 3);
    assert_eq!(report["gamma_source"], "bound");
    assert_eq!(report["operator"]["encoding"]["argmin"], "010");
    let o = run_cmd(&["run", p.to_str().unwrap(), "--depth", "20", "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0);
}

fn write_manifest(dir: &Path, body: &str) -> PathBuf {
    std::fs::copy(example(), dir.join("qcbo3.json")).unwrap();
    let m = dir.join("manifest.json");
    std::fs::write(&m, body).unwrap();
    m
}

#[test]
fn empty_sweep_equals_a_plain_run() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_manifest(dir.path(), r#"{"problem": "qcbo3.json", "out_dir": "out"}"#);
    assert_eq!(code(&run_cmd(&["sweep", m.to_str().unwrap()])), 0);
    let o = run_cmd(&["run", example().to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(
        std::fs::read(dir.path().join("out/run000_trace.csv")).unwrap(),
        std::fs::read(dir.path().join("run_trace.csv")).unwrap()
    );
}

#[test]
fn sweep_summary_matches_traces_and_records_failures() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_manifest(
        dir.path(),
        r#"{"problem": "qcbo3.json", "out_dir": "out",
            "base": {"depth": 30},
            "axes": {"gamma": [3, 13], "controller": ["standard", {"kind": "bang_bang", "K": 3.5}], "dt": [0.02, -1]}}"#,
    );
    let o = run_cmd(&["sweep", m.to_str().unwrap(), "--jobs", "3"]);
    assert_eq!(code(&o), 1, "negative dt runs fail but the sweep completes");
    let summary = read_csv(&dir.path().join("out/summary.csv"));
    assert_eq!(summary.len(), 9);
    let header = &summary[0];
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    for row in &summary[1..] {
        let name = &row[0];
        if row[col("dt")] == "-1" {
            assert_eq!(row[col("status")], "failed");
            assert!(!row[col("error")].is_empty());
            assert!(!dir.path().join(format!("out/{name}_trace.csv")).exists());
            continue;
        }
        assert_eq!(row[col("status")], "ok");
        let trace = read_csv(&dir.path().join(format!("out/{name}_trace.csv")));
        let last = trace.last().unwrap();
        let tcol = |h: &str| trace[0].iter().position(|x| x == h).unwrap();
        assert_eq!(last[tcol("V")], row[col("V")]);
        assert_eq!(last[tcol("r_a")], row[col("r_a")]);
        assert_eq!(last[tcol("P_s")], row[col("P_s")]);
    }
    assert_eq!(summary[1][0], "run000_gamma-3_controller-standard_dt-0.02");
}

#[test]
fn bad_manifest_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_manifest(dir.path(), r#"{"problem": "qcbo3.json", "axes": {"zeta": [1]}}"#);
    assert_eq!(code(&run_cmd(&["sweep", m.to_str().unwrap()])), 2);
}
