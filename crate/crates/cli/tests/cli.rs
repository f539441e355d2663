use std::path::Path;
use std::process::{Command, Output};

fn tbvqd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tbvqd"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn manifest(dir: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(dir.join("manifest.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

/// Every listed output exists, and CSV outputs parse as rectangular tables.
fn check_outputs(dir: &Path) {
    let m = manifest(dir);
    for out in m["outputs"].as_array().unwrap() {
        let path = dir.join(out["path"].as_str().unwrap());
        let text = std::fs::read_to_string(&path).unwrap();
        if out["kind"] == "csv" {
            let mut lines = text.lines();
            let width = lines.next().unwrap().split(',').count();
            assert!(lines.all(|l| l.split(',').count() == width), "{}", path.display());
        }
        if out["kind"] == "svg" {
            assert!(text.starts_with("<svg"));
        }
    }
}

#[test]
fn bands_analytic_cuo2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = tbvqd(&["bands", "cuo2.toml", "--analytic", "--out-dir", out]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("bands.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "k_index,path_distance,band,energy_vqd,energy_exact,iterations,cost_evals,seed"
    );
    assert_eq!(lines.count(), 88 * 3);
    let m = manifest(dir.path());
    assert_eq!(m["command"], "bands");
    assert_eq!(m["config"]["run"]["mode"], "analytic");
    assert_eq!(m["telemetry"]["points"].as_array().unwrap().len(), 88);
    check_outputs(dir.path());
}

#[test]
fn bands_shot_mode_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (dir, jobs) in [(&a, "1"), (&b, "3")] {
        let o = tbvqd(&[
            "bands", "cuo2", "--shots", "500", "--seed", "9", "--cold", "--restarts", "1",
            "--jobs", jobs, "--out-dir", dir.path().to_str().unwrap(),
        ]);
        assert!(code(&o) <= 1, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let ca = std::fs::read(a.path().join("bands.csv")).unwrap();
    let cb = std::fs::read(b.path().join("bands.csv")).unwrap();
    assert_eq!(ca, cb);
    let m = manifest(a.path());
    let csv_entry = m["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .find(|o| o["path"] == "bands.csv")
        .unwrap();
    assert_eq!(csv_entry["seed"], 9);
}

#[test]
fn missing_model_is_a_usage_error() {
    let o = tbvqd(&["bands", "/nonexistent/model.toml", "--analytic"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn config_file_is_merged_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "seed = 5\nshots = 100\n[bench]\nmin_qubits = 4\nmax_qubits = 5\npairs = [[1, 3]]\ntrials = 3\nexecution_shots = [1000]\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = tbvqd(&[
        "bench", "--config", cfg.to_str().unwrap(), "--seed", "6", "--out-dir", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(&out);
    assert_eq!(m["config"]["trials"]["seed"], 6);
    assert_eq!(m["config"]["trials"]["trials"], 3);
    assert_eq!(m["config"]["trials"]["mode"]["shots"], 100);
    let exec = std::fs::read_to_string(out.join("executions.csv")).unwrap();
    assert_eq!(
        exec,
        "n_qubits,shots,protocol,total\n4,1000,constant,3000\n4,1000,conventional,9000\n\
         5,1000,constant,3000\n5,1000,conventional,11000\n"
    );
    check_outputs(&out);
}

#[test]
fn bad_config_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[bench]\nqubitz = 3\n").unwrap();
    let o = tbvqd(&["bench", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn bench_small_grid_skips_undefined_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = tbvqd(&["bench", "--qubits", "3..6", "--shots", "1000", "--trials", "10", "--out-dir", out]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("correlator_stats.csv")).unwrap();
    // (1,3) at N = 4, 5, 6 and (0,4) at N = 5, 6, two parts each
    assert_eq!(csv.lines().count(), 1 + 5 * 2);
    let m = manifest(dir.path());
    assert_eq!(m["telemetry"]["skipped"].as_array().unwrap().len(), 3);
    check_outputs(dir.path());
}

#[test]
fn bench_analytic_has_zero_spread() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = tbvqd(&["bench", "--analytic", "--qubits", "4..7", "--trials", "2", "--out-dir", out]);
    assert_eq!(code(&o), 0);
    let csv = std::fs::read_to_string(dir.path().join("correlator_stats.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[5], "0", "{line}");
        assert_eq!(cols[8], "analytic");
    }
}

#[test]
fn bench_rejects_bad_pairs_and_ranges() {
    assert_eq!(code(&tbvqd(&["bench", "--pairs", "0:3"])), 2);
    assert_eq!(code(&tbvqd(&["bench", "--pairs", "4:0"])), 2);
    assert_eq!(code(&tbvqd(&["bench", "--qubits", "6..4"])), 2);
    assert_eq!(code(&tbvqd(&["bench", "--qubits", "4..15"])), 2);
    assert_eq!(code(&tbvqd(&["bench", "--qubits", "four"])), 2);
}

#[test]
fn validate_passes_and_bounds_are_enforced() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = tbvqd(&["validate", "--max-qubits", "8", "--out-dir", out]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    assert!(!String::from_utf8_lossy(&o.stdout).contains("FAIL"));
    check_outputs(dir.path());
    assert_eq!(code(&tbvqd(&["validate", "--max-qubits", "1"])), 2);
    assert_eq!(code(&tbvqd(&["validate", "--max-qubits", "15"])), 2);
}

#[test]
fn corrupted_xy_sign_is_caught() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = tbvqd(&["validate", "--max-qubits", "4", "--corrupt-xy-sign", "--out-dir", out]);
    assert_eq!(code(&o), 1);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.lines().any(|l| l.starts_with("antisymmetry (protocol)") && l.ends_with("FAIL")));
}

#[test]
fn dump_hamiltonian_lists_terms() {
    let o = tbvqd(&["dump-hamiltonian", "cuo2", "--k", "0.5,-0.25"]);
    assert_eq!(code(&o), 0);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("conventional 7"));
    assert!(stdout.contains("IZI"));
    assert_eq!(code(&tbvqd(&["dump-hamiltonian", "cuo2", "--k-index", "500"])), 2);
    assert_eq!(code(&tbvqd(&["dump-hamiltonian", "cuo2", "--k", "1,2,3"])), 2);
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    assert_eq!(code(&tbvqd(&["frobnicate"])), 2);
    assert_eq!(code(&tbvqd(&["bands", "--shots", "10", "--analytic", "cuo2"])), 2);
    assert_eq!(code(&tbvqd(&["--help"])), 0);
}
