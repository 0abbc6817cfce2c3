use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use dirguess::povm::ScoreKind;
use dirguess::walk::load_reference_program;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dirguess"))
        .args(args)
        .env("DIRGUESS_OUT", dir)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn empty_grid_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["scores", "--score", "likelihood", "--c0", ""]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("scores-likelihood.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1);
    assert!(csv.starts_with("c0,score_no_abst,score_with_abst,lambda_bar_0,Q_bar,mc_score,mc_stderr,status"));
    assert!(dir.path().join("scores-manifest.json").exists());
}

#[test]
fn scores_are_reproducible_and_manifest_replays() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["scores", "--score", "fidelity", "--c0", "0.75,0.9", "--trials", "2000", "--seed", "5"];
    assert_eq!(code(&run(dir.path(), &args)), 0);
    let first = fs::read_to_string(dir.path().join("scores-fidelity.csv")).unwrap();
    assert_eq!(first.lines().count(), 3);
    assert_eq!(code(&run(dir.path(), &args)), 0);
    assert_eq!(first, fs::read_to_string(dir.path().join("scores-fidelity.csv")).unwrap());

    let manifest = dir.path().join("scores-manifest.json");
    let replay = tempfile::tempdir().unwrap();
    let o = run(replay.path(), &["--config", manifest.to_str().unwrap(), "--out", replay.path().to_str().unwrap(), "scores"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(first, fs::read_to_string(replay.path().join("scores-fidelity.csv")).unwrap());
}

#[test]
fn infeasible_points_are_marked() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["scores", "--score", "likelihood", "--c0", "0.2", "--trials", "100"]);
    assert_eq!(code(&o), 0);
    let csv = fs::read_to_string(dir.path().join("scores-likelihood.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().contains("infeasible"), "{csv}");
}

#[test]
fn validation_errors_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(dir.path(), &["scores", "--c0", "abc"])), 2);
    assert_eq!(code(&run(dir.path(), &["scores", "--score", "nope"])), 2);
    assert_eq!(code(&run(dir.path(), &["verify-walk", "--score", "likelihood", "--c0", "0.65"])), 2);
    assert_eq!(code(&run(dir.path(), &["tomography", "--c0", "0.6", "--shots", "0"])), 2);
}

#[test]
fn missing_files_exit_with_code_3() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(dir.path(), &["walk-run", "/nonexistent/prog.json"])), 3);
    assert_eq!(code(&run(dir.path(), &["--config", "/nonexistent/cfg.json", "scores"])), 3);
}

#[test]
fn verify_walk_passes_for_tabulated_row() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["verify-walk", "--score", "likelihood", "--c0", "0.6"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("PASS"));
    assert!(dir.path().join("verify-walk-likelihood-0.6.json").exists());
}

#[test]
fn walk_run_reports_readout_distribution() {
    let dir = tempfile::tempdir().unwrap();
    let prog = load_reference_program(ScoreKind::MaxLikelihood, 0.6).unwrap();
    let path = dir.path().join("prog.json");
    fs::write(&path, prog.to_json_string()).unwrap();
    let o = run(dir.path(), &["walk-run", path.to_str().unwrap(), "--input", "0,1,0,0", "--dump-steps"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let dist: Vec<(i32, f64)> =
        serde_json::from_str(&fs::read_to_string(dir.path().join(format!("{}-distribution.json", prog.name))).unwrap())
            .unwrap();
    let p8 = dist.iter().find(|(x, _)| *x == 8).unwrap().1;
    assert!((p8 - 0.885f64.powi(2)).abs() < 1e-3, "{p8}");
    assert!((dist.iter().map(|(_, p)| p).sum::<f64>() - 1.0).abs() < 1e-10);
    assert!(dir.path().join(format!("{}-steps.json", prog.name)).exists());
}

#[test]
fn malformed_program_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, "{\"steps\": 3}").unwrap();
    assert_eq!(code(&run(dir.path(), &["walk-run", path.to_str().unwrap()])), 2);
    let prog = load_reference_program(ScoreKind::MaxLikelihood, 0.6).unwrap();
    let good = dir.path().join("good.json");
    fs::write(&good, prog.to_json_string()).unwrap();
    assert_eq!(code(&run(dir.path(), &["walk-run", good.to_str().unwrap(), "--input", "0,0,0,0"])), 2);
    assert_eq!(code(&run(dir.path(), &["walk-run", good.to_str().unwrap(), "--input", "1,0"])), 2);
}

#[test]
fn tomography_command_writes_run() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["tomography", "--c0", "0.6", "--shots", "5000", "--repetitions", "2", "--seed", "3"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("tomography-likelihood-0.6.json")).unwrap()).unwrap();
    assert!(v["mean_overall_fidelity"].as_f64().unwrap() > 0.98);
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("tomography-manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seeds"].as_array().unwrap().len(), 2);
}
