use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::Command;

use srpcr::harness::csv::{load_history, Phase};
use srpcr::harness::run::{history_path, SUMMARY_FILE};
use srpcr::harness::{prepare, run_experiment, solve_all, ExperimentConfig};

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn load_into(name: &str, dir: &Path) -> ExperimentConfig {
    let text = std::fs::read_to_string(config_path(name)).unwrap();
    let mut cfg = ExperimentConfig::from_toml(&text).unwrap();
    cfg.output.dir = dir.to_path_buf();
    cfg
}

fn bytes_of(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}

#[test]
fn small_laplace_config_reports_the_ledger() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = load_into("laplace2d_16.toml", dir.path());
    let exp = prepare(&cfg).unwrap();
    let (summary, basis) = solve_all(&cfg, &exp).unwrap();
    assert_eq!(basis.cost_ledger(), (12, 16));
    assert!(summary.all_converged());
    for row in &summary.rows[1..] {
        assert_eq!(row.stored_columns, 12);
        assert_eq!(row.projection_mvec, 16);
        assert_eq!(row.srpcr_mvec, 16 + row.post_iterations as u64);
    }
}

#[test]
fn mirror_pair_recycling_gains_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = load_into("mirror_pair.toml", dir.path());
    let exp = prepare(&cfg).unwrap();
    let (summary, _) = solve_all(&cfg, &exp).unwrap();
    let second = &summary.rows[1];
    assert!(second.srpcr_converged);
    // Plain PCR on b2 takes as many steps as PMINRES.
    assert!(second.post_iterations.abs_diff(second.pminres_mvec as usize) <= 1);
}

#[test]
fn csv_files_round_trip_and_cover_the_same_rhs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = load_into("laplace2d_16.toml", dir.path());
    let summary = run_experiment(&cfg).unwrap();
    let mut pminres_ids = BTreeSet::new();
    let mut srpcr_ids = BTreeSet::new();
    for (i, rows) in summary.srpcr_histories.iter().enumerate() {
        let back = load_history(history_path(dir.path(), "srpcr", i + 1)).unwrap();
        assert_eq!(&back, rows);
        srpcr_ids.extend(back.iter().map(|r| r.rhs_index));
        let back = load_history(history_path(dir.path(), "pminres", i + 1)).unwrap();
        assert_eq!(&back, &summary.pminres_histories[i]);
        assert!(back.iter().all(|r| r.phase == Phase::Baseline));
        pminres_ids.extend(back.iter().map(|r| r.rhs_index));
    }
    assert_eq!(pminres_ids, srpcr_ids);
    assert_eq!(srpcr_ids.len(), 5);
    // Projection rows come first, one per block plus the start.
    let second = &summary.srpcr_histories[1];
    assert_eq!(second.iter().filter(|r| r.phase == Phase::Projection).count(), 3);
    let summary_text = std::fs::read_to_string(dir.path().join(SUMMARY_FILE)).unwrap();
    assert_eq!(summary_text, summary.summary_csv());
    assert!(dir.path().join("q_map.csv").exists() && dir.path().join("g_map.csv").exists());
    assert!(dir.path().join("plot_convergence.py").exists());
}

#[test]
fn two_runs_give_byte_identical_csv() {
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_experiment(&load_into("laplace2d_16.toml", d1.path())).unwrap();
    run_experiment(&load_into("laplace2d_16.toml", d2.path())).unwrap();
    let (a, b) = (bytes_of(d1.path()), bytes_of(d2.path()));
    assert!(a.len() >= 13);
    assert_eq!(a, b);
}

#[test]
fn cli_runs_a_config_and_rejects_a_malformed_one() {
    let exe = env!("CARGO_BIN_EXE_srpcr");
    let out_dir = tempfile::tempdir().unwrap();
    let status = Command::new(exe)
        .arg("run")
        .arg(config_path("mirror_pair.toml"))
        .env("SRPCR_OUTPUT_DIR", out_dir.path())
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    assert!(out_dir.path().join("srpcr_rhs2.csv").exists());

    let bad_dir = tempfile::tempdir().unwrap();
    let bad = bad_dir.path().join("bad.toml");
    let text = std::fs::read_to_string(config_path("mirror_pair.toml")).unwrap();
    std::fs::write(&bad, text.replace("stride = 5", "stride = 0")).unwrap();
    let out = Command::new(exe).arg("run").arg(&bad).env("SRPCR_OUTPUT_DIR", bad_dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("config-error"), "{stderr}");

    let out = Command::new(exe).arg("run").arg(bad_dir.path().join("missing.toml")).output().unwrap();
    assert_ne!(out.status.code(), Some(0));
}

#[test]
fn sequence_dump_writes_the_right_hand_sides() {
    let exe = env!("CARGO_BIN_EXE_srpcr");
    let out_dir = tempfile::tempdir().unwrap();
    let out = Command::new(exe)
        .arg("sequence-dump")
        .arg(config_path("laplace2d_16.toml"))
        .env("SRPCR_OUTPUT_DIR", out_dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(out_dir.path().join("sequence.csv")).unwrap();
    // Header plus one line per entry of the 256-long vectors.
    assert_eq!(text.lines().count(), 257);
}
