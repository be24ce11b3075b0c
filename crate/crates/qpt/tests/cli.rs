//! End-to-end tests of the `qpt` binary: pipeline plumbing, determinism,
//! validation, and exit codes.

use std::path::Path;
use std::process::{Command, Output};

fn qpt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qpt")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn gen_channel_is_deterministic_and_validated() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let args = |p: &Path| {
        vec![
            "gen-channel".to_string(),
            "--dim".into(),
            "2".into(),
            "--rank".into(),
            "4".into(),
            "--seed".into(),
            "7".into(),
            "--out".into(),
            p.display().to_string(),
        ]
    };
    let run = |p: &Path| {
        let owned = args(p);
        let refs: Vec<&str> = owned.iter().map(|s| s.as_str()).collect();
        qpt(&refs)
    };
    assert!(run(&a).status.success());
    assert!(run(&b).status.success());
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let channel = qpt::io::read_channel(&a).unwrap();
    assert!(channel.tp_defect() <= 1e-10);
}

#[test]
fn gen_channel_rejects_rank_above_dim_squared() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.json");
    let result = qpt(&["gen-channel", "--dim", "2", "--rank", "5", "--seed", "1", "--out",
        &out.display().to_string()]);
    assert_eq!(result.status.code(), Some(1));
}

#[test]
fn gen_channel_unwritable_path_exits_2() {
    let result = qpt(&["gen-channel", "--dim", "2", "--rank", "2", "--seed", "1", "--out",
        "/nonexistent-dir/x.json"]);
    assert_eq!(result.status.code(), Some(2));
}

#[test]
fn unknown_flag_is_rejected() {
    let result = qpt(&["gen-channel", "--dim", "2", "--rank", "2", "--seed", "1", "--out",
        "/tmp/x.json", "--bogus", "1"]);
    assert_eq!(result.status.code(), Some(1));
}

#[test]
fn simulate_validates_dimension_and_subsample_count() {
    let dir = tempfile::tempdir().unwrap();
    let ch = dir.path().join("ch.json");
    let data = dir.path().join("d.json");
    assert!(qpt(&["gen-channel", "--dim", "4", "--rank", "4", "--seed", "3", "--out",
        &ch.display().to_string()])
    .status
    .success());

    // wrong qubit count for a dim-4 channel
    let bad = qpt(&["simulate", "--channel", &ch.display().to_string(), "--qubits", "1",
        "--seed", "4", "--out", &data.display().to_string()]);
    assert_eq!(bad.status.code(), Some(1));

    let ok = qpt(&["simulate", "--channel", &ch.display().to_string(), "--qubits", "2",
        "--nu", "0.25", "--seed", "4", "--out", &data.display().to_string()]);
    assert!(ok.status.success());
    let ds = qpt::io::read_dataset(&data).unwrap();
    assert_eq!(ds.len(), 324);
}

#[test]
fn full_pipeline_recovers_channel() {
    let dir = tempfile::tempdir().unwrap();
    let ch = dir.path().join("ch.json");
    let data = dir.path().join("d.json");
    let report = dir.path().join("r.json");
    let csv = dir.path().join("eval.csv");

    assert!(qpt(&["gen-channel", "--dim", "2", "--rank", "2", "--seed", "5", "--out",
        &ch.display().to_string()])
    .status
    .success());
    assert!(qpt(&["simulate", "--channel", &ch.display().to_string(), "--qubits", "1",
        "--seed", "6", "--out", &data.display().to_string()])
    .status
    .success());
    let fit_out = qpt(&["fit", "--data", &data.display().to_string(), "--rank", "4",
        "--optimizer", "sgd", "--seed", "7", "--out", &report.display().to_string()]);
    assert!(fit_out.status.success(), "{}", stdout(&fit_out));

    let loaded = qpt::io::read_report(&report).unwrap();
    assert!(loaded.final_loss() <= 1e-6, "final loss {}", loaded.final_loss());

    let eval1 = qpt(&["eval", "--fit", &report.display().to_string(), "--truth",
        &ch.display().to_string(), "--csv", &csv.display().to_string()]);
    assert!(eval1.status.success());
    let text1 = stdout(&eval1);
    assert!(text1.contains("fidelity 0.999") || text1.contains("fidelity 1.000"), "{text1}");

    // repeated evaluation is stable
    let eval2 = qpt(&["eval", "--fit", &report.display().to_string(), "--truth",
        &ch.display().to_string()]);
    assert_eq!(text1.lines().next(), stdout(&eval2).lines().next());

    let csv_text = std::fs::read_to_string(&csv).unwrap();
    assert!(csv_text.starts_with("fidelity,choi_distance\n"));
}

#[test]
fn eval_self_fidelity_is_one() {
    let dir = tempfile::tempdir().unwrap();
    let ch = dir.path().join("ch.json");
    let data = dir.path().join("d.json");
    let report = dir.path().join("r.json");
    for cmd in [
        vec!["gen-channel", "--dim", "2", "--rank", "1", "--seed", "8", "--out",
            &ch.display().to_string()],
        vec!["simulate", "--channel", &ch.display().to_string(), "--qubits", "1", "--seed",
            "9", "--out", &data.display().to_string()],
        vec!["fit", "--data", &data.display().to_string(), "--rank", "1", "--optimizer",
            "sgd", "--max-iters", "0", "--seed", "10", "--out", &report.display().to_string()],
    ] {
        assert!(qpt(&cmd).status.success());
    }
    // truth file = the fitted channel itself
    let loaded = qpt::io::read_report(&report).unwrap();
    qpt::io::write_channel(&ch, &loaded.final_channel).unwrap();
    let eval = qpt(&["eval", "--fit", &report.display().to_string(), "--truth",
        &ch.display().to_string()]);
    assert!(stdout(&eval).contains("fidelity 1.000000"));
}

#[test]
fn fit_with_zero_iterations_reports_initial_channel() {
    let dir = tempfile::tempdir().unwrap();
    let ch = dir.path().join("ch.json");
    let data = dir.path().join("d.json");
    let report = dir.path().join("r.json");
    assert!(qpt(&["gen-channel", "--dim", "2", "--rank", "4", "--seed", "11", "--out",
        &ch.display().to_string()])
    .status
    .success());
    assert!(qpt(&["simulate", "--channel", &ch.display().to_string(), "--qubits", "1",
        "--seed", "12", "--out", &data.display().to_string()])
    .status
    .success());
    assert!(qpt(&["fit", "--data", &data.display().to_string(), "--rank", "2", "--max-iters",
        "0", "--seed", "13", "--out", &report.display().to_string()])
    .status
    .success());
    let loaded = qpt::io::read_report(&report).unwrap();
    assert_eq!(loaded.loss_history.len(), 1);
    assert_eq!(loaded.iterations_run, 0);
}

#[test]
fn study_rejects_unknown_name() {
    let dir = tempfile::tempdir().unwrap();
    let result = qpt(&["study", "--name", "nonsense", "--seed", "1", "--out",
        &dir.path().display().to_string()]);
    assert_eq!(result.status.code(), Some(1));
    let err = String::from_utf8_lossy(&result.stderr).into_owned();
    for name in ["random", "retraction", "pauli-noise", "oscillator", "qnd"] {
        assert!(err.contains(name), "error should list '{name}': {err}");
    }
}

#[test]
fn study_requires_seed_without_config() {
    let dir = tempfile::tempdir().unwrap();
    let result = qpt(&["study", "--name", "retraction", "--out",
        &dir.path().display().to_string()]);
    assert_eq!(result.status.code(), Some(1));
}

#[test]
fn retraction_study_writes_schema_and_is_deterministic_modulo_timing() {
    let dir = tempfile::tempdir().unwrap();
    let out1 = dir.path().join("s1");
    let out2 = dir.path().join("s2");
    let config = dir.path().join("cfg.json");
    std::fs::write(
        &config,
        r#"{"sizes":[16,24],"cols":4,"taus":[0.01],"trials":1,"seed":3}"#,
    )
    .unwrap();
    for out in [&out1, &out2] {
        let result = qpt(&["study", "--name", "retraction", "--config",
            &config.display().to_string(), "--out", &out.display().to_string()]);
        assert!(result.status.success());
    }
    let strip_timing = |path: &Path| -> Vec<String> {
        let text = std::fs::read_to_string(path.join("retraction.csv")).unwrap();
        text.lines()
            .map(|line| {
                let fields: Vec<&str> = line.split(',').collect();
                // drop the wall_time column
                fields
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != 4)
                    .map(|(_, f)| *f)
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect()
    };
    let a = strip_timing(&out1);
    assert_eq!(a[0], "n,method,tau,trial,error_vs_exp,stiefel_defect");
    assert_eq!(a, strip_timing(&out2));
}
