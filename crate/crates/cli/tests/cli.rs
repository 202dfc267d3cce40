use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use symlearn::io::{decode_controller, decode_model, encode_controller, ARTIFACTS};
use symlearn::tsys::box_members;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_symlearn"))
}

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn run_to(cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    bin()
        .args(["run", "--config"])
        .arg(cfg)
        .arg("--out")
        .arg(out)
        .args(["--timings", "off"])
        .args(extra)
        .output()
        .unwrap()
}

#[test]
fn toy_run_writes_artifacts_and_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("toy1d");
    let o = run_to(&config("toy1d.toml"), &out, &["--seed", "3", "--threads", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for a in ARTIFACTS {
        assert!(out.join(a).is_file(), "missing {a}");
    }
    let summary = std::fs::read_to_string(out.join("summary.json")).unwrap();
    assert!(summary.contains("\"converged\""));
    let v = bin().arg("verify").arg(&out).output().unwrap();
    assert_eq!(v.status.code(), Some(0), "{}", stdout(&v));
    assert_eq!(stdout(&v).matches(": pass").count(), 4);
    let i = bin().arg("inspect").arg(out.join("model.bin")).output().unwrap();
    assert!(stdout(&i).contains("inputs: 21"));
}

#[test]
fn same_seed_gives_identical_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        assert_eq!(run_to(&config("toy2d.toml"), out, &["--seed", "9"]).status.code(), Some(0));
    }
    for f in ["trajectory.csv", "batches.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn max_batches_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_to(&config("toy2d.toml"), &dir.path().join("r"), &["--max-batches", "1", "--lazy", "off"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("termination: max_batches"));
}

#[test]
fn acc_run_is_infeasible_but_inspectable() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("acc");
    let o = run_to(&config("acc.toml"), &out, &["--incremental-pre", "off"]);
    assert_eq!(o.status.code(), Some(3));
    let m = bin().arg("inspect").arg(out.join("model.bin")).output().unwrap();
    assert_eq!(m.status.code(), Some(0));
    assert!(stdout(&m).contains("inputs: 11"));
    let c = bin().arg("inspect").arg(out.join("controller.bin")).output().unwrap();
    assert_eq!(c.status.code(), Some(0));
    assert!(stdout(&c).contains("winning: 0"));
    let v = bin().arg("verify").arg(&out).output().unwrap();
    assert_eq!(v.status.code(), Some(0), "{}", stdout(&v));
}

#[test]
fn invalid_config_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(config("toy1d.toml")).unwrap().replace("eps = 0.02", "eps = 0.01");
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, text).unwrap();
    let o = run_to(&cfg, &dir.path().join("r"), &[]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("eps") && err.contains("eta_x"), "{err}");
    assert!(!dir.path().join("r").exists());
    let o = run_to(&dir.path().join("missing.toml"), &dir.path().join("r"), &[]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn truncated_artifact_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r");
    run_to(&config("toy1d.toml"), &out, &[]);
    let bytes = std::fs::read(out.join("model.bin")).unwrap();
    let cut = dir.path().join("cut.bin");
    std::fs::write(&cut, &bytes[..bytes.len() / 2]).unwrap();
    let o = bin().arg("inspect").arg(&cut).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(!o.stderr.is_empty());
}

#[test]
fn tampered_trajectory_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r");
    run_to(&config("toy1d.toml"), &out, &[]);
    let csv = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    let mut lines: Vec<String> = csv.lines().map(String::from).collect();
    let mut cells: Vec<String> = lines[3].split(',').map(String::from).collect();
    cells[1] = "7.5".into();
    lines[3] = cells.join(",");
    std::fs::write(out.join("trajectory.csv"), lines.join("\n") + "\n").unwrap();
    let v = bin().arg("verify").arg(&out).output().unwrap();
    assert_eq!(v.status.code(), Some(4));
    assert!(stdout(&v).contains("trajectory-safety: FAIL"));
}

#[test]
fn injected_unsafe_input_fails_fixed_point_check() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r");
    run_to(&config("toy1d.toml"), &out, &[]);
    let model = decode_model(&std::fs::read(out.join("model.bin")).unwrap()).unwrap();
    let mut ctrl = decode_controller(&std::fs::read(out.join("controller.bin")).unwrap()).unwrap();
    let (s, u) = ctrl
        .winning
        .iter()
        .find_map(|s| {
            model
                .enabled_inputs(s)
                .find(|&u| !box_members(&model.get(s, u).unwrap(), &model.state_lattice, &ctrl.winning))
                .map(|u| (s, u))
        })
        .expect("some enabled input leaves the winning set");
    ctrl.admissible[s].push(u as u32);
    ctrl.admissible[s].sort_unstable();
    std::fs::write(out.join("controller.bin"), encode_controller(&ctrl)).unwrap();
    let v = bin().arg("verify").arg(&out).output().unwrap();
    assert_eq!(v.status.code(), Some(4));
    assert!(stdout(&v).contains("controller-fixed-point: FAIL"));
}
