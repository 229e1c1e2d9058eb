use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_giant-swing"))
}

fn run(args: &[&str], config: &Path, out: &Path) -> Output {
    bin().args(args).arg("--config").arg(config).arg("--out").arg(out).output().unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

const MONTECARLO: &str = r#"
seed = 7
[model]
kind = "distributed"
[spec]
qa_bar = 1.0
gain = 10.0
[montecarlo]
samples = 1
cap = 60.0
"#;

const SIMULATE: &str = r#"
duration = 5.0
[model]
kind = "distributed"
[spec]
qa_bar = 1.0
gain = 10.0
[initial]
q_u = 0.1
p_u = 0.0
"#;

#[test]
fn montecarlo_is_deterministic_for_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "mc.toml", MONTECARLO);
    let a = run(&["montecarlo"], &cfg, &dir.path().join("a"));
    let b = run(&["montecarlo", "--threads", "3"], &cfg, &dir.path().join("b"));
    assert!(a.status.success() && b.status.success());
    let ra = fs::read(dir.path().join("a/runs.csv")).unwrap();
    let rb = fs::read(dir.path().join("b/runs.csv")).unwrap();
    assert_eq!(ra, rb);
    let text = String::from_utf8(ra).unwrap();
    assert!(text.starts_with("run,q_u0,p_u0,E0,onset_time,onset_momentum\n"));
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sim.toml", SIMULATE);
    for out in ["a", "b"] {
        assert!(run(&["simulate"], &cfg, &dir.path().join(out)).status.success());
    }
    let a = fs::read(dir.path().join("a/trajectory.csv")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("b/trajectory.csv")).unwrap());
    assert!(a.starts_with(b"t,q_u,q_a,p_u,p_a,E,e,e_dot,I\n"));
    for file in ["crossings.csv", "switches.csv", "summary.json"] {
        assert!(dir.path().join("a").join(file).exists(), "{file}");
    }
}

#[test]
fn locked_leg_keeps_energy_constant() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "lock.toml", &SIMULATE.replace("gain = 10.0", "gain = 0.0"));
    assert!(run(&["simulate"], &cfg, dir.path()).status.success());
    let text = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let energies: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(5).unwrap().parse().unwrap()).collect();
    assert!(energies.len() > 10);
    let e0 = energies[0];
    for e in energies {
        assert!((e - e0).abs() < 1e-8 * e0.abs().max(1e-6), "{e} vs {e0}");
    }
}

#[test]
fn bad_config_exits_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", &format!("{SIMULATE}\nbogus = 1\n"));
    let out = run(&["simulate"], &cfg, dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());

    let out = run(&["simulate"], &dir.path().join("missing.toml"), dir.path());
    assert_eq!(out.status.code(), Some(2));

    let cfg = write_config(dir.path(), "neg.toml", &SIMULATE.replace("qa_bar = 1.0", "qa_bar = -1.0"));
    assert_eq!(run(&["simulate"], &cfg, dir.path()).status.code(), Some(2));
}

#[test]
fn energy_reports_constants() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "e.toml", "[model]\nkind = \"distributed\"\n");
    let out = run(&["energy"], &cfg, dir.path());
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("energy.json")).unwrap()).unwrap();
    let stdout: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report, stdout);
    assert!(report.as_object().unwrap().values().all(|v| v.is_number() || v.is_string()));
}
