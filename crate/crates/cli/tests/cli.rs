use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_stable-em"));
    c.env_remove("STABLE_EM_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn digests(dir: &Path) -> Vec<String> {
    manifest(dir)["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|o| o["sha256"].as_str().unwrap().to_string())
        .collect()
}

#[test]
fn density_at_origin_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["density", "--alpha", "1.5", "--t", "1", "--x", "0", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).lines().next().unwrap(), "0.4063781583");
    assert!(dir.path().join("density.csv").exists());
}

#[test]
fn negative_points_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["density", "--x", "-1,1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let lines: Vec<String> = stdout(&o).lines().take(2).map(String::from).collect();
    assert_eq!(lines[0], lines[1]);
}

#[test]
fn selftest_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["selftest", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(!stdout(&o).contains("FAIL"));
    assert_eq!(manifest(dir.path())["pass"], serde_json::Value::Bool(true));
}

#[test]
fn reruns_reproduce_digests_across_thread_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["krylov", "--paths", "500", "--spans", "0.2,0.4,0.8"];
    let oa = bin().args(args).args(["--threads", "1", "--out"]).arg(a.path()).output().unwrap();
    let ob = bin().args(args).args(["--out"]).arg(b.path()).env("STABLE_EM_THREADS", "3").output().unwrap();
    assert_eq!(code(&oa), code(&ob));
    assert_eq!(digests(a.path()), digests(b.path()));
    assert_eq!(manifest(a.path())["threads"], 1);
    assert_eq!(manifest(b.path())["threads"], 3);
}

#[test]
fn thread_flag_beats_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["sample", "--n", "5", "--threads", "2", "--out"])
        .arg(dir.path())
        .env("STABLE_EM_THREADS", "4")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert_eq!(manifest(dir.path())["threads"], 2);
}

#[test]
fn seeds_change_digests() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run(&["sample", "--n", "50", "--seed", "1", "--out", a.path().to_str().unwrap()]);
    run(&["sample", "--n", "50", "--seed", "2", "--out", b.path().to_str().unwrap()]);
    assert_ne!(digests(a.path()), digests(b.path()));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[common]\nalpha = 1.3\nseed = 9\n[converge]\npaths = 10\ndrift = \"sin\"\n").unwrap();
    let o = run(&["converge", "--config", cfg.to_str().unwrap(), "--paths", "20", "--print-config"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    for line in ["alpha = 1.3", "seed = 9", "paths = 20", "drift = \"sin\""] {
        assert!(text.lines().any(|l| l == line), "missing {line:?} in\n{text}");
    }
}

#[test]
fn usage_and_config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[converge]\npath = 3\n").unwrap();
    assert_eq!(code(&run(&["converge", "--config", cfg.to_str().unwrap()])), 1);
    assert_eq!(code(&run(&["nonsense"])), 1);
    assert_eq!(code(&run(&["converge", "--alpha", "2.5", "--print-config"])), 0);
    assert_eq!(code(&run(&["converge", "--alpha", "2.5", "--out", dir.path().to_str().unwrap()])), 1);
    assert_eq!(code(&run(&["density", "--method", "nope", "--out", dir.path().to_str().unwrap()])), 1);
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["--version"])), 0);
}

#[test]
fn failed_checks_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "parametrix",
        "--paths",
        "20000",
        "--tolerance",
        "0.0001",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 2, "{}", stdout(&o));
    assert_eq!(manifest(dir.path())["pass"], serde_json::Value::Bool(false));
}
