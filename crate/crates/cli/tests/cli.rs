use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_resflow"))
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(format!("{name}.toml"))
}

fn run(cmd: &str, cfg: &Path, out: &Path, extra: &[&str]) -> i32 {
    let status = bin()
        .arg(cmd)
        .arg("--config")
        .arg(cfg)
        .arg("--output")
        .arg(out)
        .args(extra)
        .output()
        .expect("spawn resflow");
    status.status.code().expect("exit code")
}

const FAST: [&str; 8] = ["catalog", "forward", "flow", "rademacher", "example33", "bounds", "convergence", "activation-compare"];

#[test]
fn fast_commands_are_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    for cmd in FAST {
        let a = dir.path().join(format!("{cmd}-a"));
        let b = dir.path().join(format!("{cmd}-b"));
        assert_eq!(run(cmd, &config(cmd), &a, &[]), 0, "{cmd}");
        assert_eq!(run(cmd, &config(cmd), &b, &[]), 0, "{cmd}");
        let ma = std::fs::read(a.join("manifest.json")).unwrap();
        assert_eq!(ma, std::fs::read(b.join("manifest.json")).unwrap(), "{cmd}");
        assert!(String::from_utf8(ma).unwrap().contains("summary.json"));
    }
}

#[test]
fn seed_override_changes_random_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(run("forward", &config("forward"), &a, &["--seed", "1"]), 0);
    assert_eq!(run("forward", &config("forward"), &b, &["--seed", "2"]), 0);
    assert_ne!(std::fs::read(a.join("manifest.json")).unwrap(), std::fs::read(b.join("manifest.json")).unwrap());
}

#[test]
fn invalid_input_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    assert_eq!(run("bounds", &config("example33"), &out, &[]), 1, "command mismatch");
    assert_eq!(run("dance", &config("example33"), &out, &[]), 1, "unknown command");
    assert_eq!(run("example33", &dir.path().join("missing.toml"), &out, &[]), 1, "missing file");
    let bad = dir.path().join("bad.toml");
    let text = std::fs::read_to_string(config("bounds")).unwrap().replace("delta = 0.05", "delta = 1.5");
    std::fs::write(&bad, text).unwrap();
    assert_eq!(run("bounds", &bad, &out, &[]), 1, "delta out of range");
    assert_eq!(bin().arg("catalog").output().unwrap().status.code(), Some(1), "missing --config");
}

#[test]
fn runtime_failure_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, b"x").unwrap();
    let out = blocker.join("sub");
    let output = bin()
        .args(["example33", "--config"])
        .arg(config("example33"))
        .arg("--output")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("file"));
}

#[test]
fn network_file_that_fails_to_parse_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let net = dir.path().join("net.json");
    std::fs::write(&net, b"{ not json").unwrap();
    let cfg = dir.path().join("forward.toml");
    let text = format!(
        "command = \"forward\"\n[forward.network]\nkind = \"file\"\npath = {:?}\n[forward.activation]\nname = \"ReLU\"\n",
        net.display().to_string()
    );
    std::fs::write(&cfg, text).unwrap();
    assert_eq!(run("forward", &cfg, &dir.path().join("o"), &[]), 2);
}
