use std::path::Path;
use std::process::{Command, Output};

fn bsq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bsq"))
        .args(args)
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const SMOOTH: &str = "\
[scenario]
name = smooth-split
seed = 4

[grid]
nx = 8

[time]
dt = 0.01
t_end = 0.05

[physics]
nu = 1
mu = 0.8
beta = 0.3, 1
lambda0 = 0

[boundary]
generator = smooth
amplitude = 0.5

[initial]
generator = lift

[solver]
kind = split

[checks]
suites = finite, divergence, energy, pressure, compatibility, splitting
";

#[test]
fn run_writes_outputs_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "smooth.ini", SMOOTH);
    let mut bytes = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("run{k}"));
        let o = bsq(&["run", &cfg, "--out", out.to_str().unwrap()]);
        let stdout = String::from_utf8_lossy(&o.stdout);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{stdout}\n{}",
            String::from_utf8_lossy(&o.stderr)
        );
        assert!(stdout.lines().any(|l| l.starts_with("PASS")), "{stdout}");
        let report: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap())
                .unwrap();
        assert!(report["checks"]
            .as_array()
            .unwrap()
            .iter()
            .all(|c| c["passed"] == true));
        bytes.push((
            std::fs::read(out.join("diagnostics.csv")).unwrap(),
            std::fs::read(out.join("trajectory.bspl")).unwrap(),
        ));

        let check = bsq(&["check", out.join("trajectory.bspl").to_str().unwrap()]);
        assert_eq!(
            check.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&check.stdout)
        );
    }
    assert!(
        bytes[0] == bytes[1],
        "outputs differ between identical runs"
    );
}

#[test]
fn config_errors_exit_with_status_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(
        dir.path(),
        "bad.ini",
        "[grid]\nnx = 8\n[time]\ndt = -0.1\nt_end = 1\n",
    );
    let o = bsq(&["run", &bad]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 4") && err.contains("time.dt"), "{err}");

    let o = bsq(&[
        "study",
        &write(
            dir.path(),
            "s.ini",
            &SMOOTH.replace("lambda0 = 0", "lambda0 = 1"),
        ),
        "--levels",
        "8,16",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("≥3 levels required"));

    let o = bsq(&["check", dir.path().join("missing.bspl").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn damaged_checkpoints_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "smooth.ini", SMOOTH);
    let out = dir.path().join("run");
    assert_eq!(
        bsq(&["run", &cfg, "--out", out.to_str().unwrap()])
            .status
            .code(),
        Some(0)
    );
    let good = std::fs::read(out.join("trajectory.bspl")).unwrap();
    let mut magic = good.clone();
    magic[0] = b'X';
    let truncated = good[..good.len() - 8].to_vec();
    for (name, bytes) in [("magic.bspl", magic), ("short.bspl", truncated)] {
        let path = dir.path().join(name);
        std::fs::write(&path, bytes).unwrap();
        assert_eq!(
            bsq(&["check", path.to_str().unwrap()]).status.code(),
            Some(2),
            "{name}"
        );
    }
}

#[test]
fn steady_study_reports_second_order() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "study.ini",
        "[grid]\nnx = 8\n[time]\ndt = 0.01\nt_end = 0.1\n[physics]\nlambda0 = 1\n[mms]\nfamily = trig\n[study]\nkind = steady\nlevels = 8, 16, 32\n",
    );
    let out = dir.path().join("study");
    let o = bsq(&["study", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stdout)
    );
    let rep: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("study.json")).unwrap()).unwrap();
    assert_eq!(rep["convergence"]["passed"], true);
}
