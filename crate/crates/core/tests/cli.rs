use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn periflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_periflow")).args(args).output().expect("spawn periflow")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.cfg");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

const HEAT: &str = "\
[surface]
family = circle
[problem]
scenario = ivp
[discretization]
N = 64
M = 64
";

#[test]
fn list_scenarios_names_every_scenario() {
    let out = periflow(&["list-scenarios"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in [
        "ivp",
        "ivp_decay",
        "periodic-fixed",
        "periodic-monodromy",
        "contraction",
        "band-check",
        "identities",
        "holder",
    ] {
        assert!(text.lines().any(|l| l.split_whitespace().next() == Some(name)), "{name}");
    }
}

#[test]
fn help_documents_defaults() {
    let out = periflow(&["run", "--help"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("N = 256, M = 512"));
    assert!(text.contains("crank_nicolson"));
}

#[test]
fn missing_config_argument_is_a_usage_error() {
    let out = periflow(&["run"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn unreadable_config_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.cfg");
    let out = periflow(&["run", "--config", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_errors_exit_with_two_and_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg =
        write_config(dir.path(), "[surface]\nfamily = circle\n[problem]\nscenario = ivp\n[discretization]\nN 256\n");
    let out = periflow(&["run", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 6"));

    let cfg = write_config(dir.path(), "[surface]\nfamily = circle\n[problem]\nscenario = contraction\nc0 = 0.5\n");
    let out = periflow(&["run", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("c0 must exceed ln2/T ≈ 0.6931"));
}

#[test]
fn failed_assertion_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    // too coarse in time for the heat-kernel tolerance
    let cfg = write_config(
        dir.path(),
        "[surface]\nfamily = circle\n[problem]\nscenario = ivp_decay\n[discretization]\nN = 16\nM = 4\n",
    );
    let out = periflow(&["run", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stdout));
    let manifest = fs::read_to_string(dir.path().join("o/manifest.txt")).unwrap();
    assert!(manifest.contains("status: fail"));
}

#[test]
fn run_writes_trajectory_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), HEAT);
    let out_dir = dir.path().join("out");
    let out = periflow(&["run", "--config", &cfg, "--out", out_dir.to_str().unwrap(), "--seed", "9"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("wall-clock"));

    let csv = fs::read_to_string(out_dir.join("trajectory.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 65 * 64);
    let manifest = fs::read_to_string(out_dir.join("manifest.txt")).unwrap();
    assert!(manifest.contains("config.output.seed: 9"));
    assert!(manifest.contains("status: pass"));
    assert!(!manifest.contains("wall"));
    assert!(!out_dir.join("manifest.txt.tmp").exists());

    use sha2::{Digest, Sha256};
    let digest: String = Sha256::digest(csv.as_bytes()).iter().map(|b| format!("{b:02x}")).collect();
    assert!(manifest.contains(&format!("file.trajectory.csv: sha256={digest}")));
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[surface]\nfamily = bean\n[problem]\nscenario = holder\nforcing = cos(theta)*sin(2*pi*t/T)\n\
         [discretization]\nN = 32\nM = 32\nband_h = 0.03125\n[output]\nseed = 5\n",
    );
    let mut outputs = Vec::new();
    for k in 0..2 {
        let d = dir.path().join(format!("r{k}"));
        let out = periflow(&["run", "--config", &cfg, "--out", d.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        outputs.push(fs::read(d.join("manifest.txt")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}
