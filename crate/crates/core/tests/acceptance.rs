//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Runs the shipped configs under `configs/` through the library runner and,
//! for determinism, through the `periflow` binary.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;

use periflow::runner::{parse_config, run_scenario, RunManifest};

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run(name: &str, out: &Path) -> RunManifest {
    let mut config = parse_config(&config_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
    config.output_dir = out.join(name.trim_end_matches(".cfg"));
    run_scenario(&config).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn value(m: &RunManifest, check: &str) -> f64 {
    m.check(check).unwrap_or_else(|| panic!("missing check {check}")).value
}

fn summary(m: &RunManifest, key: &str) -> f64 {
    m.summary_value(key).unwrap_or_else(|| panic!("missing summary {key}")).parse().unwrap()
}

fn require(m: &RunManifest) {
    for c in &m.checks {
        assert!(c.passed, "{}: {} = {:e} {} {:e}", m.scenario, c.name, c.value, c.relation, c.threshold);
    }
}

fn criterion_1(out: &Path) -> String {
    let mut worst = 0.0f64;
    let mut orders = Vec::new();
    for fam in ["circle", "breathing", "rotating_ellipse", "bean"] {
        let m = run(&format!("identities_{fam}.cfg"), out);
        require(&m);
        for c in ["commutator", "trace_identity", "greens_formula"] {
            worst = worst.max(value(&m, c));
        }
        for j in 0..3 {
            let order = value(&m, &format!("pullback_order_{j}_low"));
            assert!((order - 2.0).abs() <= 0.3, "{fam} pullback order {order}");
            orders.push(order);
        }
    }
    assert!(worst <= 1e-9);
    let lo = orders.iter().cloned().fold(f64::INFINITY, f64::min);
    format!("identity residual max {worst:.2e}, pullback orders >= {lo:.3}")
}

fn criterion_2(out: &Path) -> String {
    let m = run("heat_decay.cfg", out);
    require(&m);
    let err = value(&m, "max_error_vs_exact");
    assert!(err <= 5e-5);
    format!("max error vs exp(-t) cos(theta) {err:.2e}")
}

fn criterion_3(out: &Path) -> String {
    let m = run("conservation.cfg", out);
    require(&m);
    let (drift, closed) = (value(&m, "mass_drift_relative"), value(&m, "closed_form_error"));
    assert!(drift <= 1e-8 && closed <= 1e-6);
    format!("relative mass drift {drift:.2e}, closed-form error {closed:.2e}")
}

fn criterion_4(out: &Path) -> String {
    let m = run("contraction_c1.cfg", out);
    require(&m);
    let epsilon = (std::f64::consts::LN_2 + 1.0) / 2.0;
    assert!((summary(&m, "epsilon") - epsilon).abs() <= 1e-6);
    assert!(((-epsilon).exp() - 0.429).abs() <= 1e-3);
    let slack = summary(&m, "slack");
    let (tj, tk) = (summary(&m, "theta_j"), summary(&m, "theta_k"));
    assert!(tj <= (-epsilon).exp() * (1.0 + slack));
    assert!(tk <= 2.0 * tj && 2.0 * tj < 1.0);
    let iterations = summary(&m, "iterations");
    assert!(iterations <= 40.0 && value(&m, "fixed_point_residual") <= 1e-10);
    format!("theta_J {tj:.4} theta_K {tk:.4} bound {:.4}, {iterations} iterates", (-epsilon).exp() * (1.0 + slack))
}

fn criterion_5(out: &Path) -> String {
    let m = run("breathing_periodic.cfg", out);
    require(&m);
    let (strict, sigma) = (value(&m, "strict_residual"), value(&m, "sigma_min"));
    assert!(value(&m, "compatibility") <= 1e-12);
    assert!(strict <= 1e-8 && sigma >= 1e-8 && value(&m, "initial_mean_error") <= 1e-12);
    format!("strict residual {strict:.2e}, sigma_min {sigma:.3e}")
}

fn criterion_6(out: &Path) -> String {
    let mut worst = 0.0f64;
    for name in ["bean_fixed.cfg", "breathing_fixed.cfg"] {
        let m = run(name, out);
        require(&m);
        let (cross, unique) = (value(&m, "cross_method_gap"), value(&m, "uniqueness_gap"));
        assert!(cross <= 1e-8 && unique <= 1e-8);
        worst = worst.max(cross).max(unique);
    }
    format!("max cross-method / uniqueness gap {worst:.2e}")
}

fn criterion_7(out: &Path) -> String {
    let m = run("relaxed_exponential.cfg", out);
    require(&m);
    let expected = (-0.5f64).exp() - 1.0;
    let drift = summary(&m, "mean_drift");
    assert!((drift - expected).abs() <= 1e-4);
    assert!(value(&m, "relaxed_residual") <= 1e-8);
    format!("mean drift {drift:.6} vs {expected:.6}")
}

fn criterion_8(out: &Path) -> String {
    let m = run("band_check.cfg", out);
    require(&m);
    let (ext, os) = (value(&m, "extension_order_low"), value(&m, "os_order_low"));
    assert!((ext - 2.0).abs() <= 0.3 && (os - 2.0).abs() <= 0.3);
    assert!(value(&m, "eikonal_residual") <= 1e-4 && value(&m, "round_trip") <= 1e-6);
    format!(
        "eikonal {:.1e}, round trip {:.1e}, orders {ext:.3}/{os:.3}, flat strip {:.1e}",
        value(&m, "eikonal_residual"),
        value(&m, "round_trip"),
        value(&m, "flat_strip_equivalence")
    )
}

fn criterion_9(out: &Path) -> String {
    for fam in ["circle", "breathing", "bean"] {
        let m = run(&format!("max_principle_{fam}.cfg"), out);
        require(&m);
        assert_eq!(value(&m, "monotone"), 1.0);
        assert_eq!(value(&m, "control_violation_detected"), 1.0);
    }
    "monotone on 3 shipped runs, negative control flagged".into()
}

fn criterion_10(out: &Path) -> String {
    let bin = env!("CARGO_BIN_EXE_periflow");
    let mut compared = 0;
    for name in ["contraction_c1.cfg", "breathing_periodic.cfg", "band_check.cfg"] {
        let dirs: Vec<PathBuf> = (0..2).map(|k| out.join(format!("det{k}_{name}"))).collect();
        for d in &dirs {
            let status = Command::new(bin)
                .args(["run", "--config"])
                .arg(config_path(name))
                .arg("--out")
                .arg(d)
                .output()
                .expect("spawn periflow");
            assert!(status.status.success(), "{name}: {}", String::from_utf8_lossy(&status.stderr));
        }
        let mut files: Vec<_> = std::fs::read_dir(&dirs[0]).unwrap().map(|e| e.unwrap().file_name()).collect();
        files.sort();
        for f in files {
            let a = std::fs::read(dirs[0].join(&f)).unwrap();
            let b = std::fs::read(dirs[1].join(&f)).unwrap();
            assert!(a == b, "{name}: {f:?} differs");
            compared += 1;
        }
    }
    format!("{compared} output files byte-identical across repeated runs")
}

type Criterion = fn(&Path) -> String;

fn main() {
    let criteria: [(&str, Criterion); 10] = [
        ("operator identities", criterion_1),
        ("heat-kernel oracle", criterion_2),
        ("conservation", criterion_3),
        ("contraction", criterion_4),
        ("periodic solution on breathing circle", criterion_5),
        ("cross-method agreement", criterion_6),
        ("relaxed periodicity", criterion_7),
        ("narrow-band suite", criterion_8),
        ("maximum principle", criterion_9),
        ("determinism", criterion_10),
    ];
    let dir = tempfile::tempdir().expect("tempdir");
    std::panic::set_hook(Box::new(|_| {}));
    let mut failures = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        match catch_unwind(AssertUnwindSafe(|| f(dir.path()))) {
            Ok(detail) => println!("criterion {:>2} PASS {name}: {detail}", k + 1),
            Err(e) => {
                failures += 1;
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                println!("criterion {:>2} FAIL {name}: {msg}", k + 1);
            }
        }
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
