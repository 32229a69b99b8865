//! End-to-end runs of the `maxsurf` binary: exit-code contract, artifact formats and
//! determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_maxsurf"));
    c.env_remove("MAXSURF_THREADS");
    c
}

fn preset(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("presets").join(name)
}

fn write_config(dir: &Path, name: &str, json: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, json).unwrap();
    p
}

fn run(stage: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    bin().arg(stage).arg("--config").arg(config).arg("--out").arg(out).args(extra).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn report(out: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

/// A small perturbed instance with random slice sampling; its flatness defect at h = 0.1
/// exceeds the soft tolerance.
const SMALL: &str = r#"{
  "quartic": {"coeffs": [[1, 0]]},
  "grid": {"x0": 0, "x1": 3, "y0": 0, "y1": 3, "h": 0.1},
  "boundary": {"kind": "perturbed", "amplitude": 0.4},
  "slices": {"random": 4},
  "seed": 5
}"#;

#[test]
fn barbot_preset_solves_with_flat_curvature() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("solve", &preset("barbot.json"), dir.path(), &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = report(dir.path());
    let kmax = &r["bounds"]["K_max"];
    assert!(kmax["value"].as_f64().unwrap() <= 1e-8);
    assert_eq!(kmax["tolerance"].as_f64().unwrap(), 1e-8);
    assert_eq!(r["seed"].as_u64(), Some(1));
    assert!(r["timestamp"].is_string());
    for section in ["bounds", "identities", "decay_fits", "domain_checks", "slice_volumes", "open_question_ratios"] {
        assert!(r.get(section).is_some(), "missing section {section}");
    }
    let fields = std::fs::read_to_string(dir.path().join("fields.csv")).unwrap();
    assert_eq!(fields.lines().next(), Some("x,y,lambda,mu2,u,v,mu1,K,detII,normII2"));
    assert_eq!(fields.lines().count(), 1 + 101 * 101);
    let state = std::fs::read_to_string(dir.path().join("state.csv")).unwrap();
    assert_eq!(state.lines().next(), Some("x,y,lambda,mu2"));
    assert!(dir.path().join("state.json").is_file());
    assert!(dir.path().join("plotdata/solver_residuals.csv").is_file());
}

#[test]
fn every_numeric_check_carries_its_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("all", &preset("barbot.json"), dir.path(), &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = report(dir.path());
    for section in ["bounds", "identities", "domain_checks", "open_question_ratios"] {
        for (name, entry) in r[section].as_object().unwrap() {
            assert!(entry.get("value").is_some() && entry.get("tolerance").is_some(), "{section}.{name}");
        }
    }
    for p in r["slice_volumes"]["profiles"].as_array().unwrap() {
        assert!(p["max_extent"]["tolerance"].as_f64().unwrap() > std::f64::consts::FRAC_PI_2);
    }
}

#[test]
fn rerun_with_the_same_seed_differs_only_in_the_timestamp() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.json", SMALL);
    let strip = |out: &Path| {
        let text = std::fs::read_to_string(out.join("report.json")).unwrap();
        text.lines().filter(|l| !l.trim_start().starts_with("\"timestamp\"")).collect::<Vec<_>>().join("\n")
    };
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    assert_eq!(code(&run("all", &cfg, &a, &[])), 0);
    assert_eq!(code(&run("all", &cfg, &b, &[])), 0);
    assert_eq!(strip(&a), strip(&b));
    for f in ["fields.csv", "frame.csv", "slices.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    // A different seed draws different slice base points.
    assert_eq!(code(&run("all", &cfg, &c, &["--seed", "6"])), 0);
    assert_eq!(report(&c)["seed"].as_u64(), Some(6));
    assert_ne!(report(&a)["slice_volumes"]["profiles"], report(&c)["slice_volumes"]["profiles"]);
}

#[test]
fn threshold_outside_the_window_exits_one_and_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(preset("barbot.json")).unwrap().replace("\"seed\": 1", "\"seed\": 1, \"analysis\": {\"k\": -0.5}");
    let cfg = write_config(dir.path(), "bad.json", &text);
    let o = run("analyze", &cfg, &dir.path().join("out"), &[]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("analysis.k"), "{}", stderr(&o));
    assert!(!dir.path().join("out").exists(), "no artifacts on a config error");
}

#[test]
fn malformed_configs_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write_config(dir.path(), "unknown.json", &SMALL.replace("\"seed\": 5", "\"seed\": 5, \"sead\": 1"));
    let o = run("solve", &unknown, &dir.path().join("o1"), &[]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("sead"));
    let missing = dir.path().join("does-not-exist.json");
    assert_eq!(code(&run("solve", &missing, &dir.path().join("o2"), &[])), 1);
    let file = write_config(
        dir.path(),
        "file.json",
        &SMALL.replace(r#"{"kind": "perturbed", "amplitude": 0.4}"#, r#"{"kind": "file", "path": "nope.csv"}"#),
    );
    let o = run("solve", &file, &dir.path().join("o3"), &[]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("boundary.path"));
}

#[test]
fn non_convergence_exits_two_and_records_the_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg =
        write_config(dir.path(), "nc.json", &SMALL.replace("\"seed\": 5", "\"seed\": 5, \"solver\": {\"max_iter\": 1, \"tol\": 1e-12}"));
    let out = dir.path().join("out");
    let o = run("solve", &cfg, &out, &[]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    let r = report(&out);
    assert_eq!(r["status"]["exit_code"].as_i64(), Some(2));
    assert!(r["status"]["error"].as_str().unwrap().contains("no convergence"));
}

#[test]
fn hard_invariant_failure_exits_three() {
    // Boundary μ₂ amplitude 0.6 puts u above ln(2/3) + 10h² on the boundary itself.
    let dir = tempfile::tempdir().unwrap();
    let text = r#"{"quartic": {"coeffs": [[1, 0]]}, "grid": {"x0": 0, "x1": 2, "y0": 0, "y1": 2, "h": 0.05},
                   "boundary": {"kind": "perturbed", "amplitude": 0.6}}"#;
    let cfg = write_config(dir.path(), "hard.json", text);
    let out = dir.path().join("out");
    let o = run("solve", &cfg, &out, &[]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("bounds.u_max"));
    let r = report(&out);
    assert_eq!(r["bounds"]["u_max"]["pass"].as_bool(), Some(false));
    assert!(out.join("fields.csv").is_file(), "artifacts are still written");
}

#[test]
fn soft_failures_exit_three_only_under_strict() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.json", SMALL);
    let o = run("reconstruct", &cfg, &dir.path().join("lenient"), &[]);
    assert_eq!(code(&o), 0);
    assert!(stderr(&o).contains("flatness_defect"));
    let o = run("reconstruct", &cfg, &dir.path().join("strict"), &["--strict"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn unwritable_output_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.json", SMALL);
    let blocker = dir.path().join("blocker");
    std::fs::write(&blocker, "not a directory").unwrap();
    let o = run("solve", &cfg, &blocker.join("out"), &[]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
}

#[test]
fn thread_cap_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.json", SMALL);
    let mut c = bin();
    let o = c.env("MAXSURF_THREADS", "0").args(["solve", "--config"]).arg(&cfg).arg("--out").arg(dir.path().join("a")).output().unwrap();
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("MAXSURF_THREADS"));
    let mut c = bin();
    let o = c.env("MAXSURF_THREADS", "1").args(["slice", "--config"]).arg(&cfg).arg("--out").arg(dir.path().join("b")).output().unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn artifact_formats() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.json", SMALL);
    let out = dir.path().join("out");
    assert_eq!(code(&run("slice", &cfg, &out, &[])), 0);
    let frame = std::fs::read_to_string(out.join("frame.csv")).unwrap();
    let header: Vec<&str> = frame.lines().next().unwrap().split(',').collect();
    assert_eq!(header.len(), 27);
    assert_eq!((header[0], header[2], header[26]), ("x", "f00", "f44"));
    assert_eq!(frame.lines().count(), 1 + 31 * 31);
    let slices = std::fs::read_to_string(out.join("slices.csv")).unwrap();
    assert_eq!(slices.lines().next(), Some("x,y,theta,tau"));
    assert_eq!(slices.lines().count(), 1 + 4 * 32);
    let r = report(&out);
    assert_eq!(r["slice_volumes"]["profiles"].as_array().unwrap().len(), 4);
    assert!(out.join("plotdata/vbar.csv").is_file());
}

#[test]
fn solved_state_reloads_as_boundary_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.json", SMALL);
    let first = dir.path().join("first");
    assert_eq!(code(&run("solve", &cfg, &first, &[])), 0);
    let text = SMALL.replace(r#"{"kind": "perturbed", "amplitude": 0.4}"#, r#"{"kind": "file", "path": "first/state.csv"}"#);
    let reload = write_config(dir.path(), "reload.json", &text);
    let second = dir.path().join("second");
    let o = run("solve", &reload, &second, &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(report(&second)["solver"]["iterations"].as_u64(), Some(0));
    assert_eq!(std::fs::read(first.join("fields.csv")).unwrap(), std::fs::read(second.join("fields.csv")).unwrap());
}

#[test]
fn zeros_in_the_domain_skip_reconstruction() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(preset("simple_zero.json")).unwrap();
    let cfg = write_config(
        dir.path(),
        "zero.json",
        &text.replace("\"x0\": -5.0, \"x1\": 5.0, \"y0\": -5.0, \"y1\": 5.0", "\"x0\": -2.0, \"x1\": 2.0, \"y0\": -2.0, \"y1\": 2.0"),
    );
    let o = run("reconstruct", &cfg, &dir.path().join("r"), &[]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("quartic.coeffs"));
    let out = dir.path().join("a");
    let o = run("all", &cfg, &out, &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = report(&out);
    assert!(r["skipped"].as_array().unwrap().iter().any(|s| s["item"] == "reconstruct"));
    assert!(r["open_question_ratios"]["mass_per_zero_r0.2_over_2pi"]["value"].as_f64().unwrap() > 0.0);
    assert!(!out.join("frame.csv").exists());
}

#[test]
fn presets_and_schema_are_consistent() {
    let schema: Value =
        serde_json::from_str(&std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("schema/config.schema.json")).unwrap())
            .unwrap();
    let top: Vec<&String> = schema["properties"].as_object().unwrap().keys().collect();
    for name in ["barbot.json", "perturbed.json", "simple_zero.json"] {
        let v: Value = serde_json::from_str(&std::fs::read_to_string(preset(name)).unwrap()).unwrap();
        for key in v.as_object().unwrap().keys() {
            assert!(top.contains(&key), "{name}: key {key} missing from the schema");
        }
        maxsurf::cli_reporting::RunConfig::load(&preset(name)).unwrap();
    }
}
