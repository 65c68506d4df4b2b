use std::fs;
use std::path::Path;

use serde_json::Value;
use yde_cli::config::parse_config;
use yde_cli::output::Manifest;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut full = vec!["yde"];
    full.extend_from_slice(args);
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = yde_cli::run(full, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn run_in(dir: &Path, args: &[&str]) -> (i32, String, String) {
    let mut full = vec!["--out", dir.to_str().unwrap()];
    full.extend_from_slice(args);
    run(&full)
}

fn error_json(stderr: &str) -> Value {
    serde_json::from_str(stderr.trim()).expect("stderr is one JSON object")
}

#[test]
fn help_and_version_exit_zero() {
    let (code, out, _) = run(&["--help"]);
    assert_eq!(code, 0);
    for sub in ["pvar", "fbm", "gamma", "integrate", "solve", "constants", "criterion", "attractor", "sweep-cg", "pendulum", "verify", "report"] {
        assert!(out.contains(sub), "help lists {sub}");
    }
    assert_eq!(run(&["--version"]).0, 0);
}

#[test]
fn usage_errors_exit_two_with_json() {
    let (code, _, err) = run(&["frobnicate"]);
    assert_eq!(code, 2);
    assert_eq!(error_json(&err)["error"]["kind"], "usage");
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = run_in(dir.path(), &["verify", "nonsense"]);
    assert_eq!(code, 2);
    assert_eq!(error_json(&err)["exit_code"], 2);
}

#[test]
fn verify_gronwall_passes_on_default_config() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, err) = run_in(dir.path(), &["verify", "gronwall"]);
    assert_eq!(code, 0, "{err}");
    assert!(out.lines().any(|l| l.starts_with("gronwall") && l.ends_with("pass")), "{out}");
    let table = fs::read_to_string(dir.path().join("verify-gronwall.csv")).unwrap();
    assert!(table.starts_with("check,cases,violations,worst_slack,passed\n"));
    assert!(table.contains("gronwall,100,0,"));
}

#[test]
fn config_dump_round_trips() {
    let text = "[system]\nid = pendulum\nb = 1.5\nsigma = [1e-10, 0, 0, 2e-10]\n\n[noise]\nhurst = [0.7, 0.75, 0.8, 0.9]\nseed = \"18446744073709551615\"\n\n[analysis]\np = 1.4\ny0 = [1, 0; 0, 1]\n";
    let cfg = parse_config(text).unwrap();
    assert_eq!(cfg.noise.seed, u64::MAX);
    let dump = cfg.dump();
    let again = parse_config(&dump).unwrap();
    assert_eq!(again.dump(), dump);
    assert_eq!(again, cfg);
}

#[test]
fn config_errors_are_aggregated_with_lines() {
    let text = "[system]\nid = pendulum\nb = 1\nb = 2\n\n[analysis]\np = fast\nbogus = 1\n";
    let diags = parse_config(text).unwrap_err();
    assert!(diags.len() >= 3, "{diags:?}");
    let dup: Vec<_> = diags.iter().filter(|d| d.message.contains("duplicate")).collect();
    assert_eq!(dup.len(), 1);
    assert!(dup[0].message.contains('3') && dup[0].message.contains('4'), "{}", dup[0].message);
    assert!(diags.iter().any(|d| d.line == Some(7)));
    assert!(diags.iter().any(|d| d.line == Some(8)));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.ini");
    fs::write(&path, text).unwrap();
    let (code, _, err) = run(&["--config", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "fbm"]);
    assert_eq!(code, 2);
    let j = error_json(&err);
    assert_eq!(j["error"]["kind"], "config");
    assert!(j["error"]["diagnostics"].as_array().unwrap().len() >= 3);
}

#[test]
fn same_seed_gives_identical_csv() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        assert_eq!(run_in(d.path(), &["--seed", "5", "fbm", "--count", "2"]).0, 0);
        assert_eq!(run_in(d.path(), &["--seed", "5", "attractor"]).0, 0);
    }
    for f in ["fbm_0000.csv", "fbm_0001.csv", "pullback.csv", "attractor_points.csv"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let c = tempfile::tempdir().unwrap();
    run_in(c.path(), &["--seed", "6", "fbm", "--count", "1"]);
    assert_ne!(fs::read(a.path().join("fbm_0000.csv")).unwrap(), fs::read(c.path().join("fbm_0000.csv")).unwrap());
}

#[test]
fn manifest_records_provenance_and_columns() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(run_in(d.path(), &["--seed", "9", "criterion"]).0, 0);
    assert_eq!(run_in(d.path(), &["--seed", "9", "constants"]).0, 0);
    let m = Manifest::load(d.path()).unwrap();
    assert_eq!(m.runs.len(), 2);
    assert!(m.runs.iter().all(|r| r.seed == 9 && r.config_sha256.len() == 64 && !r.command_line.is_empty()));
    for run in &m.runs {
        for a in run.artifacts.iter().filter(|a| a.format == "csv") {
            let header = fs::read_to_string(d.path().join(&a.file)).unwrap();
            let names: Vec<&str> = header.lines().next().unwrap().split(',').collect();
            let documented: Vec<&str> = a.columns.iter().map(|c| c.name.as_str()).collect();
            assert_eq!(names, documented, "{}", a.file);
            assert!(a.columns.iter().all(|c| !c.description.is_empty()));
        }
    }
    // Re-running replaces the record instead of appending.
    assert_eq!(run_in(d.path(), &["--seed", "9", "criterion"]).0, 0);
    assert_eq!(Manifest::load(d.path()).unwrap().runs.len(), 2);
}

#[test]
fn unwritable_output_dir_exits_two_naming_path() {
    let d = tempfile::tempdir().unwrap();
    let blocker = d.path().join("file");
    fs::write(&blocker, "not a directory").unwrap();
    let target = blocker.join("out");
    let (code, _, err) = run_in(&target, &["fbm"]);
    assert_eq!(code, 2);
    let j = error_json(&err);
    assert_eq!(j["error"]["kind"], "io");
    assert_eq!(j["error"]["path"], target.display().to_string());
}

#[test]
fn report_on_empty_run() {
    let d = tempfile::tempdir().unwrap();
    Manifest::default().save(d.path()).unwrap();
    let (code, out, _) = run(&["report", d.path().to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.contains("experiments: 0"));
    assert!(out.contains("total bound violations: 0"));
    let summary: Value = serde_json::from_str(&fs::read_to_string(d.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["experiments"], 0);
}

#[test]
fn report_without_manifest_exits_two() {
    let d = tempfile::tempdir().unwrap();
    let (code, _, err) = run(&["report", d.path().to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(error_json(&err)["error"]["path"].as_str().unwrap().ends_with("manifest.json"));
}

#[test]
fn report_flags_tampered_csv() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(run_in(d.path(), &["fbm"]).0, 0);
    let f = d.path().join("fbm_0000.csv");
    let mut text = fs::read_to_string(&f).unwrap();
    text.push_str("99,0\n");
    fs::write(&f, text).unwrap();
    let (code, out, err) = run(&["report", d.path().to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(out.contains("fbm_0000.csv"), "{out}");
    let j = error_json(&err);
    assert_eq!(j["error"]["kind"], "integrity");
}

#[test]
fn report_shows_pendulum_attractor_at_origin() {
    let d = tempfile::tempdir().unwrap();
    let (code, out, err) = run_in(d.path(), &["pendulum", "--case", "1", "--seeds", "4"]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("zero-sigma4"));
    let (code, out, _) = run_in(d.path(), &["report"]);
    assert_eq!(code, 0);
    assert!(out.lines().any(|l| l.contains("pendulum-zero-sigma4") && l.contains("attractor ≈ 0")), "{out}");
}

#[test]
fn pendulum_params_file_must_match_case() {
    let d = tempfile::tempdir().unwrap();
    let params = d.path().join("p.ini");
    fs::write(&params, "[system]\nid = pendulum\nsigma = [1e-10, 1e-10, 0, 0]\n").unwrap();
    let (code, _, err) = run_in(d.path(), &["pendulum", "--case", "bounded", "--params", params.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert_eq!(error_json(&err)["error"]["kind"], "precondition");
    let (code, _, err) = run_in(d.path(), &["pendulum", "--case", "1", "--params", params.to_str().unwrap(), "--seeds", "2"]);
    assert_eq!(code, 0, "{err}");
}

#[test]
fn path_commands_accept_csv_input() {
    let d = tempfile::tempdir().unwrap();
    let x = d.path().join("x.csv");
    let y = d.path().join("y.csv");
    fs::write(&x, "t,x1\n0,0\n0.5,1\n1,0\n").unwrap();
    fs::write(&y, "t,x1\n0,1\n0.5,1\n1,1\n").unwrap();
    let xs = x.to_str().unwrap();
    let (code, out, err) = run_in(d.path(), &["pvar", "--x", xs, "--p", "1.5"]);
    assert_eq!(code, 0, "{err}");
    // Two increments of size 1: (1 + 1)^{1/1.5}.
    assert!(out.contains(&yde_core::paths::format_float(2f64.powf(1.0 / 1.5))), "{out}");
    let (code, out, err) = run_in(d.path(), &["integrate", "--y", y.to_str().unwrap(), "--x", xs]);
    assert_eq!(code, 0, "{err}");
    assert!(!out.is_empty());
    let (code, _, err) = run_in(d.path(), &["solve", "--y0", "1,0", "--from", "0", "--to", "2", "--mesh", "0.015625"]);
    assert_eq!(code, 0, "{err}");
}
