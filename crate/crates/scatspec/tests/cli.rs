use std::fs;
use std::path::Path;
use std::process::Command;

use scatspec::config::WarpFamily;
use scatspec::report::Report;
use scatspec::{parse_config, CliError};

const SMALL: &str = r#"
[hardy]
cases = [[3, 0.0]]
ratios = [1e2, 1e3]
nodes = 256

[weight]
dims = [3]
t0 = [0.3]
s_fractions = [0.5]
t_points = 50
"#;

/// Every remaining suite at toy resolution.
const FAST: &str = r#"
[grid]
oversampling = 4.0
spacing = 0.25

[poincare]
r_max = [50.0, 100.0]
spacing = 1.0
samples = 5
vb_r_max = [20.0, 40.0]

[poincare.model.spectrum]
k_max = 2

[mourre]
h_list = [2.0, 4.0]
oracle_nodes = [129, 257]
commutator_nodes = [256, 512]

[sqrt-mourre]
h_list = [2.0, 4.0]
oracle_nodes = 60

[resolvent]
h_list = [2.0, 4.0]
s_list = [0.0]
derivatives = [0]
sigmas = [0.0]
pairing_derivatives = [0]

[resolvent.model.spectrum]
k_max = 1

[adjoint-bounds]
h_list = [2.0, 4.0]
mu_list = [1.0]
projector_l = [[1.0, 0]]

[wave]
r_max = 24.0
spacing = 0.2
t_list = [4.0, 8.0]
mus = [1.0]

[wave.trapping]
enabled = false
"#;

fn config_errors(text: &str, overrides: &[&str]) -> Vec<String> {
    let overrides: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
    match parse_config(text, &overrides) {
        Err(CliError::Config(e)) => e,
        Err(other) => panic!("expected a configuration error, got {other}"),
        Ok(_) => panic!("configuration unexpectedly accepted"),
    }
}

fn scatspec(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_scatspec")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn minimal_config_uses_defaults() {
    let loaded = parse_config("[model]\nn = 3\n", &[]).unwrap();
    assert_eq!(loaded.config.model.n, 3);
    assert_eq!(loaded.config.grid.oversampling, 8.0);
    assert_eq!(loaded.config.mourre.h_list, [4.0, 8.0, 16.0, 32.0]);
    assert_eq!(loaded.hash.len(), 64);
}

#[test]
fn s_at_the_poincare_limit_is_rejected_with_its_hypothesis() {
    let errors = config_errors("[model]\nn = 3\n[poincare]\ns = 1.0\n", &[]);
    assert!(errors.iter().any(|e| e.contains("poincare.s") && e.contains("s < (n−2)/2")), "{errors:?}");
}

#[test]
fn unknown_keys_are_named() {
    let errors = config_errors("[wave]\nrmax = 64.0\n[mourre.model]\nrh = 1.0\n", &[]);
    assert!(errors.iter().any(|e| e.contains("`wave.rmax`")), "{errors:?}");
    assert!(errors.iter().any(|e| e.contains("`mourre.model.rh`")), "{errors:?}");
}

#[test]
fn every_range_violation_is_reported() {
    let errors = config_errors(
        "[resolvent]\ns_list = [0.6]\n[wave]\nmus = [1.5]\n[model]\nrho = -1.0\n",
        &[],
    );
    for key in ["resolvent.s_list", "wave.mus", "rho"] {
        assert!(errors.iter().any(|e| e.contains(key)), "{key} missing from {errors:?}");
    }
}

#[test]
fn overrides_parse_toml_values_and_fall_back_to_strings() {
    let loaded = parse_config(
        "",
        &["mourre.h_list=[2.0, 4.0]".into(), "model.warp.family=decay".into(), "model.warp.c=0.2".into()],
    )
    .unwrap();
    assert_eq!(loaded.config.mourre.h_list, [2.0, 4.0]);
    assert_eq!(loaded.config.model.warp.family, WarpFamily::Decay);
    assert_eq!(loaded.models.mourre.warp.c, 0.2);
    let plain = parse_config("", &[]).unwrap();
    assert_ne!(plain.hash, loaded.hash);
    assert_ne!(plain.seed(), loaded.seed());
}

#[test]
fn suite_models_merge_over_the_base_model() {
    let loaded = parse_config("[model]\nn = 4\n[wave.model]\nr_min = 1.5\n", &[]).unwrap();
    assert_eq!(loaded.models.wave.n, 4);
    assert_eq!(loaded.models.wave.r_min, 1.5);
    assert_eq!(loaded.models.mourre.r_min, 1.0);
}

#[test]
fn exit_codes_follow_the_documented_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let good = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();

    let pass = scatspec(&["weight", "--config", &good, "--out", out]);
    assert_eq!(pass.status.code(), Some(0), "{}", String::from_utf8_lossy(&pass.stderr));
    // the truncated Hardy minimum sits far above the sharp band at ratio 10³
    let fail = scatspec(&["hardy", "--config", &good, "--out", out]);
    assert_eq!(fail.status.code(), Some(1));
    let bad = scatspec(&["hardy", "--config", &good, "--out", out, "--override", "hardy.bogus=1"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("hardy.bogus"));
    let unknown = scatspec(&["everything", "--config", &good, "--out", out]);
    assert_eq!(unknown.status.code(), Some(2));
    let missing = scatspec(&["hardy", "--config", "/nonexistent.toml", "--out", out]);
    assert_eq!(missing.status.code(), Some(2));
}

fn normalized_report(dir: &Path) -> Report {
    let mut report = Report::from_json(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    for block in &mut report.suites {
        block.wall_time_s = 0.0;
    }
    report
}

#[test]
fn identical_runs_produce_identical_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &format!("{SMALL}{FAST}"));
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let run = scatspec(&["all", "--config", &config, "--out", out.to_str().unwrap()]);
        assert!(matches!(run.status.code(), Some(0 | 1)), "{}", String::from_utf8_lossy(&run.stderr));
    }
    let (ra, rb) = (normalized_report(&a), normalized_report(&b));
    assert_eq!(ra, rb);
    let names: Vec<&str> = ra.suites.iter().map(|s| s.suite.as_str()).collect();
    let mut sorted = names.clone();
    sorted.sort();
    assert_eq!(names, sorted);
    for block in &ra.suites {
        for file in &block.artifacts {
            assert_eq!(fs::read(a.join(file)).unwrap(), fs::read(b.join(file)).unwrap(), "{file}");
        }
    }
    assert!(!fs::read(a.join("summary.txt")).unwrap().is_empty());
    let header = fs::read_to_string(a.join("mourre_scan.csv")).unwrap();
    assert_eq!(header.lines().next(), Some("H,c_H,window_rank"));
}

#[test]
fn written_reports_validate_against_the_schema() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");
    scatspec(&["hardy", "--config", &config, "--out", out.to_str().unwrap()]);
    let text = fs::read_to_string(out.join("report.json")).unwrap();
    let report = Report::from_json(&text).unwrap();
    assert_eq!(report.to_json().unwrap(), text);
    let hardy = report.suite("hardy").unwrap();
    assert_eq!(hardy.artifacts, ["hardy.csv"]);
    let rejected = text.replacen("\"overall\"", "\"verdict\": \"pass\",\n  \"overall\"", 1);
    assert!(Report::from_json(&rejected).is_err());
    let canonical = fs::read_to_string(out.join("config.toml")).unwrap();
    assert_eq!(parse_config(&canonical, &[]).unwrap().hash, report.config_hash);
}
