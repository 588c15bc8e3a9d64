use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn sqvac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sqvac")).args(args).output().expect("binary runs")
}

fn run_in(dir: &Path, sub: &str, extra: &[&str]) -> Output {
    let mut args = vec![sub, "--out", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    sqvac(&args)
}

fn dir_contents(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn csv_value(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key},")))
        .unwrap_or_else(|| panic!("{key} missing"))
        .parse()
        .unwrap()
}

#[test]
fn reruns_are_byte_identical() {
    for sub in ["ramsey", "sweep-gain", "wigner", "polariton"] {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        assert!(run_in(a.path(), sub, &[]).status.success());
        assert!(run_in(b.path(), sub, &[]).status.success());
        let (fa, fb) = (dir_contents(a.path()), dir_contents(b.path()));
        assert!(!fa.is_empty());
        assert_eq!(fa, fb, "{sub}");
    }
}

#[test]
fn empty_config_exits_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("empty.toml");
    fs::write(&cfg, "").unwrap();
    let out = run_in(dir.path(), "ramsey", &["--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("[system.direct]") && err.contains("[system.polariton]"), "{err}");
}

#[test]
fn invalid_field_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[system.direct]\nt1_us = 0.65\n[reservoir]\nn = 0.5\nm = 0.5\neta = 1.5\n").unwrap();
    let out = run_in(dir.path(), "ramsey", &["--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("reservoir.eta"));
}

#[test]
fn numerical_failure_exits_with_code_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("unphysical.toml");
    fs::write(&cfg, "[system.direct]\nt1_us = 0.65\n[reservoir]\nn = 0.1\nm = 2.0\n").unwrap();
    let out = run_in(dir.path(), "ramsey", &["--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("decay rates"));
}

#[test]
fn vacuum_ramsey_gives_t2_star() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_in(dir.path(), "ramsey", &["--format", "csv"]).status.success());
    let fits = fs::read_to_string(dir.path().join("ramsey_fits.csv")).unwrap();
    let row = fits.lines().find(|l| l.contains(",false,")).unwrap();
    let t: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
    assert!((t - 1.086).abs() < 1e-3, "{t}");
    assert!(!dir.path().join("ramsey_fits.json").exists());
}

#[test]
fn direct_and_polariton_systems_agree() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("direct.toml");
    fs::write(&cfg, "[system.direct]\nt1_us = 0.65\nt_phi_us = 6.6\n[reservoir]\nn = 0.88\nm = 1.08\neta = 0.5\n").unwrap();
    let d = dir.path().join("direct");
    let p = dir.path().join("polariton");
    assert!(run_in(&d, "sweep-gain", &["--config", cfg.to_str().unwrap()]).status.success());
    assert!(run_in(&p, "sweep-gain", &[]).status.success());
    let a = fs::read_to_string(d.join("gain.csv")).unwrap();
    let b = fs::read_to_string(p.join("gain.csv")).unwrap();
    assert_eq!(a.lines().nth(2), b.lines().nth(2));
}

#[test]
fn estimate_accepts_supplied_traces() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim");
    assert!(run_in(&sim, "estimate", &[]).status.success());
    let first = fs::read_to_string(sim.join("estimate.csv")).unwrap();
    let cfg = dir.path().join("supplied.toml");
    let text = sqvac_conf().replace(
        "[estimate]",
        "[estimate.traces]\nvacuum_ramsey = \"sim/estimate_trace_ramsey_vacuum.csv\"\nvacuum_relaxation = \"sim/estimate_trace_relaxation_vacuum.csv\"\nsqueezed_x = \"sim/estimate_trace_ramsey_x.csv\"\nsqueezed_y = \"sim/estimate_trace_ramsey_y.csv\"\nsqueezed_relaxation = \"sim/estimate_trace_relaxation_squeezed.csv\"\n\n[estimate]",
    );
    fs::write(&cfg, text).unwrap();
    let out = run_in(&dir.path().join("fit"), "estimate", &["--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let second = fs::read_to_string(dir.path().join("fit/estimate.csv")).unwrap();
    for key in ["n", "m", "tz_us", "tx_tilde_us"] {
        let (a, b) = (csv_value(&first, key), csv_value(&second, key));
        assert!((a - b).abs() <= 1e-6 * a.abs().max(1.0), "{key}: {a} vs {b}");
    }
    assert!((csv_value(&second, "n_uncorrected") - 0.88).abs() < 1e-4);
    assert!((csv_value(&second, "m_uncorrected") - 1.08).abs() < 1e-4);
}

fn sqvac_conf() -> String {
    String::from_utf8(sqvac(&["show-config"]).stdout).unwrap()
}

#[test]
fn validate_prints_one_row_per_criterion() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "validate", &[]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    let rows: Vec<&str> = stdout.lines().filter(|l| l.starts_with("PASS [") || l.starts_with("FAIL [")).collect();
    assert_eq!(rows.len(), 11, "{stdout}");
    let failed = rows.iter().filter(|l| l.starts_with("FAIL")).count();
    assert_eq!(out.status.code(), Some(if failed == 0 { 0 } else { 1 }));
    let json = fs::read_to_string(dir.path().join("validation.json")).unwrap();
    assert!(json.contains(&format!("\"failed\": {failed}")));
}
