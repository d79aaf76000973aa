use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn hlat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hlat")).args(args).output().unwrap()
}

fn hlat_stdin(args: &[&str], input: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_hlat"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn json_of(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn construct_writes_generating_vector() {
    let v = json_of(&hlat(&["construct", "-N", "127", "-d", "6", "--weights", "fast-decay"]));
    assert_eq!(v["N"], 127);
    assert_eq!(v["z"].as_array().unwrap().len(), 6);
    assert_eq!(v["error_trace"].as_array().unwrap().len(), 6);
    assert!(v.get("warning").is_none());
}

#[test]
fn construct_is_deterministic_across_files() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let out = hlat(&["construct", "-N", "127", "-d", "6", "--out", path_str(p)]);
        assert!(out.status.success());
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn composite_fast_mode_warns() {
    let v = json_of(&hlat(&["construct", "-N", "64", "-d", "3", "--mode", "fast"]));
    assert!(v["warning"].is_string());
    assert_eq!(v["mode"], "naive");
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"N": 31, "d": 4, "weights": "slow-decay", "alpha": 2.0}"#).unwrap();
    let v = json_of(&hlat(&["construct", "--config", path_str(&cfg)]));
    assert_eq!(v["N"], 31);
    assert_eq!(v["alpha"], 2.0);
    let v = json_of(&hlat(&["construct", "--config", path_str(&cfg), "-d", "2", "--alpha", "1"]));
    assert_eq!(v["z"].as_array().unwrap().len(), 2);
    assert_eq!(v["alpha"], 1.0);
}

#[test]
fn config_from_stdin() {
    let v = json_of(&hlat_stdin(&["construct", "--config", "-"], r#"{"N": 37, "d": 3}"#));
    assert_eq!(v["N"], 37);
}

#[test]
fn cache_directory_reuses_entries() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let args = ["construct", "-N", "61", "-d", "5", "--cache-dir", path_str(&cache)];
    let first = json_of(&hlat(&args));
    assert_eq!(fs::read_dir(&cache).unwrap().count(), 1);
    let second = json_of(&hlat(&args));
    assert_eq!(first, second);
    assert_eq!(fs::read_dir(&cache).unwrap().count(), 1);
    json_of(&hlat(&["construct", "-N", "61", "-d", "4", "--cache-dir", path_str(&cache)]));
    assert_eq!(fs::read_dir(&cache).unwrap().count(), 2);
}

#[test]
fn error_reports_exact_and_empirical() {
    let v = json_of(&hlat(&[
        "error", "-N", "64", "-d", "4", "-s", "8", "--replications", "100", "--seed", "11",
    ]));
    let c = &v["concatenated"];
    let total = c["total"].as_f64().unwrap();
    let sum = c["mc_term"].as_f64().unwrap() + c["lattice_term"].as_f64().unwrap();
    assert_eq!(total, sum);
    let e = &v["empirical"];
    let z = (e["mean"].as_f64().unwrap() - total) / e["std_error"].as_f64().unwrap();
    assert!((e["z_score"].as_f64().unwrap() - z).abs() < 1e-12);
    assert!(v["truncated"]["total"].as_f64().unwrap() > 0.0);
}

#[test]
fn error_with_zero_d_is_flagged_extension() {
    let v = json_of(&hlat(&["error", "-N", "64", "-d", "0", "-s", "8"]));
    assert_eq!(v["pure_mc"]["extension"], true);
    assert_eq!(v["pure_mc"]["lattice_term"], 0.0);
    assert!(v.get("concatenated").is_none());
}

#[test]
fn error_is_reproducible_given_seed() {
    let args = ["error", "-N", "31", "-d", "2", "-s", "4", "--replications", "20", "--seed", "5"];
    assert_eq!(hlat(&args).stdout, hlat(&args).stdout);
}

fn parse_convergence(text: &str) -> (Vec<Vec<String>>, f64) {
    let mut lines: Vec<&str> = text.lines().collect();
    let slope_line = lines.pop().unwrap();
    let slope = slope_line.strip_prefix("# fitted_slope=").unwrap().parse().unwrap();
    let rows = lines.iter().map(|l| l.split(',').map(str::to_string).collect()).collect();
    (rows, slope)
}

#[test]
fn convergence_csv_schema_and_slope() {
    let out = hlat(&[
        "convergence", "-N", "31,61,127,257,509,1021,2053", "-s", "4d", "--weights", "fast-decay",
        "--alpha", "1",
    ]);
    assert!(out.status.success());
    let (rows, slope) = parse_convergence(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(
        rows[0],
        ["N", "d_used", "exact_total", "mc_term", "lattice_term", "theorem1_bound", "wallclock_ms"]
    );
    assert_eq!(rows.len(), 8);
    for row in &rows[1..] {
        let total: f64 = row[2].parse().unwrap();
        let bound: f64 = row[5].parse().unwrap();
        assert!(bound >= total);
        let mantissa = row[2].split('e').next().unwrap();
        assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17);
    }
    assert!(slope.is_finite());
    assert!(slope <= -1.5, "slope {slope}");
}

#[test]
fn convergence_mc_regime_slope() {
    let out = hlat(&[
        "convergence", "-N", "31,61,127,257,509,1021,2053", "-d", "1", "-s", "64", "--weights",
        "slow-decay",
    ]);
    let (_, slope) = parse_convergence(&String::from_utf8(out.stdout).unwrap());
    assert!((slope + 1.0).abs() <= 0.15, "slope {slope}");
}

#[test]
fn convergence_json_format() {
    let v = json_of(&hlat(&["convergence", "-N", "31,61,127,257", "-s", "4d", "--format", "json"]));
    assert_eq!(v["rows"].as_array().unwrap().len(), 4);
    assert!(v["fitted_slope"].as_f64().unwrap().is_finite());
}

#[test]
fn advise_reports_both_advisors_and_costs() {
    let v = json_of(&hlat_stdin(
        &["advise", "--config", "-"],
        r#"{"N": [127, 1024], "s": 1000, "alpha": 1.0, "reduced": {"b": 2, "beta": 1.0}}"#,
    ));
    for row in v["rows"].as_array().unwrap() {
        let n = row["N"].as_u64().unwrap();
        let d = row["d_concat"].as_u64().unwrap();
        assert!(row["d_truncated"].as_u64().unwrap() >= d);
        let log2 = 64 - u64::from((n - 1).leading_zeros());
        assert_eq!(row["cost_concat"].as_u64().unwrap(), d * n * log2);
    }
    let reduced = &v["rows"][1]["reduced"];
    assert_eq!(reduced["m"], 10);
    assert!(reduced["cost"].as_f64().unwrap() <= reduced["estimate"].as_f64().unwrap());
}

#[test]
fn exit_codes() {
    // config errors
    assert_eq!(hlat(&["construct", "-d", "3"]).status.code(), Some(2));
    assert_eq!(hlat(&["construct", "-N", "31", "-d", "3", "--weights", "steep"]).status.code(), Some(2));
    assert_eq!(hlat(&["convergence", "-N", "31,61,127", "-s", "4d"]).status.code(), Some(2));
    assert_eq!(hlat(&["construct", "--config", "/nonexistent/cfg.json"]).status.code(), Some(2));
    assert_eq!(hlat(&["nonsense"]).status.code(), Some(2));
    let bad = hlat_stdin(&["construct", "--config", "-"], "{\"N\": 31, \"d\": 2, \"dims\": 4}");
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("dims"));
    // domain errors
    assert_eq!(hlat(&["construct", "-N", "31", "-d", "3", "--alpha", "0.4"]).status.code(), Some(3));
    assert_eq!(hlat(&["advise", "-N", "31", "-s", "10", "--alpha", "0.4"]).status.code(), Some(3));
}

#[test]
fn failed_run_leaves_no_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.json");
    let r = hlat(&["construct", "-N", "31", "-d", "3", "--alpha", "0.4", "--out", path_str(&out)]);
    assert_eq!(r.status.code(), Some(3));
    assert!(!out.exists());
}

#[test]
fn csv_construct_format() {
    let out = hlat(&["construct", "-N", "31", "-d", "3", "--format", "csv", "--threads", "2"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "j,z,error_trace");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("1,1,"));
}
