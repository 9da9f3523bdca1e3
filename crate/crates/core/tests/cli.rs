use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn skewlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_skewlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("run.json");
    fs::write(&p, body).unwrap();
    p.display().to_string()
}

#[test]
fn constants_out_of_order_exit_2() {
    let dir = scratch("cli_order");
    let cfg = write_config(&dir, r#"{ "profile": { "lambda": 0.5, "eta": 0.4 } }"#);
    let out = skewlab(&["--config", &cfg, "construct"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("0 < λ < η < 1 < μ"));
}

#[test]
fn unknown_field_and_suite_exit_2() {
    let dir = scratch("cli_unknown");
    let cfg = write_config(&dir, r#"{ "lamda": 0.2 }"#);
    assert_eq!(
        skewlab(&["--config", &cfg, "construct"]).status.code(),
        Some(2)
    );
    let out = dir.display().to_string();
    let r = skewlab(&["--out", &out, "--suite", "nope", "report"]);
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn flow_time_too_short_exit_2() {
    let dir = scratch("cli_flow");
    let cfg = write_config(
        &dir,
        r#"{ "base": "suspension-flow", "mode": "flow", "profile": { "n": 1 } }"#,
    );
    let out = skewlab(&["--config", &cfg, "construct"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("η^N < λ"));
}

#[test]
fn profiles_dump_writes_versioned_json_and_csv() {
    let dir = scratch("cli_profiles");
    let out = dir.display().to_string();
    let r = skewlab(&[
        "--out",
        &out,
        "--seed",
        "7",
        "--threads",
        "1",
        "profiles",
        "dump",
    ]);
    assert_eq!(
        r.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&r.stderr)
    );
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("profiles.json")).unwrap()).unwrap();
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["manifest"]["seed"], 7);
    assert_eq!(doc["pass"], true);
    let csv = fs::read_to_string(dir.join("profile_0.csv")).unwrap();
    assert!(csv.starts_with("z,h,h_prime,tau,tau_prime,rho,rho_prime"));
    assert_eq!(csv.lines().count(), 1002);
}

#[test]
fn construct_reports_splitting_dimensions() {
    let dir = scratch("cli_construct");
    let out = dir.display().to_string();
    let cfg = concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../configs/multi_switch.json"
    );
    let r = skewlab(&["--config", cfg, "--out", &out, "construct"]);
    assert_eq!(
        r.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&r.stderr)
    );
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("construct.json")).unwrap()).unwrap();
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["construction"]["depth"], 2);
}
