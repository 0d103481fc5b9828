use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rvp_core::config::parse_config;
use rvp_core::harness::{CHECKPOINT_DIR, DIAGNOSTICS_FILE, MANIFEST_FILE, TRAJECTORY_FILE};

const RADIAL: &str = r#"scenario = "radial-gaussian"
n = 1000
dt = 0.01
t_end = 0.1
seed = 4

[diagnostics]
checkpoint_every = 5
"#;

fn rvp(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rvp"))
        .current_dir(dir)
        .env_remove("RVP_THREADS")
        .args(args)
        .output()
        .expect("spawn rvp")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn stderr_error(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().expect("stderr line");
    serde_json::from_str(line).unwrap_or_else(|e| panic!("{e}: {text}"))
}

fn read(dir: &Path, file: &str) -> Vec<u8> {
    fs::read(dir.join(file)).unwrap_or_else(|e| panic!("{}: {e}", dir.join(file).display()))
}

#[test]
fn run_rerun_and_resume_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "radial.toml", RADIAL);
    let out = rvp(tmp.path(), &["run", cfg.to_str().unwrap(), "--out", "a"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let a = tmp.path().join("a");
    for f in ["diagnostics.csv", "trajectory.csv", "checkpoint_final.json", "manifest.json", "config.toml"] {
        assert!(a.join(f).is_file(), "missing {f}");
    }
    let manifest: serde_json::Value = serde_json::from_slice(&read(&a, MANIFEST_FILE)).unwrap();
    assert_eq!(manifest["config_hash"], parse_config(RADIAL).unwrap().hash());
    assert!(manifest["schema_version"].is_u64());

    let out = rvp(tmp.path(), &["--threads", "3", "run", cfg.to_str().unwrap(), "--out", "b"]);
    assert!(out.status.success());
    let b = tmp.path().join("b");
    assert_eq!(read(&a, DIAGNOSTICS_FILE), read(&b, DIAGNOSTICS_FILE));
    assert_eq!(read(&a, TRAJECTORY_FILE), read(&b, TRAJECTORY_FILE));

    let mut mids: Vec<PathBuf> = fs::read_dir(a.join(CHECKPOINT_DIR)).unwrap().map(|e| e.unwrap().path()).collect();
    mids.sort();
    assert!(!mids.is_empty());
    let out = rvp(tmp.path(), &["resume", mids[0].to_str().unwrap(), "--out", "c"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(read(&a, DIAGNOSTICS_FILE), read(&tmp.path().join("c"), DIAGNOSTICS_FILE));
}

#[test]
fn default_output_directory_is_never_reused() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", &RADIAL.replace("n = 1000", "n = 50"));
    let first = rvp(tmp.path(), &["run", "c.toml"]);
    assert!(first.status.success());
    let dir = String::from_utf8(first.stdout).unwrap();
    assert!(dir.trim().starts_with("runs/"), "{dir}");
    let second = rvp(tmp.path(), &["run", cfg.to_str().unwrap()]);
    assert_eq!(second.status.code(), Some(2));
    assert_eq!(stderr_error(&second)["error"]["kind"], "output_exists");
    let seeded = rvp(tmp.path(), &["run", "c.toml", "--seed", "9"]);
    assert!(seeded.status.success());
    assert!(String::from_utf8(seeded.stdout).unwrap().trim().ends_with("-seed9"));
}

#[test]
fn parse_errors_exit_nonzero_with_json() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(tmp.path(), "bad.toml", &RADIAL.replace("dt = 0.01", "dt = -1"));
    let out = rvp(tmp.path(), &["run", "bad.toml"]);
    assert_eq!(out.status.code(), Some(2));
    let e = stderr_error(&out);
    assert_eq!(e["error"]["kind"], "parse");
    assert_eq!(e["error"]["key"], "dt");
    assert_eq!(e["error"]["line"], 3);

    write_config(tmp.path(), "typo.toml", &format!("{RADIAL}colour = 1\n"));
    let out = rvp(tmp.path(), &["run", "typo.toml"]);
    assert_eq!(stderr_error(&out)["error"]["kind"], "parse");
}

#[test]
fn bad_thread_variable_is_a_configuration_error() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(tmp.path(), "c.toml", RADIAL);
    let out = Command::new(env!("CARGO_BIN_EXE_rvp"))
        .current_dir(tmp.path())
        .env("RVP_THREADS", "many")
        .args(["run", "c.toml"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_error(&out)["error"]["kind"], "configuration");
}

#[test]
fn verify_surfaces_resolution_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let text = format!("{RADIAL}\n[verify]\ncriteria = [8]\n\n[localization]\nk_max = 9\n\n[localization.grid]\nn = 16\nhalf_width = 4.0\n");
    write_config(tmp.path(), "v.toml", &text);
    let out = rvp(tmp.path(), &["verify", "v.toml"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let e = stderr_error(&out);
    assert_eq!(e["error"]["kind"], "resolution");
    assert_eq!(e["error"]["k"], 9);
}

#[test]
fn verify_emits_json_and_sweep_table() {
    let tmp = tempfile::tempdir().unwrap();
    let text = RADIAL.replace("n = 1000", "n = 200") + "\n[verify]\ncriteria = [7, 10]\nweight_samples = 2000\n";
    write_config(tmp.path(), "v.toml", &text);
    let out = rvp(tmp.path(), &["verify", "v.toml", "--sweep", "--out", "report"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let ids: Vec<u64> = report["criteria"].as_array().unwrap().iter().map(|c| c["id"].as_u64().unwrap()).collect();
    assert_eq!(ids, vec![7, 10]);
    assert_eq!(report["all_pass"], true);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("criterion  7 cutoff function exactness: PASS"), "{stderr}");
    let sweep = String::from_utf8(read(&tmp.path().join("report"), "sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 4);
    assert!(tmp.path().join("report/verify.json").is_file());
}

#[test]
fn bundled_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut count = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let text = fs::read_to_string(&path).unwrap();
        let cfg = parse_config(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        cfg.check().unwrap_or_else(|(k, m)| panic!("{}: {k}: {m}", path.display()));
        count += 1;
    }
    assert!(count >= 3);
}
