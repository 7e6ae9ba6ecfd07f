use std::fs;
use std::path::Path;
use std::process::Command;

use flamelab::io::sha256_hex;
use serde_json::Value;

fn flamelab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_flamelab"))
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn steady_rs_is_deterministic_and_checksummed() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let dir = tmp.path().join(name);
        let st = flamelab()
            .args(["steady-rs", "--epsilon", "0.5", "--j", "1", "--n-modes", "128"])
            .arg("--output-dir")
            .arg(&dir)
            .status()
            .unwrap();
        assert!(st.success());
        dir
    };
    let (a, b) = (run("a"), run("b"));
    for f in ["steady.csv", "profile.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap());
    }
    let m = manifest(&a);
    assert_eq!(m["completed"], true);
    assert_eq!(m["config"]["epsilon"], 0.5);
    let outputs = m["outputs"].as_array().unwrap();
    assert_eq!(outputs.len(), 2);
    for o in outputs {
        let bytes = fs::read(a.join(o["file"].as_str().unwrap())).unwrap();
        assert_eq!(o["sha256"].as_str().unwrap(), sha256_hex(&bytes));
    }
    let csv = fs::read_to_string(a.join("steady.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    let residual: f64 = row[8].parse().unwrap();
    assert!(residual <= 1e-8);
}

#[test]
fn catalog_has_ten_rows_at_021() {
    let tmp = tempfile::tempdir().unwrap();
    let out = flamelab()
        .args(["catalog-ms", "--epsilon", "0.21", "--n-modes", "64"])
        .env("FLAMELAB_OUTPUT_DIR", tmp.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let csv = fs::read_to_string(tmp.path().join("catalog.csv")).unwrap();
    assert_eq!(csv.lines().count(), 11);
}

#[test]
fn invalid_input_exits_with_status_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = flamelab()
        .args(["--epsilon", "1.5", "--command", "steady-rs"])
        .arg("--output-dir")
        .arg(tmp.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let report: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(report["status"], 2);
    assert!(!tmp.path().join("manifest.json").exists());

    let cfg = tmp.path().join("bad.toml");
    fs::write(&cfg, "command = \"steady-rs\"\nepsilonn = 0.5\n").unwrap();
    let out = flamelab().arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn blow_up_exits_with_status_three() {
    let tmp = tempfile::tempdir().unwrap();
    let out = flamelab()
        .args([
            "simulate", "--equation", "ms", "--epsilon", "0.01", "--n-modes", "32", "--amplitude",
            "5", "--dt", "0.05", "--t-end", "50",
        ])
        .arg("--output-dir")
        .arg(tmp.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(tmp.path());
    assert_eq!(m["completed"], false);
    assert_eq!(m["outputs"][0]["file"], "blowup_state.csv");
}

#[test]
fn config_file_with_sweep() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    fs::write(
        &cfg,
        "command = \"bifurcation-rs\"\nformat = \"json\"\nj_max = 2\n\
         epsilon = { start = 0.3, stop = 0.9, count = 3 }\n[grid]\nn_modes = 128\n",
    )
    .unwrap();
    let out_dir = tmp.path().join("out");
    let st = flamelab()
        .arg("--config")
        .arg(&cfg)
        .arg("--output-dir")
        .arg(&out_dir)
        .status()
        .unwrap();
    assert!(st.success());
    let rows: Value = serde_json::from_str(&fs::read_to_string(out_dir.join("diagram.json")).unwrap()).unwrap();
    // j = 1 on each side at three values of epsilon
    assert_eq!(rows.as_array().unwrap().len(), 6);
    assert!(rows.as_array().unwrap().iter().all(|r| r["verdict"] == "STABLE"));
}
