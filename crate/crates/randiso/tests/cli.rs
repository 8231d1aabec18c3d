//! End-to-end checks of the experiment runner and the binary surface:
//! byte-identical reproduction from a manifest, config error reporting,
//! and directory isolation between runs.

use randiso::config::ExperimentConfig;
use randiso::experiments::{default_config, run};
use std::fs;
use std::process::Command;

#[test]
fn rerun_reproduces_every_csv_byte_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = default_config("crps_periods");
    cfg.set("run", "seeds", "0..8");
    cfg.set("run", "dt", "1e-2");
    let first = run(&cfg, tmp.path()).unwrap();

    // re-parse the manifest text (the canonical config block survives the
    // comment lines) and run again into a fresh root
    let manifest = fs::read_to_string(first.dir.join("manifest.txt")).unwrap();
    let cfg2 = ExperimentConfig::parse(&manifest, "manifest.txt").unwrap();
    let tmp2 = tempfile::tempdir().unwrap();
    let second = run(&cfg2, tmp2.path()).unwrap();

    let mut compared = 0;
    for f in &first.files {
        let name = f.file_name().unwrap().to_string_lossy().to_string();
        if !name.ends_with(".csv") {
            continue;
        }
        let twin = second.dir.join(&name);
        assert_eq!(
            fs::read(f).unwrap(),
            fs::read(&twin).unwrap(),
            "artifact {name} differs between reruns"
        );
        compared += 1;
    }
    assert!(compared >= 2, "expected CSV artifacts, compared {compared}");
}

#[test]
fn distinct_configs_use_isolated_directories() {
    let tmp = tempfile::tempdir().unwrap();
    let mut a = default_config("crps_periods");
    a.set("run", "seeds", "0..4");
    a.set("run", "dt", "1e-2");
    let mut b = a.clone();
    b.set("run", "seeds", "4..8");
    let ra = run(&a, tmp.path()).unwrap();
    let rb = run(&b, tmp.path()).unwrap();
    assert_ne!(ra.dir, rb.dir);
}

#[test]
fn binary_list_and_config_errors() {
    let bin = env!("CARGO_BIN_EXE_randiso");
    let out = Command::new(bin).arg("list").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("figure2") && text.contains("mrt_fields"));

    // line-precise config error, exit code 2
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = tmp.path().join("bad.cfg");
    fs::write(&cfg_path, "[experiment]\nname = figure2\noops\n").unwrap();
    let out = Command::new(bin)
        .args(["run", "--config"])
        .arg(&cfg_path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains(":3:"), "missing line number: {err}");

    // unknown experiment, exit code 2
    let out = Command::new(bin).args(["run", "nonsense"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
