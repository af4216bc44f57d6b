use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn vpsa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vpsa")).args(args).output().unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

const SMALL: &str = r#"{
  "functional": { "kind": "quadratic", "lambda_v": 1.0, "alpha": 0.5 },
  "run": { "eta": 0.01, "steps": 50, "particles": 20, "sigma": 1.0, "master_seed": 3,
           "init_mean": [1.0], "init_scale": 1.0, "dim": 1, "trace_every": 10 },
  "planner": { "epsilon": 0.1 },
  "oracle": true
}"#;

#[test]
fn run_writes_outputs_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", SMALL);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let out = vpsa(&["run", "--config", &cfg, "--out-dir", a.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = json(&out);
    assert_eq!(summary["total_evals"], summary["predicted_evals"]);
    for f in ["trace.csv", "cloud.csv", "witness.bin", "summary.json"] {
        assert!(a.join(f).is_file(), "{f}");
    }
    let quiet = vpsa(&["--quiet", "run", "--config", &cfg, "--out-dir", b.to_str().unwrap()]);
    assert!(quiet.status.success() && quiet.stdout.is_empty());
    for f in ["trace.csv", "cloud.csv", "witness.bin"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap());
    }
}

#[test]
fn seed_flag_overrides_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", SMALL);
    let a = dir.path().join("a");
    let out = vpsa(&["run", "--config", &cfg, "--out-dir", a.to_str().unwrap(), "--seed", "11"]);
    assert_eq!(json(&out)["run"]["master_seed"], 11);
}

#[test]
fn resample_uses_the_stored_witness() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", SMALL);
    let out_dir = dir.path().join("run");
    let od = out_dir.to_str().unwrap();
    assert!(vpsa(&["--quiet", "run", "--config", &cfg, "--out-dir", od]).status.success());

    let out = vpsa(&["resample", "--config", &cfg, "--out-dir", od, "-n", "15"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&out);
    assert_eq!(report["samples"], 15);
    assert_eq!(report["seed_offset"], 20);
    let text = fs::read_to_string(out_dir.join("resample.csv")).unwrap();
    assert_eq!(text.lines().count(), 2 + 15);

    // Offset 0 reproduces the original particles.
    let copy = dir.path().join("copy.csv");
    let out = vpsa(&[
        "resample", "--config", &cfg, "--out-dir", od, "-n", "20", "--seed-offset", "0", "--out",
        copy.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let body = |p: &Path| fs::read_to_string(p).unwrap().lines().skip(1).collect::<Vec<_>>().join("\n");
    assert_eq!(body(&copy), body(&out_dir.join("cloud.csv")));

    let mismatch = vpsa(&["resample", "--config", &cfg, "--out-dir", od, "-n", "3", "--seed", "4"]);
    assert_eq!(mismatch.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&mismatch.stderr).contains("witness path was generated under different parameters"));
}

#[test]
fn check_and_plan_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", SMALL);
    let out = vpsa(&["check", "--config", &cfg]);
    assert!(out.status.success());
    assert_eq!(json(&out)["passed"], true);

    let strong = write_config(dir.path(), "strong.json", &SMALL.replace("\"alpha\": 0.5", "\"alpha\": 3.0"));
    let out = vpsa(&["check", "--config", &strong]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["passed"], false);

    let out = vpsa(&["plan", "--config", &cfg]);
    assert!(out.status.success());
    let plan = json(&out);
    assert!(plan["eta"].as_f64().unwrap() > 0.0 && plan["steps"].as_u64().unwrap() > 0);

    let demo = configs().join("mfnn_demo.json");
    let out = vpsa(&["plan", "--config", demo.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bench_writes_a_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", SMALL);
    let od = dir.path().join("bench");
    let out = vpsa(&[
        "bench", "--config", &cfg, "--out-dir", od.to_str().unwrap(), "--grid", "2:3, 4:3", "--repeats", "1",
        "--baseline",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&out);
    assert_eq!(report["counts_exact"], true);
    assert_eq!(report["rows"][0]["measured_evals"], 12);
    assert_eq!(report["rows"][1]["pmkv_evals"], 48);
    let csv = fs::read_to_string(od.join("bench.csv")).unwrap();
    assert!(csv.starts_with("# schema=v1 config_hash="));
    assert_eq!(csv.lines().count(), 4);

    let bad = vpsa(&["bench", "--config", &cfg, "--grid", "2x3"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn failures_set_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write_config(dir.path(), "u.json", &SMALL.replace("\"oracle\": true", "\"oracle\": true, \"extra\": 1"));
    let out = vpsa(&["run", "--config", &unknown, "--out-dir", dir.path().join("u").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: "));

    let diverging = write_config(
        dir.path(),
        "d.json",
        &SMALL.replace("\"eta\": 0.01, \"steps\": 50", "\"eta\": 3.0, \"steps\": 3000").replace("\"oracle\": true", "\"oracle\": false"),
    );
    let out = vpsa(&["run", "--config", &diverging, "--out-dir", dir.path().join("d").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));

    let blocker = dir.path().join("blocker");
    fs::write(&blocker, "").unwrap();
    let cfg = write_config(dir.path(), "c.json", SMALL);
    let out = vpsa(&["run", "--config", &cfg, "--out-dir", blocker.join("x").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
}
