use serde_json::{json, Value};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tempfile::TempDir;

struct Sandbox {
    dir: TempDir,
}

impl Sandbox {
    fn new() -> Self {
        Sandbox {
            dir: TempDir::new().unwrap(),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn config(&self, name: &str, v: &Value) -> PathBuf {
        let p = self.path(name);
        fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
        p
    }

    fn lab(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_gibbs-lab"))
            .arg("--cache-dir")
            .arg(self.path("cache"))
            .args(args)
            .current_dir(self.dir.path())
            .output()
            .unwrap()
    }

    fn run(&self, config: &Path, out: &str, extra: &[&str]) -> Output {
        let mut args = vec!["run", "--config", config.to_str().unwrap(), "--out", out];
        args.extend_from_slice(extra);
        self.lab(&args)
    }

    fn read(&self, rel: &str) -> Vec<u8> {
        fs::read(self.path(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
    }
}

fn manifest(sb: &Sandbox, out: &str) -> Value {
    serde_json::from_slice(&sb.read(&format!("{out}/manifest.json"))).unwrap()
}

fn small_sweep() -> Value {
    json!({
        "kind": "xy_sweep",
        "params": {
            "schedule": {"type": "calibrated", "m_max": 2},
            "signs": "+-",
            "beta": {"log_space": {"from": 1.0, "to": 200.0, "count": 6}}
        }
    })
}

fn error_line(o: &Output) -> Value {
    let text = String::from_utf8_lossy(&o.stderr);
    let line = text.lines().last().expect("an error line");
    serde_json::from_str(line).unwrap_or_else(|_| panic!("not JSON: {line}"))
}

#[test]
fn sweep_writes_artifacts_and_hits_the_cache() {
    let sb = Sandbox::new();
    let cfg = sb.config("sweep.json", &small_sweep());
    let first = sb.run(&cfg, "a", &[]);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let csv = String::from_utf8(sb.read("a/sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "beta [dimensionless],mass_plus_window [probability],mass_minus_window [probability],log_z [nats]"
    );
    assert_eq!(lines.count(), 6);
    assert!(sb.read("a/sweep.svg").starts_with(b"<svg"));
    assert_eq!(manifest(&sb, "a")["cache"], "miss");

    let second = sb.run(&cfg, "b", &[]);
    assert!(second.status.success());
    assert_eq!(manifest(&sb, "b")["cache"], "hit");
    assert_eq!(sb.read("a/sweep.csv"), sb.read("b/sweep.csv"));
    let (ma, mb) = (manifest(&sb, "a"), manifest(&sb, "b"));
    assert_eq!(ma["config_hash"], mb["config_hash"]);
    assert_eq!(ma["outputs"], mb["outputs"]);

    let list = sb.lab(&["cache", "list"]);
    let listed = String::from_utf8(list.stdout).unwrap();
    assert!(listed.contains(ma["config_hash"].as_str().unwrap()));
    assert!(listed.contains("xy_sweep"));

    let verify = sb.lab(&["cache", "verify"]);
    assert!(verify.status.success(), "{}", String::from_utf8_lossy(&verify.stderr));
    assert!(String::from_utf8(verify.stdout).unwrap().contains("matches"));
}

#[test]
fn no_cache_runs_are_byte_identical() {
    let sb = Sandbox::new();
    let cfg = sb.config("sweep.json", &small_sweep());
    assert!(sb.run(&cfg, "a", &["--no-cache"]).status.success());
    assert!(sb.run(&cfg, "b", &["--no-cache"]).status.success());
    assert_eq!(sb.read("a/sweep.csv"), sb.read("b/sweep.csv"));
    assert_eq!(manifest(&sb, "a")["cache"], "disabled");
    assert!(!sb.path("cache").exists());
}

#[test]
fn damaged_cache_is_bypassed_and_flagged() {
    let sb = Sandbox::new();
    let cfg = sb.config("sweep.json", &small_sweep());
    assert!(sb.run(&cfg, "a", &[]).status.success());
    let hash = manifest(&sb, "a")["config_hash"].as_str().unwrap().to_string();
    let cached = sb.path("cache").join(&hash).join("files").join("sweep.csv");
    fs::write(&cached, "beta [dimensionless]\n0\n").unwrap();

    let verify = sb.lab(&["cache", "verify"]);
    assert_eq!(verify.status.code(), Some(4));
    let err = error_line(&verify);
    assert_eq!(err["error"], "cache");
    assert!(err["reason"].as_str().unwrap().contains(&hash));

    let rerun = sb.run(&cfg, "b", &[]);
    assert!(rerun.status.success());
    assert!(String::from_utf8_lossy(&rerun.stderr).contains("cache bypassed"));
    assert_eq!(manifest(&sb, "b")["cache"], "bypassed");
    assert_eq!(sb.read("a/sweep.csv"), sb.read("b/sweep.csv"));
    // The bypassed entry was replaced by a sound one.
    assert!(sb.lab(&["cache", "verify"]).status.success());
}

#[test]
fn clearing_an_empty_cache() {
    let sb = Sandbox::new();
    let o = sb.lab(&["cache", "clear"]);
    assert!(o.status.success());
    assert_eq!(String::from_utf8(o.stdout).unwrap().trim(), "removed 0 entries");
    let o = sb.lab(&["cache", "verify"]);
    assert!(o.status.success());
    assert_eq!(String::from_utf8(o.stdout).unwrap().trim(), "cache empty");
}

#[test]
fn list_is_ordered_by_creation() {
    let sb = Sandbox::new();
    let mut hashes = Vec::new();
    for (i, count) in [3, 4, 5].iter().enumerate() {
        let mut v = small_sweep();
        v["params"]["beta"]["log_space"]["count"] = json!(count);
        let cfg = sb.config(&format!("c{i}.json"), &v);
        assert!(sb.run(&cfg, &format!("o{i}"), &[]).status.success());
        hashes.push(manifest(&sb, &format!("o{i}"))["config_hash"].as_str().unwrap().to_string());
    }
    let listed = String::from_utf8(sb.lab(&["cache", "list"]).stdout).unwrap();
    let order: Vec<&str> = listed.lines().map(|l| l.split(' ').next().unwrap()).collect();
    assert_eq!(order, hashes);
    let cleared = sb.lab(&["cache", "clear"]);
    assert_eq!(String::from_utf8(cleared.stdout).unwrap().trim(), "removed 3 entries");
}

#[test]
fn empty_beta_list_is_a_validation_error() {
    let sb = Sandbox::new();
    let mut v = small_sweep();
    v["params"]["beta"] = json!({"values": []});
    let cfg = sb.config("bad.json", &v);
    let o = sb.run(&cfg, "out", &[]);
    assert_eq!(o.status.code(), Some(2));
    let err = error_line(&o);
    assert_eq!(err["error"], "validation");
    assert!(err["reason"].as_str().unwrap().contains("empty beta list"));
    assert_eq!(String::from_utf8_lossy(&o.stderr).lines().count(), 1);
}

#[test]
fn schema_violations_exit_with_code_two() {
    let sb = Sandbox::new();
    for (i, v) in [
        json!({"kind": "no_such_kind", "params": {}}),
        json!({"kind": "proof_replay", "params": {"max_m0": 3, "extra": 1}}),
        json!({"kind": "xy_verify", "params": {
            "schedule": {"type": "calibrated", "m_max": 2},
            "signs": "+-", "m": 1, "m_hat": 2, "beta": {"values": [10.0]}}}),
    ]
    .iter()
    .enumerate()
    {
        let cfg = sb.config(&format!("bad{i}.json"), v);
        let o = sb.run(&cfg, "out", &["--no-cache"]);
        assert_eq!(o.status.code(), Some(2), "case {i}: {}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(error_line(&o)["error"], "validation");
    }
    let o = sb.lab(&["run", "--config", "missing.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn too_shallow_depth_is_a_numeric_failure() {
    let sb = Sandbox::new();
    let v = json!({
        "kind": "sym_verify",
        "params": {
            "m_max": 2,
            "schedule": {"type": "explicit", "eps": [1.0, 0.5], "beta": [50.0, 400.0]},
            "signs": "++", "m": 1, "m_hat": 2, "grid_points": 3, "depth": 6
        }
    });
    let cfg = sb.config("shallow.json", &v);
    let o = sb.run(&cfg, "out", &["--no-cache"]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(error_line(&o)["error"], "numeric");
}

#[test]
fn proof_replay_summary() {
    let sb = Sandbox::new();
    let cfg = sb.config("proof.json", &json!({"kind": "proof_replay", "params": {"max_m0": 6}}));
    assert!(sb.run(&cfg, "ok", &[]).status.success());
    let s = &manifest(&sb, "ok")["summary"];
    assert_eq!(s["steps"], s["holding"]);
    assert!(s["first_failure"].is_null());
    let csv = String::from_utf8(sb.read("ok/steps.csv")).unwrap();
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",true")));

    let cfg = sb.config("weak.json", &json!({"kind": "proof_replay", "params": {"max_m0": 6, "power": 2}}));
    assert!(sb.run(&cfg, "weak", &[]).status.success());
    let s = &manifest(&sb, "weak")["summary"];
    assert!(s["first_failure"].as_str().unwrap().ends_with(",false"));
}

#[test]
fn every_kind_runs() {
    let sb = Sandbox::new();
    let kinds = [
        json!({"kind": "xy_schedule", "params": {"schedule": {"type": "calibrated", "m_max": 2}}}),
        json!({"kind": "xy_verify", "params": {
            "schedule": {"type": "calibrated", "m_max": 2},
            "signs": "++", "m": 1, "m_hat": 2, "beta": {"values": [8.0, 20.0, 64.0]}}}),
        json!({"kind": "laplace", "params": {"polynomial": {"cos": [1.0]}, "beta": 1000.0, "window": 0.1}}),
        json!({"kind": "ladder", "params": {"spec": {"family": "run_length", "offset": 2}, "m_max": 4}}),
        json!({"kind": "orbit_checks", "params": {"max_period": 6}}),
        json!({"kind": "sym_calibrate", "params": {
            "m_max": 1, "profile": "full", "options": {"depth": 6}}}),
        json!({"kind": "sym_sweep", "params": {
            "m_max": 2,
            "schedule": {"type": "explicit", "eps": [1.0, 0.5], "beta": [50.0, 400.0]},
            "signs": "+-", "beta": {"values": [10.0, 100.0]}, "depth": 8}}),
        json!({"kind": "sym_verify", "params": {
            "m_max": 2,
            "schedule": {"type": "explicit", "eps": [1.0, 0.5], "beta": [50.0, 400.0]},
            "signs": "++", "m": 1, "m_hat": 2, "grid_points": 3, "depth": 8, "resolution": 1.0}}),
    ];
    for (i, v) in kinds.iter().enumerate() {
        let cfg = sb.config(&format!("k{i}.json"), v);
        let out = format!("k{i}");
        let o = sb.run(&cfg, &out, &["--no-cache"]);
        assert!(o.status.success(), "{}: {}", v["kind"], String::from_utf8_lossy(&o.stderr));
        let m = manifest(&sb, &out);
        let outputs = m["outputs"].as_object().unwrap();
        assert!(outputs.keys().any(|k| k.ends_with(".csv")), "{}", v["kind"]);
        for name in outputs.keys().filter(|k| k.ends_with(".csv")) {
            let csv = String::from_utf8(sb.read(&format!("{out}/{name}"))).unwrap();
            let header = csv.lines().next().unwrap();
            assert!(header.split(',').all(|c| c.ends_with(']')), "{}: {header}", v["kind"]);
        }
    }
}
