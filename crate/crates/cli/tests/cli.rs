use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const CLOCK_KSIGMA: &str = r#"
n = 1000
trials = 100
seed = 11
[scenario]
kind = "clock"
[test]
kind = "ksigma"
target = "pc"
alpha = -0.25
k = 3.0
[output]
report = "demo.json"
"#;

fn noniid(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_noniid"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn clock_ksigma_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.toml", CLOCK_KSIGMA);
    let o = noniid(dir.path(), &["simulate", "c.toml"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = json(&dir.path().join("demo.json"));
    assert_eq!(r["accept_rate"], 1.0);
    assert_eq!(r["device"], "clock");
    let text = std::fs::read_to_string(dir.path().join("demo.json")).unwrap();
    let order = ["test", "device", "n", "trials", "accepted", "accept_rate", "ci95", "seed", "wall_time_s"];
    let positions: Vec<usize> = order.iter().map(|k| text.find(&format!("\"{k}\":")).unwrap()).collect();
    assert!(positions.windows(2).all(|w| w[0] < w[1]), "{text}");
}

#[test]
fn reports_repeat_except_wall_time() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"
n = 300
trials = 50
seed = 4
[scenario]
kind = "iid"
behavior = "pc"
[test]
kind = "martingale"
coeffs = [1, 0, 0, 0, 0, 0, 0, 1]
alpha = 0.9
epsilon = 0.05
[output]
trace = "trace.csv"
trace_trials = 2
"#;
    write(dir.path(), "c.toml", cfg);
    let mut runs = Vec::new();
    for name in ["a.json", "b.json"] {
        let o = noniid(dir.path(), &["--out", name, "simulate", "c.toml"]);
        assert!(o.status.success(), "{}", stderr(&o));
        let mut r = json(&dir.path().join(name));
        r.as_object_mut().unwrap().remove("wall_time_s");
        runs.push((r, std::fs::read_to_string(dir.path().join("trace.csv")).unwrap()));
    }
    assert_eq!(runs[0], runs[1]);
    let trace = &runs[0].1;
    assert!(trace.starts_with("trial,round,x,a,statistic,pvalue\n"));
    assert_eq!(trace.lines().count(), 1 + 2 * 300);

    let o = noniid(dir.path(), &["--seed", "5", "--out", "c.json", "simulate", "c.toml"]);
    assert!(o.status.success());
    assert_eq!(json(&dir.path().join("c.json"))["seed"], 5);
}

#[test]
fn negative_n_exits_two_naming_n() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.toml", &CLOCK_KSIGMA.replace("n = 1000", "n = -1000"));
    for cmd in ["simulate", "validate"] {
        let o = noniid(dir.path(), &[cmd, "c.toml"]);
        assert_eq!(o.status.code(), Some(2));
        assert!(stderr(&o).contains("`n`"), "{}", stderr(&o));
    }
    assert!(!dir.path().join("demo.json").exists());
}

#[test]
fn validate_reports_ok_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "ok.toml", CLOCK_KSIGMA);
    let o = noniid(dir.path(), &["validate", "ok.toml"]);
    assert!(o.status.success());
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "ok");

    write(dir.path(), "no_test.toml", "n = 5\n[scenario]\nkind = \"clock\"\n");
    let o = noniid(dir.path(), &["validate", "no_test.toml"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`test`"));

    write(dir.path(), "zero.toml", &CLOCK_KSIGMA.replace("trials = 100", "trials = 0"));
    let o = noniid(dir.path(), &["validate", "zero.toml"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`trials`"));

    write(dir.path(), "file.toml", &CLOCK_KSIGMA.replace("\"pc\"", "\"missing.toml\""));
    let o = noniid(dir.path(), &["validate", "file.toml"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`test.target`"));
}

#[test]
fn meta_overflow_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "n = 40\n[scenario]\nkind = \"meta\"\n[test]\nkind = \"ksigma\"\ntarget = \"pc\"\nalpha = -0.25\n";
    write(dir.path(), "c.toml", cfg);
    let o = noniid(dir.path(), &["simulate", "c.toml"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn exact_meta_reaches_enumerated_max() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"
n = 2
[scenario]
kind = "meta"
[test]
kind = "martingale"
coeffs = [1, 0, 0, 0, 0, 0, 0, 1]
alpha = 0.5
epsilon = 0.3
"#;
    write(dir.path(), "c.toml", cfg);
    assert!(noniid(dir.path(), &["--out", "e.json", "exact", "c.toml", "--rational"]).status.success());
    assert!(noniid(dir.path(), &["--out", "m.json", "enumerate", "c.toml"]).status.success());
    let e = json(&dir.path().join("e.json"));
    let m = json(&dir.path().join("m.json"));
    assert_eq!(e["acceptance"], m["max"]);
    assert_eq!(m["searched"], 64);
}

#[test]
fn membership_and_separation() {
    let dir = tempfile::tempdir().unwrap();
    let o = noniid(dir.path(), &["membership", "--target", "pc", "--set", "p0", "p1", "--exact"]);
    assert!(o.status.success());
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["certificate"]["type"], "decomposition");
    assert_eq!(r["exact_weights"], serde_json::json!(["1/2", "1/2"]));

    let o = noniid(dir.path(), &["separate", "--target", "pc", "--set", "p0"]);
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(r["functional"]["margin"].as_f64().unwrap() > 0.0);

    let o = noniid(dir.path(), &["separate", "--target", "pc", "--set", "p0", "p1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn witness_scan_finds_rho() {
    let dir = tempfile::tempdir().unwrap();
    let o = noniid(dir.path(), &["--seed", "3", "witness", "--dim", "3", "--samples", "200"]);
    assert!(o.status.success());
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(r["min_value"].as_f64().unwrap().abs() < 1e-10);
    assert!(r["second_smallest"].as_f64().unwrap() > 0.0);
    assert!(r["identity_max_error"].as_f64().unwrap() < 1e-10);
}

#[test]
fn approx_model_feeds_triangle_local_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let o = noniid(
        dir.path(),
        &["--out", "a.json", "approx", "--restarts", "3", "--iters", "50", "--model-out", "m.toml"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(json(&dir.path().join("a.json"))["method"], "heuristic");
    let cfg = CLOCK_KSIGMA
        .replace("kind = \"clock\"", "kind = \"triangle_local\"\nmodel = \"m.toml\"")
        .replace("demo.json", "local.json");
    write(dir.path(), "c.toml", &cfg);
    let o = noniid(dir.path(), &["simulate", "c.toml"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(json(&dir.path().join("local.json"))["accept_rate"], 0.0);
}

#[test]
fn attack_demo_small() {
    let dir = tempfile::tempdir().unwrap();
    let o = noniid(
        dir.path(),
        &["attack-demo", "--n", "400", "--trials", "20", "--restarts", "2", "--iters", "50", "--regime", "bounded"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["demo"]["regime"], "bounded");
    let entries = r["demo"]["entries"].as_array().unwrap();
    let rate = |name: &str| {
        entries.iter().find(|e| e["device"] == name).unwrap()["report"]["accept_rate"]
            .as_f64()
            .unwrap()
    };
    assert_eq!(rate("clock"), 1.0);
    assert_eq!(rate("best_local"), 0.0);
    assert_eq!(r["demo"]["skipped"][0]["device"], "meta_strategy");
}

#[test]
fn help_lists_every_subcommand() {
    let o = noniid(Path::new("."), &["--help"]);
    let help = String::from_utf8_lossy(&o.stdout);
    for cmd in [
        "simulate", "exact", "membership", "separate", "witness", "enumerate", "attack-demo", "approx", "validate",
    ] {
        assert!(help.contains(cmd), "{cmd}");
    }
    assert!(help.contains("--seed") && help.contains("--threads") && help.contains("--out"));
}

#[test]
fn shipped_configs_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let o = noniid(&dir, &["validate", path.to_str().unwrap()]);
            assert!(o.status.success(), "{}: {}", path.display(), stderr(&o));
            seen += 1;
        }
    }
    assert!(seen >= 2);
}
