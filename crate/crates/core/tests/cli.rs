use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sgqgan::config::parse_config;

fn sgqgan(args: &[&str], threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sgqgan")).args(args).env("SGQGAN_THREADS", threads).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.display().to_string()
}

#[test]
fn learn_state_writes_artifacts_and_round_trips_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"target":"psi_t5","trials":8,"iterations":10}"#);
    let out = dir.path().join("r/run").display().to_string();
    let o = sgqgan(&["learn-state", "--config", &cfg, "--seed", "42", "--out", &out], "2");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest = fs::read_to_string(format!("{out}.manifest.json")).unwrap();
    let parsed = parse_config(&manifest).unwrap();
    assert_eq!(parsed.to_json()["master_seed"], 42);
    assert_eq!(parsed.output, out);
    let agg = fs::read_to_string(format!("{out}.aggregate.csv")).unwrap();
    assert!(agg.starts_with("k,mean,std\n"));
    assert_eq!(agg.lines().count(), 11);
    let iters = fs::read_to_string(format!("{out}_trials/trial_0007.iterations.csv")).unwrap();
    assert!(iters.starts_with("k,f_plus,f_minus,alpha_k,beta_k,metric\n"));
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "m.json",
        r#"{"command":"multiphase","scene":{"n":8},"iterations":100,"trials":6,"model":{"mode":"sampled","background_rate":5}}"#,
    );
    let out = dir.path().join("m").display().to_string();
    let mut seen = Vec::new();
    for threads in ["1", "3", "0"] {
        let o = sgqgan(&["multiphase", "--config", &cfg, "--out", &out], threads);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        seen.push((
            fs::read(format!("{out}.trials.csv")).unwrap(),
            fs::read(format!("{out}.manifest.json")).unwrap(),
            o.stdout,
        ));
    }
    assert!(seen.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn characterize_writes_chi() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"command":"characterize","process":"hwp:22.5","trials":4}"#);
    let out = dir.path().join("ch").display().to_string();
    let o = sgqgan(&["characterize", "--config", &cfg, "--out", &out], "0");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let chi: serde_json::Value = serde_json::from_str(&fs::read_to_string(format!("{out}.chi.json")).unwrap()).unwrap();
    assert_eq!(chi["basis"], serde_json::json!(["I", "X", "Y", "Z"]));
    assert_eq!(chi["chi"].as_array().unwrap().len(), 16);
    let result: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(format!("{out}.result.json")).unwrap()).unwrap();
    assert!(result["process_fidelity"].as_f64().unwrap() > 0.99);
}

#[test]
fn sweep_table_is_lexicographic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "s.json",
        r#"{"command":"sweep","base":{"command":"learn-state","target":"psi_t2","trials":4,"iterations":5},"grid":{"b":[0.2,0.1],"a":[3]}}"#,
    );
    let out = dir.path().join("s").display().to_string();
    let o = sgqgan(&["sweep", "--config", &cfg, "--out", &out], "0");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = fs::read_to_string(format!("{out}.sweep.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "a,b,mean_final,std_final");
    assert!(lines[1].starts_with("3,0.1,") && lines[2].starts_with("3,0.2,"));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    for (body, path) in [
        (r#"{"target":"psi_t1","foo":1}"#, "$.foo"),
        (r#"{"target":"psi_t1","iterations":0}"#, "$.iterations"),
        (r#"{"command":"multiphase"}"#, "$.command"),
        ("{", "$"),
    ] {
        let cfg = write_config(dir.path(), "bad.json", body);
        let o = sgqgan(&["learn-state", "--config", &cfg], "0");
        assert_eq!(o.status.code(), Some(2), "{body}");
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.contains(&format!("at {path}")), "{body}: {err}");
    }
    let o = sgqgan(&["learn-state", "--config", "/nonexistent/cfg.json"], "0");
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    // A regular file where the output directory should be.
    fs::write(dir.path().join("blocker"), "").unwrap();
    let out = dir.path().join("blocker/run").display().to_string();
    let cfg = write_config(dir.path(), "c.json", r#"{"target":"psi_t1","trials":2,"iterations":2}"#);
    let o = sgqgan(&["learn-state", "--config", &cfg, "--out", &out], "0");
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error: "));
}
