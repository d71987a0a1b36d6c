use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn srk(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_srk"));
    cmd.args(args).env_remove("SRK_PARTITION_CAP").env_remove("SRK_DEGREE_CAP");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("srk runs")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn stderr_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stderr).expect("error json on stderr")
}

fn schema(name: &str) -> jsonschema::JSONSchema {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas").join(format!("{name}.schema.json"));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::JSONSchema::compile(&v).expect("schema compiles")
}

fn assert_valid(name: &str, v: &Value) {
    let s = schema(name);
    let msgs: Vec<String> = match s.validate(v) {
        Ok(()) => return,
        Err(errs) => errs.map(|e| format!("{e} at {}", e.instance_path)).collect(),
    };
    panic!("{name} schema: {msgs:?}");
}

fn write_spec(dir: &tempfile::TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, body).unwrap();
    p
}

#[test]
fn oracle_identity_spec() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(&dir, "id.json", r#"{"family":"mixer","p":0,"n":2,"m":2}"#);
    let o = srk(&["oracle", "--spec", spec.to_str().unwrap()], &[]);
    assert!(o.status.success());
    let v = stdout_json(&o);
    assert_valid("oracle", &v);
    assert_eq!(v["aggregate"]["sup_sep"], 1);
    assert_eq!(v["aggregate"]["inf_sep"], 1);
}

#[test]
fn oracle_mixer_within_layer_rule_and_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(&dir, "m.json", r#"{"family":"mixer","p":1,"n":2,"m":2,"seed":3}"#);
    let out = dir.path().join("profile.json");
    let o = srk(
        &["oracle", "--spec", spec.to_str().unwrap(), "--seeds", "0..4", "--out", out.to_str().unwrap()],
        &[],
    );
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_valid("oracle", &v);
    assert_eq!(v["profiles"].as_array().unwrap().len(), 5);
    assert!(v["aggregate"]["sup_sep"].as_u64().unwrap() <= 18);
}

#[test]
fn oracle_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(&dir, "m.json", r#"{"family":"mixer","p":2,"n":2,"m":2,"residual":[2]}"#);
    let a = srk(&["oracle", "--spec", spec.to_str().unwrap(), "--seeds", "1,2"], &[]);
    let b = srk(&["oracle", "--spec", spec.to_str().unwrap(), "--seeds", "1,2"], &[]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn parse_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_spec(&dir, "bad.json", r#"{"family": "mixer", "p": 1,"#);
    let o = srk(&["oracle", "--spec", bad.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr_json(&o);
    assert_valid("error", &e);
    assert_eq!(e["error"], "parse_error");
    let unknown = write_spec(&dir, "u.json", r#"{"family":"mixer","p":1,"n":2,"m":2,"bogus":1}"#);
    assert_eq!(srk(&["oracle", "--spec", unknown.to_str().unwrap()], &[]).status.code(), Some(2));
    assert_eq!(srk(&["nonsense"], &[]).status.code(), Some(2));
    assert_eq!(srk(&["gap", "--p", "9..3"], &[]).status.code(), Some(2));
}

#[test]
fn cap_violations_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let odd = write_spec(&dir, "odd.json", r#"{"family":"mixer","p":1,"n":1,"m":3}"#);
    let o = srk(&["oracle", "--spec", odd.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(stderr_json(&o)["error"], "cap_violation");
    let spec = write_spec(&dir, "m.json", r#"{"family":"mixer","p":3,"n":2,"m":2}"#);
    let o = srk(&["oracle", "--spec", spec.to_str().unwrap()], &[("SRK_DEGREE_CAP", "4")]);
    assert_eq!(o.status.code(), Some(3));
    let o = srk(&["oracle", "--spec", spec.to_str().unwrap()], &[("SRK_PARTITION_CAP", "2")]);
    assert_eq!(o.status.code(), Some(3));
    let o = srk(&["oracle", "--spec", spec.to_str().unwrap()], &[("SRK_PARTITION_CAP", "many")]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bound_closed_and_lower() {
    let o = srk(&["bound", "--family", "mixer", "--p", "1", "--n", "2", "--m", "2", "--heads", "1"], &[]);
    assert!(o.status.success());
    let v = stdout_json(&o);
    assert_valid("bound", &v);
    assert_eq!(v["points"][0]["bound"]["exact"], "1024");
    let o = srk(&["bound", "--family", "transformer", "--mode", "lower", "--p", "3", "--m", "81"], &[]);
    let v = stdout_json(&o);
    assert_valid("bound", &v);
    assert!((v["points"][0]["bound"]["log3"].as_f64().unwrap() - 7.073).abs() < 1e-3);
    let o = srk(&["bound", "--family", "transformer", "--mode", "lower", "--p", "10", "--m", "81"], &[]);
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(stderr_json(&o)["error"], "regime_violation");
}

#[test]
fn bound_from_spec_propagates() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(&dir, "m.json", r#"{"family":"mixer","p":1,"n":2,"m":2}"#);
    let o = srk(&["bound", "--spec", spec.to_str().unwrap()], &[]);
    let v = stdout_json(&o);
    assert_valid("bound", &v);
    assert_eq!(v["mode"], "propagate");
    assert_eq!(v["points"][0]["bound"]["exact"], "18");
    let o = srk(&["bound", "--family", "mixer", "--p", "1..3", "--n", "2", "--m", "2", "--format", "csv"], &[]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().next().unwrap(), "p,family,mode,log3,exact,rule_trace_id");
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn verify_contract() {
    let o = srk(&["verify", "--family", "mixer", "--trials", "50", "--p", "1..2", "--n", "2", "--m", "2"], &[]);
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    assert_valid("verify", &v);
    assert_eq!(v["summary"]["failures"], 0);
    assert_eq!(v["summary"]["total"], 50);
    let o = srk(&["verify", "--family", "transformer", "--trials", "20", "--p", "1", "--heads", "1..2"], &[]);
    assert_eq!(o.status.code(), Some(0));
    assert_valid("verify", &stdout_json(&o));
    let o = srk(&["verify", "--trials", "0"], &[]);
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    assert_eq!(v["instances"].as_array().unwrap().len(), 0);
    let o = srk(&["verify", "--trials", "1", "--n", "1", "--m", "3"], &[]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn plan_outputs() {
    let o = srk(&["plan", "--family", "transformer", "--budget", "59049"], &[]);
    let v = stdout_json(&o);
    assert_valid("plan", &v);
    let (p, d) = (v["p_star"].as_f64().unwrap(), v["d_star"].as_f64().unwrap());
    assert!((p - d.ln() / 3f64.ln()).abs() <= 1.0);
    let o = srk(&["plan", "--budget", "2187", "--ratio", "1"], &[]);
    let v = stdout_json(&o);
    assert_valid("depth", &v);
    assert_eq!((v["p"].as_u64(), v["d"].as_u64()), (Some(5), Some(21)));
    let o = srk(&["plan", "--budget", "2187", "--ratio", "100"], &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn gap_csv_and_json() {
    let o = srk(&["gap", "--p", "4..30", "--m", "81"], &[]);
    let mut rdr = csv::Reader::from_reader(o.stdout.as_slice());
    assert_eq!(rdr.headers().unwrap().iter().collect::<Vec<_>>(), ["p", "m", "log3_lower", "log3_upper", "ratio"]);
    let ratios: Vec<f64> = rdr.records().map(|r| r.unwrap()[4].parse().unwrap()).collect();
    assert_eq!(ratios.len(), 27);
    for w in ratios.windows(2) {
        assert!((w[1] / w[0] - 1.5).abs() < 1e-12);
    }
    let o = srk(&["gap", "--p", "4..30", "--format", "json"], &[]);
    let v = stdout_json(&o);
    assert_valid("gap", &v);
    assert_eq!(v["dominance"]["dominates"], true);
    assert_eq!(v["rows"][0]["ratio_exact"], "3/176");
}

#[test]
fn sweep_defaults_and_schema() {
    let o = srk(&["sweep"], &[]);
    let v = stdout_json(&o);
    assert_valid("sweep", &v);
    assert_eq!(v["cells"].as_array().unwrap().len(), 144);
    let o = srk(&["sweep", "--budget", "32768", "--ratio", "1", "--seeds", "0"], &[]);
    assert_eq!(stdout_json(&o)["cells"].as_array().unwrap().len(), 1);
    let o = srk(&["sweep", "--format", "csv"], &[]);
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 145);
}

#[test]
fn spec_files_match_input_schema() {
    for body in [
        r#"{"family":"mixer","p":2,"n":2,"m":2,"residual":[1],"permutations":{"pi_e":[1,0,3,2]}}"#,
        r#"{"family":"linear_transformer","p":1,"n":2,"m":2,"H":2,"d":3,"transpose_sets":[[1,2,3],[2]]}"#,
    ] {
        let v: Value = serde_json::from_str(body).unwrap();
        assert_valid("arch_spec", &v);
        let spec = srk_core::arch::ArchSpec::from_json(body).unwrap();
        assert_valid("arch_spec", &serde_json::from_str(&spec.to_json()).unwrap());
    }
}
