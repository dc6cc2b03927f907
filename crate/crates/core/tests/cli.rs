use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_ddlink-sim");

fn run(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(BIN)
        .args(&args[..1])
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(&args[1..])
        .output()
        .expect("spawn ddlink-sim")
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let p = dir.join("config.json");
    fs::write(&p, body).unwrap();
    p
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(str::to_owned).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(str::to_owned).collect())
        .collect();
    (header, rows)
}

#[test]
fn hm_sweep_writes_exact_schema_summary_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"trials": 50}"#);
    let out = dir.path().join("out");
    let o = run(&["hm-sweep", "--workers", "2"], &cfg, &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    let (header, rows) = read_csv(&out.join("hm-sweep.csv"));
    assert_eq!(
        header,
        ["rho_t_db", "p0", "se_hm_real_mean", "se_hm_real_stderr", "se_hm_ideal_mean", "se_hm_ideal_stderr", "gap"]
    );
    assert_eq!(rows.len(), 22);
    for r in &rows {
        let v: Vec<f64> = r.iter().map(|x| x.parse().unwrap()).collect();
        assert!((v[4] - v[2] - v[6]).abs() < 1e-12);
    }

    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("hm-sweep.summary.json")).unwrap()).unwrap();
    assert_eq!(summary["points"].as_array().unwrap().len(), 22);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("hm-sweep.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["trials"], 50);
    assert_eq!(manifest["config"]["N"], 16);
    assert_eq!(manifest["command"], "hm-sweep");
}

#[test]
fn outage_values_are_probabilities() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "{}");
    let out = dir.path().join("out");
    let o = run(&["outage", "--trials", "200", "--seed", "7"], &cfg, &out);
    assert_eq!(o.status.code(), Some(0));
    let (header, rows) = read_csv(&out.join("outage.csv"));
    assert_eq!(header, ["rho_t_db", "p0", "r_th", "outage_real", "outage_ideal", "outage_gap", "trials"]);
    assert_eq!(rows.len(), 11 * 3);
    for r in &rows {
        for i in [3, 4] {
            let x: f64 = r[i].parse().unwrap();
            assert!((0.0..=1.0).contains(&x));
        }
        assert_eq!(r[6], "200");
    }
}

#[test]
fn manifest_reproduces_the_run_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"trials": 40, "rho_t_db": [0, 10, 20]}"#);
    let first = dir.path().join("first");
    assert_eq!(run(&["lm-sweep", "--seed", "11"], &cfg, &first).status.code(), Some(0));
    let second = dir.path().join("second");
    let manifest = first.join("lm-sweep.manifest.json");
    assert_eq!(run(&["lm-sweep", "--workers", "3"], &manifest, &second).status.code(), Some(0));
    assert_eq!(
        fs::read(first.join("lm-sweep.csv")).unwrap(),
        fs::read(second.join("lm-sweep.csv")).unwrap()
    );
}

#[test]
fn seed_changes_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"trials": 20, "rho_t_db": [10]}"#);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run(&["hm-sweep", "--seed", "1"], &cfg, &a);
    run(&["hm-sweep", "--seed", "2"], &cfg, &b);
    assert_ne!(fs::read(a.join("hm-sweep.csv")).unwrap(), fs::read(b.join("hm-sweep.csv")).unwrap());
}

#[test]
fn config_errors_exit_2_and_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    for (body, key) in [
        (r#"{"U": 20, "M": 16}"#, "U"),
        (r#"{"p0": 1.5}"#, "p0"),
        (r#"{"bogus": 1}"#, "bogus"),
        ("{not json", ""),
    ] {
        let cfg = write_config(dir.path(), body);
        let o = run(&["hm-sweep"], &cfg, &out);
        assert_eq!(o.status.code(), Some(2), "{body}");
        assert!(String::from_utf8_lossy(&o.stderr).contains(key), "{body}");
    }
    let o = run(&["hm-sweep"], &dir.path().join("missing.json"), &out);
    assert_eq!(o.status.code(), Some(2));
    let cfg = write_config(dir.path(), "{}");
    assert_eq!(run(&["hm-sweep", "--trials", "0"], &cfg, &out).status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"trials": 2, "rho_t_db": [0]}"#);
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let o = run(&["outage"], &cfg, &blocker.join("sub"));
    assert_eq!(o.status.code(), Some(3));
}
