//! End-to-end runs of the `crdf` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const UNIFORM3: &str = r#"{"schema":1,"source":{"kind":"iid","pmf":[0.5,0.5]},"horizon":3"#;

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn crdf(command: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crdf"))
        .arg(command)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn twenty_point_grid_gives_twenty_one_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let grid: Vec<String> = (1..=20).map(|k| format!("{}", -0.5 * k as f64)).collect();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        &format!(r#"{UNIFORM3},"s_grid":[{}]}}"#, grid.join(",")),
    );
    let o = crdf("sweep", &cfg, &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(tmp.path().join("out/curve.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("s,D,R,rate_formula,iterations,converged"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 21);
    assert!(rows[0].starts_with("0,"));
}

#[test]
fn positive_multiplier_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", &format!(r#"{UNIFORM3},"s":0.5}}"#));
    let o = crdf("solve", &cfg, &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`s`"), "{}", stderr(&o));
}

#[test]
fn config_errors_name_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        (
            r#"{"schema":1,"source":{"kind":"iid","pmf":[0.5,"x"]},"horizon":1}"#,
            "source",
        ),
        (
            r#"{"schema":1,"source":{"kind":"iid","pmf":[0.5,0.5]},"horizon":1,"solver":{"tol":-1}}"#,
            "solver",
        ),
        (
            r#"{"schema":1,"source":{"kind":"iid","pmf":[0.5,0.5]},"horizon":1,"sed":3}"#,
            "sed",
        ),
        (
            r#"{"schema":2,"source":{"kind":"iid","pmf":[0.5,0.5]},"horizon":1}"#,
            "schema",
        ),
        (
            r#"{"schema":1,"source":{"kind":"iid","pmf":[0.6,0.6]},"horizon":1,"s":-1}"#,
            "source",
        ),
    ];
    for (k, (body, field)) in cases.iter().enumerate() {
        let cfg = write_config(tmp.path(), &format!("c{k}.json"), body);
        let o = crdf("solve", &cfg, &tmp.path().join("out"), &[]);
        assert_eq!(o.status.code(), Some(2), "case {k}");
        assert!(stderr(&o).contains(field), "case {k}: {}", stderr(&o));
    }
}

#[test]
fn missing_config_file_is_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = crdf("solve", &tmp.path().join("absent.json"), &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn zero_threads_is_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", &format!(r#"{UNIFORM3},"s":-1}}"#));
    let o = crdf("solve", &cfg, &tmp.path().join("out"), &["--threads", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn dmax_of_skewed_bernoulli() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        r#"{"schema":1,"source":{"kind":"iid","pmf":[0.1,0.9]},"horizon":1,"output_law":{"iid":[0.5,0.5]}}"#,
    );
    let o = crdf("dmax", &cfg, &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = read_json(&tmp.path().join("out/dmax.json"));
    assert!((v["d_max_min_sequence"].as_f64().unwrap() - 0.1).abs() < 1e-12);
    assert_eq!(v["argmin"], serde_json::json!([1, 1]));
    assert!((v["d_max_product"].as_f64().unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn solved_kernel_round_trips_through_info() {
    let tmp = tempfile::tempdir().unwrap();
    let src = r#""source":{"kind":"markov","initial":[0.5,0.5],"transition":[[0.8,0.2],[0.2,0.8]]},"horizon":2"#;
    let solve_cfg = write_config(tmp.path(), "solve.json", &format!(r#"{{"schema":1,{src},"s":-2}}"#));
    let o = crdf("solve", &solve_cfg, &tmp.path().join("solve"), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let point = read_json(&tmp.path().join("solve/point.json"));

    let info_cfg = write_config(
        tmp.path(),
        "info.json",
        &format!(r#"{{"schema":1,{src},"kernel":{{"file":{{"path":"solve/point.json","pointer":"/chain"}}}}}}"#),
    );
    let o = crdf("info", &info_cfg, &tmp.path().join("info"), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let info = read_json(&tmp.path().join("info/info.json"));
    let close =
        |a: &serde_json::Value, b: &serde_json::Value| (a.as_f64().unwrap() - b.as_f64().unwrap()).abs() < 1e-10;
    assert!(close(&info["rate"], &point["rate"]));
    assert!(close(&info["distortion"], &point["distortion"]));
    assert!(close(&info["rate"], &info["mutual_rate"]));
    assert_eq!(info["equivalences"]["causal_factorization"], serde_json::json!(true));
}

#[test]
fn out_directory_falls_back_to_config_field() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", &format!(r#"{UNIFORM3},"s":-1,"out":"results"}}"#));
    let o = Command::new(env!("CARGO_BIN_EXE_crdf"))
        .args(["solve", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(tmp.path().join("results/point.json").exists());
}

#[test]
fn properties_pass_on_uniform_source() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        r#"{"schema":1,"source":{"kind":"iid","pmf":[0.5,0.5]},"horizon":1}"#,
    );
    let o = crdf("properties", &cfg, &tmp.path().join("out"), &["--threads", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let report = read_json(&tmp.path().join("out/properties.json"));
    assert_eq!(report["monotone"]["passed"], serde_json::json!(true));
}

#[test]
fn oracle_failure_exits_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    // a deliberately loose solver against a tight comparison
    let cfg = write_config(
        tmp.path(),
        "c.json",
        r#"{"schema":1,"source":{"kind":"iid","pmf":[0.5,0.5]},"horizon":0,"s":-1,"solver":{"max_iters":1,"init":"random"},"oracle":{"tol":1e-9},"seed":3}"#,
    );
    let o = crdf("oracle", &cfg, &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(tmp.path().join("out/oracle.json").exists());
}

#[test]
fn simulate_writes_report() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        r#"{"schema":1,"source":{"kind":"iid","pmf":[0.5,0.5]},"horizon":5,"sim":{"rate":0.4,"trials":200,"target_distortion":0.25},"seed":1}"#,
    );
    let o = crdf("simulate", &cfg, &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(tmp.path().join("out/sim.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    let v = read_json(&tmp.path().join("out/sim.json"));
    assert_eq!(v["report"]["codebook_size"], serde_json::json!(6));
}
