use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn arccover(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_arccover"))
        .args(args)
        .arg("--out-dir")
        .arg(dir)
        .env_remove("ARCCOVER_JOBS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn data_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn trial_writes_trace_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let o = arccover(
        dir.path(),
        &["trial", "--target", "circle", "--lengths", "logn:2.5", "--n-max", "100000", "--seed", "7"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let doc = json(&dir.path().join("trial.json"));
    assert_eq!(doc["result"]["eventually_covered"], Value::Bool(true));
    assert_eq!(doc["config"]["seed"], 7);
    assert_eq!(doc["prng"].as_str().unwrap(), arccover::simulate::PRNG_ID);
    let text = fs::read_to_string(dir.path().join("trial.csv")).unwrap();
    assert!(text.contains("\nn,ell_n,covered,uncovered_measure,piece_count\n"));
    let rows = data_rows(&dir.path().join("trial.csv"));
    assert_eq!(rows.last().unwrap()[0], "100000");
    let ell = &rows.last().unwrap()[1];
    let mantissa = ell.split('e').next().unwrap().replace(['.', '-'], "");
    assert_eq!(mantissa.len(), 17);
    let want = arccover::LengthSequence::log_over_n(2.5).unwrap().eval(100_000).unwrap();
    assert_eq!(ell.parse::<f64>().unwrap(), want);
}

#[test]
fn too_deep_prefractal_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = arccover(
        dir.path(),
        &["trial", "--target", "cantor:0.333333:30", "--lengths", "logn:2", "--n-max", "1000"],
    );
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("depth"));
}

#[test]
fn coarse_prefractal_for_horizon_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = arccover(
        dir.path(),
        &["trial", "--target", "cantor:0.333333:12", "--lengths", "logn:0.1", "--n-max", "100000"],
    );
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("target"));
}

#[test]
fn repeated_trials_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["trial", "--lengths", "logn:1.2", "--n-max", "20000", "--seed", "7"];
    assert_eq!(code(&arccover(a.path(), &args)), 0);
    assert_eq!(code(&arccover(b.path(), &args)), 0);
    for f in ["trial.csv", "trial.json"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap());
    }
}

#[test]
fn scan_is_independent_of_jobs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["scan", "--c", "0.5:2.5:0.5", "--trials", "8", "--n-max", "5000"];
    let mut one = args.to_vec();
    one.extend(["--jobs", "1"]);
    let o = arccover(a.path(), &one);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = Command::new(env!("CARGO_BIN_EXE_arccover"))
        .args(args)
        .arg("--out-dir")
        .arg(b.path())
        .env("ARCCOVER_JOBS", "3")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    for f in ["scan.csv", "scan.json", "scan.svg"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    assert_eq!(data_rows(&a.path().join("scan.csv")).len(), 5);
    let svg = fs::read_to_string(a.path().join("scan.svg")).unwrap();
    assert!(svg.contains("dim_H = 1.000") && svg.contains("dim_B + 1 = 2.000"));
    assert!(!svg.contains("href"));
}

#[test]
fn zero_jobs_from_env_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_arccover"))
        .args(["series", "--lengths", "logn:2", "--beta", "0", "--d", "0.5", "--n", "1000"])
        .arg("--out-dir")
        .arg(dir.path())
        .env("ARCCOVER_JOBS", "0")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn scan_labels_default_grid_and_partial_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = arccover(dir.path(), &["scan", "--trials", "2", "--n-max", "500", "--target", "cantor:0.333333333333:6"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("target"));
    let rows = data_rows(&dir.path().join("scan.csv"));
    assert_eq!(rows.len(), 12);
    assert_ne!(rows[0][2], "ok");
    assert_eq!(rows[0][4], "");
    assert_eq!(rows[11][2], "ok");
    assert!(dir.path().join("scan.svg").exists());
    let label = |c: f64| {
        rows.iter()
            .find(|r| r[0].parse::<f64>().unwrap() == c)
            .map(|r| r[1].clone())
            .unwrap()
    };
    assert_eq!(label(0.5), "no-cover");
    assert_eq!(label(1.0), "theorem-silent");
    assert_eq!(label(1.5), "theorem-silent");
    assert_eq!(label(2.0), "cover");
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.json");
    fs::write(
        &cfg,
        r#"{"version": 1, "command": "trial", "lengths": "logn:1.5", "n_max": 3000, "seed": 5, "prefix": "fromfile"}"#,
    )
    .unwrap();
    let cfg_s = cfg.to_str().unwrap();
    let o = arccover(dir.path(), &["trial", "--config", cfg_s, "--seed", "9"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let doc = json(&dir.path().join("fromfile.json"));
    assert_eq!(doc["config"]["seed"], 9);
    assert_eq!(doc["config"]["n_max"], 3000);
    assert_eq!(doc["config"]["lengths"], "logn:1.5");
    assert_eq!(doc["config"]["checkpoint_ratio"], 1.1);

    let o = arccover(dir.path(), &["scan", "--config", cfg_s]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("command"));
}

#[test]
fn bad_config_files() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("v2.json", r#"{"version": 2, "lengths": "logn:1"}"#, "version"),
        ("extra.json", r#"{"version": 1, "lengths": "logn:1", "colour": "red"}"#, "config"),
        ("noise.json", "not json", "config"),
    ];
    for (name, body, field) in cases {
        let p = dir.path().join(name);
        fs::write(&p, body).unwrap();
        let o = arccover(dir.path(), &["trial", "--config", p.to_str().unwrap()]);
        assert_eq!(code(&o), 2, "{name}");
        assert!(String::from_utf8_lossy(&o.stderr).contains(field), "{name}");
    }
    let o = arccover(dir.path(), &["trial", "--config", "/nonexistent/x.json"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn files_resolve_next_to_config() {
    let dir = tempfile::tempdir().unwrap();
    let sub = dir.path().join("inputs");
    fs::create_dir(&sub).unwrap();
    fs::write(sub.join("set.json"), r#"{"intervals": [[0.1, 0.2], [0.6, 0.65]], "beta": 1.0}"#).unwrap();
    let table: String = (1..=5000).map(|n| format!("{n},{}\n", 0.3 * (n.max(3) as f64).ln() / n.max(3) as f64)).collect();
    fs::write(sub.join("lengths.csv"), format!("n,ell\n{table}")).unwrap();
    fs::write(
        sub.join("exp.json"),
        r#"{"version": 1, "target": "custom:set.json", "lengths": "table:lengths.csv", "n_max": 5000}"#,
    )
    .unwrap();
    let o = arccover(dir.path(), &["trial", "--config", sub.join("exp.json").to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let doc = json(&dir.path().join("trial.json"));
    assert_eq!(doc["config"]["target"], "custom:set.json");
}

#[test]
fn series_example_is_convergent() {
    let dir = tempfile::tempdir().unwrap();
    let o = arccover(dir.path(), &["series", "--lengths", "logn:5", "--beta", "1", "--d", "0.5", "--n", "1000000"]);
    assert_eq!(code(&o), 0);
    let doc = json(&dir.path().join("series.json"));
    assert_eq!(doc["result"]["theorem"]["verdict"], "convergent");
    let o = arccover(dir.path(), &["series", "--lengths", "logn:5", "--beta", "1"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("invalid d"));
}

#[test]
fn schedule_example_prints_verified_sum() {
    let dir = tempfile::tempdir().unwrap();
    let o = arccover(dir.path(), &["schedule", "--lengths", "logn:0.5", "--alpha", "0.9", "--k", "6"]);
    assert_eq!(code(&o), 0);
    let rows = data_rows(&dir.path().join("schedule.csv"));
    assert_eq!(rows.len(), 6);
    let direct: f64 = rows.iter().map(|r| r[4].parse::<f64>().unwrap()).sum();
    let reported: f64 = rows[5][5].parse().unwrap();
    assert!((direct - reported).abs() < 1e-15);
    assert!(reported < 1.0);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("sum of n_(k-1) l_(n_k)^alpha"));
    let o = arccover(dir.path(), &["schedule", "--lengths", "logn:0.5", "--alpha", "1.5"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn dims_reports_floor_and_vacuous_bound() {
    let dir = tempfile::tempdir().unwrap();
    let o = arccover(dir.path(), &["dims", "--c", "0.5,1.2", "--trials", "2", "--n-max", "20000"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let doc = json(&dir.path().join("dims.json"));
    assert_eq!(doc["result"][0]["floor"], 0.5);
    assert_eq!(doc["result"][1]["vacuous"], true);
    assert_eq!(data_rows(&dir.path().join("dims.csv")).len(), 4);
    let o = arccover(dir.path(), &["dims"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn runtime_failures_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("short.csv"), "0.5\n0.4\n0.3\n").unwrap();
    let table = format!("table:{}", dir.path().join("short.csv").display());
    let o = arccover(dir.path(), &["schedule", "--lengths", &table]);
    assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stderr));
}
