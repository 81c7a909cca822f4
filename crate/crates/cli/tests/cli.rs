use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const CHAIN_SHEARS: &str = r#"[
    {"curve":"a1","width":0.5,"strength":0.25,"side_offset":0.3},
    {"curve":"b1","width":0.5,"strength":0.25,"side_offset":0.3},
    {"curve":"a1 a2","width":0.5,"strength":0.25,"side_offset":0.3},
    {"curve":"b2","width":0.5,"strength":0.25,"side_offset":0.3},
    {"curve":"a2","width":0.5,"strength":0.25,"side_offset":0.3}
]"#;

fn rotorbit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rotorbit"))
        .args(args)
        .env_remove("ROTORBIT_OUT")
        .output()
        .expect("binary runs")
}

fn run_config(dir: &Path, body: &str, extra: &[&str]) -> (Output, Value) {
    let cfg = dir.join("config.json");
    fs::write(&cfg, body).unwrap();
    let out = dir.join("out");
    let mut args = vec!["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = rotorbit(&args);
    let report = fs::read_to_string(out.join("report.json"))
        .ok()
        .map(|s| serde_json::from_str(&s).unwrap())
        .unwrap_or(Value::Null);
    (o, report)
}

fn metrics<'a>(report: &'a Value, task: &str) -> &'a Value {
    report["tasks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|t| t["task"] == task)
        .unwrap_or_else(|| panic!("no task {task}"))
}

fn chain_config(tasks: &str, extra: &str) -> String {
    format!(
        r#"{{"schema":1,"genus":2,"curves":["a1","b1","a1 a2","b2","a2"],"shears":{CHAIN_SHEARS},
            "rotation":{{"n_iters":48,"n_samples":200}},"seed":5,
            "lebesgue":{{"n_samples":5000}},
            "deviation":{{"n_iters":200,"n_samples":10,"random_directions":2}},
            "tasks":{tasks}{extra}}}"#
    )
}

#[test]
fn surface_check_reports_area() {
    let dir = tempfile::tempdir().unwrap();
    let (o, r) = run_config(dir.path(), r#"{"schema":1,"genus":2,"tasks":["surface-check"]}"#, &[]);
    assert_eq!(o.status.code(), Some(0));
    let t = metrics(&r, "surface-check");
    assert_eq!(t["status"], "ok");
    let m = &t["metrics"];
    let area = m["area"].as_f64().unwrap();
    assert!((area - 4.0 * std::f64::consts::PI).abs() < 1e-6);
    assert!(m["relator_residual"].as_f64().unwrap() < 1e-9);
    assert_eq!(m["area_tolerance"].as_f64(), Some(1e-6));
}

#[test]
fn filling_check_on_chain_and_on_generators() {
    let dir = tempfile::tempdir().unwrap();
    let (o, r) = run_config(dir.path(), &chain_config(r#"["filling-check"]"#, ""), &[]);
    assert_eq!(o.status.code(), Some(0));
    let m = &metrics(&r, "filling-check")["metrics"];
    assert_eq!(m["is_filling"], true);
    assert_eq!(m["euler"], -2);

    let (o, r) = run_config(
        dir.path(),
        r#"{"schema":1,"genus":2,"curves":["a1","b1","a2","b2"],"tasks":["filling-check"]}"#,
        &[],
    );
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(metrics(&r, "filling-check")["metrics"]["is_filling"], false);
}

#[test]
fn torus_oracle_within_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let (o, r) = run_config(
        dir.path(),
        r#"{"schema":1,"genus":2,"tasks":["torus-oracle"],"torus":{"n_iters":2000,"n_samples":2000}}"#,
        &[],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let m = &metrics(&r, "torus-oracle")["metrics"];
    assert!(m["hausdorff"].as_f64().unwrap() <= 0.05);
    assert_eq!(m["tolerance"].as_f64(), Some(0.05));
}

#[test]
fn config_errors_carry_pointer() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (r#"{"schema":1,"genus":2,"tasks":["surface-check","nope"]}"#, "/tasks/1"),
        (r#"{"schema":1,"genus":2,"curves":["a1","q2"],"tasks":["filling-check"]}"#, "/curves/1"),
        (r#"{"schema":1,"genus":2,"shears":[{"curve":"a1","width":0,"strength":1}],"tasks":["equivariance-check"]}"#, "/shears/0"),
        (r#"{"schema":7,"genus":2,"tasks":["surface-check"]}"#, "/schema"),
        (r#"{"schema":1,"genus":2,"rotation":{"n_iters":"many"},"tasks":["mz-estimate"]}"#, "/rotation/n_iters"),
    ];
    for (body, pointer) in cases {
        let (o, _) = run_config(dir.path(), body, &[]);
        assert_eq!(o.status.code(), Some(2), "{body}");
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.contains(&format!("at {pointer}:")), "{err}");
    }
}

#[test]
fn failed_task_is_named_and_exit_code_is_one() {
    let dir = tempfile::tempdir().unwrap();
    let (o, r) = run_config(
        dir.path(),
        r#"{"schema":1,"genus":2,"tasks":["equivariance-check","surface-check"]}"#,
        &[],
    );
    assert_eq!(o.status.code(), Some(1));
    // canonical order regardless of listing
    assert_eq!(r["tasks"][0]["task"], "surface-check");
    let t = metrics(&r, "equivariance-check");
    assert_eq!(t["status"], "failed");
    assert_eq!(t["error"]["kind"], "EmptySpec");
}

#[test]
fn identical_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let body = chain_config(r#"["mz-estimate","deviation","lebesgue-vector"]"#, "");
    let (oa, ra) = run_config(a.path(), &body, &[]);
    let (ob, rb) = run_config(b.path(), &body, &[]);
    assert_eq!(oa.status.code(), Some(0), "{}", String::from_utf8_lossy(&oa.stdout));
    assert_eq!(ob.status.code(), Some(0));
    assert_eq!(ra["config_hash"], rb["config_hash"]);
    let files = ra["files"].as_array().unwrap();
    assert_eq!(files.len(), 3);
    for f in files {
        let name = f["name"].as_str().unwrap();
        let x = fs::read(a.path().join("out").join(name)).unwrap();
        let y = fs::read(b.path().join("out").join(name)).unwrap();
        assert_eq!(x, y, "{name} differs");
    }
    assert_eq!(ra["files"], rb["files"]);
}

#[test]
fn overrides_change_seed_and_tasks() {
    let dir = tempfile::tempdir().unwrap();
    let body = chain_config(r#"["mz-estimate"]"#, "");
    let (_, r1) = run_config(dir.path(), &body, &[]);
    let (o, r2) = run_config(dir.path(), &body, &["--seed", "99", "--tasks", "surface-check,filling-check"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(r2["seed"], 99);
    assert_ne!(r1["config_hash"], r2["config_hash"]);
    let names: Vec<_> = r2["tasks"].as_array().unwrap().iter().map(|t| t["task"].clone()).collect();
    assert_eq!(names, vec!["surface-check", "filling-check"]);
}

fn read_projection(path: &Path) -> Vec<[f64; 2]> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records()
        .map(|rec| {
            let rec = rec.unwrap();
            [rec[0].parse().unwrap(), rec[1].parse().unwrap()]
        })
        .collect()
}

fn planar_rank(pts: &[[f64; 2]]) -> usize {
    let o = pts[0];
    let mut best: f64 = 0.0;
    let mut dir = None;
    for p in pts {
        let d = [p[0] - o[0], p[1] - o[1]];
        let n = d[0].hypot(d[1]);
        if n > best {
            best = n;
            dir = Some(d);
        }
    }
    let Some(d) = dir else { return 0 };
    let off = pts
        .iter()
        .map(|p| ((p[0] - o[0]) * d[1] - (p[1] - o[1]) * d[0]).abs() / best)
        .fold(0.0, f64::max);
    if off > 1e-9 {
        2
    } else {
        1
    }
}

#[test]
fn project_genus_two_cloud() {
    let dir = tempfile::tempdir().unwrap();
    let (o, _) = run_config(dir.path(), &chain_config(r#"["mz-estimate"]"#, ""), &[]);
    assert_eq!(o.status.code(), Some(0));
    let out = dir.path().join("out");
    for (i, j) in [(1, 2), (3, 4)] {
        let o = rotorbit(&["project", out.to_str().unwrap(), "--pair", &format!("{i},{j}")]);
        assert_eq!(o.status.code(), Some(0));
        let path = out.join(format!("projection_{i}_{j}.csv"));
        let header = fs::read_to_string(&path).unwrap();
        assert!(header.starts_with(&format!("x{i},x{j},hull_vertex\n")));
        assert_eq!(planar_rank(&read_projection(&path)), 2);
        let again = fs::read(&path).unwrap();
        rotorbit(&["project", out.to_str().unwrap(), "--pair", &format!("{i},{j}")]);
        assert_eq!(again, fs::read(&path).unwrap());
    }
}

#[test]
fn project_without_cloud_is_missing_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let o = rotorbit(&["project", dir.path().to_str().unwrap(), "--pair", "1,2"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing artifact"));
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let text = fs::read_to_string(&path).unwrap();
        rotorbit_cli::ExperimentConfig::from_json(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    }
}
