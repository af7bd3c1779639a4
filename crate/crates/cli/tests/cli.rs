use std::path::PathBuf;
use std::process::{Command, Output};

use pathtrack::tracker::{BenchmarkTable, PredictorRow, SolveReport};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pathtrack"))
}

fn scratch(name: &str, body: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("pathtrack-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn solves_quadratic() {
    let f = scratch("quad.txt", "vars: x\nx^2 - 1\n");
    let o = run(&["solve", "-i", f.to_str().unwrap(), "--threads", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: SolveReport<f64> = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report.aggregates.successes, 2);
    let mut xs: Vec<[f64; 2]> = report.solutions.iter().map(|s| s.coordinates[0]).collect();
    xs.sort_by(|a, b| a[0].total_cmp(&b[0]));
    for (x, want) in xs.iter().zip([-1.0, 1.0]) {
        assert!((x[0] - want).abs() < 1e-10 && x[1].abs() < 1e-10, "{x:?}");
    }
}

#[test]
fn report_round_trips() {
    let f = scratch("circle.txt", "vars: x, y\nx^2 + y^2 - 1\nx - y\n");
    let out = f.with_file_name("report.json");
    let o = run(&["solve", "-i", f.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "7"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let report: SolveReport<f64> = serde_json::from_str(&text).unwrap();
    assert_eq!(report.metadata.seed, 7);
    assert_eq!(report.solutions.len(), 2);
    let again: SolveReport<f64> = serde_json::from_str(&serde_json::to_string(&report).unwrap()).unwrap();
    assert_eq!(again, report);
}

#[test]
fn malformed_input_exits_2() {
    let f = scratch("bad.txt", "vars: x\nx^^2\n");
    let o = run(&["solve", "-i", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
}

#[test]
fn missing_file_exits_2() {
    let o = run(&["solve", "-i", "/nonexistent/system.txt"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_2() {
    let f = scratch("quad2.txt", "vars: x\nx^2 - 1\n");
    let p = f.to_str().unwrap();
    assert_eq!(run(&["benchmark", "-i", p, "--runs", "0"]).status.code(), Some(2));
    assert_eq!(run(&["predictors", "-i", p, "--predictor", "euler,foo"]).status.code(), Some(2));
    assert_eq!(run(&["solve", "-i", p, "--max-corrector-iters", "1"]).status.code(), Some(2));
    assert_eq!(run(&["solve", "--family", "cyclic"]).status.code(), Some(2));
}

#[test]
fn benchmark_both_rows() {
    let f = scratch("quad3.txt", "vars: x\nx^2 - 1\n");
    let o = run(&["benchmark", "-i", f.to_str().unwrap(), "--controller", "both"]);
    assert_eq!(o.status.code(), Some(0));
    let mut r = csv::Reader::from_reader(o.stdout.as_slice());
    let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(&rows[0][0], "old");
    assert_eq!(&rows[1][0], "new");
    assert_eq!(rows[0][4].parse::<f64>().unwrap(), 1.0);

    let o = run(&["benchmark", "-i", f.to_str().unwrap(), "--controller", "new"]);
    let n = csv::Reader::from_reader(o.stdout.as_slice()).records().count();
    assert_eq!(n, 1);
}

#[test]
fn benchmark_json_output() {
    let out = scratch("unused", "").with_file_name("bench.json");
    let o = run(&["benchmark", "--family", "katsura", "--n", "2", "--runs", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let t: BenchmarkTable = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(t.runs, 2);
    assert_eq!(t.t_end, 0.1);
    assert!(t.rows.iter().all(|r| r.paths == 8));
}

#[test]
fn predictor_table_normalized_to_euler() {
    let out = scratch("unused2", "").with_file_name("pred.json");
    let o = run(&["predictors", "--family", "katsura", "--n", "2", "--predictor", "heun,euler", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows: Vec<PredictorRow> = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1].normalized_runtime, 1.0);
}

#[test]
fn failing_paths_exit_3_unless_allowed() {
    // x*y = x^2 = 0 vanishes on the whole line x = 0: some paths stall before reaching it.
    let f = scratch("sing.txt", "vars: x, y\nx*y\nx^2\n");
    let p = f.to_str().unwrap();
    assert_eq!(run(&["solve", "-i", p]).status.code(), Some(3));
    let o = run(&["solve", "-i", p, "--allow-failures"]);
    assert_eq!(o.status.code(), Some(0));
    let report: SolveReport<f64> = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(report.aggregates.successes > 0 && report.aggregates.successes < report.aggregates.paths);
}
