use std::fs;
use std::path::Path;
use std::process::Command;

use rgcg::harness::{
    read_matrix_csv, run_batch, run_experiment, ExperimentConfig, ManifoldSpec, MatrixSource, SolverKind,
    StrategyKind, SUMMARY_HEADER, TRACE_HEADER,
};
use rgcg::Error;

fn small_config(dir: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(ManifoldSpec::Sphere { n: 8 }, 0.1, 3);
    cfg.runs = 3;
    cfg.output_dir = dir.to_path_buf();
    cfg
}

fn read_rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

#[test]
fn writes_headers_and_hashed_names() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let (batch, files) = run_experiment(&cfg).unwrap();
    let hash = cfg.config_hash();
    assert_eq!(files.summary.file_name().unwrap(), format!("summary_{hash}.csv").as_str());
    assert_eq!(files.traces.len(), 3);
    for (path, kind) in files.traces.iter().zip(StrategyKind::ALL) {
        assert_eq!(path.file_name().unwrap(), format!("trace_{hash}_rgcg_{kind}.csv").as_str());
        let (header, rows) = read_rows(path);
        assert_eq!(header, TRACE_HEADER);
        for row in &rows {
            let v: Vec<f64> = row.iter().map(|s| s.parse().unwrap()).collect();
            assert!((v[3] - v[4] - v[5]).abs() <= 1e-12 * (1.0 + v[3].abs()));
            assert!(v[6] <= 1e-12);
        }
    }
    let (header, rows) = read_rows(&files.summary);
    assert_eq!(header, SUMMARY_HEADER);
    assert_eq!(rows.len(), batch.pairs.len());
    assert_eq!(rows[0][..6], ["sphere", "8", "1", "0.1", "rgcg", "armijo"]);
}

#[test]
fn summary_means_match_traces() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let (batch, files) = run_experiment(&cfg).unwrap();
    let (_, summary) = read_rows(&files.summary);
    for ((row, trace), pair) in summary.iter().zip(&files.traces).zip(&batch.pairs) {
        let (_, rows) = read_rows(trace);
        let mut last_iter = vec![0usize; cfg.runs];
        for r in &rows {
            let run: usize = r[0].parse().unwrap();
            last_iter[run] = last_iter[run].max(r[1].parse().unwrap());
        }
        let mean = last_iter.iter().sum::<usize>() as f64 / cfg.runs as f64;
        assert_eq!(row[7].parse::<f64>().unwrap(), mean);
        assert_eq!(pair.summary.mean_iters, mean);
        let t = pair.summary.runs.iter().map(|r| r.time).sum::<f64>() / cfg.runs as f64;
        assert!((pair.summary.mean_time - t).abs() <= 1e-15);
        assert_eq!(row[8], pair.summary.converged_runs().to_string());
    }
}

#[test]
fn single_step_run_has_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path());
    cfg.runs = 1;
    cfg.max_iters = 0;
    cfg.strategies = vec![StrategyKind::Diminishing];
    let (_, files) = run_experiment(&cfg).unwrap();
    let (_, rows) = read_rows(&files.traces[0]);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][1], "0");
}

#[test]
fn trivial_identity_instance_converges_immediately() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("eye.csv");
    fs::write(&csv, "1,0,0\n0,1,0\n0,0,1\n").unwrap();
    let mut cfg = ExperimentConfig::new(ManifoldSpec::Sphere { n: 3 }, 0.0, 0);
    cfg.runs = 1;
    cfg.matrix_source = MatrixSource::Csv(csv);
    let batch = run_batch(&cfg).unwrap();
    for s in batch.summaries() {
        assert_eq!(s.runs[0].iters, 0);
        assert!(s.runs[0].final_theta.abs() <= 1e-12);
        assert_eq!(s.converged_runs(), 1);
    }
}

#[test]
fn outputs_are_reproducible_apart_from_timing() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut ca = small_config(a.path());
    ca.solvers = vec![SolverKind::Rgcg, SolverKind::Accelerated];
    let cb = ExperimentConfig { output_dir: b.path().to_path_buf(), ..ca.clone() };
    let (_, fa) = run_experiment(&ca).unwrap();
    let (_, fb) = run_experiment(&cb).unwrap();
    let strip = |rows: Vec<Vec<String>>, skip: usize| -> Vec<Vec<String>> {
        rows.into_iter()
            .map(|r| r.into_iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, v)| v).collect())
            .collect()
    };
    for (x, y) in fa.traces.iter().zip(&fb.traces) {
        assert_eq!(x.file_name(), y.file_name());
        assert_eq!(strip(read_rows(x).1, 2), strip(read_rows(y).1, 2));
    }
    assert_eq!(strip(read_rows(&fa.summary).1, 6), strip(read_rows(&fb.summary).1, 6));
}

#[test]
fn unwritable_output_fails_before_solving() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let cfg = small_config(&blocker.join("sub"));
    assert!(matches!(run_experiment(&cfg), Err(Error::Io(_))));
}

#[test]
fn matrix_csv_ingestion() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("a.csv");
    fs::write(&good, "1, 2,3\n4,5,6\n\n").unwrap();
    let a = read_matrix_csv(&good).unwrap();
    assert_eq!((a.nrows(), a.ncols()), (2, 3));
    assert_eq!(a[(1, 0)], 4.0);
    assert_eq!(a[(0, 2)], 3.0);

    let ragged = dir.path().join("r.csv");
    fs::write(&ragged, "1,2\n3\n").unwrap();
    assert!(read_matrix_csv(&ragged).is_err());
    let junk = dir.path().join("j.csv");
    fs::write(&junk, "1,abc\n").unwrap();
    assert!(matches!(read_matrix_csv(&junk), Err(Error::Config(_))));
    let empty = dir.path().join("e.csv");
    fs::write(&empty, "").unwrap();
    assert!(read_matrix_csv(&empty).is_err());
}

fn bench() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rgcg-bench"))
}

#[test]
fn cli_runs_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = bench()
        .args(["--manifold", "stiefel", "--n", "6", "--p", "2", "--lambda", "0.1", "--strategy", "armijo"])
        .args(["--solver", "both", "--runs", "2", "--seed", "5", "--max-iters", "50"])
        .args(["--tol-theta", "1e-4", "--tol-fstall", "1e-4", "--zeta", "0.1", "--omega1", "0.05", "--omega2", "0.95"])
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let names: Vec<String> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert_eq!(names.len(), 3);
    assert!(names.iter().any(|n| n.starts_with("summary_")));
    assert!(names.iter().any(|n| n.ends_with("_accelerated_armijo.csv")));
}

#[test]
fn cli_reads_matrix_csv_and_checks_n() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("a.csv");
    fs::write(&csv, "2,0.5,0\n0.5,1,0.2\n0,0.2,0.3\n1,1,1\n").unwrap();
    let ok = bench().arg("--matrix-csv").arg(&csv).arg("--runs").arg("1").arg("--out").arg(dir.path().join("o")).output().unwrap();
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));

    let bad = bench().arg("--matrix-csv").arg(&csv).args(["--n", "4"]).arg("--out").arg(dir.path().join("o")).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("does not match"));
}

#[test]
fn cli_rejects_bad_arguments() {
    let missing_n = bench().output().unwrap();
    assert_eq!(missing_n.status.code(), Some(2));
    let bad_lambda = bench().args(["--n", "5", "--lambda", "-1"]).output().unwrap();
    assert_eq!(bad_lambda.status.code(), Some(2));
    let bad_flag = bench().args(["--n", "5", "--strategy", "newton"]).output().unwrap();
    assert_eq!(bad_flag.status.code(), Some(2));
}
