use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bench"))
        .args(args)
        .output()
        .expect("bench binary runs")
}

fn quick_run(out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "run",
        "--quick",
        "--designs",
        "independent,cluster",
        "--methods",
        "lars+lasso+ebic,gd+enet+linselect,tigress",
        "--replicates",
        "2",
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    bench(&args)
}

#[test]
fn run_writes_tables_report_and_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = quick_run(dir.path(), &["--plots"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in [
        "report.json",
        "report.schema.json",
        "metrics.csv",
        "config.toml",
        "table_mse.csv",
        "table_proc_auc.csv",
        "plots/mse_cluster.svg",
    ] {
        assert!(dir.path().join(f).is_file(), "missing {f}");
    }
    let metrics = fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    // header plus 2 designs x 3 methods x 2 replicates
    assert_eq!(metrics.lines().count(), 1 + 12);
    let echoed = fs::read_to_string(dir.path().join("config.toml")).unwrap();
    assert!(echoed.contains("replicates = 2"));
}

#[test]
fn rerun_from_echoed_config_is_identical() {
    let a = tempfile::tempdir().unwrap();
    assert!(quick_run(a.path(), &[]).status.success());
    let b = tempfile::tempdir().unwrap();
    let cfg = a.path().join("config.toml");
    let out = bench(&["run", "--config", cfg.to_str().unwrap(), "--out", b.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let read = |d: &Path| fs::read(d.join("report.json")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
}

#[test]
fn report_formats() {
    let dir = tempfile::tempdir().unwrap();
    assert!(quick_run(dir.path(), &[]).status.success());
    let input = dir.path().to_str().unwrap();
    let md = bench(&["report", "--in", input, "--format", "md"]);
    let md = String::from_utf8(md.stdout).unwrap();
    assert!(md.contains("## mse") && md.contains("| reference |"));
    let json = bench(&["report", "--in", input, "--format", "json"]);
    assert_eq!(json.stdout, fs::read(dir.path().join("report.json")).unwrap());
    let csv = bench(&["report", "--in", input, "--format", "csv"]);
    assert!(String::from_utf8(csv.stdout).unwrap().starts_with("design,method,replicate,"));
}

#[test]
fn failing_cells_give_exit_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(
        &cfg,
        r#"
methods = ["lars+lasso+ebic", "gd+lasso+slope"]
replicates = 2
master-seed = 1
output-dir = "unused"
cutoff-mode = "min-max-x"

[[designs]]
name = "independent"
n = 40
p = 20

[params]
cd-grid = 2
"#,
    )
    .unwrap();
    let out = bench(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("o/report.json").is_file());
}

#[test]
fn bad_input_is_an_error() {
    let out = bench(&["run", "--quick", "--methods", "no-such-method", "--out", "/tmp/unused-bench-out"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    let missing = bench(&["report", "--in", "/nonexistent/dir"]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn simulate_writes_train_and_test() {
    let dir = tempfile::tempdir().unwrap();
    let out = bench(&[
        "simulate",
        "--design",
        "scalefree-min",
        "--n",
        "30",
        "--p",
        "12",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for half in ["train", "test"] {
        let x = fs::read_to_string(dir.path().join(half).join("X.csv")).unwrap();
        let y = fs::read_to_string(dir.path().join(half).join("y.csv")).unwrap();
        assert!(dir.path().join(half).join("truth.json").is_file());
        assert_eq!(x.lines().count(), 30, "{half}");
        assert_eq!(y.lines().count(), 30, "{half}");
        assert!(x.lines().all(|l| l.split(',').count() == 12));
    }
}
