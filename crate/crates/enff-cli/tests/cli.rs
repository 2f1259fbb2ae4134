//! Drives the installed binary the way a user would: real processes, real
//! files, real exit codes. The run configuration is deliberately tiny so the
//! whole suite stays in the seconds.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn enff(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_enff"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_ok(args: &[&str]) -> String {
    let out = enff(args);
    assert!(
        out.status.success(),
        "`enff {}` failed:\n{}",
        args.join(" "),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn run_err(args: &[&str]) -> String {
    let out = enff(args);
    assert!(
        !out.status.success(),
        "`enff {}` unexpectedly succeeded",
        args.join(" ")
    );
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_config(dir: &Path) -> PathBuf {
    let path = dir.join("run.conf");
    std::fs::write(
        &path,
        "\
synth.years = 1
synth.noise_sd_mw = 120

split.train = 2004-01-01..2004-01-28
split.validation = 2004-01-29..2004-02-04
split.test_days = 2004-02-06, 2004-03-15

ensemble.members = fnn:4, elman:3, rbf:4
swarm.size = 6
swarm.iterations = 6
swarm.target_error = 0

bpnn.hidden = 4
bpnn.learning_rate = 0.05
bpnn.epochs = 40

arima.order = 1,1,1
arima.history_hours = 500

run.seed = 7
",
    )
    .unwrap();
    path
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}

#[test]
fn synth_is_deterministic_and_respects_force() {
    let scratch = tempfile::tempdir().unwrap();
    let config = write_config(scratch.path());
    let config = config.to_str().unwrap();
    let a = scratch.path().join("a");
    let b = scratch.path().join("b");
    let a_str = a.to_str().unwrap();

    run_ok(&["synth", "--config", config, "--out", a_str]);
    run_ok(&["synth", "--config", config, "--out", b.to_str().unwrap()]);
    assert_eq!(
        read(&a.join("load.csv")),
        read(&b.join("load.csv")),
        "same config + seed must give identical data"
    );
    assert_eq!(read(&a.join("holidays.csv")), read(&b.join("holidays.csv")));

    // existing files are refused without --force, replaced with it
    let stderr = run_err(&["synth", "--config", config, "--out", a_str]);
    assert!(stderr.contains("--force"), "stderr was: {stderr}");
    run_ok(&["synth", "--config", config, "--out", a_str, "--force"]);

    // a different seed must change the data (flag overrides run.seed)
    run_ok(&["synth", "--config", config, "--out", a_str, "--force", "--seed", "8"]);
    assert_ne!(read(&a.join("load.csv")), read(&b.join("load.csv")));
}

#[test]
fn full_workflow_is_byte_identical_across_runs() {
    let scratch = tempfile::tempdir().unwrap();
    let config = write_config(scratch.path());
    let config = config.to_str().unwrap();

    let mut artifacts: Vec<Vec<u8>> = Vec::new();
    for name in ["a", "b"] {
        let out = scratch.path().join(name);
        let out_str = out.to_str().unwrap();
        run_ok(&["train", "--config", config, "--out", out_str]);
        run_ok(&["forecast", "--config", config, "--out", out_str]);
        let stdout = run_ok(&["evaluate", "--config", config, "--out", out_str]);
        assert!(stdout.contains("ENFF") && stdout.contains("ARIMA"));

        let mut bundle = Vec::new();
        for file in [
            "ensemble/manifest.txt",
            "benchmarks/arima_model.csv",
            "forecasts/forecast_2004-02-06_ENFF.csv",
            "report.csv",
            "report.txt",
            "scatter.csv",
        ] {
            bundle.extend(read(&out.join(file)));
        }
        artifacts.push(bundle);
    }
    assert_eq!(artifacts[0], artifacts[1], "reruns must be byte-identical");
}

#[test]
fn forecast_files_have_a_day_of_rows_and_member_columns() {
    let scratch = tempfile::tempdir().unwrap();
    let config = write_config(scratch.path());
    let config = config.to_str().unwrap();
    let out = scratch.path().join("run");
    let out_str = out.to_str().unwrap();
    run_ok(&["train", "--config", config, "--out", out_str]);
    // an explicit day argument overrides split.test_days
    run_ok(&["forecast", "--config", config, "--out", out_str, "2004-02-09"]);

    let dir = out.join("forecasts");
    assert_eq!(std::fs::read_dir(&dir).unwrap().count(), 3, "one file per model");
    let ensemble = String::from_utf8(read(&dir.join("forecast_2004-02-09_ENFF.csv"))).unwrap();
    let mut lines = ensemble.lines();
    assert_eq!(
        lines.next().unwrap(),
        "timestamp,forecast_mw,member_1,member_2,member_3"
    );
    assert_eq!(lines.count(), 24);
    let arima = String::from_utf8(read(&dir.join("forecast_2004-02-09_ARIMA.csv"))).unwrap();
    assert_eq!(arima.lines().next().unwrap(), "timestamp,forecast_mw");
    assert_eq!(arima.lines().count(), 25);
}

#[test]
fn analyze_writes_acf_and_correlation_tables() {
    let scratch = tempfile::tempdir().unwrap();
    let config = scratch.path().join("run.conf");
    std::fs::write(&config, "synth.years = 1\nanalyze.max_lag = 48\nrun.seed = 3\n").unwrap();
    let out = scratch.path().join("run");
    run_ok(&[
        "analyze",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    let acf = String::from_utf8(read(&out.join("acf.csv"))).unwrap();
    assert_eq!(acf.lines().count(), 50, "header + lags 0..=48");
    assert_eq!(acf.lines().nth(1).unwrap(), "0,1");
    let corr = String::from_utf8(read(&out.join("correlation.csv"))).unwrap();
    assert_eq!(corr.lines().count(), 3);
}

#[test]
fn every_failure_mode_exits_nonzero_with_a_usable_message() {
    let scratch = tempfile::tempdir().unwrap();
    let config = write_config(scratch.path());
    let config = config.to_str().unwrap();
    let out = scratch.path().join("run");
    let out_str = out.to_str().unwrap();

    // no --config at all
    let stderr = run_err(&["train", "--out", out_str]);
    assert!(stderr.contains("--config"), "stderr was: {stderr}");

    // config path that does not exist
    let stderr = run_err(&["train", "--config", "/no/such/file.conf", "--out", out_str]);
    assert!(stderr.contains("/no/such/file.conf"), "stderr was: {stderr}");

    // data file the config points at is missing: the path must be named
    let bad = scratch.path().join("bad.conf");
    std::fs::write(&bad, "data.load_csv = missing.csv\ndata.holiday_csv = also.csv\n").unwrap();
    let stderr = run_err(&["analyze", "--config", bad.to_str().unwrap(), "--out", out_str]);
    assert!(stderr.contains("missing.csv"), "stderr was: {stderr}");

    // training without any seed
    let seedless = scratch.path().join("seedless.conf");
    std::fs::write(
        &seedless,
        "synth.years = 1\nsplit.train = 2004-01-01..2004-01-28\n",
    )
    .unwrap();
    let stderr = run_err(&["train", "--config", seedless.to_str().unwrap(), "--out", out_str]);
    assert!(stderr.contains("seed"), "stderr was: {stderr}");

    // forecasting needs trained models in --out
    let stderr = run_err(&["forecast", "--config", config, "--out", out_str, "2004-02-06"]);
    assert!(stderr.contains("manifest.txt"), "stderr was: {stderr}");

    // a day too early for the recursive forecaster's warm-up
    run_ok(&["train", "--config", config, "--out", out_str]);
    let stderr = run_err(&["forecast", "--config", config, "--out", out_str, "2004-01-03"]);
    assert!(stderr.contains("history"), "stderr was: {stderr}");

    // malformed day argument (clap rejects it before we run)
    let stderr = run_err(&["forecast", "--config", config, "--out", out_str, "Feb-9"]);
    assert!(stderr.contains("YYYY-MM-DD"), "stderr was: {stderr}");
}
