use std::path::PathBuf;
use std::process::Command;

fn rpnn() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rpnn"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("rpnn-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn strict_mode_rejects_zero_learning_rate_with_category() {
    let dir = scratch("strict");
    let cfg = dir.join("bad.cfg");
    std::fs::write(&cfg, "# too small\neta = 0\n").unwrap();
    let out = rpnn()
        .args(["train", "--strict", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with("error[out-of-range]:"), "{err}");
    assert!(err.contains("[0.01, 1]"), "{err}");
}

#[test]
fn unknown_key_is_a_parse_error() {
    let dir = scratch("typo");
    let cfg = dir.join("typo.cfg");
    std::fs::write(&cfg, "eta = 0.3\netaa = 0.3\n").unwrap();
    let out = rpnn()
        .arg("generate")
        .arg("--config")
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.starts_with("error[parse]:"), "{err}");
}

#[test]
fn train_writes_outputs_and_model_evaluates_to_same_rmse() {
    let dir = scratch("train");
    let status = rpnn()
        .args(["train", "--seed", "4", "--out"])
        .arg(&dir)
        .status()
        .unwrap();
    assert!(status.success());
    for f in [
        "report.csv",
        "forecast.csv",
        "growth.csv",
        "series.csv",
        "comparison.txt",
        "model.txt",
    ] {
        assert!(dir.join(f).is_file(), "missing {f}");
    }
    let report = std::fs::read_to_string(dir.join("report.csv")).unwrap();
    assert!(
        report.contains("# dt = "),
        "report lacks generator provenance"
    );
    let forecast = std::fs::read_to_string(dir.join("forecast.csv")).unwrap();
    assert_eq!(forecast.lines().next(), Some("t,actual,forecast,error"));

    let eval_dir = dir.join("eval");
    let out = rpnn()
        .args(["evaluate", "--model"])
        .arg(dir.join("model.txt"))
        .arg("--out")
        .arg(&eval_dir)
        .output()
        .unwrap();
    assert!(out.status.success());
    let reforecast = std::fs::read_to_string(eval_dir.join("forecast.csv")).unwrap();
    assert_eq!(reforecast, forecast);
}

#[test]
fn compare_ranks_a_given_rmse() {
    let dir = scratch("compare");
    let out = rpnn()
        .args(["compare", "--rmse", "1.0", "--out"])
        .arg(&dir)
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("rank 13 of 13"), "{text}");
}
