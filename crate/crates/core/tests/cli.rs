mod common;

use std::path::Path;
use std::process::{Command, Output};

fn evoweights(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evoweights"))
        .args(args)
        .current_dir(cwd)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn weights_prints_one_record_per_slot() {
    let tmp = tempfile::tempdir().unwrap();
    common::write_inputs(tmp.path(), 120);
    let out = evoweights(
        &["weights", "--data", "data.csv", "--schema", "schema.json"],
        tmp.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["slots"].as_array().unwrap().len(), 4);

    let eq = evoweights(
        &[
            "weights",
            "--data",
            "data.csv",
            "--schema",
            "schema.json",
            "--method",
            "eq",
        ],
        tmp.path(),
    );
    let doc: serde_json::Value = serde_json::from_str(&stdout(&eq)).unwrap();
    assert!(doc["slots"]
        .as_array()
        .unwrap()
        .iter()
        .all(|s| s["weight"] == 1.0));
}

#[test]
fn run_compare_and_report_end_to_end() {
    let tmp = tempfile::tempdir().unwrap();
    common::write_inputs(tmp.path(), 120);
    for method in ["eq", "dw", "ew"] {
        let out = evoweights(
            &[
                "run",
                "--data",
                "data.csv",
                "--schema",
                "schema.json",
                "--method",
                method,
                "--replicates",
                "5",
                "--budget",
                "40",
                "--seed",
                "3",
                "--out",
                "results",
            ],
            tmp.path(),
        );
        assert!(
            out.status.success(),
            "{method}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(stdout(&out)
            .trim_end()
            .ends_with(&format!("data/acc_dpd/{method}")));
    }
    let out = evoweights(
        &["compare", "--root", "results", "--out", "stats"],
        tmp.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(stdout(&out).contains("data"));
    assert!(tmp.path().join("stats/report.json").is_file());
    assert!(tmp.path().join("stats/table.txt").is_file());

    let out = evoweights(
        &["report", "--root", "results", "--out", "plots"],
        tmp.path(),
    );
    assert!(out.status.success());
    assert!(tmp.path().join("plots/hypervolume_points.csv").is_file());
    assert!(tmp.path().join("plots/data_acc_dpd.svg").is_file());
}

#[test]
fn exit_codes_separate_configuration_data_and_result_errors() {
    let tmp = tempfile::tempdir().unwrap();
    common::write_inputs(tmp.path(), 120);
    let run = |extra: &[&str]| {
        let mut args = vec![
            "run",
            "--data",
            "data.csv",
            "--schema",
            "schema.json",
            "--replicates",
            "5",
            "--budget",
            "20",
        ];
        args.extend_from_slice(extra);
        evoweights(&args, tmp.path()).status.code()
    };
    assert_eq!(run(&["--method", "eq", "--test-fraction", "1.5"]), Some(2));
    assert_eq!(run(&["--method", "eq", "--replicates", "0"]), Some(2));

    std::fs::write(
        tmp.path().join("bad_schema.json"),
        "{\"target_column\":\"y\"}",
    )
    .unwrap();
    let out = evoweights(
        &[
            "run",
            "--data",
            "data.csv",
            "--schema",
            "bad_schema.json",
            "--method",
            "eq",
        ],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(2));

    let out = evoweights(
        &[
            "run",
            "--data",
            "missing.csv",
            "--schema",
            "schema.json",
            "--method",
            "eq",
        ],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(3));

    std::fs::write(tmp.path().join("no_target.csv"), "a,sex\n1,f\n").unwrap();
    let out = evoweights(
        &[
            "weights",
            "--data",
            "no_target.csv",
            "--schema",
            "schema.json",
        ],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(3));

    std::fs::create_dir_all(tmp.path().join("broken")).unwrap();
    std::fs::write(tmp.path().join("broken/config.json"), "{").unwrap();
    let out = evoweights(&["compare", "broken"], tmp.path());
    assert_eq!(out.status.code(), Some(3));

    let out = evoweights(&["compare"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}
