use std::path::Path;
use std::process::{Command, Output};

use obfuskit::dataset::gen_blobs;
use obfuskit::{Dataset, Domain};

fn obfuskit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_obfuskit")).args(args).output().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write_blobs(dir: &Path) -> String {
    let data = gen_blobs(3, 4, 10, 1, 2, 10.0, Domain::new(0.0, 255.0).unwrap()).unwrap();
    let path = dir.join("blobs.csv");
    data.save_csv(&path).unwrap();
    path.to_str().unwrap().to_string()
}

const SMALL_INVERSION: &str = r#"{
  "scenario": "inversion",
  "master_seed": 3,
  "dataset": {
    "source": {
      "blobs": {
        "classes": 2, "dim": 16, "per_class": 40, "spread": 30.0,
        "layout": { "sign_pattern": { "scales": [0.8] } }
      }
    },
    "image_shape": [4, 4]
  },
  "model": { "architecture": "softmax" },
  "train": { "epochs": 10, "batch_size": 16, "learning_rate": 0.1 },
  "attack": { "steps": 50 }
}"#;

#[test]
fn zero_noise_obfuscation_copies_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_blobs(dir.path());
    let out = dir.path().join("out.csv");
    let res = obfuskit(&[
        "obfuscate", "--in", &input, "--mode", "individual", "--r", "0", "--sigma", "0", "--seed", "5", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", stderr(&res));
    assert_eq!(std::fs::read(&input).unwrap(), std::fs::read(&out).unwrap());
}

#[test]
fn group_obfuscation_appends_negatives() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_blobs(dir.path());
    let out = dir.path().join("out.csv");
    let res = obfuskit(&[
        "obfuscate", "--in", &input, "--mode", "group", "--r", "0.5", "--sigma", "5", "--group", "1", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", stderr(&res));
    let data = Dataset::load_csv(&out).unwrap();
    assert_eq!(data.len(), 35);
    assert_eq!(data.class_counts(), vec![10, 15, 10]);
}

#[test]
fn negative_sigma_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_blobs(dir.path());
    let out = dir.path().join("out.csv");
    let res = obfuskit(&[
        "obfuscate", "--in", &input, "--mode", "individual", "--r", "0.5", "--sigma=-1", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(2));
    assert!(stderr(&res).contains("sigma"), "{}", stderr(&res));
    assert!(!out.exists());
}

#[test]
fn bad_group_label_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_blobs(dir.path());
    let res = obfuskit(&[
        "obfuscate", "--in", &input, "--mode", "group", "--r", "1", "--sigma", "5", "--group", "cats", "--out",
        dir.path().join("o.csv").to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(2));
    assert!(stderr(&res).contains("group"));
}

#[test]
fn missing_input_names_the_path() {
    let res = obfuskit(&[
        "obfuscate", "--in", "/nonexistent/data.csv", "--mode", "group", "--r", "1", "--sigma", "5", "--out",
        "/tmp/never.csv",
    ]);
    assert_eq!(res.status.code(), Some(1));
    assert!(stderr(&res).contains("/nonexistent/data.csv"), "{}", stderr(&res));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let res = obfuskit(&["obfuscate", "--bogus"]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn train_writes_a_loadable_model() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_blobs(dir.path());
    let spec = dir.path().join("spec.json");
    std::fs::write(
        &spec,
        r#"{"model": {"architecture": {"mlp": {"hidden": 8}}}, "train": {"epochs": 1000, "batch_size": 8, "learning_rate": 0.1}}"#,
    )
    .unwrap();
    let model_path = dir.path().join("model.json");
    let res = obfuskit(&[
        "train", "--data", &input, "--spec", spec.to_str().unwrap(), "--out", model_path.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", stderr(&res));
    let model = obfuskit::Model::load(&model_path).unwrap();
    let data = Dataset::load_csv(&input).unwrap();
    let acc = model.accuracy(&data).unwrap();
    assert_eq!(stdout(&res), format!("train accuracy {acc:.4}\n"));
    assert!(acc > 0.9, "{acc}");
}

#[test]
fn attack_and_report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("inv.json");
    std::fs::write(&config, SMALL_INVERSION).unwrap();
    let run = dir.path().join("run");
    let res = obfuskit(&[
        "attack", "--scenario", "inversion", "--config", config.to_str().unwrap(), "--out", run.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", stderr(&res));
    let summary = stdout(&res);
    let lines: Vec<&str> = summary.lines().collect();
    assert!(lines[0].starts_with("r,f1,val_acc,delta_acc"));
    assert_eq!(lines.len(), 5, "{summary}");
    for file in ["report.json", "curves.csv"] {
        assert!(run.join(file).exists(), "{file}");
    }
    assert!(std::fs::read_dir(run.join("artifacts")).unwrap().count() >= 4);

    let csv = obfuskit(&["report", "--run", run.to_str().unwrap(), "--format", "csv"]);
    assert_eq!(stdout(&csv), summary);
    let json = obfuskit(&["report", "--run", run.to_str().unwrap()]);
    let value: serde_json::Value = serde_json::from_str(&stdout(&json)).unwrap();
    assert_eq!(value["points"].as_array().unwrap().len(), 4);
}

#[test]
fn scenario_must_match_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("inv.json");
    std::fs::write(&config, SMALL_INVERSION).unwrap();
    let res = obfuskit(&[
        "attack", "--scenario", "membership", "--config", config.to_str().unwrap(), "--out",
        dir.path().join("run").to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(2));
    assert!(stderr(&res).contains("scenario"));
}

#[test]
fn invalid_config_field_is_reported_with_its_path() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("inv.json");
    std::fs::write(&config, SMALL_INVERSION.replace("\"learning_rate\": 0.1", "\"learning_rate\": -0.1")).unwrap();
    let res = obfuskit(&[
        "attack", "--scenario", "inversion", "--config", config.to_str().unwrap(), "--out",
        dir.path().join("run").to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(2));
    assert!(stderr(&res).contains("train.learning_rate"), "{}", stderr(&res));
}
