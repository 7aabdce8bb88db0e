//! End-to-end harness tests over temporary dataset directories.

use std::fs;
use std::path::Path;

use in_ucds::fairness::FairnessMethod;
use in_ucds::model::ModelKind;
use in_ucds::synthetic::SyntheticConfig;
use in_ucds_cli::{
    cmd_compare, cmd_evaluate, cmd_train, load_config, load_dataset, write_synthetic_dataset,
    CliError, ExperimentSpec,
};

fn tiny_synth() -> SyntheticConfig {
    SyntheticConfig {
        n_users: 40,
        n_items: 120,
        n_clusters: 3,
        max_activity: 15,
        min_activity: 4,
        seed: 5,
        ..SyntheticConfig::default()
    }
}

fn quick_spec(dataset_dir: &Path, out_dir: &Path) -> ExperimentSpec {
    let cfg = format!(
        "model=pmf\nmethod=in-ucds\ndataset_dir={}\nout_dir={}\n\
         num_epoch=3\nlatent_dim_mf=4\nlatent_dim_mlp=4\nlayers=8,4\nseed=2\n",
        dataset_dir.display(),
        out_dir.display()
    );
    let path = out_dir.join("exp.cfg");
    fs::create_dir_all(out_dir).unwrap();
    fs::write(&path, cfg).unwrap();
    load_config(&path).unwrap()
}

#[test]
fn train_leaves_the_documented_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let data_dir = tmp.path().join("data");
    write_synthetic_dataset(&data_dir, "toy", &tiny_synth()).unwrap();
    let spec = quick_spec(&data_dir, &tmp.path().join("out"));

    let manifest = cmd_train(&spec).unwrap();
    assert!(manifest.checkpoint_path.is_file());
    assert!(manifest.result_path.is_file());
    assert!(manifest.report_path.is_file());
    assert!(manifest.curve_path.is_file());
    assert_eq!(manifest.run_id, "toy_pmf_in-ucds_2");
    assert_eq!(manifest.history.len(), 3);

    // exactly one checkpoint and one result file for the run id
    let logs: Vec<_> = fs::read_dir(spec.out_dir.join("logs")).unwrap().collect();
    assert_eq!(logs.len(), 1);
    let results: Vec<_> = fs::read_dir(spec.out_dir.join("result"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert_eq!(results.len(), 2); // rows + report

    // curve has one row per epoch plus header
    let curve = fs::read_to_string(&manifest.curve_path).unwrap();
    assert_eq!(curve.lines().count(), 1 + 3);

    // manifest on disk parses and echoes a reloadable spec
    let manifest_path = spec.out_dir.join("toy_pmf_in-ucds_2_manifest.json");
    let text = fs::read_to_string(manifest_path).unwrap();
    let parsed: in_ucds_cli::RunManifest = serde_json::from_str(&text).unwrap();
    assert_eq!(parsed.spec, spec);
}

#[test]
fn identical_specs_write_identical_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let data_dir = tmp.path().join("data");
    write_synthetic_dataset(&data_dir, "toy", &tiny_synth()).unwrap();

    let run = |out: &Path| {
        let spec = quick_spec(&data_dir, out);
        cmd_train(&spec).unwrap()
    };
    let a = run(&tmp.path().join("out_a"));
    let b = run(&tmp.path().join("out_b"));
    for (pa, pb) in [
        (&a.result_path, &b.result_path),
        (&a.report_path, &b.report_path),
        (&a.curve_path, &b.curve_path),
    ] {
        assert_eq!(fs::read(pa).unwrap(), fs::read(pb).unwrap());
    }
    // checkpoints embed the spec'd out_dir nowhere, so they match too
    assert_eq!(
        fs::read(&a.checkpoint_path).unwrap(),
        fs::read(&b.checkpoint_path).unwrap()
    );
}

#[test]
fn missing_dataset_dir_fails_before_training() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = quick_spec(&tmp.path().join("data"), &tmp.path().join("out"));
    // quick_spec wrote the config but no dataset directory exists
    let err = cmd_train(&spec).unwrap_err();
    assert!(matches!(err, CliError::Config(_)));
    assert!(!spec.out_dir.join("logs").exists());
}

#[test]
fn evaluate_replays_the_recorded_metrics() {
    let tmp = tempfile::tempdir().unwrap();
    let data_dir = tmp.path().join("data");
    write_synthetic_dataset(&data_dir, "toy", &tiny_synth()).unwrap();
    let spec = quick_spec(&data_dir, &tmp.path().join("out"));
    let manifest = cmd_train(&spec).unwrap();

    let report = cmd_evaluate(ModelKind::Pmf, &data_dir, &manifest.checkpoint_path).unwrap();
    assert_eq!(report, manifest.test_metrics);
}

#[test]
fn wrong_model_kind_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let data_dir = tmp.path().join("data");
    write_synthetic_dataset(&data_dir, "toy", &tiny_synth()).unwrap();
    let spec = quick_spec(&data_dir, &tmp.path().join("out"));
    let manifest = cmd_train(&spec).unwrap();

    let err = cmd_evaluate(ModelKind::Neumf, &data_dir, &manifest.checkpoint_path).unwrap_err();
    assert!(matches!(err, CliError::Config(_)));
}

#[test]
fn foreign_dataset_fails_the_digest_check() {
    let tmp = tempfile::tempdir().unwrap();
    let data_dir = tmp.path().join("data");
    write_synthetic_dataset(&data_dir, "toy", &tiny_synth()).unwrap();
    let spec = quick_spec(&data_dir, &tmp.path().join("out"));
    let manifest = cmd_train(&spec).unwrap();

    let other_dir = tmp.path().join("other");
    write_synthetic_dataset(
        &other_dir,
        "other",
        &SyntheticConfig {
            seed: 99,
            ..tiny_synth()
        },
    )
    .unwrap();
    let err = cmd_evaluate(ModelKind::Pmf, &other_dir, &manifest.checkpoint_path).unwrap_err();
    assert!(matches!(&err, CliError::Data(m) if m.contains("digest")));
}

#[test]
fn compare_emits_three_rows_and_a_joint_curve() {
    let tmp = tempfile::tempdir().unwrap();
    let data_dir = tmp.path().join("data");
    write_synthetic_dataset(&data_dir, "toy", &tiny_synth()).unwrap();
    let spec = quick_spec(&data_dir, &tmp.path().join("out"));

    let methods = [
        FairnessMethod::Original,
        FairnessMethod::InUcds,
        FairnessMethod::InNaive,
    ];
    let outcome = cmd_compare(&spec, &methods).unwrap();
    assert_eq!(outcome.manifests.len(), 3);

    // header + one row per method, eight numeric columns each
    let lines: Vec<&str> = outcome.table.lines().collect();
    assert_eq!(lines.len(), 4);
    for (line, method) in lines[1..].iter().zip(["original", "in-ucds", "in-naive"]) {
        assert!(line.starts_with(method));
        let numeric = line
            .split_whitespace()
            .filter(|t| t.parse::<f64>().is_ok() || *t == "undef")
            .count();
        assert_eq!(numeric, 8);
    }

    // joint curve: num_epoch rows per method plus header
    let curve = fs::read_to_string(&outcome.joint_curve_path).unwrap();
    assert_eq!(curve.lines().count(), 1 + 3 * 3);
    for method in ["original", "in-ucds", "in-naive"] {
        let rows = curve
            .lines()
            .filter(|l| l.split(',').nth(1) == Some(method))
            .count();
        assert_eq!(rows, 3);
    }
}

#[test]
fn dataset_dir_with_split_files_uses_them() {
    let tmp = tempfile::tempdir().unwrap();
    let data_dir = tmp.path().join("data");
    write_synthetic_dataset(&data_dir, "toy", &tiny_synth()).unwrap();

    // derive once, persist, and reload: the loaded split must match
    let first = load_dataset(&data_dir, 2).unwrap();
    in_ucds::data::write_splits(&first.split, &data_dir, "toy").unwrap();
    let second = load_dataset(&data_dir, 777).unwrap(); // seed must not matter now
    assert_eq!(first.split.test, second.split.test);
    assert_eq!(first.split.tune, second.split.tune);
    assert_eq!(
        first.split.train.interactions().len(),
        second.split.train.interactions().len()
    );
}
