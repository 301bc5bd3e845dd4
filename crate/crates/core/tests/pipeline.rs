use std::collections::BTreeSet;
use std::fs;

use graphfeat::pipeline::{run_pipeline, Prepared, RunConfig, Task};
use graphfeat::toy::ToyParams;

fn config(dir: &std::path::Path, task: Task) -> RunConfig {
    let paths = ToyParams::default().write(dir.join("data")).unwrap();
    let mut c = RunConfig::new(paths.schema, paths.data_dir, dir.join("out"), task);
    match task {
        Task::Binary => c.negative_ratio = Some(1.0),
        Task::Ranking => {
            c.candidate_sizes = Some(vec![12, 20]);
            c.positives_per_set = 1;
        }
        Task::Regression => {}
    }
    c
}

#[test]
fn regression_run_writes_folds_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), Task::Regression);
    let manifest = run_pipeline(&cfg).unwrap();
    assert_eq!(manifest.schemes.len(), 8);
    assert_eq!(manifest.files.len(), 10);
    for f in &manifest.files {
        let bytes = fs::read(cfg.output_dir.join(&f.path)).unwrap();
        assert_eq!(bytes.iter().filter(|&&b| b == b'\n').count(), f.rows + 1, "{}", f.path);
        assert_eq!(f.sha256.len(), 64);
    }
    let text = fs::read_to_string(cfg.output_dir.join("manifest.json")).unwrap();
    assert_eq!(text, manifest.to_json());
    // test rows over all folds cover every instance once
    let total: usize = (0..5)
        .map(|k| manifest.file(&format!("fold_{k}/test.csv")).unwrap().rows)
        .sum();
    assert_eq!(total, 30 * 8);
    let train0 = manifest.file("fold_0/train.csv").unwrap();
    let test0 = manifest.file("fold_0/test.csv").unwrap();
    assert_eq!(train0.rows + test0.rows, 240);
    assert_eq!(train0.columns, test0.columns);
}

#[test]
fn binary_negatives_only_in_train() {
    let dir = tempfile::tempdir().unwrap();
    let prepared = Prepared::load(config(dir.path(), Task::Binary)).unwrap();
    let pairs = prepared.fold_pairs(0).unwrap();
    let neg = pairs.train.iter().filter(|p| p.label.as_deref() == Some("0")).count();
    let pos = pairs.train.len() - neg;
    assert_eq!(neg, pos);
    assert!(pairs.test.iter().all(|p| p.label.as_deref() == Some("1")));
    for p in pairs.train.iter().filter(|p| p.label.as_deref() == Some("0")) {
        assert!(!prepared.universe.is_associated(&p.source, &p.target));
    }
}

#[test]
fn ranking_candidates() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), Task::Ranking);
    let manifest = run_pipeline(&cfg).unwrap();
    assert_eq!(manifest.files.len(), 15);
    let cands = fs::read_to_string(cfg.output_dir.join("fold_0/candidates.csv")).unwrap();
    let mut lines = cands.lines();
    assert_eq!(lines.next(), Some("size,source,target,positive"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    let sources: BTreeSet<&str> = rows.iter().map(|r| r[1]).collect();
    assert_eq!(rows.len(), sources.len() * 32);
    let positives = rows.iter().filter(|r| r[3] == "1").count();
    assert_eq!(positives, sources.len() * 2);
}

#[test]
fn unknown_schema_path_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(dir.path(), Task::Regression);
    cfg.schema = dir.path().join("missing.json");
    let err = run_pipeline(&cfg).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(!cfg.output_dir.exists());
}

#[test]
fn config_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), Task::Regression);
    let path = dir.path().join("run.json");
    fs::write(&path, cfg.to_json()).unwrap();
    assert_eq!(RunConfig::load(&path).unwrap(), cfg);
}

#[test]
fn age_feature_adds_schemes() {
    let dir = tempfile::tempdir().unwrap();
    let paths = ToyParams {
        with_age: true,
        ..Default::default()
    }
    .write(dir.path())
    .unwrap();
    let cfg = RunConfig::new(paths.schema, paths.data_dir, dir.path().join("out"), Task::Regression);
    let prepared = Prepared::load(cfg).unwrap();
    assert_eq!(prepared.masks.len(), 16);
    let ages = prepared
        .graph
        .vertices()
        .iter()
        .filter(|v| v.entity_type == "age")
        .count();
    assert_eq!(ages, 4);
}
