use std::fs;

use spssot::config::parse_config;
use spssot::data::{generate_synthetic, load_csv, write_csv, CsvSchema, DomainTag};
use spssot::eval::{run_cell, run_experiment, ExperimentReport, Method};
use spssot::nn::{read_checkpoint, ProbabilityModel};
use spssot::trainer::predict;

const SMALL: &str = "
n_src = 300
n_tgt = 400
feature_dim = 4
labeled_frac = 0.1
generator = 8
classifier_hidden =
batch = 16
iters = 10
pretrain_epochs = 2
members = 3
seeds = 0, 1
methods = spssot, ssot, target_only, source_only, train_together
";

#[test]
fn csv_roundtrip_preserves_data() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_config(SMALL).unwrap();
    let spssot::eval::DataSource::Synthetic(spec) = &cfg.data else { unreachable!() };
    let (source, _) = generate_synthetic(spec).unwrap();
    let path = dir.path().join("source.csv");
    write_csv(&source, &path).unwrap();
    let back = load_csv(&path, &CsvSchema::from_header(&path).unwrap(), DomainTag::Source).unwrap();
    assert_eq!(back, source);
}

#[test]
fn configured_experiment_writes_consistent_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = parse_config(SMALL).unwrap();
    cfg.out_dir = Some(dir.path().to_path_buf());
    let report = run_experiment(&cfg).unwrap();
    assert!(report.succeeded(), "{}", report.to_table());
    report.write(dir.path()).unwrap();

    let saved = ExperimentReport::from_json(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(saved, report);
    for m in &report.methods {
        assert_eq!(m.aucs.len(), 2);
        assert!(m.aucs.iter().flatten().all(|a| (0.0..=1.0).contains(a)));
    }

    // reloaded checkpoints reproduce the in-memory ensemble
    let (source, target) = spssot::eval::load_data(&cfg).unwrap();
    let (model, auc) = run_cell(Method::Spssot, 1, &source, &target, &cfg).unwrap();
    assert_eq!(Some(auc), report.summary(Method::Spssot).unwrap().aucs[1]);
    let cell = dir.path().join("runs/spssot/seed_1");
    let x = target.features();
    let mut mean = vec![0.0; target.len()];
    for i in 0..model.len() {
        let p = read_checkpoint(&cell.join(format!("member_{i}.ckpt"))).unwrap();
        assert_eq!(p.to_bytes(), model.members()[i].params.to_bytes());
        for (m, v) in mean.iter_mut().zip(p.predict_positive(x).unwrap()) {
            *m += v / model.len() as f64;
        }
    }
    let direct = predict(&model, x).unwrap();
    assert!(mean.iter().zip(&direct).all(|(a, b)| (a - b).abs() < 1e-12));
    assert!(cell.join("manifest.tsv").exists());
    assert_eq!(fs::read_to_string(cell.join("member_0.log.tsv")).unwrap().lines().count(), 11);
}
